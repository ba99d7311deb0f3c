use crate::error::{Error, Result};
use crate::scalar::Real;

/// Minimum node count of a radial grid.
pub const MIN_NODES: usize = 128;

/// Uniform radial grid `r_i = i h`, `i = 0..nodes`, with `u = 0` imposed at
/// the last node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid<T> {
    h: T,
    nodes: usize,
}

impl<T: Real> RadialGrid<T> {
    /// Grid with spacing `h` reaching at least `r_max`.
    pub fn new(h: T, r_max: T) -> Result<Self> {
        if !(h > T::zero()) || !h.is_finite() {
            return Err(Error::GridTooSmall(format!("spacing must be positive, got {h}")));
        }
        let cells = (r_max / h).ceil().to_usize().unwrap_or(0);
        let nodes = cells + 1;
        if nodes < MIN_NODES {
            return Err(Error::GridTooSmall(format!("{nodes} nodes, need at least {MIN_NODES}")));
        }
        Ok(Self { h, nodes })
    }

    /// Smallest grid with spacing `h` whose boundary stays outside the light
    /// cone `r = 1 + t` up to `t_final`.
    pub fn for_horizon(h: T, t_final: T) -> Result<Self> {
        Self::new(h, T::one() + t_final + T::lit(4.0) * h)
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn r_max(&self) -> T {
        self.h * T::from_usize_lossy(self.nodes - 1)
    }

    pub fn radius(&self, i: usize) -> T {
        self.h * T::from_usize_lossy(i)
    }

    pub fn radii(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.nodes).map(|i| self.radius(i))
    }

    /// `r_max >= 1 + t_final + h`.
    pub fn supports_horizon(&self, t_final: T) -> bool {
        self.r_max() >= T::one() + t_final + self.h
    }
}
