//! Radial test functions, the damping multiplier and the `psi^r` ball integral.
//!
//! `phi(x) = int_{S^{N-1}} exp(x . omega) d omega` solves `Delta phi = phi`,
//! and `psi(x, t) = exp(-t) phi(x)` solves both `psi_t = -psi` and
//! `psi_tt = Delta psi`. For radial arguments the sphere integral collapses to
//!
//! ```text
//! phi(r) = |S^{N-2}| int_0^pi exp(r cos th) sin^{N-2} th d th      (N >= 2)
//! phi(r) = exp(r) + exp(-r)                                        (N = 1)
//! ```
//!
//! with the closed form `4 pi sinh(r) / r` for `N = 3`. Every evaluation takes
//! an exponential shift so that `exp(-t) phi(r)` can be formed near the light
//! cone without overflowing.

use crate::error::{invalid, Result};
use crate::quadrature::GaussRule;
use crate::scalar::Real;

/// Default node count of the angular rule.
pub const DEFAULT_ANGULAR_NODES: usize = 64;
const MIN_ANGULAR_NODES: usize = 16;
/// Below this radius `sinh(r)/r` is replaced by its Taylor series.
const SERIES_CUTOFF: f64 = 1e-4;

/// Surface measure `|S^k|` of the unit `k`-sphere in `R^{k+1}`.
pub fn sphere_measure<T: Real>(k: u32) -> T {
    match k {
        0 => T::lit(2.0),
        1 => T::lit(2.0) * T::PI(),
        _ => T::lit(2.0) * T::PI() / T::lit((k - 1) as f64) * sphere_measure::<T>(k - 2),
    }
}

/// Dimension plus a precomputed angular rule for `phi`.
#[derive(Debug, Clone)]
pub struct TestFunctionContext<T> {
    n: u32,
    quadrature_nodes: usize,
    // cos(theta_j) and |S^{N-2}| w_j sin^{N-2}(theta_j)
    cosines: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> TestFunctionContext<T> {
    pub fn new(n: u32) -> Result<Self> {
        Self::with_nodes(n, DEFAULT_ANGULAR_NODES)
    }

    pub fn with_nodes(n: u32, quadrature_nodes: usize) -> Result<Self> {
        if n < 1 {
            return Err(invalid("n", "spatial dimension must be at least 1"));
        }
        if quadrature_nodes < MIN_ANGULAR_NODES {
            return Err(invalid(
                "quadrature_nodes",
                format!("need at least {MIN_ANGULAR_NODES}, got {quadrature_nodes}"),
            ));
        }
        let (cosines, weights) = if n >= 2 {
            let rule = GaussRule::<T>::new(quadrature_nodes);
            let surface = sphere_measure::<T>(n - 2);
            rule.mapped(T::zero(), T::PI())
                .map(|(th, w)| (th.cos(), surface * w * th.sin().powi((n - 2) as i32)))
                .unzip()
        } else {
            (Vec::new(), Vec::new())
        };
        Ok(Self {
            n,
            quadrature_nodes,
            cosines,
            weights,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn quadrature_nodes(&self) -> usize {
        self.quadrature_nodes
    }

    /// `|S^{N-1}|`, the weight of the radial measure `r^{N-1} dr`.
    pub fn shell_measure(&self) -> T {
        sphere_measure(self.n - 1)
    }

    /// `exp(-shift) phi(r)` through the angular quadrature (any `N >= 2`).
    ///
    /// Retained for every dimension as a cross-check on the closed forms.
    pub fn phi_quadrature_scaled(&self, r: T, shift: T) -> T {
        debug_assert!(self.n >= 2);
        self.cosines
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (&c, &w)| acc + w * (r * c - shift).exp())
    }

    /// `exp(-shift) phi(r)`, using the closed form when one exists.
    pub fn phi_scaled(&self, r: T, shift: T) -> T {
        let r = r.abs();
        match self.n {
            1 => (r - shift).exp() + (-r - shift).exp(),
            3 => {
                let four_pi = T::lit(4.0) * T::PI();
                if r < T::lit(SERIES_CUTOFF) {
                    let r2 = r * r;
                    four_pi * (-shift).exp() * (T::one() + r2 / T::lit(6.0) + r2 * r2 / T::lit(120.0))
                } else {
                    four_pi * ((r - shift).exp() - (-r - shift).exp()) / (T::lit(2.0) * r)
                }
            }
            _ => self.phi_quadrature_scaled(r, shift),
        }
    }

    /// `phi(r)`.
    pub fn phi(&self, r: T) -> Result<T> {
        check_radius(r)?;
        Ok(self.phi_scaled(r, T::zero()))
    }

    /// `exp(-r) phi(r)`; bounded for all `r`, handy for tabulation.
    pub fn phi_normalized(&self, r: T) -> T {
        self.phi_scaled(r, r.abs())
    }

    /// `psi(r, t) = exp(-t) phi(r)`.
    pub fn psi(&self, r: T, t: T) -> Result<T> {
        check_radius(r)?;
        if !(t >= T::zero()) {
            return Err(invalid("t", format!("time must be >= 0, got {t}")));
        }
        Ok(self.phi_scaled(r, t))
    }

    /// Relative residual of `phi'' + (N-1)/r phi' - phi` at `r > 0`.
    ///
    /// Derivatives are five-point central differences with spacing `step` on
    /// the quadrature-backed `phi` (closed form only for `N = 1`).
    pub fn radial_residual(&self, r: T, step: T) -> T {
        let eval = |x: T| {
            if self.n == 1 {
                self.phi_scaled(x, r)
            } else {
                self.phi_quadrature_scaled(x, r)
            }
        };
        let (m2, m1, c, p1, p2) = (
            eval(r - step - step),
            eval(r - step),
            eval(r),
            eval(r + step),
            eval(r + step + step),
        );
        let twelve = T::lit(12.0);
        let d1 = (m2 - T::lit(8.0) * m1 + T::lit(8.0) * p1 - p2) / (twelve * step);
        let d2 = (-m2 + T::lit(16.0) * (m1 + p1) - T::lit(30.0) * c - p2) / (twelve * step * step);
        let dim = T::lit(self.n as f64);
        ((d2 + (dim - T::one()) / r * d1 - c) / c).abs()
    }

    /// `|S^{N-1}| int_lo^hi g(rho) rho^{N-1} d rho` by composite Gauss rules.
    pub fn radial_integral(&self, lo: T, hi: T, cells: usize, g: impl Fn(T) -> T) -> T {
        let rule = GaussRule::<T>::new(6);
        let cells = cells.max(1);
        let width = (hi - lo) / T::from_usize_lossy(cells);
        let pow = (self.n - 1) as i32;
        let mut total = T::zero();
        for c in 0..cells {
            let a = lo + width * T::from_usize_lossy(c);
            total = total + rule.integrate(a, a + width, |x| g(x) * x.powi(pow));
        }
        total * self.shell_measure()
    }

    /// `int_{|x| <= t+1} psi(x, t)^r_exp dx`.
    ///
    /// Composite Gauss quadrature with 64 cells per unit radius on `[0, t]`
    /// and 128 per unit on the last unit before the light cone, where
    /// `psi^r` peaks.
    pub fn lemma1_integral(&self, r_exp: T, t: T) -> Result<T> {
        if !(r_exp > T::one()) {
            return Err(invalid("r_exp", format!("must exceed 1, got {r_exp}")));
        }
        if !(t >= T::zero()) {
            return Err(invalid("t", format!("time must be >= 0, got {t}")));
        }
        let integrand = |rho: T| self.phi_scaled(rho, t).powf(r_exp);
        let inner_cells = (t * T::lit(64.0)).ceil().to_usize().unwrap_or(0);
        let inner = if inner_cells > 0 {
            self.radial_integral(T::zero(), t, inner_cells, integrand)
        } else {
            T::zero()
        };
        let outer = self.radial_integral(t, t + T::one(), 128, integrand);
        Ok(inner + outer)
    }

    /// `lemma1_integral / (1 + t)^((2 - r)(N - 1) / (2 r))`.
    pub fn lemma1_ratio(&self, r_exp: T, t: T) -> Result<T> {
        let integral = self.lemma1_integral(r_exp, t)?;
        Ok(integral / (T::one() + t).powf(self.lemma1_power(r_exp)))
    }

    /// Growth exponent `(2 - r)(N - 1) / (2 r)` of the ball-integral bound.
    pub fn lemma1_power(&self, r_exp: T) -> T {
        let two = T::lit(2.0);
        (two - r_exp) * T::lit((self.n - 1) as f64) / (two * r_exp)
    }
}

fn check_radius<T: Real>(r: T) -> Result<()> {
    if r >= T::zero() && r.is_finite() {
        Ok(())
    } else {
        Err(invalid("r", format!("radius must be finite and >= 0, got {r}")))
    }
}

/// The multiplier `m(t) = (1 + t)^mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Multiplier<T> {
    pub mu: T,
}

impl<T: Real> Multiplier<T> {
    pub fn new(mu: T) -> Self {
        Self { mu }
    }

    pub fn value(&self, t: T) -> Result<T> {
        if !(t >= T::zero()) {
            return Err(invalid("t", format!("time must be >= 0, got {t}")));
        }
        Ok(self.at(t))
    }

    /// Unchecked `(1 + t)^mu`.
    #[inline]
    pub fn at(&self, t: T) -> T {
        (T::one() + t).powf(self.mu)
    }

    /// `m'(t) / m(t) = mu / (1 + t)`.
    pub fn log_derivative(&self, t: T) -> T {
        self.mu / (T::one() + t)
    }
}
