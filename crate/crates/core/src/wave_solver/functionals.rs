use crate::scalar::Real;
use crate::special_functions::TestFunctionContext;

use super::RadialState;

/// `F = int u`, `F1 = int u psi`, `F2 = int u_t psi` at one time level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Functionals<T> {
    pub f: T,
    pub f1: T,
    pub f2: T,
}

/// Trapezoidal radial quadrature of the three functionals, with `psi`
/// evaluated from `ctx`.
pub fn compute_functionals<T: Real>(state: &RadialState<T>, ctx: &TestFunctionContext<T>) -> Functionals<T> {
    let phi_norm: Vec<T> = state.grid.radii().map(|r| ctx.phi_normalized(r)).collect();
    integrate(state, ctx.n(), &phi_norm)
}

/// Same as [`compute_functionals`] with `exp(-r) phi(r)` pretabulated.
pub(super) fn integrate<T: Real>(state: &RadialState<T>, n: u32, phi_norm: &[T]) -> Functionals<T> {
    let grid = &state.grid;
    let h = grid.h();
    let pow = (n - 1) as i32;
    let upto = (state.active + 1).min(grid.nodes());
    let (mut f, mut f1, mut f2) = (T::zero(), T::zero(), T::zero());
    let nodes = state.u.iter().zip(&state.v).zip(phi_norm).take(upto);
    for (i, ((&u, &v), &pn)) in nodes.enumerate() {
        let r = grid.radius(i);
        let mut w = r.powi(pow);
        if i == 0 {
            w = w * T::lit(0.5);
        }
        // psi(r, t) = exp(r - t) * exp(-r) phi(r)
        let psi = (r - state.t).exp() * pn;
        f = f + w * u;
        f1 = f1 + w * u * psi;
        f2 = f2 + w * v * psi;
    }
    let scale = crate::special_functions::sphere_measure::<T>(n - 1) * h;
    Functionals {
        f: f * scale,
        f1: f1 * scale,
        f2: f2 * scale,
    }
}
