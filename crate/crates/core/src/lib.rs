//! Numerical laboratory for finite-time blow-up of the scale-invariant damped
//! wave equation with combined nonlinearities
//!
//! ```text
//! u_tt - Delta u + mu / (1 + t) u_t = a |u_t|^p + b |u|^q,
//! u(x, 0) = eps f(x),  u_t(x, 0) = eps g(x),
//! ```
//!
//! with radial data supported in the unit ball.
//!
//! * [`exponents`]: critical exponents, the interaction functional `lambda`
//!   and blow-up region classification.
//! * [`special_functions`]: the test functions `phi`, `psi`, the multiplier
//!   `m(t) = (1 + t)^mu` and the ball integral of `psi^r`.
//! * [`wave_solver`]: radial finite-difference solver with blow-up detection
//!   and tracking of the functionals `F`, `F1`, `F2`.
//! * [`ode_comparison`]: the comparison ODE behind the lifespan estimate.
//! * [`harness`]: epsilon sweeps, log-log fits and report persistence.
//!
//! The math is generic over [`Real`] (`f32` or `f64`); the aliases at the
//! crate root fix it to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exponents;
pub mod harness;
pub mod ode_comparison;
pub mod quadrature;
pub mod scalar;
pub mod special_functions;
pub mod wave_solver;

pub use error::{Error, Result};
pub use scalar::Real;

pub use exponents::{classify, Damping, Extended, Verdict};

pub type ProblemParams = exponents::ProblemParams<f64>;
pub type RegionClassification = exponents::RegionClassification<f64>;
pub type TestFunctionContext = special_functions::TestFunctionContext<f64>;
pub type Multiplier = special_functions::Multiplier<f64>;
pub type RadialGrid = wave_solver::RadialGrid<f64>;
pub type RadialState = wave_solver::RadialState<f64>;
pub type InitialDataSpec = wave_solver::InitialDataSpec<f64>;
pub type SolverControls = wave_solver::SolverControls<f64>;
pub type FunctionalTrace = wave_solver::FunctionalTrace<f64>;
pub type ComparisonConfig = ode_comparison::ComparisonConfig<f64>;
pub type ProofLedger = ode_comparison::ProofLedger<f64>;
pub type RunConfig = harness::RunConfig<f64>;
pub type SweepPlan = harness::SweepPlan<f64>;
pub type LifespanFit = harness::LifespanFit<f64>;
