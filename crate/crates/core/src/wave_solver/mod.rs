//! Radially symmetric finite-difference solver for
//!
//! ```text
//! u_tt = u_rr + (N-1)/r u_r - mu b(t) u_t + a |u_t|^p + b |u|^q
//! ```
//!
//! on a uniform grid with an even reflection at `r = 0` and `u = 0` at the
//! outer node, which stays outside the light cone `r = 1 + t`.
//!
//! Time stepping is kick-drift-kick on `(u, v = u_t)`: an explicit half kick,
//! a drift of `u`, and a closing half kick that is implicit node by node in
//! `v` only (linear damping solved exactly, `|v|^p` by a short fixed point).
//! The closing kick reuses the force `Delta u + b |u|^q` of the next step, so
//! each step costs one Laplacian. The scheme is second order; the step shrinks
//! with the local growth rate of the nonlinear terms.

mod bounds;
pub mod data;
mod functionals;
pub mod grid;

pub use bounds::{verify_lower_bounds, EnvelopeFit, LowerBoundReport, Violation};
pub use data::{InitialDataSpec, Profile};
pub use functionals::{compute_functionals, Functionals};
pub use grid::RadialGrid;

use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::exponents::ProblemParams;
use crate::scalar::Real;
use crate::special_functions::{Multiplier, TestFunctionContext};

/// Printed alongside every numerical lifespan.
pub const LIFESPAN_CAVEAT: &str = "T_num is the time a classical discretization exceeded its divergence \
     threshold; it estimates the energy-solution lifespan T_eps without bounding it from either side";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverControls<T> {
    /// `dt <= cfl * h`.
    pub cfl: T,
    pub t_max: T,
    /// Blow-up is declared once `max(sup|u|, sup|u_t|)` reaches this value.
    pub blowup_threshold: T,
    /// Step collapse below this value is blow-up when the solution is growing.
    pub dt_min: T,
    /// Time between recorded trace rows.
    pub output_every: T,
    /// Bound on `dt * rate`, where `rate` is the linearized growth rate of
    /// the nonlinear terms.
    pub growth_step: T,
    /// `false` pins `dt = cfl * h`.
    pub adaptive: bool,
    /// Nodes with `|u|` and `|u_t|` at most this multiple of `sup|u|` count
    /// as outside the support.
    pub support_threshold: T,
}

impl<T: Real> Default for SolverControls<T> {
    fn default() -> Self {
        Self {
            cfl: T::lit(0.45),
            t_max: T::lit(100.0),
            blowup_threshold: T::lit(1e6),
            dt_min: T::lit(1e-10),
            output_every: T::lit(0.5),
            growth_step: T::lit(0.05),
            adaptive: true,
            support_threshold: T::lit(1e-14),
        }
    }
}

impl<T: Real> SolverControls<T> {
    pub fn with_t_max(mut self, t_max: T) -> Self {
        self.t_max = t_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > T::zero() && self.cfl <= T::one()) {
            return Err(invalid("cfl", format!("must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.t_max > T::zero()) || !self.t_max.is_finite() {
            return Err(invalid("t_max", "must be positive and finite"));
        }
        if !(self.blowup_threshold > T::one()) {
            return Err(invalid("blowup_threshold", "must exceed 1"));
        }
        if !(self.dt_min > T::zero()) {
            return Err(invalid("dt_min", "must be positive"));
        }
        if !(self.output_every > T::zero()) {
            return Err(invalid("output_every", "must be positive"));
        }
        if !(self.growth_step > T::zero()) {
            return Err(invalid("growth_step", "must be positive"));
        }
        Ok(())
    }
}

/// Discrete `(u, u_t)` at one time level.
#[derive(Debug, Clone)]
pub struct RadialState<T> {
    grid: RadialGrid<T>,
    t: T,
    dt: T,
    u: Vec<T>,
    v: Vec<T>,
    support_radius: T,
    diverged: bool,
    // nodes at index >= active are exactly zero
    active: usize,
    // Delta u + b|u|^q on 0..active for the current u
    force: Vec<T>,
    force_valid: bool,
}

impl<T: Real> RadialState<T> {
    /// State with prescribed nodal values; the outer node must be zero.
    pub fn from_values(grid: RadialGrid<T>, t: T, u: Vec<T>, v: Vec<T>) -> Result<Self> {
        let n = grid.nodes();
        if u.len() != n || v.len() != n {
            return Err(invalid(
                "u",
                format!("need {n} nodal values, got {} and {}", u.len(), v.len()),
            ));
        }
        if u[n - 1] != T::zero() || v[n - 1] != T::zero() {
            return Err(invalid("u", "the boundary node must vanish"));
        }
        let diverged = u.iter().chain(&v).any(|x| !x.is_finite());
        let mut state = RadialState {
            grid,
            t,
            dt: T::zero(),
            u,
            v,
            support_radius: T::zero(),
            diverged,
            active: n - 1,
            force: vec![T::zero(); n],
            force_valid: false,
        };
        state.refresh_support(T::lit(1e-14));
        Ok(state)
    }

    /// Recomputes the support radius at the given relative threshold.
    pub fn support_radius_at(&self, threshold: T) -> T {
        let scale = self.sup_u();
        let scale = if scale > T::zero() { scale } else { self.sup_v() };
        let level = threshold * scale;
        let last = (0..self.active)
            .rev()
            .find(|&i| self.u[i].abs() > level || self.v[i].abs() > level);
        match last {
            Some(i) if level > T::zero() => self.grid.radius(i),
            _ => T::zero(),
        }
    }

    pub fn grid(&self) -> &RadialGrid<T> {
        &self.grid
    }

    pub fn t(&self) -> T {
        self.t
    }

    /// Last step taken (zero before the first step).
    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn u(&self) -> &[T] {
        &self.u
    }

    pub fn v(&self) -> &[T] {
        &self.v
    }

    pub fn support_radius(&self) -> T {
        self.support_radius
    }

    pub fn is_diverged(&self) -> bool {
        self.diverged
    }

    pub fn sup_u(&self) -> T {
        sup_abs(&self.u[..self.active])
    }

    pub fn sup_v(&self) -> T {
        sup_abs(&self.v[..self.active])
    }

    /// `|S^{N-1}| sum (v^2 + u_r^2) r^{N-1} h`, with `u_r` on cell midpoints.
    pub fn energy(&self, n: u32) -> T {
        let h = self.grid.h();
        let half = T::lit(0.5);
        let pow = (n - 1) as i32;
        let mut kinetic = T::zero();
        let mut potential = T::zero();
        let last = (self.active + 1).min(self.grid.nodes() - 1);
        for i in 0..=last {
            let r = self.grid.radius(i);
            let w = if i == 0 { half } else { T::one() } * r.powi(pow);
            kinetic = kinetic + w * self.v[i] * self.v[i];
            if i < last {
                let rm = r + half * h;
                let du = (self.u[i + 1] - self.u[i]) / h;
                potential = potential + rm.powi(pow) * du * du;
            }
        }
        crate::special_functions::sphere_measure::<T>(n - 1) * h * (kinetic + potential)
    }

    /// Whether the larger of `u`, `v` flips sign on both sides of its peak
    /// node, the signature of an unstable step rather than of blow-up.
    fn alternates_at_peak(&self) -> bool {
        let field = if self.sup_u() >= self.sup_v() { &self.u } else { &self.v };
        let k = (0..self.active).fold(0, |k, i| if field[i].abs() > field[k].abs() { i } else { k });
        let x = field[k];
        let right = field[k + 1];
        // even reflection at the origin
        let left = if k == 0 { right } else { field[k - 1] };
        x * left < T::zero() && x * right < T::zero()
    }

    fn refresh_support(&mut self, threshold: T) {
        self.support_radius = self.support_radius_at(threshold);
    }
}

fn sup_abs<T: Real>(xs: &[T]) -> T {
    xs.iter().fold(T::zero(), |m, &x| {
        let a = x.abs();
        if a > m || a.is_nan() {
            a
        } else {
            m
        }
    })
}

/// Samples `u = eps f`, `v = eps g` on the grid.
///
/// Fails when the grid cannot hold the light cone up to `t_final`.
pub fn initialize<T: Real>(
    params: &ProblemParams<T>,
    data: &InitialDataSpec<T>,
    grid: &RadialGrid<T>,
    t_final: T,
) -> Result<RadialState<T>> {
    params.validate()?;
    data.validate()?;
    if !grid.supports_horizon(t_final) {
        return Err(Error::GridTooSmall(format!(
            "r_max = {} does not reach 1 + t_final + h = {}",
            grid.r_max(),
            T::one() + t_final + grid.h()
        )));
    }
    let eps = params.epsilon;
    let n = grid.nodes();
    let mut u = vec![T::zero(); n];
    let mut v = vec![T::zero(); n];
    for (i, r) in grid.radii().enumerate().take(n - 1) {
        u[i] = eps * data.f(r);
        v[i] = eps * data.g(r);
    }
    let active = ((T::one() / grid.h()).ceil().to_usize().unwrap_or(n) + 2).min(n - 1);
    let mut state = RadialState {
        grid: *grid,
        t: T::zero(),
        dt: T::zero(),
        u,
        v,
        support_radius: T::zero(),
        diverged: false,
        active,
        force: vec![T::zero(); n],
        force_valid: false,
    };
    state.refresh_support(T::lit(1e-14));
    Ok(state)
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome<T> {
    /// The divergence threshold was crossed.
    BlowupThreshold {
        time: T,
    },
    /// The adaptive step fell below `dt_min` while the solution was growing.
    BlowupStepCollapse {
        time: T,
    },
    HorizonReached {
        time: T,
    },
    /// Non-finite values or step collapse without a growth trend.
    SolverFailure {
        time: T,
        reason: &'static str,
    },
}

impl<T: Real> Outcome<T> {
    /// Numerical blow-up time, if blow-up was detected.
    pub fn blowup_time(&self) -> Option<T> {
        match *self {
            Outcome::BlowupThreshold { time } | Outcome::BlowupStepCollapse { time } => Some(time),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::BlowupThreshold { .. } | Outcome::BlowupStepCollapse { .. } => "blowup",
            Outcome::HorizonReached { .. } => "horizon",
            Outcome::SolverFailure { .. } => "failure",
        }
    }
}

impl<T: Real> fmt::Display for Outcome<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::BlowupThreshold { time } => write!(f, "blow-up (threshold) at t = {time}"),
            Outcome::BlowupStepCollapse { time } => write!(f, "blow-up (step collapse) at t = {time}"),
            Outcome::HorizonReached { time } => write!(f, "horizon reached at t = {time}"),
            Outcome::SolverFailure { time, reason } => write!(f, "solver failure at t = {time}: {reason}"),
        }
    }
}

/// One recorded row of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow<T> {
    pub t: T,
    pub dt: T,
    pub sup_abs_u: T,
    pub f: T,
    pub f1: T,
    pub f2: T,
    pub f1_lower_bound: T,
    pub f2_lower_bound: T,
    pub support_radius: T,
}

/// Header of the trace CSV, in column order.
pub const TRACE_HEADER: &str = "t,dt,sup_abs_u,F,F1,F2,F1_lower_bound,F2_lower_bound,support_radius";

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalTrace<T> {
    pub rows: Vec<TraceRow<T>>,
    /// `eps int f phi dx`.
    pub f_phi: T,
    /// `eps int g phi dx`.
    pub g_phi: T,
}

impl<T: Real> FunctionalTrace<T> {
    /// CSV with header, floats with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for r in &self.rows {
            let cols = [
                r.t,
                r.dt,
                r.sup_abs_u,
                r.f,
                r.f1,
                r.f2,
                r.f1_lower_bound,
                r.f2_lower_bound,
                r.support_radius,
            ];
            let line: Vec<String> = cols.iter().map(|x| format!("{:.16e}", x.as_f64())).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct RunReport<T> {
    pub trace: FunctionalTrace<T>,
    pub outcome: Outcome<T>,
    pub steps: usize,
}

type DampingFn<T> = Box<dyn Fn(T) -> T + Send + Sync>;

/// A configured solver; owns the tables shared by all steps of a run.
pub struct WaveSolver<T> {
    params: ProblemParams<T>,
    data: InitialDataSpec<T>,
    grid: RadialGrid<T>,
    controls: SolverControls<T>,
    ctx: TestFunctionContext<T>,
    damping: Option<DampingFn<T>>,
    // exp(-r) phi(r) at the nodes
    phi_norm: Vec<T>,
    // unscaled int f phi, int g phi
    f_phi: T,
    g_phi: T,
}

impl<T: Real> WaveSolver<T> {
    pub fn new(
        params: ProblemParams<T>,
        data: InitialDataSpec<T>,
        grid: RadialGrid<T>,
        controls: SolverControls<T>,
    ) -> Result<Self> {
        params.validate()?;
        data.validate()?;
        controls.validate()?;
        if !grid.supports_horizon(controls.t_max) {
            return Err(Error::GridTooSmall(format!(
                "r_max = {} does not reach 1 + t_max + h = {}",
                grid.r_max(),
                T::one() + controls.t_max + grid.h()
            )));
        }
        let ctx = TestFunctionContext::new(params.n)?;
        let phi_norm = grid.radii().map(|r| ctx.phi_normalized(r)).collect();
        let f_phi = ctx.radial_integral(T::zero(), T::one(), 512, |r| data.f(r) * ctx.phi_scaled(r, T::zero()));
        let g_phi = ctx.radial_integral(T::zero(), T::one(), 512, |r| data.g(r) * ctx.phi_scaled(r, T::zero()));
        Ok(Self {
            params,
            data,
            grid,
            controls,
            ctx,
            damping: None,
            phi_norm,
            f_phi,
            g_phi,
        })
    }

    /// Replaces the damping term `mu b(t) u_t` by `coefficient(t) u_t`.
    pub fn with_damping_fn(mut self, coefficient: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        self.damping = Some(Box::new(coefficient));
        self
    }

    pub fn params(&self) -> &ProblemParams<T> {
        &self.params
    }

    pub fn grid(&self) -> &RadialGrid<T> {
        &self.grid
    }

    pub fn context(&self) -> &TestFunctionContext<T> {
        &self.ctx
    }

    /// `int f phi dx` for the unscaled profile.
    pub fn f_phi(&self) -> T {
        self.f_phi
    }

    pub fn g_phi(&self) -> T {
        self.g_phi
    }

    fn damping_at(&self, t: T) -> T {
        match &self.damping {
            Some(f) => f(t),
            None => self.params.damping_coefficient(t),
        }
    }

    pub fn initialize(&self) -> Result<RadialState<T>> {
        initialize(&self.params, &self.data, &self.grid, self.controls.t_max)
    }

    /// Step size for the next step of `state`.
    pub fn choose_dt(&self, state: &RadialState<T>) -> T {
        let base = self.controls.cfl * self.grid.h();
        if !self.controls.adaptive {
            return base;
        }
        let ProblemParams { p, q, a, b, .. } = self.params;
        let mut rate = T::zero();
        if a {
            rate = rate.max(p * state.sup_v().powf(p - T::one()));
        }
        if b {
            rate = rate.max((q * state.sup_u().powf(q - T::one())).sqrt());
        }
        if rate > T::zero() {
            base.min(self.controls.growth_step / rate)
        } else {
            base
        }
    }

    /// Computational window for the next step.
    ///
    /// The stencil spreads nonzero values by at most two nodes per step. The
    /// window is also capped a fixed margin ahead of the light cone; beyond
    /// it the discrete solution is below underflow for smooth data.
    fn next_active(&self, state: &RadialState<T>) -> usize {
        let h = self.grid.h();
        let cone = (T::one() + state.t) / h;
        let margin = T::lit(64.0) + T::lit(16.0) * cone.cbrt();
        let cap = (cone + margin).ceil().to_usize().unwrap_or(usize::MAX);
        (state.active + 2).min(cap.max(state.active)).min(self.grid.nodes() - 1)
    }

    /// Recomputes `Delta u + b |u|^q` on nodes `from..upto`.
    fn refresh_force(&self, state: &mut RadialState<T>, from: usize, upto: usize) {
        let h = self.grid.h();
        let inv_h2 = (h * h).recip();
        let inv_2h = (h + h).recip();
        let dim = self.params.dim();
        let (b, q) = (self.params.b, self.params.q);
        let u = &state.u;
        let force = &mut state.force;
        if from == 0 {
            // r = 0: Delta u -> N u_rr with the even ghost node u_{-1} = u_1
            force[0] = dim * (u[1] - u[0]) * inv_h2 * T::lit(2.0);
        }
        for i in from.max(1)..upto {
            let r = h * T::from_usize_lossy(i);
            let lap =
                (u[i + 1] - u[i] - u[i] + u[i - 1]) * inv_h2 + (dim - T::one()) / r * (u[i + 1] - u[i - 1]) * inv_2h;
            force[i] = lap;
        }
        if b {
            for i in from..upto {
                force[i] = force[i] + u[i].abs_pow(q);
            }
        }
        state.force_valid = true;
    }

    /// Advances `state` by one step of size `dt`.
    ///
    /// Sets the diverged flag when a value becomes non-finite or crosses the
    /// blow-up threshold.
    pub fn step_with(&self, state: &mut RadialState<T>, dt: T) {
        debug_assert!(!state.diverged);
        let active = self.next_active(state);
        if !state.force_valid {
            self.refresh_force(state, 0, active);
        } else if active > state.active {
            self.refresh_force(state, state.active, active);
        }
        state.active = active;

        let ProblemParams { p, a, .. } = self.params;
        let half = dt / T::lit(2.0);
        let d0 = self.damping_at(state.t);
        let d1 = self.damping_at(state.t + dt);

        // explicit half kick, then drift
        for i in 0..active {
            let vi = state.v[i];
            let mut accel = state.force[i] - d0 * vi;
            if a {
                accel = accel + vi.abs_pow(p);
            }
            let vh = vi + half * accel;
            state.v[i] = vh;
            state.u[i] = state.u[i] + dt * vh;
        }
        self.refresh_force(state, 0, active);

        // closing half kick, implicit in v only
        let denom = T::one() + half * d1;
        let tol = T::epsilon() * T::lit(4.0);
        for i in 0..active {
            let base = state.v[i] + half * state.force[i];
            let mut v = base / denom;
            if a {
                for _ in 0..30 {
                    let next = (base + half * v.abs_pow(p)) / denom;
                    let done = (next - v).abs() <= tol * next.abs();
                    v = next;
                    if done || !v.is_finite() {
                        break;
                    }
                }
            }
            state.v[i] = v;
        }
        state.t = state.t + dt;
        state.dt = dt;

        let level = state.sup_u().max(state.sup_v());
        if !level.is_finite() || level >= self.controls.blowup_threshold {
            state.diverged = true;
        }
    }

    /// Advances `state` by one adaptively chosen step.
    pub fn step(&self, state: &mut RadialState<T>) -> Result<()> {
        if state.diverged {
            return Err(invalid("state", "cannot step a diverged state"));
        }
        let dt = self.choose_dt(state);
        self.step_with(state, dt);
        Ok(())
    }

    fn row(&self, state: &mut RadialState<T>) -> TraceRow<T> {
        state.refresh_support(self.controls.support_threshold);
        let fx = functionals::integrate(state, self.params.n, &self.phi_norm);
        let m = Multiplier::new(self.params.mu).at(state.t);
        let two = T::lit(2.0);
        let eps = self.params.epsilon;
        TraceRow {
            t: state.t,
            dt: state.dt,
            sup_abs_u: state.sup_u(),
            f: fx.f,
            f1: fx.f1,
            f2: fx.f2,
            f1_lower_bound: eps * self.f_phi / (two * m),
            f2_lower_bound: eps * self.g_phi / (two * m),
            support_radius: state.support_radius,
        }
    }

    /// Integrates from the initial data until blow-up, the horizon, or failure.
    pub fn run(&self) -> Result<RunReport<T>> {
        let mut state = self.initialize()?;
        let eps = self.params.epsilon;
        let mut trace = FunctionalTrace {
            rows: Vec::new(),
            f_phi: eps * self.f_phi,
            g_phi: eps * self.g_phi,
        };
        trace.rows.push(self.row(&mut state));

        let t_max = self.controls.t_max;
        let mut next_output = self.controls.output_every;
        let mut growth = GrowthMonitor::new();
        growth.push(state.sup_u().max(state.sup_v()));
        let mut steps = 0usize;
        let tiny = t_max * T::lit(1e-12);

        let outcome = loop {
            if state.t >= t_max - tiny {
                break Outcome::HorizonReached { time: state.t };
            }
            let mut dt = self.choose_dt(&state);
            if self.controls.adaptive && dt < self.controls.dt_min {
                break if growth.is_growing() {
                    Outcome::BlowupStepCollapse { time: state.t }
                } else {
                    Outcome::SolverFailure {
                        time: state.t,
                        reason: "step collapse without growth",
                    }
                };
            }
            if state.t + dt > t_max {
                dt = t_max - state.t;
            }
            let previous = state.t;
            self.step_with(&mut state, dt);
            steps += 1;
            let level = state.sup_u().max(state.sup_v());
            if !level.is_finite() {
                break if growth.is_growing() {
                    Outcome::BlowupStepCollapse { time: previous }
                } else {
                    Outcome::SolverFailure {
                        time: previous,
                        reason: "non-finite values without growth trend",
                    }
                };
            }
            growth.push(level);
            if state.diverged {
                trace.rows.push(self.row(&mut state));
                break if state.alternates_at_peak() {
                    Outcome::SolverFailure {
                        time: state.t,
                        reason: "grid-scale oscillation at the peak (unstable step)",
                    }
                } else {
                    Outcome::BlowupThreshold { time: state.t }
                };
            }
            if state.t >= next_output - tiny {
                trace.rows.push(self.row(&mut state));
                while next_output <= state.t + tiny {
                    next_output = next_output + self.controls.output_every;
                }
            }
        };
        if let Outcome::HorizonReached { .. } = outcome {
            if trace.rows.last().map(|r| r.t) != Some(state.t) {
                trace.rows.push(self.row(&mut state));
            }
        }
        Ok(RunReport { trace, outcome, steps })
    }
}

/// Monotone-growth detector over the last few step maxima.
struct GrowthMonitor<T> {
    window: Vec<T>,
}

impl<T: Real> GrowthMonitor<T> {
    const LEN: usize = 16;

    fn new() -> Self {
        Self {
            window: Vec::with_capacity(Self::LEN),
        }
    }

    fn push(&mut self, x: T) {
        if self.window.len() == Self::LEN {
            self.window.remove(0);
        }
        self.window.push(x);
    }

    fn is_growing(&self) -> bool {
        self.window.len() >= 4
            && self.window.windows(2).all(|w| w[1] >= w[0])
            && self.window[self.window.len() - 1] > self.window[0]
    }
}

/// Builds a solver and runs it once.
pub fn run_until_blowup<T: Real>(
    params: &ProblemParams<T>,
    data: &InitialDataSpec<T>,
    grid: &RadialGrid<T>,
    controls: &SolverControls<T>,
) -> Result<RunReport<T>> {
    WaveSolver::new(*params, *data, *grid, *controls)?.run()
}
