//! The comparison ODE behind the lifespan estimate.
//!
//! With `F(t) = int u dx` and `m(t) = (1 + t)^mu` the functional obeys a
//! Riccati-type inequality whose equality counterpart is
//!
//! ```text
//! F' = G / m(t)
//! G' = b F^q (1 + t)^(mu - N (q - 1)) + a S (1 + t)^(mu - mu p - (N - 1)(p - 2) / 2)
//! ```
//!
//! `S >= 0` is the amplitude of the forcing contributed by `|u_t|^p`; with
//! `S = 0` only the `F^q` channel remains. The escape time of this system is
//! a cheap proxy for the lifespan and its scaling in `eps`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::exponents::{classify, lambda, lifespan_exponent, ProblemParams, Verdict};
use crate::harness::fit::{fit_powerlaw, PowerLawFit};
use crate::scalar::Real;

/// Safety margin kept between `gamma(delta0)` and `-1`.
pub const GAMMA_MARGIN: f64 = 0.05;

/// Initial value problem for the comparison system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonConfig<T> {
    pub params: ProblemParams<T>,
    pub f_init: T,
    pub fprime_init: T,
    pub t_start: T,
    /// Forcing amplitude `S` of the `|u_t|^p` channel.
    pub source_amplitude: T,
}

impl<T: Real> ComparisonConfig<T> {
    /// Unforced system.
    pub fn new(params: ProblemParams<T>, f_init: T, fprime_init: T, t_start: T) -> Result<Self> {
        let cfg = Self {
            params,
            f_init,
            fprime_init,
            t_start,
            source_amplitude: T::zero(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_source(mut self, amplitude: T) -> Self {
        self.source_amplitude = amplitude;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.f_init > T::zero() && self.f_init.is_finite()) {
            return Err(invalid("f_init", format!("must be positive, got {}", self.f_init)));
        }
        if !(self.fprime_init > T::zero() && self.fprime_init.is_finite()) {
            return Err(invalid(
                "fprime_init",
                format!("must be positive, got {}", self.fprime_init),
            ));
        }
        if !(self.t_start >= T::zero() && self.t_start.is_finite()) {
            return Err(invalid("t_start", format!("must be >= 0, got {}", self.t_start)));
        }
        if !(self.source_amplitude >= T::zero() && self.source_amplitude.is_finite()) {
            return Err(invalid(
                "source_amplitude",
                format!("must be >= 0, got {}", self.source_amplitude),
            ));
        }
        let cap = crate::exponents::mu_cap(self.params.q, self.params.n);
        if !(self.params.mu < cap) {
            return Err(invalid(
                "mu",
                format!("need mu < N (q - 1) / 2 = {cap}, got {}", self.params.mu),
            ));
        }
        Ok(())
    }

    fn rhs(&self, t: T, f: T, g: T) -> (T, T) {
        let ProblemParams { n, mu, p, q, a, b, .. } = self.params;
        let one = T::one();
        let n = T::from_usize_lossy(n as usize);
        let s = one + t;
        let fp = g / s.powf(mu);
        let mut gp = T::zero();
        if b {
            gp = gp + f.max(T::zero()).powf(q) * s.powf(mu - n * (q - one));
        }
        if a && self.source_amplitude > T::zero() {
            let e = mu - mu * p - (n - one) * (p - T::lit(2.0)) / T::lit(2.0);
            gp = gp + self.source_amplitude * s.powf(e);
        }
        (fp, gp)
    }
}

/// Adaptive Dormand-Prince settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions<T> {
    pub rtol: T,
    /// First trial step.
    pub base_step: T,
    /// Escape needs `F` above this level.
    pub escape_level: T,
    /// Escape also needs the doubling time `F / F'` below this fraction of `1 + t`.
    pub doubling_fraction: T,
    pub t_cap: T,
    pub max_steps: usize,
}

impl<T: Real> Default for IntegratorOptions<T> {
    fn default() -> Self {
        Self {
            rtol: T::lit(1e-10),
            base_step: T::lit(1e-3),
            escape_level: T::lit(1e12),
            doubling_fraction: T::lit(1e-3),
            t_cap: T::lit(1e12),
            max_steps: 2_000_000,
        }
    }
}

impl<T: Real> IntegratorOptions<T> {
    pub fn with_t_cap(mut self, t_cap: T) -> Self {
        self.t_cap = t_cap;
        self
    }

    pub fn with_base_step(mut self, base_step: T) -> Self {
        self.base_step = base_step;
        self
    }
}

/// Result of a successful integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Escape<T> {
    /// Escape time, extrapolated to the pole from the last accepted step.
    pub time: T,
    /// Time of the last accepted step.
    pub t_last: T,
    pub steps: usize,
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// fifth-order minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn drive<T: Real>(
    cfg: &ComparisonConfig<T>,
    opts: &IntegratorOptions<T>,
    mut on_step: impl FnMut(T, T),
) -> Result<Escape<T>> {
    cfg.validate()?;
    if !(opts.rtol > T::zero() && opts.base_step > T::zero() && opts.t_cap > cfg.t_start) {
        return Err(invalid("options", "need rtol > 0, base_step > 0 and t_cap > t_start"));
    }
    let one = T::one();
    let mut t = cfg.t_start;
    let mut y = [cfg.f_init, (one + t).powf(cfg.params.mu) * cfg.fprime_init];
    let mut h = opts.base_step;
    let mut steps = 0usize;
    let pole = T::lit(2.0) / (cfg.params.q - one);
    on_step(t, y[0]);

    while steps < opts.max_steps {
        h = h.min(opts.t_cap - t);
        let mut k = [[T::zero(); 2]; 7];
        for s in 0..7 {
            let mut yi = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = T::lit(A[s][j]);
                yi[0] = yi[0] + h * a * kj[0];
                yi[1] = yi[1] + h * a * kj[1];
            }
            let (f0, f1) = cfg.rhs(t + T::lit(C[s]) * h, yi[0], yi[1]);
            k[s] = [f0, f1];
        }
        // the last stage is evaluated at the fifth-order solution
        let mut y_new = y;
        for (j, kj) in k.iter().enumerate().take(6) {
            let a = T::lit(A[6][j]);
            y_new[0] = y_new[0] + h * a * kj[0];
            y_new[1] = y_new[1] + h * a * kj[1];
        }
        let mut err = T::zero();
        for i in 0..2 {
            let e = k.iter().zip(E).fold(T::zero(), |acc, (kj, e)| acc + T::lit(e) * kj[i]) * h;
            let scale = opts.rtol * y[i].abs().max(y_new[i].abs()).max(T::min_positive_value());
            err = err.max(e.abs() / scale);
        }
        if !(err.is_finite() && y_new[0].is_finite() && y_new[1].is_finite()) {
            if y[0] > opts.escape_level {
                return Ok(Escape {
                    time: t,
                    t_last: t,
                    steps,
                });
            }
            h = h / T::lit(8.0);
        } else if err <= one {
            t = t + h;
            y = y_new;
            steps += 1;
            on_step(t, y[0]);
            let fp = y[1] / (one + t).powf(cfg.params.mu);
            let doubling = y[0] / fp;
            if y[0] > opts.escape_level && doubling < opts.doubling_fraction * (one + t) {
                return Ok(Escape {
                    time: t + pole * doubling,
                    t_last: t,
                    steps,
                });
            }
            if t >= opts.t_cap {
                break;
            }
            let grow = T::lit(0.9) * err.max(T::lit(1e-10)).powf(T::lit(-0.2));
            h = h * grow.min(T::lit(5.0));
        } else {
            let shrink = T::lit(0.9) * err.powf(T::lit(-0.2));
            h = h * shrink.max(T::lit(0.2));
        }
        if h < T::epsilon() * (one + t) {
            if y[0] > opts.escape_level {
                return Ok(Escape {
                    time: t,
                    t_last: t,
                    steps,
                });
            }
            return Err(Error::FitFailed(format!(
                "comparison step collapsed at t = {t} with F = {}",
                y[0]
            )));
        }
    }
    Err(Error::HorizonReached {
        time: t.as_f64(),
        value: y[0].as_f64(),
    })
}

/// Escape time of the comparison system.
pub fn integrate_comparison<T: Real>(cfg: &ComparisonConfig<T>, opts: &IntegratorOptions<T>) -> Result<Escape<T>> {
    drive(cfg, opts, |_, _| {})
}

/// Accepted `(t, F)` samples up to escape or `t_end`, whichever comes first.
pub fn comparison_trajectory<T: Real>(
    cfg: &ComparisonConfig<T>,
    opts: &IntegratorOptions<T>,
    t_end: T,
) -> Result<Vec<(T, T)>> {
    let mut out = Vec::new();
    let opts = opts.with_t_cap(t_end.min(opts.t_cap));
    match drive(cfg, &opts, |t, f| out.push((t, f))) {
        Ok(_) | Err(Error::HorizonReached { .. }) => Ok(out),
        Err(e) => Err(e),
    }
}

/// Constants used to seed the comparison system from the data amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedOptions<T> {
    pub t_start: T,
    /// `kappa` in `F_init = kappa eps^p (1 + T)^(-mu p - p (N - 1) / 2) T^(N + 1)`.
    pub kappa: T,
    /// Forcing amplitude is `source_kappa * eps^p`; zero disables the forcing.
    pub source_kappa: T,
}

impl<T: Real> Default for SeedOptions<T> {
    fn default() -> Self {
        Self {
            t_start: T::one(),
            kappa: T::one(),
            source_kappa: T::one(),
        }
    }
}

/// Exponent of `1 + t` in the seeding envelope, `-mu p - p (N - 1) / 2`.
pub fn envelope_exponent<T: Real>(params: &ProblemParams<T>) -> T {
    let n = T::from_usize_lossy(params.n as usize);
    -params.mu * params.p - params.p * (n - T::one()) / T::lit(2.0)
}

/// Starts the comparison system on the lower envelope of `F`.
pub fn seed_from_epsilon<T: Real>(params: &ProblemParams<T>, seed: &SeedOptions<T>) -> Result<ComparisonConfig<T>> {
    params.validate()?;
    if !params.a {
        return Err(invalid("a", "seeding uses the |u_t|^p channel and needs a = 1"));
    }
    if !(params.epsilon > T::zero()) {
        return Err(invalid("epsilon", "must be positive for seeding"));
    }
    if !(seed.t_start > T::zero() && seed.kappa > T::zero() && seed.source_kappa >= T::zero()) {
        return Err(invalid("seed", "need t_start > 0, kappa > 0 and source_kappa >= 0"));
    }
    let one = T::one();
    let ts = seed.t_start;
    let n1 = T::from_usize_lossy(params.n as usize + 1);
    let e = envelope_exponent(params);
    let amp = params.epsilon.powf(params.p);
    let f_init = seed.kappa * amp * (one + ts).powf(e) * ts.powf(n1);
    let fprime_init = f_init * (e / (one + ts) + n1 / ts);
    if !(fprime_init > T::zero()) {
        return Err(invalid(
            "t_start",
            format!("the seeding envelope is decreasing at t_start = {ts}; choose a smaller start time"),
        ));
    }
    Ok(ComparisonConfig {
        params: *params,
        f_init,
        fprime_init,
        t_start: ts,
        source_amplitude: seed.source_kappa * amp,
    })
}

fn lambda_shifted<T: Real>(params: &ProblemParams<T>) -> Result<T> {
    let lam = lambda(params.p, params.q, params.dim() + T::lit(2.0) * params.mu);
    if !(lam < T::lit(4.0)) {
        return Err(Error::LambdaNotBelowFour { lambda: lam.as_f64() });
    }
    Ok(lam)
}

/// `gamma(delta) = -lambda / 4 - delta (2 - mu p - (N - 1)(p - 2) / 2)`.
pub fn gamma<T: Real>(params: &ProblemParams<T>, delta: T) -> T {
    let two = T::lit(2.0);
    let lam = lambda(params.p, params.q, params.dim() + two * params.mu);
    let coef = two - params.mu * params.p - (params.dim() - T::one()) * (params.p - two) / two;
    -lam / T::lit(4.0) - delta * coef
}

/// Largest `2^-k`, `k = 1..=60`, with `delta < (q - 1) / 4` and `gamma(delta) > -1 + margin`.
///
/// The margin is [`GAMMA_MARGIN`] while that is attainable, that is for
/// `lambda < 4 (1 - GAMMA_MARGIN)`; closer to `lambda = 4` it falls back to
/// `(1 - lambda / 4) / 2`.
pub fn choose_delta0<T: Real>(params: &ProblemParams<T>) -> Result<T> {
    params.validate()?;
    let lam = lambda_shifted(params)?;
    let one = T::one();
    let cap = (params.q - one) / T::lit(4.0);
    let scan = |margin: T| {
        (1..=60)
            .map(|k| T::lit(0.5).powi(k))
            .find(|&d| d < cap && gamma(params, d) > margin - one)
    };
    scan(T::lit(GAMMA_MARGIN))
        .or_else(|| scan((one - lam / T::lit(4.0)) / T::lit(2.0)))
        .ok_or_else(|| {
            invalid(
                "q",
                format!("no admissible delta0 >= 2^-60 (q - 1 = {})", params.q - one),
            )
        })
}

/// `(C0 eps^(-p (q - 1) / 2))^(1 / (1 - lambda / 4))` at `params.epsilon`.
pub fn theoretical_t0<T: Real>(params: &ProblemParams<T>, c0_fit: T) -> Result<T> {
    let lam = lambda_shifted(params)?;
    if !(c0_fit > T::zero()) {
        return Err(invalid("c0_fit", format!("must be positive, got {c0_fit}")));
    }
    if !(params.epsilon > T::zero()) {
        return Err(invalid("epsilon", "must be positive"));
    }
    let base = c0_fit * params.epsilon.powf(-params.p * (params.q - T::one()) / T::lit(2.0));
    Ok(base.powf(T::one() / (T::one() - lam / T::lit(4.0))))
}

/// Log-spaced amplitudes from `start` down over `decades` decades.
pub fn log_spaced_epsilons<T: Real>(start: T, decades: u32, points: usize) -> Result<Vec<T>> {
    if !(start > T::zero()) || decades == 0 || points < 2 {
        return Err(invalid("epsilons", "need start > 0, decades >= 1 and points >= 2"));
    }
    let span = T::from_usize_lossy(decades as usize);
    let last = T::from_usize_lossy(points - 1);
    Ok((0..points)
        .map(|i| start * T::lit(10.0).powf(-span * T::from_usize_lossy(i) / last))
        .collect())
}

/// Scaling of the comparison escape time in `eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeLifespanFit<T> {
    /// `(eps, escape time)` ordered by decreasing `eps`.
    pub rows: Vec<(T, T)>,
    pub fit: PowerLawFit<T>,
    pub predicted_slope: T,
    pub relative_slope_error: T,
}

/// Seeds and integrates the comparison system for every amplitude and fits
/// `log T` against `log eps`.
pub fn fit_ode_lifespan_exponent<T: Real>(
    params: &ProblemParams<T>,
    epsilons: &[T],
    seed: &SeedOptions<T>,
    opts: &IntegratorOptions<T>,
) -> Result<OdeLifespanFit<T>> {
    if epsilons.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "need at least 4 amplitudes, got {}",
            epsilons.len()
        )));
    }
    let (lo, hi) = epsilons
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &e| {
            (lo.min(e), hi.max(e))
        });
    if !(lo > T::zero()) {
        return Err(invalid("epsilons", "amplitudes must be positive"));
    }
    if !(hi / lo >= T::lit(100.0) * (T::one() - T::lit(1e-9))) {
        return Err(Error::InsufficientData(format!(
            "amplitudes must span at least two decades, got [{lo}, {hi}]"
        )));
    }
    let class = classify(params)?;
    if !class.applicable.contains(&Verdict::BlowUpCombined) {
        return Err(invalid(
            "params",
            format!("not in the combined blow-up regime (verdict {})", class.verdict),
        ));
    }
    let predicted_slope = lifespan_exponent(params.p, params.q, params.n, params.mu)?;

    let mut eps: Vec<T> = epsilons.to_vec();
    eps.sort_by(|a, b| b.partial_cmp(a).expect("finite amplitudes"));
    let times: Vec<Result<T>> = eps
        .par_iter()
        .map(|&e| {
            let cfg = seed_from_epsilon(&params.with_epsilon(e), seed)?;
            integrate_comparison(&cfg, opts).map(|esc| esc.time)
        })
        .collect();
    let mut rows = Vec::with_capacity(eps.len());
    for (&e, t) in eps.iter().zip(times) {
        match t {
            Ok(t) => rows.push((e, t)),
            Err(err) => return Err(Error::FitFailed(format!("eps = {e}: {err}"))),
        }
    }
    let fit = fit_powerlaw(&rows)?;
    let relative_slope_error = ((fit.slope - predicted_slope) / predicted_slope).abs();
    Ok(OdeLifespanFit {
        rows,
        fit,
        predicted_slope,
        relative_slope_error,
    })
}

/// The bookkeeping of the lifespan proof, with the unspecified constants fitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real + Serialize"))]
pub struct ProofLedger<T> {
    pub delta0: T,
    pub gamma: T,
    /// Threshold time at `params.epsilon` with the fitted `C0`.
    pub t0: T,
    /// `C1 eps^(lifespan exponent)` at `params.epsilon`, fitted `C1`.
    pub predicted_bound: T,
    pub c0_fitted: T,
    pub c1_fitted: T,
}

impl<T: Real> ProofLedger<T> {
    /// Fits `C0` and `C1` to the comparison escape times.
    ///
    /// `C1` is the smallest constant for which `C1 eps^s` bounds every row;
    /// `C0` is the geometric mean of the values implied by
    /// `T <= 2^(1 / (gamma + 1)) (1 + T0)`.
    pub fn from_fit(params: &ProblemParams<T>, fit: &OdeLifespanFit<T>) -> Result<Self> {
        let lam = lambda_shifted(params)?;
        let one = T::one();
        let delta0 = choose_delta0(params)?;
        let gamma = gamma(params, delta0);
        let s = fit.predicted_slope;
        let c1 = fit.rows.iter().fold(T::zero(), |m, &(e, t)| m.max(t * e.powf(-s)));
        let factor = T::lit(2.0).powf(one / (gamma + one));
        let expo = one - lam / T::lit(4.0);
        let half = params.p * (params.q - one) / T::lit(2.0);
        let (sum, count) = fit.rows.iter().fold((T::zero(), 0usize), |(sum, c), &(e, t)| {
            let t0 = t / factor - one;
            if t0 > T::zero() {
                (sum + expo * t0.ln() + half * e.ln(), c + 1)
            } else {
                (sum, c)
            }
        });
        if count == 0 {
            return Err(Error::FitFailed("no row gives a positive threshold time".into()));
        }
        let c0 = (sum / T::from_usize_lossy(count)).exp();
        Ok(Self {
            delta0,
            gamma,
            t0: theoretical_t0(params, c0)?,
            predicted_bound: c1 * params.epsilon.powf(s),
            c0_fitted: c0,
            c1_fitted: c1,
        })
    }
}
