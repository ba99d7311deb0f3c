use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exponents::{classify, lifespan_exponent, ProblemParams, Verdict};
use crate::harness::config::RunConfig;
use crate::harness::fit::fit_powerlaw;
use crate::scalar::Real;
use crate::wave_solver::{run_until_blowup, InitialDataSpec, Outcome, RadialGrid, SolverControls};

/// Mesh width as a function of the amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridPolicy<T> {
    /// The same `h` for every amplitude.
    Fixed { h: T },
    /// `h = h0 (eps / eps_max)^exponent`, where `eps_max` is the largest amplitude.
    Refined { h0: T, exponent: T },
}

impl<T: Real> GridPolicy<T> {
    pub fn h(&self, eps: T, eps_max: T) -> T {
        match *self {
            GridPolicy::Fixed { h } => h,
            GridPolicy::Refined { h0, exponent } => h0 * (eps / eps_max).powf(exponent),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            GridPolicy::Fixed { h } => format!("fixed h = {h}"),
            GridPolicy::Refined { h0, exponent } => format!("refined h = {h0} (eps / eps_max)^{exponent}"),
        }
    }
}

/// An epsilon sweep of the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan<T> {
    /// Template; `epsilon` is replaced per run.
    pub base: ProblemParams<T>,
    pub data: InitialDataSpec<T>,
    /// Strictly decreasing.
    pub epsilons: Vec<T>,
    pub grid: GridPolicy<T>,
    /// `t_max` is the per-run cap.
    pub controls: SolverControls<T>,
    /// Zero lets rayon decide.
    pub workers: usize,
}

impl<T: Real> SweepPlan<T> {
    /// Plan from a parsed configuration with `epsilons` set; the grid is fixed at `h`.
    pub fn from_config(cfg: &RunConfig<T>, workers: usize) -> Result<Self> {
        let epsilons = cfg
            .epsilons
            .clone()
            .ok_or_else(|| invalid("epsilons", "a sweep configuration needs `epsilons = ...`"))?;
        let plan = Self {
            base: cfg.params,
            data: cfg.data,
            epsilons,
            grid: GridPolicy::Fixed { h: cfg.h },
            controls: cfg.controls,
            workers,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.data.validate()?;
        self.controls.validate()?;
        if self.epsilons.len() < 3 {
            return Err(invalid(
                "epsilons",
                format!("a sweep needs at least 3 amplitudes, got {}", self.epsilons.len()),
            ));
        }
        if let Some(&e) = self.epsilons.iter().find(|&&e| !(e > T::zero() && e.is_finite())) {
            return Err(invalid("epsilons", format!("amplitudes must be positive, got {e}")));
        }
        if let Some(w) = self.epsilons.windows(2).find(|w| !(w[1] < w[0])) {
            return Err(invalid(
                "epsilons",
                format!("amplitudes must be strictly decreasing, got {} then {}", w[0], w[1]),
            ));
        }
        let eps_max = self.epsilons[0];
        for &e in &self.epsilons {
            let h = self.grid.h(e, eps_max);
            if !(h > T::zero() && h.is_finite()) {
                return Err(invalid("grid", format!("policy gives h = {h} at eps = {e}")));
            }
        }
        Ok(())
    }

    /// Classification warning for each amplitude (the verdict does not depend on it).
    pub fn warnings(&self) -> Result<Vec<Option<String>>> {
        self.epsilons
            .iter()
            .map(|&e| {
                let c = classify(&self.base.with_epsilon(e))?;
                Ok((c.verdict == Verdict::NoCriterion)
                    .then(|| "no blow-up criterion applies at this parameter point".to_owned()))
            })
            .collect()
    }

    /// Resolved configuration text, the input of the config hash.
    pub fn canonical(&self) -> String {
        let cfg = RunConfig {
            params: self.base,
            data: self.data,
            h: self.grid.h(self.epsilons[0], self.epsilons[0]),
            controls: self.controls,
            epsilons: Some(self.epsilons.clone()),
        };
        let mut out = cfg.canonical();
        let _ = writeln!(out, "grid_policy = {}", self.grid.describe());
        let c = &self.controls;
        let _ = writeln!(
            out,
            "dt_min = {:.16e}\ngrowth_step = {:.16e}\nadaptive = {}\nsupport_threshold = {:.16e}",
            c.dt_min.as_f64(),
            c.growth_step.as_f64(),
            c.adaptive,
            c.support_threshold.as_f64()
        );
        out
    }
}

/// One run of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow<T> {
    pub epsilon: T,
    pub h: T,
    /// Numerical blow-up time; `None` unless the run blew up.
    pub t_num: Option<T>,
    /// `blowup`, `horizon` or `failure`.
    pub outcome: String,
    /// Time at which the run stopped.
    pub end_time: T,
    pub steps: usize,
    pub warning: Option<String>,
    /// Why the row is excluded from the fit.
    pub reason: Option<String>,
}

/// Log-log fit of `T_num` against `eps` with its prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifespanFit<T> {
    /// Ordered by decreasing `eps`.
    pub rows: Vec<SweepRow<T>>,
    pub slope: Option<T>,
    pub intercept: Option<T>,
    pub max_residual: Option<T>,
    pub residual_norm: Option<T>,
    /// `lifespan_exponent` at the base parameters, when defined.
    pub predicted_slope: Option<T>,
    pub relative_slope_error: Option<T>,
    /// `C` in `predicted_T = C eps^predicted_slope`, fitted to the blow-up rows.
    pub predicted_constant: Option<T>,
    pub rows_used: usize,
    /// Indices `i` where `T_num` increased from row `i` to the larger amplitude before it.
    pub monotonicity_violations: Vec<usize>,
    /// Why the fit failed, if it did.
    pub failure: Option<String>,
}

impl<T: Real> LifespanFit<T> {
    pub fn succeeded(&self) -> bool {
        self.slope.is_some()
    }

    pub fn predicted_t(&self, eps: T) -> Option<T> {
        Some(self.predicted_constant? * eps.powf(self.predicted_slope?))
    }
}

fn run_row<T: Real>(plan: &SweepPlan<T>, eps: T, warning: Option<String>) -> SweepRow<T> {
    let h = plan.grid.h(eps, plan.epsilons[0]);
    let params = plan.base.with_epsilon(eps);
    let result = RadialGrid::for_horizon(h, plan.controls.t_max)
        .and_then(|grid| run_until_blowup(&params, &plan.data, &grid, &plan.controls));
    let mut row = SweepRow {
        epsilon: eps,
        h,
        t_num: None,
        outcome: "failure".into(),
        end_time: T::zero(),
        steps: 0,
        warning,
        reason: None,
    };
    match result {
        Ok(report) => {
            row.outcome = report.outcome.label().into();
            row.steps = report.steps;
            match report.outcome {
                Outcome::BlowupThreshold { time } | Outcome::BlowupStepCollapse { time } => {
                    row.t_num = Some(time);
                    row.end_time = time;
                }
                Outcome::HorizonReached { time } => {
                    row.end_time = time;
                    row.reason = Some(format!("no blow-up before t_max = {time}"));
                }
                Outcome::SolverFailure { time, reason } => {
                    row.end_time = time;
                    row.reason = Some(format!("solver failure: {reason}"));
                }
            }
        }
        Err(e) => row.reason = Some(e.to_string()),
    }
    row
}

/// Runs the solver once per amplitude and fits `log T_num` against `log eps`.
///
/// Runs may execute concurrently; rows come back in plan order, so the
/// result depends only on the plan.
pub fn run_sweep<T: Real>(plan: &SweepPlan<T>) -> Result<LifespanFit<T>> {
    plan.validate()?;
    let warnings = plan.warnings()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
        .map_err(|e| invalid("workers", e.to_string()))?;
    let rows: Vec<SweepRow<T>> = pool.install(|| {
        plan.epsilons
            .par_iter()
            .zip(warnings)
            .map(|(&eps, w)| run_row(plan, eps, w))
            .collect()
    });
    Ok(fit_rows(rows, &plan.base))
}

/// Fit over the rows that blew up; the rows must be ordered by decreasing `eps`.
pub fn fit_rows<T: Real>(rows: Vec<SweepRow<T>>, base: &ProblemParams<T>) -> LifespanFit<T> {
    let pairs: Vec<(T, T)> = rows.iter().filter_map(|r| Some((r.epsilon, r.t_num?))).collect();
    let predicted_slope = lifespan_exponent(base.p, base.q, base.n, base.mu).ok();

    // scanning from large to small eps, T_num must not decrease
    let mut monotonicity_violations = Vec::new();
    let mut last: Option<T> = None;
    for (i, r) in rows.iter().enumerate() {
        if let Some(t) = r.t_num {
            if last.is_some_and(|prev| t < prev) {
                monotonicity_violations.push(i);
            }
            last = Some(t);
        }
    }

    let mut out = LifespanFit {
        rows_used: pairs.len(),
        rows,
        slope: None,
        intercept: None,
        max_residual: None,
        residual_norm: None,
        predicted_slope,
        relative_slope_error: None,
        predicted_constant: None,
        monotonicity_violations,
        failure: None,
    };
    match fit_powerlaw(&pairs) {
        Ok(fit) => {
            out.slope = Some(fit.slope);
            out.intercept = Some(fit.intercept);
            out.max_residual = Some(fit.max_residual);
            out.residual_norm = Some(fit.residual_norm);
            if let Some(s) = predicted_slope {
                out.relative_slope_error = Some(((fit.slope - s) / s).abs());
                let n = T::from_usize_lossy(pairs.len());
                let log_c = pairs.iter().fold(T::zero(), |acc, &(e, t)| acc + t.ln() - s * e.ln()) / n;
                out.predicted_constant = Some(log_c.exp());
            }
        }
        Err(e) => {
            let mut reason = match e {
                Error::InsufficientData(_) => format!("{} usable rows, need at least 3", pairs.len()),
                other => other.to_string(),
            };
            for r in out.rows.iter().filter(|r| r.t_num.is_none()) {
                let why = r.reason.as_deref().unwrap_or(r.outcome.as_str());
                let _ = write!(reason, "; eps = {}: {}", r.epsilon, why);
            }
            out.failure = Some(reason);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(eps: Vec<f64>) -> SweepPlan<f64> {
        SweepPlan {
            base: ProblemParams::new(1, 0.5, 2.0, 3.0, 0.1).unwrap(),
            data: InitialDataSpec::default(),
            epsilons: eps,
            grid: GridPolicy::Fixed { h: 0.02 },
            controls: SolverControls::default().with_t_max(3.0),
            workers: 2,
        }
    }

    fn row(eps: f64, t: Option<f64>) -> SweepRow<f64> {
        SweepRow {
            epsilon: eps,
            h: 0.01,
            t_num: t,
            outcome: if t.is_some() { "blowup" } else { "horizon" }.into(),
            end_time: t.unwrap_or(100.0),
            steps: 1,
            warning: None,
            reason: t.is_none().then(|| "no blow-up".into()),
        }
    }

    #[test]
    fn plan_validation() {
        assert!(plan(vec![0.4, 0.2, 0.1]).validate().is_ok());
        assert!(plan(vec![0.4, 0.2]).validate().is_err());
        assert!(plan(vec![0.4, 0.2, 0.2, 0.1]).validate().is_err());
        assert!(plan(vec![0.1, 0.2, 0.4]).validate().is_err());
        assert!(plan(vec![0.4, 0.2, -0.1]).validate().is_err());
    }

    #[test]
    fn warnings_flag_no_criterion() {
        let mut p = plan(vec![0.4, 0.2, 0.1]);
        assert!(p.warnings().unwrap().iter().all(Option::is_none));
        p.base = p.base.with_switches(false, false);
        assert!(p.warnings().unwrap().iter().all(Option::is_some));
    }

    #[test]
    fn refined_policy() {
        let g = GridPolicy::Refined {
            h0: 0.02_f64,
            exponent: 1.0,
        };
        assert_eq!(g.h(0.4, 0.4), 0.02);
        assert!((g.h(0.1, 0.4) - 0.005).abs() < 1e-15);
    }

    #[test]
    fn exact_rows_fit() {
        let base = ProblemParams::new(1, 0.5, 2.0, 3.0, 0.1).unwrap();
        let rows = [0.4, 0.2, 0.1, 0.05]
            .iter()
            .map(|&e: &f64| row(e, Some(3.0 * e.powi(-2))))
            .collect();
        let fit = fit_rows(rows, &base);
        assert!((fit.slope.unwrap() + 2.0).abs() < 1e-12);
        assert!(fit.relative_slope_error.unwrap() < 1e-12);
        assert!((fit.predicted_t(0.3).unwrap() - 3.0 / 0.09).abs() < 1e-9);
        assert!(fit.monotonicity_violations.is_empty());
    }

    #[test]
    fn horizon_rows_are_excluded() {
        let base = ProblemParams::new(1, 0.5, 2.0, 3.0, 0.1).unwrap();
        let rows = vec![
            row(0.4, Some(5.0)),
            row(0.2, Some(12.0)),
            row(0.1, None),
            row(0.05, None),
        ];
        let fit = fit_rows(rows, &base);
        assert!(!fit.succeeded());
        assert_eq!(fit.rows_used, 2);
        let why = fit.failure.unwrap();
        assert!(why.contains("eps = 0.1") && why.contains("eps = 0.05"), "{why}");
    }

    #[test]
    fn monotonicity_violations_are_flagged() {
        let base = ProblemParams::new(1, 0.5, 2.0, 3.0, 0.1).unwrap();
        let rows = vec![row(0.4, Some(5.0)), row(0.2, Some(4.0)), row(0.1, Some(30.0))];
        assert_eq!(fit_rows(rows, &base).monotonicity_violations, vec![1]);
    }

    #[test]
    fn linear_sweep_fails_cleanly() {
        let mut p = plan(vec![0.4, 0.2, 0.1]);
        p.base = p.base.with_switches(false, false);
        let fit = run_sweep(&p).unwrap();
        assert!(!fit.succeeded());
        assert_eq!(fit.rows_used, 0);
        assert!(fit.rows.iter().all(|r| r.outcome == "horizon"));
    }
}
