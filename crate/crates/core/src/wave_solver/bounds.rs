use crate::exponents::ProblemParams;
use crate::scalar::Real;
use crate::special_functions::Multiplier;

use super::FunctionalTrace;

/// Slack applied to the `F1`, `F2` lower bounds to absorb quadrature error.
pub const LOWER_BOUND_SLACK: f64 = 0.999;

/// First row at which an inequality failed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation<T> {
    pub row: usize,
    pub t: T,
    pub lhs: T,
    pub rhs: T,
}

/// Best constant `C` in `F(t) >= C eps^p (1+t)^(-mu p - p(N-1)/2) t^(N+1)`.
///
/// `c_fit` is the minimum of `F / envelope` over the rows used, i.e. the
/// largest constant for which the bound holds on the trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeFit<T> {
    pub c_fit: T,
    pub c_max: T,
    /// `min log(F / envelope)`.
    pub log_gap_min: T,
    pub rows_used: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundReport<T> {
    pub rows_checked: usize,
    pub f1_violation: Option<Violation<T>>,
    pub f2_violation: Option<Violation<T>>,
    /// `None` when no row lies in `t >= 1` or `F` is not positive there.
    pub envelope: Option<EnvelopeFit<T>>,
}

impl<T: Real> LowerBoundReport<T> {
    pub fn passed(&self) -> bool {
        self.f1_violation.is_none()
            && self.f2_violation.is_none()
            && self
                .envelope
                .is_none_or(|e| e.c_fit > T::zero() && e.log_gap_min.is_finite())
    }
}

/// `eps^p (1+t)^(-mu p - p(N-1)/2) t^(N+1)`.
pub fn f_envelope<T: Real>(params: &ProblemParams<T>, t: T) -> T {
    let ProblemParams { mu, p, epsilon, .. } = *params;
    let dim = params.dim();
    let decay = -mu * p - p * (dim - T::one()) / T::lit(2.0);
    epsilon.powf(p) * (T::one() + t).powf(decay) * t.powf(dim + T::one())
}

/// Checks the `F1`, `F2` lower bounds row by row and fits the constant of
/// the `F` envelope over the rows with `t >= 1`.
pub fn verify_lower_bounds<T: Real>(trace: &FunctionalTrace<T>, params: &ProblemParams<T>) -> LowerBoundReport<T> {
    let m = Multiplier::new(params.mu);
    let slack = T::lit(LOWER_BOUND_SLACK);
    let two = T::lit(2.0);
    let mut report = LowerBoundReport {
        rows_checked: 0,
        f1_violation: None,
        f2_violation: None,
        envelope: None,
    };
    let mut fit: Option<EnvelopeFit<T>> = None;
    let mut envelope_ok = true;
    for (i, row) in trace.rows.iter().enumerate() {
        let mt = m.at(row.t);
        let f1_rhs = slack * trace.f_phi / (two * mt);
        let f2_rhs = slack * trace.g_phi / (two * mt);
        if report.f1_violation.is_none() && !(row.f1 >= f1_rhs) {
            report.f1_violation = Some(Violation {
                row: i,
                t: row.t,
                lhs: row.f1,
                rhs: f1_rhs,
            });
        }
        if report.f2_violation.is_none() && !(row.f2 >= f2_rhs) {
            report.f2_violation = Some(Violation {
                row: i,
                t: row.t,
                lhs: row.f2,
                rhs: f2_rhs,
            });
        }
        report.rows_checked += 1;

        if row.t >= T::one() {
            let env = f_envelope(params, row.t);
            let ratio = row.f / env;
            if !(ratio > T::zero()) || !ratio.is_finite() {
                envelope_ok = false;
                continue;
            }
            fit = Some(match fit {
                None => EnvelopeFit {
                    c_fit: ratio,
                    c_max: ratio,
                    log_gap_min: ratio.ln(),
                    rows_used: 1,
                },
                Some(e) => EnvelopeFit {
                    c_fit: e.c_fit.min(ratio),
                    c_max: e.c_max.max(ratio),
                    log_gap_min: e.log_gap_min.min(ratio.ln()),
                    rows_used: e.rows_used + 1,
                },
            });
        }
    }
    report.envelope = if envelope_ok {
        fit
    } else {
        fit.map(|e| EnvelopeFit {
            c_fit: T::zero(),
            log_gap_min: T::neg_infinity(),
            ..e
        })
    };
    report
}
