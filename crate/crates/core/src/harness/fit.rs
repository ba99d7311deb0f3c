use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Ordinary least squares of `log y` on `log x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit<T> {
    pub slope: T,
    pub intercept: T,
    /// Largest absolute residual in log space.
    pub max_residual: T,
    /// Euclidean norm of the log-space residuals.
    pub residual_norm: T,
}

impl<T: Real> PowerLawFit<T> {
    /// `exp(intercept) * x^slope`.
    pub fn predict(&self, x: T) -> T {
        (self.intercept + self.slope * x.ln()).exp()
    }
}

/// Fits `y = C x^slope` through at least three positive pairs.
pub fn fit_powerlaw<T: Real>(pairs: &[(T, T)]) -> Result<PowerLawFit<T>> {
    if pairs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "power-law fit needs at least 3 pairs, got {}",
            pairs.len()
        )));
    }
    if let Some(&(x, y)) = pairs.iter().find(|(x, y)| !(*x > T::zero() && *y > T::zero())) {
        return Err(invalid(
            "pairs",
            format!("coordinates must be positive, got ({x}, {y})"),
        ));
    }
    let n = T::from_usize_lossy(pairs.len());
    let logs: Vec<(T, T)> = pairs.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mx = logs.iter().fold(T::zero(), |s, &(x, _)| s + x) / n;
    let my = logs.iter().fold(T::zero(), |s, &(_, y)| s + y) / n;
    let (sxx, sxy) = logs.iter().fold((T::zero(), T::zero()), |(sxx, sxy), &(x, y)| {
        let dx = x - mx;
        (sxx + dx * dx, sxy + dx * (y - my))
    });
    if !(sxx > T::epsilon() * n * (mx * mx).max(T::one())) {
        return Err(Error::FitFailed("degenerate abscissae: all x values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (max_residual, sq) = logs.iter().fold((T::zero(), T::zero()), |(m, sq), &(x, y)| {
        let r = y - (intercept + slope * x);
        (m.max(r.abs()), sq + r * r)
    });
    Ok(PowerLawFit {
        slope,
        intercept,
        max_residual,
        residual_norm: sq.sqrt(),
    })
}
