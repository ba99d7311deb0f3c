use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Radial shape of the initial data, supported in the unit ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// `(1 - r^2)^k` for `r < 1`.
    PolynomialBump { k: u32 },
    /// `((exp(-4 r^2) - exp(-4)) / (1 - exp(-4)))^2` for `r < 1`.
    GaussianTruncated,
}

impl Profile {
    pub fn shape<T: Real>(&self, r: T) -> T {
        let r = r.abs();
        if r >= T::one() {
            return T::zero();
        }
        match *self {
            Profile::PolynomialBump { k } => (T::one() - r * r).powi(k as i32),
            Profile::GaussianTruncated => {
                let alpha = T::lit(4.0);
                let floor = (-alpha).exp();
                let s = ((-alpha * r * r).exp() - floor) / (T::one() - floor);
                s * s
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Profile::PolynomialBump { .. } => "polynomial",
            Profile::GaussianTruncated => "gaussian",
        }
    }
}

impl Default for Profile {
    fn default() -> Self {
        Profile::PolynomialBump { k: 4 }
    }
}

/// Initial data `u(0) = eps * f`, `u_t(0) = eps * g` with `f`, `g` multiples
/// of one radial profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialDataSpec<T> {
    pub profile: Profile,
    pub f_amplitude: T,
    pub g_amplitude: T,
}

impl<T: Real> Default for InitialDataSpec<T> {
    fn default() -> Self {
        Self {
            profile: Profile::default(),
            f_amplitude: T::one(),
            g_amplitude: T::one(),
        }
    }
}

impl<T: Real> InitialDataSpec<T> {
    pub fn new(profile: Profile, f_amplitude: T, g_amplitude: T) -> Result<Self> {
        let spec = Self {
            profile,
            f_amplitude,
            g_amplitude,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if let Profile::PolynomialBump { k } = self.profile {
            if k < 3 {
                return Err(invalid("k", format!("bump smoothness must be >= 3, got {k}")));
            }
        }
        if !(self.f_amplitude >= T::zero()) || !(self.g_amplitude >= T::zero()) {
            return Err(invalid("amplitude", "f and g amplitudes must be nonnegative"));
        }
        if self.f_amplitude == T::zero() && self.g_amplitude == T::zero() {
            return Err(invalid("amplitude", "f and g cannot both vanish"));
        }
        Ok(())
    }

    pub fn f(&self, r: T) -> T {
        self.f_amplitude * self.profile.shape(r)
    }

    pub fn g(&self, r: T) -> T {
        self.g_amplitude * self.profile.shape(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_vanish_with_derivative_at_unit_radius() {
        for profile in [
            Profile::PolynomialBump { k: 3 },
            Profile::PolynomialBump { k: 4 },
            Profile::GaussianTruncated,
        ] {
            assert_eq!(profile.shape(1.0_f64), 0.0);
            assert_eq!(profile.shape(1.5_f64), 0.0);
            let h = 1e-6;
            let slope: f64 = (profile.shape(1.0 - h) - profile.shape(1.0 - 2.0 * h)) / h;
            assert!(slope.abs() < 1e-4, "{profile:?}: {slope}");
            assert!(profile.shape(0.5_f64) > 0.0);
            assert_eq!(profile.shape(0.0_f64), 1.0);
        }
    }

    #[test]
    fn validation() {
        assert!(InitialDataSpec::new(Profile::PolynomialBump { k: 2 }, 1.0, 1.0).is_err());
        assert!(InitialDataSpec::new(Profile::default(), 0.0, 0.0).is_err());
        assert!(InitialDataSpec::new(Profile::default(), -1.0, 1.0).is_err());
        assert!(InitialDataSpec::new(Profile::default(), 0.0, 1.0).is_ok());
    }
}
