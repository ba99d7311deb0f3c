//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comment
//! n = 1
//! mu = 0.5
//! p = 2
//! q = 3
//! epsilons = 0.4, 0.2, 0.1, 0.05
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::exponents::ProblemParams;
use crate::scalar::Real;
use crate::wave_solver::{InitialDataSpec, Profile, RadialGrid, SolverControls};

/// Every key the parser accepts.
pub const KEYS: [&str; 15] = [
    "n",
    "mu",
    "p",
    "q",
    "a",
    "b",
    "epsilon",
    "profile",
    "k",
    "h",
    "cfl",
    "t_max",
    "blowup_threshold",
    "output_every",
    "epsilons",
];

/// A resolved solver (and optionally sweep) configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig<T> {
    pub params: ProblemParams<T>,
    pub data: InitialDataSpec<T>,
    pub h: T,
    pub controls: SolverControls<T>,
    /// Sweep amplitudes, if given.
    pub epsilons: Option<Vec<T>>,
}

impl<T: Real> Default for RunConfig<T> {
    fn default() -> Self {
        Self {
            params: ProblemParams {
                n: 1,
                mu: T::lit(0.5),
                p: T::lit(2.0),
                q: T::lit(3.0),
                a: true,
                b: true,
                epsilon: T::lit(0.1),
                damping: crate::exponents::Damping::ScaleInvariant,
            },
            data: InitialDataSpec::default(),
            h: T::lit(0.01),
            controls: SolverControls::default(),
            epsilons: None,
        }
    }
}

fn config_err(line: usize, reason: impl Into<String>) -> Error {
    Error::Config {
        line,
        reason: reason.into(),
    }
}

fn real<T: Real>(line: usize, key: &str, value: &str) -> Result<T> {
    let x: f64 = value
        .parse()
        .map_err(|_| config_err(line, format!("`{key}` expects a number, got `{value}`")))?;
    if !x.is_finite() {
        return Err(config_err(line, format!("`{key}` must be finite")));
    }
    Ok(T::lit(x))
}

fn switch(line: usize, key: &str, value: &str) -> Result<bool> {
    match value {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        _ => Err(config_err(line, format!("`{key}` expects 0 or 1, got `{value}`"))),
    }
}

fn integer(line: usize, key: &str, value: &str) -> Result<u32> {
    value
        .parse()
        .map_err(|_| config_err(line, format!("`{key}` expects a nonnegative integer, got `{value}`")))
}

impl<T: Real> RunConfig<T> {
    /// Parses the flat format; unset keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen: Vec<&str> = Vec::new();
        let mut profile_name: Option<(usize, String)> = None;
        let mut k: Option<u32> = None;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| config_err(line, format!("expected `key = value`, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let known = KEYS
                .iter()
                .find(|&&k| k == key)
                .ok_or_else(|| config_err(line, format!("unknown key `{key}`")))?;
            if seen.contains(known) {
                return Err(config_err(line, format!("duplicate key `{key}`")));
            }
            seen.push(known);

            match key {
                "n" => cfg.params.n = integer(line, key, value)?,
                "mu" => cfg.params.mu = real(line, key, value)?,
                "p" => cfg.params.p = real(line, key, value)?,
                "q" => cfg.params.q = real(line, key, value)?,
                "a" => cfg.params.a = switch(line, key, value)?,
                "b" => cfg.params.b = switch(line, key, value)?,
                "epsilon" => cfg.params.epsilon = real(line, key, value)?,
                "profile" => profile_name = Some((line, value.to_owned())),
                "k" => k = Some(integer(line, key, value)?),
                "h" => cfg.h = real(line, key, value)?,
                "cfl" => cfg.controls.cfl = real(line, key, value)?,
                "t_max" => cfg.controls.t_max = real(line, key, value)?,
                "blowup_threshold" => cfg.controls.blowup_threshold = real(line, key, value)?,
                "output_every" => cfg.controls.output_every = real(line, key, value)?,
                "epsilons" => {
                    let list = value
                        .split(',')
                        .map(|s| real(line, key, s.trim()))
                        .collect::<Result<Vec<T>>>()?;
                    cfg.epsilons = Some(list);
                }
                _ => unreachable!("key list and match arms agree"),
            }
        }

        cfg.data.profile = match profile_name {
            None => Profile::PolynomialBump { k: k.unwrap_or(4) },
            Some((line, name)) => match name.as_str() {
                "polynomial" => Profile::PolynomialBump { k: k.unwrap_or(4) },
                "gaussian" => {
                    if k.is_some() {
                        return Err(config_err(line, "`k` only applies to the polynomial profile"));
                    }
                    Profile::GaussianTruncated
                }
                other => return Err(config_err(line, format!("unknown profile `{other}`"))),
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.data.validate()?;
        self.controls.validate()?;
        if !(self.h > T::zero()) {
            return Err(crate::error::invalid("h", "must be positive"));
        }
        Ok(())
    }

    /// Grid reaching the light cone at `t_max`.
    pub fn grid(&self) -> Result<RadialGrid<T>> {
        RadialGrid::for_horizon(self.h, self.controls.t_max)
    }

    /// Every resolved key in fixed order, floats with 17 significant digits.
    ///
    /// Parsing the output reproduces the configuration.
    pub fn canonical(&self) -> String {
        let f = |x: T| format!("{:.16e}", x.as_f64());
        let mut out = String::new();
        let p = &self.params;
        let (profile, k) = match self.data.profile {
            Profile::PolynomialBump { k } => ("polynomial", Some(k)),
            Profile::GaussianTruncated => ("gaussian", None),
        };
        let _ = writeln!(out, "n = {}", p.n);
        let _ = writeln!(out, "mu = {}", f(p.mu));
        let _ = writeln!(out, "p = {}", f(p.p));
        let _ = writeln!(out, "q = {}", f(p.q));
        let _ = writeln!(out, "a = {}", u8::from(p.a));
        let _ = writeln!(out, "b = {}", u8::from(p.b));
        let _ = writeln!(out, "epsilon = {}", f(p.epsilon));
        let _ = writeln!(out, "profile = {profile}");
        if let Some(k) = k {
            let _ = writeln!(out, "k = {k}");
        }
        let _ = writeln!(out, "h = {}", f(self.h));
        let _ = writeln!(out, "cfl = {}", f(self.controls.cfl));
        let _ = writeln!(out, "t_max = {}", f(self.controls.t_max));
        let _ = writeln!(out, "blowup_threshold = {}", f(self.controls.blowup_threshold));
        let _ = writeln!(out, "output_every = {}", f(self.controls.output_every));
        if let Some(eps) = &self.epsilons {
            let list: Vec<String> = eps.iter().map(|&e| f(e)).collect();
            let _ = writeln!(out, "epsilons = {}", list.join(", "));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# acceptance point
n = 1
mu = 0.5
p = 2
q = 3
a = 1
b = 1
epsilon = 0.1   # inline comment
profile = polynomial
k = 4
h = 0.02
cfl = 0.45
t_max = 80
blowup_threshold = 1e6
output_every = 0.25
epsilons = 0.4, 0.2, 0.1, 0.05
";

    #[test]
    fn parses_all_keys() {
        let cfg = RunConfig::<f64>::parse(SAMPLE).unwrap();
        assert_eq!(cfg.params.n, 1);
        assert_eq!(cfg.params.mu, 0.5);
        assert!(cfg.params.a && cfg.params.b);
        assert_eq!(cfg.data.profile, Profile::PolynomialBump { k: 4 });
        assert_eq!(cfg.h, 0.02);
        assert_eq!(cfg.controls.t_max, 80.0);
        assert_eq!(cfg.controls.output_every, 0.25);
        assert_eq!(cfg.epsilons.as_deref(), Some(&[0.4, 0.2, 0.1, 0.05][..]));
    }

    #[test]
    fn canonical_round_trips() {
        let cfg = RunConfig::<f64>::parse(SAMPLE).unwrap();
        let again = RunConfig::<f64>::parse(&cfg.canonical()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.canonical(), again.canonical());
        let g = RunConfig::<f64>::parse("profile = gaussian\nb = 0").unwrap();
        assert_eq!(RunConfig::<f64>::parse(&g.canonical()).unwrap(), g);
    }

    #[test]
    fn defaults_fill_missing_keys() {
        let cfg = RunConfig::<f64>::parse("n = 2\n").unwrap();
        assert_eq!(cfg.params.n, 2);
        assert_eq!(cfg.params.q, 3.0);
        assert_eq!(cfg.h, 0.01);
        assert!(cfg.epsilons.is_none());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("n = 1\nfoo = 2", 2),
            ("n = 1\nn = 2", 2),
            ("mu = abc", 1),
            ("\n\na = 2", 3),
            ("no equals sign", 1),
            ("profile = square", 1),
            ("epsilons = 0.1, x", 1),
            ("h = inf", 1),
        ];
        for (text, want) in cases {
            match RunConfig::<f64>::parse(text) {
                Err(Error::Config { line, .. }) => assert_eq!(line, want, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn semantic_validation() {
        assert!(RunConfig::<f64>::parse("k = 2").is_err());
        assert!(RunConfig::<f64>::parse("cfl = 1.5").is_err());
        assert!(RunConfig::<f64>::parse("h = 0").is_err());
        assert!(RunConfig::<f64>::parse("profile = gaussian\nk = 4").is_err());
    }
}
