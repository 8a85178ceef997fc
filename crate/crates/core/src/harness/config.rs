//! Experiment configuration (JSON) and the named-function registries.

use serde::{Deserialize, Serialize};

use crate::grid::Coefficient;
use crate::stepper::Scheme;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Diffusion,
    Advection,
    Dispersion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Local,
    Global,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub run: RunConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    pub n: usize,
    /// Advection coefficient name (defaults to `one`).
    #[serde(default)]
    pub coefficient: Option<String>,
    pub reaction: String,
    #[serde(default)]
    pub b_left: f64,
    #[serde(default)]
    pub b_right: f64,
    pub initial: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "T")]
    pub t_final: f64,
    /// Step-size ladder, strictly decreasing.
    #[serde(default)]
    pub taus: Option<Vec<f64>>,
    /// Log-spaced step-size sweep (resonance runs).
    #[serde(default)]
    pub tau_sweep: Option<TauSweep>,
    #[serde(default)]
    pub schemes: Vec<String>,
    #[serde(default)]
    pub error_kind: Option<ErrorKind>,
    /// Restrict error measurement to nodes with positions inside `[a, b]`.
    #[serde(default)]
    pub window: Option<[f64; 2]>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauSweep {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl TauSweep {
    /// Log-spaced step sizes, ascending.
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.min > 0.0 && self.max > self.min && self.count >= 2) {
            return Err(Error::Config(
                "tau_sweep needs 0 < min < max and count >= 2".into(),
            ));
        }
        let (lo, hi) = (self.min.ln(), self.max.ln());
        Ok((0..self.count)
            .map(|i| (lo + (hi - lo) * i as f64 / (self.count - 1) as f64).exp())
            .collect())
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))
    }

    pub fn schemes(&self) -> Result<Vec<Scheme>> {
        self.run.schemes.iter().map(|s| Scheme::by_name(s)).collect()
    }

    /// The validated, strictly decreasing step ladder.
    pub fn taus(&self) -> Result<Vec<f64>> {
        let taus = self
            .run
            .taus
            .clone()
            .ok_or_else(|| Error::Config("run.taus is required for this command".into()))?;
        if taus.is_empty() || taus.iter().any(|&t| t <= 0.0) {
            return Err(Error::Config("run.taus must be positive".into()));
        }
        if taus.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("run.taus must be strictly decreasing".into()));
        }
        Ok(taus)
    }
}

/// Initial-condition registry (real-valued members).
pub fn initial_condition_real(name: &str) -> Result<fn(f64) -> f64> {
    Ok(match name {
        "zero" => |_| 0.0,
        "one_plus_x" => |x| 1.0 + x,
        "sin_pi" => |x| (std::f64::consts::PI * x).sin(),
        "one_plus_sin_pi" => |x| 1.0 + (std::f64::consts::PI * x).sin(),
        other => {
            return Err(Error::Registry(format!(
                "unknown real initial condition '{other}'"
            )))
        }
    })
}

/// Initial-condition registry over the complex field; real members are
/// lifted, plus the dispersion-specific profile.
pub fn initial_condition_complex(name: &str) -> Result<fn(f64) -> num_complex::Complex64> {
    use num_complex::Complex64;
    Ok(match name {
        "zero" => |_| Complex64::new(0.0, 0.0),
        "one_plus_x" => |x| Complex64::new(1.0 + x, 0.0),
        "sin_pi" => |x| Complex64::new((std::f64::consts::PI * x).sin(), 0.0),
        "one_plus_sin_pi" => |x| Complex64::new(1.0 + (std::f64::consts::PI * x).sin(), 0.0),
        "dispersion_ic" => |x| {
            let pi = std::f64::consts::PI;
            Complex64::new(1.0 + (pi * x).sin(), (2.0 * pi * x).sin())
        },
        other => {
            return Err(Error::Registry(format!(
                "unknown initial condition '{other}'"
            )))
        }
    })
}

/// Advection-coefficient registry. All members are positive on `[0, 1]`.
pub fn coefficient_by_name(name: &str) -> Result<Coefficient> {
    let pi = std::f64::consts::PI;
    let _ = pi;
    Ok(match name {
        "one" => Coefficient::one(),
        "a1" => Coefficient::new("a1", |x| 1.0 + x.sin(), |x| x.cos()),
        "a2" => Coefficient::new(
            "a2",
            |x| (std::f64::consts::PI * x / 2.0).sin() + 0.4,
            |x| std::f64::consts::PI / 2.0 * (std::f64::consts::PI * x / 2.0).cos(),
        ),
        "a3" => Coefficient::new("a3", |x| 1.5 - x, |_| -1.0),
        "a4" => Coefficient::new(
            "a4",
            |x| 0.2 + (-50.0 * (x - 0.5) * (x - 0.5)).exp(),
            |x| -100.0 * (x - 0.5) * (-50.0 * (x - 0.5) * (x - 0.5)).exp(),
        ),
        "a5" => Coefficient::new(
            "a5",
            |x| 1.0 + (2.0 * std::f64::consts::PI * x).sin() / 5.0,
            |x| 2.0 * std::f64::consts::PI / 5.0 * (2.0 * std::f64::consts::PI * x).cos(),
        ),
        other => {
            return Err(Error::Registry(format!(
                "unknown advection coefficient '{other}'"
            )))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let text = r#"{
            "problem": {"kind": "diffusion", "n": 200, "reaction": "u_plus_1",
                        "b_left": 0.0, "b_right": 0.0, "initial": "zero"},
            "run": {"T": 0.25, "taus": [0.064, 0.032], "schemes": ["unmodified"],
                    "error_kind": "local"}
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.problem.kind, ProblemKind::Diffusion);
        assert_eq!(cfg.taus().unwrap().len(), 2);
        assert_eq!(cfg.schemes().unwrap()[0], crate::stepper::Scheme::Unmodified);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_ladders() {
        let text = r#"{"problem": {"kind": "diffusion", "n": 8, "reaction": "zero",
            "initial": "zero", "bogus": 1}, "run": {"T": 1.0}}"#;
        assert!(ExperimentConfig::from_json(text).is_err());

        let text = r#"{
            "problem": {"kind": "diffusion", "n": 8, "reaction": "zero", "initial": "zero"},
            "run": {"T": 1.0, "taus": [0.1, 0.2]}
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert!(cfg.taus().is_err());
    }

    #[test]
    fn coefficient_positivity() {
        for name in ["one", "a1", "a2", "a3", "a4", "a5"] {
            let c = coefficient_by_name(name).unwrap();
            let min = (0..=100)
                .map(|i| (c.eval)(i as f64 / 100.0))
                .fold(f64::INFINITY, f64::min);
            assert!(min > 0.0, "{name} min {min}");
            if name == "a3" {
                assert!((min - 0.5).abs() < 1e-12);
            }
        }
        assert!(coefficient_by_name("a9").is_err());
    }

    #[test]
    fn sweep_values_are_log_spaced() {
        let sw = TauSweep {
            min: 1e-4,
            max: 1.2e-2,
            count: 5,
        };
        let vs = sw.values().unwrap();
        assert_eq!(vs.len(), 5);
        assert!((vs[0] - 1e-4).abs() < 1e-18);
        assert!((vs[4] - 1.2e-2).abs() < 1e-15);
        let r1 = vs[1] / vs[0];
        let r2 = vs[3] / vs[2];
        assert!((r1 - r2).abs() < 1e-12);
    }
}
