use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projections::DualSet;

/// Which output the gradient steps consume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Measured output `y_hat`.
    #[default]
    Feedback,
    /// Model output `C x + D w(k)`.
    FeedForward,
}

/// Regularization regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    /// `p = d = 0`, dual set radius `alpha^-kappa`.
    #[default]
    Case1,
    /// `p, d > 0`.
    Case2,
}

fn default_kappa() -> f64 {
    1.0 / 3.0
}

/// Step size, regularization, mode and horizon of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub alpha: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default)]
    pub p: f64,
    #[serde(default)]
    pub d: f64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub case: Case,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual_radius_override: Option<f64>,
    pub horizon: usize,
}

impl AlgorithmConfig {
    pub fn case1(alpha: f64, kappa: f64, horizon: usize) -> Result<Self> {
        let c = Self {
            alpha,
            kappa,
            p: 0.0,
            d: 0.0,
            mode: Mode::Feedback,
            case: Case::Case1,
            dual_radius_override: None,
            horizon,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn case2(alpha: f64, p: f64, d: f64, horizon: usize) -> Result<Self> {
        let c = Self {
            alpha,
            kappa: 1.0 / 3.0,
            p,
            d,
            mode: Mode::Feedback,
            case: Case::Case2,
            dual_radius_override: None,
            horizon,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Result<Self> {
        self.kappa = kappa;
        self.validate()?;
        Ok(self)
    }

    pub fn with_dual_radius(mut self, radius: f64) -> Result<Self> {
        self.dual_radius_override = Some(radius);
        self.validate()?;
        Ok(self)
    }

    pub fn with_horizon(mut self, horizon: usize) -> Result<Self> {
        self.horizon = horizon;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return bad(format!("kappa must be positive, got {}", self.kappa));
        }
        if self.horizon == 0 {
            return bad("horizon must be positive".into());
        }
        match self.case {
            Case::Case1 => {
                if self.p != 0.0 || self.d != 0.0 {
                    return bad(format!(
                        "case 1 requires p = d = 0 (got p = {}, d = {})",
                        self.p, self.d
                    ));
                }
                if self.dual_radius_override.is_some() {
                    return bad("case 1 fixes the dual radius to alpha^-kappa".into());
                }
            }
            Case::Case2 => {
                if !(self.p > 0.0 && self.d > 0.0 && self.p.is_finite() && self.d.is_finite()) {
                    return bad(format!(
                        "case 2 requires p > 0 and d > 0 (got p = {}, d = {})",
                        self.p, self.d
                    ));
                }
            }
        }
        if let Some(r) = self.dual_radius_override {
            if !(r > 0.0) {
                return bad(format!("dual radius must be positive, got {r}"));
            }
        }
        Ok(())
    }

    /// Radius of the dual set used by every dual step.
    pub fn dual_radius(&self) -> f64 {
        self.dual_radius_override
            .unwrap_or_else(|| self.alpha.powf(-self.kappa))
    }

    pub fn dual_set(&self) -> DualSet {
        DualSet::new(self.dual_radius()).expect("validated config has a positive radius")
    }

    /// `min(p, d)`.
    pub fn eta(&self) -> f64 {
        self.p.min(self.d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_rules() {
        assert!(AlgorithmConfig::case1(0.1, 1.0 / 3.0, 10).is_ok());
        let mut c = AlgorithmConfig::case1(0.1, 1.0 / 3.0, 10).unwrap();
        c.p = 0.1;
        assert!(c.validate().is_err());
        assert!(AlgorithmConfig::case2(0.1, 0.0, 0.1, 10).is_err());
        assert!(AlgorithmConfig::case2(0.1, 0.1, 0.1, 0).is_err());
        assert!(AlgorithmConfig::case1(-0.1, 1.0, 10).is_err());
    }

    #[test]
    fn dual_radius_defaults_and_override() {
        let c = AlgorithmConfig::case1(0.125, 1.0 / 3.0, 1).unwrap();
        assert!((c.dual_radius() - 2.0).abs() < 1e-12);
        let c = AlgorithmConfig::case2(0.1, 0.01, 0.01, 1)
            .unwrap()
            .with_dual_radius(10.0)
            .unwrap();
        assert_eq!(c.dual_radius(), 10.0);
    }

    #[test]
    fn toml_roundtrip() {
        let c = AlgorithmConfig::case2(0.5, 1e-3, 1e-3, 1000)
            .unwrap()
            .with_mode(Mode::FeedForward);
        let text = toml::to_string(&c).unwrap();
        let back: AlgorithmConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
    }
}
