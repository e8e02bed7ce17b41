//! Scenario configuration: one JSON document drives a full analysis.
//!
//! A scenario pins down everything a run needs: the candidate families,
//! the synthetic generator for each arm, the follow-up windows, the
//! Monte Carlo sizes, the seed, and the uncertainty mode. Validation
//! happens eagerly on load so a bad file fails with a field-level
//! message before any computation starts.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dist::SurvivalFamily;
use crate::error::{Error, Result};
use crate::generate::ArmGenerator;
use crate::voi::{AnalysisMode, EnbsInputs};

/// Nested-sampler products above this refuse to run without an explicit
/// override, because the nested estimator's cost scales with K times J.
pub const DEFAULT_MC_BUDGET: u64 = 2_000_000;

/// Synthetic mixture generators for both arms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    /// New-treatment arm mixture.
    pub new: ArmGenerator,
    /// Standard-treatment arm mixture.
    pub standard: ArmGenerator,
}

/// Full specification of one case study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Candidate survival families, in reporting order.
    pub families: Vec<SurvivalFamily>,
    /// Synthetic dataset generators per arm.
    pub generator: GeneratorConfig,
    /// Current follow-up end in months.
    pub t1: f64,
    /// Candidate extended follow-up ends in months, strictly increasing.
    pub t2_grid: Vec<f64>,
    /// Restricted-mean horizon in months.
    pub t_h: f64,
    /// Outer Monte Carlo draws.
    pub k: usize,
    /// Inner posterior draws per outer draw, pooled across chains.
    pub j: usize,
    /// Inner sampler chains.
    pub chains: usize,
    /// Inner sampler warmup iterations per chain.
    pub warmup: usize,
    /// Run seed; every stochastic stage derives its streams from it.
    pub seed: u64,
    /// Uncertainty mode: `"averaged"` or `"single:<family>"`.
    pub mode: AnalysisMode,
    /// Benefit and cost inputs for stopping rules, when wanted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enbs: Option<EnbsInputs>,
    /// Largest K times J the nested estimator runs without an override.
    #[serde(default = "default_mc_budget")]
    pub mc_budget: u64,
}

fn default_mc_budget() -> u64 {
    DEFAULT_MC_BUDGET
}

impl ScenarioConfig {
    /// Parse and validate a scenario from JSON text.
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ScenarioConfig = serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("scenario config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    /// Read and validate a scenario from a JSON file.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut text = String::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(|e| Error::invalid(format!("scenario config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Check every cross-field invariant, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        if self.families.is_empty() {
            return Err(Error::invalid("families: at least one family is required"));
        }
        for (i, family) in self.families.iter().enumerate() {
            if self.families[..i].contains(family) {
                return Err(Error::invalid(format!(
                    "families: {family} appears more than once"
                )));
            }
        }
        if !(self.t1.is_finite() && self.t1 >= 0.0) {
            return Err(Error::invalid(format!(
                "t1: must be finite and nonnegative, got {}",
                self.t1
            )));
        }
        if self.t2_grid.is_empty() {
            return Err(Error::invalid("t2_grid: at least one follow-up end is required"));
        }
        let mut prev = self.t1;
        for &t2 in &self.t2_grid {
            if !(t2.is_finite() && t2 > prev) {
                return Err(Error::invalid(format!(
                    "t2_grid: entries must be finite, strictly increasing, and \
                     above t1 = {}, got {t2} after {prev}",
                    self.t1
                )));
            }
            prev = t2;
        }
        if !(self.t_h.is_finite() && self.t_h > prev) {
            return Err(Error::invalid(format!(
                "t_h: horizon must exceed the largest follow-up end {prev}, got {}",
                self.t_h
            )));
        }
        if self.k < 2 {
            return Err(Error::invalid(format!("k: need at least 2 draws, got {}", self.k)));
        }
        if self.j < 100 {
            return Err(Error::invalid(format!(
                "j: the inner sampler needs at least 100 draws, got {}",
                self.j
            )));
        }
        if self.chains < 2 {
            return Err(Error::invalid(format!(
                "chains: need at least 2 for convergence checks, got {}",
                self.chains
            )));
        }
        if self.warmup < 100 {
            return Err(Error::invalid(format!(
                "warmup: the inner sampler needs at least 100 iterations, got {}",
                self.warmup
            )));
        }
        if let AnalysisMode::Single(family) = self.mode {
            if !self.families.contains(&family) {
                return Err(Error::invalid(format!(
                    "mode: single:{family} is not among the configured families"
                )));
            }
        }
        if let Some(enbs) = &self.enbs {
            if self.t2_grid.len() < 2 {
                return Err(Error::invalid(
                    "enbs: stopping curves need at least 2 entries in t2_grid",
                ));
            }
            let fields = [
                ("trial_cost_rate", enbs.trial_cost_rate),
                ("accrual_rate", enbs.accrual_rate),
                ("horizon", enbs.horizon),
                ("incremental_nb", enbs.incremental_nb),
            ];
            for (name, value) in fields {
                if !value.is_finite() || value < 0.0 {
                    return Err(Error::invalid(format!(
                        "enbs.{name}: must be finite and nonnegative, got {value}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// K times J, the nested estimator's cost driver.
    pub fn nested_cost(&self) -> u64 {
        self.k as u64 * self.j as u64
    }

    /// True when the nested estimator exceeds the configured budget.
    pub fn exceeds_budget(&self) -> bool {
        self.nested_cost() > self.mc_budget
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_json() -> serde_json::Value {
        serde_json::json!({
            "families": ["weibull", "gamma", "lognormal", "loglogistic"],
            "generator": {
                "new": {
                    "weibull_shape": 1.1, "weibull_scale": 70.0,
                    "gamma_shape": 1.8, "gamma_rate": 0.04, "n": 200
                },
                "standard": {
                    "weibull_shape": 1.1, "weibull_scale": 50.0,
                    "gamma_shape": 1.8, "gamma_rate": 0.04, "n": 200
                }
            },
            "t1": 12.0,
            "t2_grid": [24.0, 36.0, 48.0, 60.0],
            "t_h": 240.0,
            "k": 6000,
            "j": 2000,
            "chains": 4,
            "warmup": 1000,
            "seed": 20260816,
            "mode": "averaged"
        })
    }

    fn parse(value: serde_json::Value) -> Result<ScenarioConfig> {
        ScenarioConfig::from_json(&value.to_string())
    }

    #[test]
    fn round_trips_through_json() {
        let config = parse(base_json()).unwrap();
        assert_eq!(config.families.len(), 4);
        assert_eq!(config.mode, AnalysisMode::Averaged);
        assert_eq!(config.mc_budget, DEFAULT_MC_BUDGET);
        let text = serde_json::to_string(&config).unwrap();
        let back = ScenarioConfig::from_json(&text).unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn single_mode_parses_and_must_name_a_configured_family() {
        let mut value = base_json();
        value["mode"] = "single:weibull".into();
        let config = parse(value).unwrap();
        assert_eq!(config.mode, AnalysisMode::Single(SurvivalFamily::Weibull));

        let mut value = base_json();
        value["families"] = serde_json::json!(["gamma"]);
        value["mode"] = "single:weibull".into();
        let err = parse(value).unwrap_err().to_string();
        assert!(err.contains("not among"), "{err}");
    }

    #[test]
    fn rejects_misordered_windows() {
        let mut value = base_json();
        value["t2_grid"] = serde_json::json!([24.0, 24.0]);
        assert!(parse(value).is_err());

        let mut value = base_json();
        value["t2_grid"] = serde_json::json!([10.0]);
        assert!(parse(value).is_err());

        let mut value = base_json();
        value["t_h"] = 59.0.into();
        let err = parse(value).unwrap_err().to_string();
        assert!(err.contains("t_h"), "{err}");
    }

    #[test]
    fn rejects_unknown_fields_with_location() {
        let mut value = base_json();
        value["typo_field"] = 1.into();
        let err = parse(value).unwrap_err().to_string();
        assert!(err.contains("typo_field"), "{err}");
    }

    #[test]
    fn rejects_duplicate_families_and_small_samplers() {
        let mut value = base_json();
        value["families"] = serde_json::json!(["weibull", "weibull"]);
        assert!(parse(value).is_err());

        let mut value = base_json();
        value["j"] = 50.into();
        assert!(parse(value).is_err());

        let mut value = base_json();
        value["chains"] = 1.into();
        assert!(parse(value).is_err());
    }

    #[test]
    fn budget_flags_oversized_nested_runs() {
        let config = parse(base_json()).unwrap();
        // 6000 * 2000 = 12M exceeds the 2M default.
        assert!(config.exceeds_budget());
        let mut value = base_json();
        value["k"] = 1000.into();
        value["j"] = 500.into();
        let config = parse(value).unwrap();
        assert!(!config.exceeds_budget());
        let mut value = base_json();
        value["mc_budget"] = 100.into();
        value["k"] = 1000.into();
        value["j"] = 500.into();
        let config = parse(value).unwrap();
        assert!(config.exceeds_budget());
    }

    #[test]
    fn enbs_block_is_optional_but_validated() {
        let mut value = base_json();
        value["enbs"] = serde_json::json!({
            "trial_cost_rate": 5.0,
            "accrual_rate": 5.0,
            "horizon": 120.0,
            "incremental_nb": 10.57
        });
        let config = parse(value).unwrap();
        assert!(config.enbs.is_some());

        let mut value = base_json();
        value["enbs"] = serde_json::json!({
            "trial_cost_rate": -5.0,
            "accrual_rate": 5.0,
            "horizon": 120.0,
            "incremental_nb": 10.57
        });
        let err = parse(value).unwrap_err().to_string();
        assert!(err.contains("enbs.trial_cost_rate"), "{err}");
    }
}
