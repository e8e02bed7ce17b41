//! Value of extending follow-up in an ongoing two-arm survival trial.
//!
//! The perfect-information bound treats the arm-level survival parameters
//! as the uncertain quantity and prices a decision made after they are
//! revealed. The sample-information estimators price a decision made after
//! observing the extra follow-up window instead: an outer loop simulates
//! candidate extension datasets from the current posterior, and the value
//! of each dataset is the gap between the best arm under the updated
//! beliefs and the arm that looks best today. Two interchangeable inner
//! estimators are provided, a nested posterior sampler and a tensor-spline
//! regression on the extension-data summaries, along with the translation
//! of a value curve into per-month benefit and cost for stopping rules.

pub mod enbs;
pub mod evpi;
pub mod nested;
pub mod outer;
pub mod regression;

pub use evpi::evpi_mc;
pub use nested::{evsi_nested_mc, NestedDiagnostics, NestedEvsi};
pub use outer::{generate_outer_sample, NetBenefitSample, OuterDraw, OuterSample};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{LogParams, SurvivalFamily};
use crate::error::{Error, Result};
use crate::fit::{FittedModel, ModelWeights};
use crate::posterior::{posterior_approx, BivariateNormal};

/// Stream tag for perfect-information draws.
pub(crate) const TAG_EVPI: u64 = 1;

/// Stream tag for outer extension-data draws.
pub(crate) const TAG_OUTER: u64 = 2;

/// Stream tag for inner posterior sampler seeds.
pub(crate) const TAG_NESTED: u64 = 3;

/// Stream tag for bridge-sampling proposal draws.
pub(crate) const TAG_BRIDGE: u64 = 4;

/// Stream tag for regression uncertainty simulations.
pub(crate) const TAG_REGRESSION_SE: u64 = 5;

/// Which estimator produced a value-of-information result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoiMethod {
    /// Plain Monte Carlo over the parameter posterior.
    MonteCarlo,
    /// Outer data draws with a posterior sampler per draw.
    NestedMonteCarlo,
    /// Outer data draws smoothed by a tensor-spline regression.
    Regression,
}

/// A value-of-information estimate with its Monte Carlo error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoiResult {
    /// Estimated value in net-benefit units (restricted mean months).
    pub estimate: f64,
    /// Standard error of the estimate over the outer draws.
    pub se: f64,
    /// Estimator that produced the value.
    pub method: VoiMethod,
    /// Outer Monte Carlo sample size.
    pub k: usize,
    /// Inner posterior draws per outer draw, when an inner sampler ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j: Option<usize>,
}

impl VoiResult {
    fn validate(&self) -> Result<()> {
        if !self.estimate.is_finite() || !self.se.is_finite() {
            return Err(Error::numeric(format!(
                "value-of-information estimate {} (se {}) is not finite",
                self.estimate, self.se
            )));
        }
        if self.se <= 0.0 {
            return Err(Error::numeric(format!(
                "value-of-information standard error must be positive, got {}",
                self.se
            )));
        }
        if self.estimate < -3.0 * self.se {
            return Err(Error::numeric(format!(
                "value-of-information estimate {} is below -3 standard errors ({})",
                self.estimate, self.se
            )));
        }
        Ok(())
    }
}

/// How parameter uncertainty is propagated through the value analysis.
///
/// Serializes as a string: `"averaged"`, or `"single:"` followed by the
/// family name, for example `"single:weibull"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalysisMode {
    /// Condition on one survival family in every arm.
    Single(SurvivalFamily),
    /// Mix over candidate families with per-arm model weights.
    Averaged,
}

impl std::fmt::Display for AnalysisMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AnalysisMode::Single(family) => write!(f, "single:{family}"),
            AnalysisMode::Averaged => write!(f, "averaged"),
        }
    }
}

impl std::str::FromStr for AnalysisMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "averaged" {
            return Ok(AnalysisMode::Averaged);
        }
        if let Some(name) = s.strip_prefix("single:") {
            return Ok(AnalysisMode::Single(name.parse()?));
        }
        Err(Error::invalid(format!(
            "analysis mode must be \"averaged\" or \"single:<family>\", got \"{s}\""
        )))
    }
}

impl Serialize for AnalysisMode {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AnalysisMode {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One candidate model for one arm: its family, the normal approximation
/// to the current parameter posterior, and the arm's weight on it.
#[derive(Debug, Clone)]
pub struct ArmModel {
    /// Survival family of this candidate.
    pub family: SurvivalFamily,
    /// Normal approximation to the parameter posterior at current follow-up.
    pub posterior: BivariateNormal,
    /// Model weight within the arm; weights sum to one across candidates.
    pub weight: f64,
}

/// The candidate models of one arm, in fitting order.
#[derive(Debug, Clone)]
pub struct ArmSpec {
    models: Vec<ArmModel>,
}

impl ArmSpec {
    /// Assemble an arm's sampling spec from its fitted models and weights.
    ///
    /// The weight vector must align with the fits element for element.
    pub fn new(fits: &[FittedModel], weights: &ModelWeights) -> Result<Self> {
        if fits.is_empty() {
            return Err(Error::invalid("an arm needs at least one fitted model"));
        }
        if fits.len() != weights.weights.len() {
            return Err(Error::invalid(format!(
                "{} fitted models for {} model weights",
                fits.len(),
                weights.weights.len()
            )));
        }
        let mut models = Vec::with_capacity(fits.len());
        for (fit, &weight) in fits.iter().zip(&weights.weights) {
            models.push(ArmModel {
                family: fit.family,
                posterior: posterior_approx(fit)?,
                weight,
            });
        }
        Ok(ArmSpec { models })
    }

    /// Candidate models in fitting order.
    pub fn models(&self) -> &[ArmModel] {
        &self.models
    }

    /// The candidate with the given family.
    pub fn model_for(&self, family: SurvivalFamily) -> Result<&ArmModel> {
        self.models
            .iter()
            .find(|m| m.family == family)
            .ok_or_else(|| Error::invalid(format!("arm has no fitted {family} model")))
    }

    /// Draw one model index and parameter vector under the given mode.
    ///
    /// Single mode consumes two uniforms (one normal pair); averaged mode
    /// consumes one uniform for the family choice plus the pair.
    pub(crate) fn sample<R: Rng + ?Sized>(
        &self,
        mode: AnalysisMode,
        rng: &mut R,
    ) -> Result<(usize, LogParams)> {
        let idx = match mode {
            AnalysisMode::Single(family) => self
                .models
                .iter()
                .position(|m| m.family == family)
                .ok_or_else(|| Error::invalid(format!("arm has no fitted {family} model")))?,
            AnalysisMode::Averaged => {
                let u = rng.random::<f64>();
                let mut cum = 0.0;
                let mut chosen = self.models.len() - 1;
                for (i, m) in self.models.iter().enumerate() {
                    cum += m.weight;
                    if u < cum {
                        chosen = i;
                        break;
                    }
                }
                chosen
            }
        };
        Ok((idx, self.models[idx].posterior.sample(rng)))
    }
}

/// Economic inputs that turn a value curve into stopping rules.
///
/// All quantities share the net-benefit unit of the value estimates
/// (restricted mean months) and a monthly time base.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnbsInputs {
    /// Cost of one month of additional follow-up, in net-benefit units.
    pub trial_cost_rate: f64,
    /// Patients accrued to the decision population per month.
    pub accrual_rate: f64,
    /// Months over which an improved decision keeps paying off.
    pub horizon: f64,
    /// Incremental net benefit of the currently preferred arm, forgone
    /// by each patient randomized away from it while the trial runs.
    pub incremental_nb: f64,
}

impl EnbsInputs {
    fn validate(&self) -> Result<()> {
        let fields = [
            ("trial_cost_rate", self.trial_cost_rate),
            ("accrual_rate", self.accrual_rate),
            ("horizon", self.horizon),
            ("incremental_nb", self.incremental_nb),
        ];
        for (name, value) in fields {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::invalid(format!(
                    "{name} must be finite and nonnegative, got {value}"
                )));
            }
        }
        Ok(())
    }
}

/// Mean over draws of the best per-draw value minus the best mean value,
/// with the standard error of that difference.
///
/// The error treats the per-draw gap `max_d v_d - v_{d*}` as the Monte
/// Carlo unit, where `d*` is the decision with the best mean, so both
/// terms share each draw and their common noise cancels.
pub(crate) fn max_gain_over_best(values: &[Vec<f64>; 2]) -> Result<(f64, f64)> {
    let n = values[0].len();
    if n < 2 || values[1].len() != n {
        return Err(Error::invalid(
            "per-decision value vectors must share a length of at least 2",
        ));
    }
    let mean0 = values[0].iter().sum::<f64>() / n as f64;
    let mean1 = values[1].iter().sum::<f64>() / n as f64;
    let best = if mean0 >= mean1 { 0 } else { 1 };
    let gaps: Vec<f64> = values[0]
        .iter()
        .zip(&values[1])
        .map(|(&a, &b)| a.max(b) - if best == 0 { a } else { b })
        .collect();
    let mean_gap = gaps.iter().sum::<f64>() / n as f64;
    let var = gaps
        .iter()
        .map(|g| {
            let d = g - mean_gap;
            d * d
        })
        .sum::<f64>()
        / (n as f64 - 1.0);
    let se = (var / n as f64).sqrt();
    Ok((mean_gap, se))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::SurvivalFamily;
    use crate::rng::Streams;

    fn two_model_arm() -> ArmSpec {
        let posterior_a =
            BivariateNormal::new(LogParams::new(0.2, 4.0), [[0.04, -0.01], [-0.01, 0.09]])
                .unwrap();
        let posterior_b =
            BivariateNormal::new(LogParams::new(0.5, -3.0), [[0.02, 0.0], [0.0, 0.05]]).unwrap();
        ArmSpec {
            models: vec![
                ArmModel {
                    family: SurvivalFamily::Weibull,
                    posterior: posterior_a,
                    weight: 0.75,
                },
                ArmModel {
                    family: SurvivalFamily::Gamma,
                    posterior: posterior_b,
                    weight: 0.25,
                },
            ],
        }
    }

    #[test]
    fn single_mode_always_picks_named_family() {
        let arm = two_model_arm();
        let mut rng = Streams::new(9).stream(&[0]);
        for _ in 0..50 {
            let (idx, _) = arm
                .sample(AnalysisMode::Single(SurvivalFamily::Gamma), &mut rng)
                .unwrap();
            assert_eq!(idx, 1);
        }
    }

    #[test]
    fn single_mode_rejects_missing_family() {
        let arm = two_model_arm();
        let mut rng = Streams::new(9).stream(&[0]);
        let err = arm
            .sample(AnalysisMode::Single(SurvivalFamily::Lognormal), &mut rng)
            .unwrap_err();
        assert!(err.to_string().contains("lognormal"));
    }

    #[test]
    fn averaged_mode_picks_families_near_their_weights() {
        let arm = two_model_arm();
        let mut rng = Streams::new(21).stream(&[0]);
        let n = 20_000;
        let mut first = 0usize;
        for _ in 0..n {
            let (idx, _) = arm.sample(AnalysisMode::Averaged, &mut rng).unwrap();
            if idx == 0 {
                first += 1;
            }
        }
        let frac = first as f64 / n as f64;
        assert!((frac - 0.75).abs() < 0.01, "weight-0.75 model drawn {frac}");
    }

    #[test]
    fn sampled_parameters_track_the_chosen_model() {
        let arm = two_model_arm();
        let mut rng = Streams::new(33).stream(&[0]);
        for _ in 0..2_000 {
            let (idx, theta) = arm.sample(AnalysisMode::Averaged, &mut rng).unwrap();
            if idx == 0 {
                assert!(theta.theta2 > 0.0, "model 0 has mean theta2 = 4");
            } else {
                assert!(theta.theta2 < 0.0, "model 1 has mean theta2 = -3");
            }
        }
    }

    #[test]
    fn gain_over_best_is_zero_when_one_decision_dominates() {
        let values = [vec![5.0, 6.0, 7.0], vec![1.0, 2.0, 3.0]];
        let (gain, se) = max_gain_over_best(&values).unwrap();
        assert_eq!(gain, 0.0);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn gain_over_best_matches_hand_computation() {
        let values = [vec![1.0, 4.0], vec![2.0, 1.0]];
        // Means 2.5 and 1.5, best is decision 0; gaps are 1 and 0.
        let (gain, se) = max_gain_over_best(&values).unwrap();
        assert!((gain - 0.5).abs() < 1e-15);
        let expected_se = (0.5f64 / 2.0).sqrt();
        assert!((se - expected_se).abs() < 1e-15);
    }

    #[test]
    fn gain_over_best_rejects_mismatched_lengths() {
        let values = [vec![1.0, 2.0], vec![1.0]];
        assert!(max_gain_over_best(&values).is_err());
    }

    #[test]
    fn enbs_inputs_reject_negative_rates() {
        let inputs = EnbsInputs {
            trial_cost_rate: -1.0,
            accrual_rate: 5.0,
            horizon: 120.0,
            incremental_nb: 10.0,
        };
        assert!(inputs.validate().is_err());
    }

    #[test]
    fn arm_spec_requires_aligned_weights() {
        let arm = two_model_arm();
        assert_eq!(arm.models().len(), 2);
        let weights = ModelWeights {
            weights: vec![1.0],
        };
        let fits: Vec<FittedModel> = Vec::new();
        assert!(ArmSpec::new(&fits, &weights).is_err());
    }
}
