//! Deterministic synthetic trial-arm generation.
//!
//! Case-study arms are built from a 50/50 Weibull + Gamma mixture: the n
//! participant times are the midpoint quantiles p_i = (i - 0.5)/n of the
//! mixture CDF, inverted to machine precision and then administratively
//! censored at the analysis time t1. Quantile spacing makes the dataset a
//! deterministic, representative draw: identical inputs always give the
//! identical dataset.

use serde::{Deserialize, Serialize};

use crate::data::TrialArm;
use crate::dist::{LogParams, SurvivalFamily};
use crate::error::{Error, Result};

/// Mixture specification for one generated arm: a Weibull and a Gamma
/// component on their natural scales, mixed half and half.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmGenerator {
    /// Weibull component shape k.
    pub weibull_shape: f64,
    /// Weibull component scale lambda, months.
    pub weibull_scale: f64,
    /// Gamma component shape alpha.
    pub gamma_shape: f64,
    /// Gamma component rate beta, per month.
    pub gamma_rate: f64,
    /// Number of participants.
    pub n: usize,
}

impl ArmGenerator {
    fn components(&self) -> Result<[(SurvivalFamily, LogParams); 2]> {
        Ok([
            (
                SurvivalFamily::Weibull,
                SurvivalFamily::Weibull
                    .log_params_from_natural([self.weibull_shape, self.weibull_scale])?,
            ),
            (
                SurvivalFamily::Gamma,
                SurvivalFamily::Gamma
                    .log_params_from_natural([self.gamma_shape, self.gamma_rate])?,
            ),
        ])
    }

    /// Mixture CDF: the even average of the two component CDFs.
    fn cdf(&self, t: f64, comps: &[(SurvivalFamily, LogParams); 2]) -> f64 {
        0.5 * comps[0].0.cdf(t, comps[0].1) + 0.5 * comps[1].0.cdf(t, comps[1].1)
    }

    /// Invert the mixture CDF at probability p by bracketed bisection,
    /// run to the last representable midpoint.
    fn quantile(&self, p: f64, comps: &[(SurvivalFamily, LogParams); 2]) -> Result<f64> {
        let mut hi = self.weibull_scale.max(self.gamma_shape / self.gamma_rate);
        let mut doublings = 0;
        while self.cdf(hi, comps) < p {
            hi *= 2.0;
            doublings += 1;
            if doublings > 2000 {
                return Err(Error::numeric(format!(
                    "mixture quantile bracket failed at p = {p}"
                )));
            }
        }
        let mut lo = 0.0f64;
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return Ok(hi);
            }
            if self.cdf(mid, comps) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
}

/// Midpoint probabilities (i - 0.5)/n for i = 1..n.
fn midpoint_probs(n: usize) -> impl Iterator<Item = f64> {
    (1..=n).map(move |i| (i as f64 - 0.5) / n as f64)
}

/// Censor raw event times administratively at t1. Times beyond t1 are
/// recorded as censored at t1; an infinite t1 disables censoring and the
/// follow-up end becomes the largest event time.
fn censor_at(raw: Vec<f64>, t1: f64) -> Result<TrialArm> {
    if raw.is_empty() {
        return TrialArm::new(vec![], vec![], if t1.is_finite() { t1 } else { 1.0 });
    }
    if t1.is_finite() {
        let times: Vec<f64> = raw.iter().map(|&t| t.min(t1)).collect();
        let status: Vec<bool> = raw.iter().map(|&t| t <= t1).collect();
        TrialArm::new(times, status, t1)
    } else {
        let end = raw.iter().cloned().fold(f64::MIN, f64::max);
        let status = vec![true; raw.len()];
        TrialArm::new(raw, status, end)
    }
}

/// Generate one case-study arm from its Weibull + Gamma mixture.
pub fn generate_mixture_arm(generator: &ArmGenerator, t1: f64) -> Result<TrialArm> {
    if generator.n == 0 {
        return censor_at(vec![], t1);
    }
    let comps = generator.components()?;
    let raw: Vec<f64> = midpoint_probs(generator.n)
        .map(|p| generator.quantile(p, &comps))
        .collect::<Result<_>>()?;
    censor_at(raw, t1)
}

/// Generate an arm from a single family at quantiles (i - 0.5)/n.
pub fn generate_quantile_arm(
    family: SurvivalFamily,
    natural: [f64; 2],
    n_quantiles: usize,
    t1: f64,
) -> Result<TrialArm> {
    if n_quantiles == 0 {
        return censor_at(vec![], t1);
    }
    let theta = family.log_params_from_natural(natural)?;
    let raw: Vec<f64> = midpoint_probs(n_quantiles)
        .map(|p| family.quantile(p, theta))
        .collect::<Result<_>>()?;
    censor_at(raw, t1)
}
