//! Nested Monte Carlo estimator of the value of extended follow-up.
//!
//! For every simulated extension dataset the posterior of each arm is
//! re-sampled by MCMC, conditioning the time-t1 normal approximation on
//! the extension window, and each decision is scored by its posterior
//! mean net benefit. Under model averaging every candidate model is
//! re-sampled and the per-model means are mixed by posterior model
//! probabilities from bridge-sampling marginal likelihoods. The value is
//! the mean of the per-dataset best scores minus the best pooled score,
//! which reuses the same inner means in both terms.

use rayon::prelude::*;

use crate::data::OngoingArmData;
use crate::error::{Error, Result};
use crate::evidence::{log_marginal_bridge, posterior_model_probs};
use crate::fit::ModelWeights;
use crate::mcmc::{sample_posterior, McmcSettings, PosteriorDraws, PosteriorSpec};
use crate::rng::Streams;

use super::{
    max_gain_over_best, AnalysisMode, ArmModel, ArmSpec, OuterSample, VoiMethod, VoiResult,
    TAG_BRIDGE, TAG_NESTED,
};

/// Convergence bookkeeping pooled over every inner sampler run.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NestedDiagnostics {
    /// Inner MCMC runs performed.
    pub sampler_runs: usize,
    /// Runs whose split-Rhat exceeded the advisory threshold.
    pub non_converged: usize,
    /// Largest split-Rhat seen across runs and coordinates.
    pub worst_split_rhat: f64,
    /// Bridge-sampling iterations that hit their budget unconverged.
    pub bridge_failures: usize,
}

/// Nested Monte Carlo value estimate with its inner-loop bookkeeping.
#[derive(Debug, Clone)]
pub struct NestedEvsi {
    /// The value estimate and its standard error.
    pub result: VoiResult,
    /// Pooled posterior-mean net benefit per decision.
    pub inner_means: [f64; 2],
    /// Posterior-mean net benefit per decision and outer draw.
    pub per_draw: [Vec<f64>; 2],
    /// Convergence summary over all inner runs.
    pub diagnostics: NestedDiagnostics,
}

/// Estimate the value of the extension data by nested Monte Carlo.
///
/// `arms` must hold the same fitted models the outer sample was drawn
/// from; their normal approximations serve as the inner priors. The
/// `settings` control the inner sampler's size only: its seed field is
/// ignored, and each run is seeded from `streams` keyed by the outer
/// draw, decision, and model, so the result is reproducible for a fixed
/// seed regardless of thread count.
pub fn evsi_nested_mc(
    outer: &OuterSample,
    arms: &[ArmSpec; 2],
    settings: &McmcSettings,
    streams: &Streams,
) -> Result<NestedEvsi> {
    if outer.len() < 2 {
        return Err(Error::invalid(format!(
            "nested estimator needs at least 2 outer draws, got {}",
            outer.len()
        )));
    }
    let outcomes: Vec<DrawOutcome> = outer
        .draws
        .par_iter()
        .enumerate()
        .map(|(k, draw)| {
            let mut outcome = DrawOutcome::default();
            for d in 0..2 {
                let ongoing = &draw.ongoing[d];
                outcome.means[d] = match outer.mode {
                    AnalysisMode::Single(family) => {
                        let model = arms[d].model_for(family)?;
                        let seed = streams.subseed(&[TAG_NESTED, k as u64, d as u64]);
                        let (mean, draws) =
                            inner_mean(model, ongoing, outer.t_h, settings, seed)?;
                        outcome.absorb(&draws);
                        mean
                    }
                    AnalysisMode::Averaged => {
                        let models = arms[d].models();
                        let mut means = Vec::with_capacity(models.len());
                        let mut log_marginals = Vec::with_capacity(models.len());
                        for (r, model) in models.iter().enumerate() {
                            let seed =
                                streams.subseed(&[TAG_NESTED, k as u64, d as u64, r as u64]);
                            let (mean, draws) =
                                inner_mean(model, ongoing, outer.t_h, settings, seed)?;
                            outcome.absorb(&draws);
                            let spec = PosteriorSpec {
                                prior: &model.posterior,
                                family: model.family,
                                ongoing,
                            };
                            let mut bridge_rng =
                                streams.stream(&[TAG_BRIDGE, k as u64, d as u64, r as u64]);
                            let evidence = log_marginal_bridge(&spec, &draws, &mut bridge_rng)?;
                            if !evidence.converged {
                                outcome.bridge_failures += 1;
                            }
                            means.push(mean);
                            log_marginals.push(evidence.log_marginal);
                        }
                        let prior = ModelWeights {
                            weights: models.iter().map(|m| m.weight).collect(),
                        };
                        let probs = posterior_model_probs(&log_marginals, &prior)?;
                        means
                            .iter()
                            .zip(probs.probs())
                            .map(|(m, p)| m * p)
                            .sum()
                    }
                };
            }
            Ok(outcome)
        })
        .collect::<Result<Vec<_>>>()?;
    let per_draw = [
        outcomes.iter().map(|o| o.means[0]).collect::<Vec<f64>>(),
        outcomes.iter().map(|o| o.means[1]).collect::<Vec<f64>>(),
    ];
    let k = outcomes.len();
    let inner_means = [
        per_draw[0].iter().sum::<f64>() / k as f64,
        per_draw[1].iter().sum::<f64>() / k as f64,
    ];
    let diagnostics = outcomes.iter().fold(
        NestedDiagnostics {
            sampler_runs: 0,
            non_converged: 0,
            worst_split_rhat: 0.0,
            bridge_failures: 0,
        },
        |acc, o| NestedDiagnostics {
            sampler_runs: acc.sampler_runs + o.sampler_runs,
            non_converged: acc.non_converged + o.non_converged,
            worst_split_rhat: acc.worst_split_rhat.max(o.worst_split_rhat),
            bridge_failures: acc.bridge_failures + o.bridge_failures,
        },
    );
    let (estimate, se) = max_gain_over_best(&per_draw)?;
    let result = VoiResult {
        estimate,
        se: se.max(f64::MIN_POSITIVE),
        method: VoiMethod::NestedMonteCarlo,
        k,
        j: Some(settings.chains * settings.draws_per_chain()),
    };
    result.validate()?;
    Ok(NestedEvsi {
        result,
        inner_means,
        per_draw,
        diagnostics,
    })
}

/// Per-outer-draw accumulation of inner means and convergence counts.
#[derive(Debug, Default)]
struct DrawOutcome {
    means: [f64; 2],
    sampler_runs: usize,
    non_converged: usize,
    worst_split_rhat: f64,
    bridge_failures: usize,
}

impl DrawOutcome {
    fn absorb(&mut self, draws: &PosteriorDraws) {
        self.sampler_runs += 1;
        if !draws.diagnostics.converged {
            self.non_converged += 1;
        }
        let [r1, r2] = draws.diagnostics.split_rhat;
        self.worst_split_rhat = self.worst_split_rhat.max(r1).max(r2);
    }
}

/// Sample one model's posterior given the extension window and return the
/// posterior mean net benefit together with the raw draws.
fn inner_mean(
    model: &ArmModel,
    ongoing: &OngoingArmData,
    t_h: f64,
    settings: &McmcSettings,
    seed: u64,
) -> Result<(f64, PosteriorDraws)> {
    let spec = PosteriorSpec {
        prior: &model.posterior,
        family: model.family,
        ongoing,
    };
    let run_settings = McmcSettings { seed, ..*settings };
    let draws = sample_posterior(&spec, &run_settings)?;
    let mut total = 0.0;
    for &theta in &draws.draws {
        total += model.family.restricted_mean_survival(theta, t_h)?;
    }
    Ok((total / draws.len() as f64, draws))
}
