//! Marginal likelihood of extended follow-up data under one survival model,
//! and posterior model probabilities across models.
//!
//! The marginal integrates the left-truncated likelihood against the
//! interim normal approximation of the parameter posterior. Bridge sampling
//! with the optimal weighting function estimates it from the same posterior
//! draws the inner value loop already produced: half the draws fit a
//! moment-matched normal proposal, the other half drive the fixed-point
//! iteration, which avoids the bias of reusing one sample for both roles.

use rand::Rng;

use crate::dist::LogParams;
use crate::error::{Error, Result};
use crate::fit::ModelWeights;
use crate::mcmc::{PosteriorDraws, PosteriorSpec};
use crate::posterior::BivariateNormal;
use crate::special::softmax;

/// Relative change in the marginal estimate below which the fixed-point
/// iteration is declared converged.
const BRIDGE_TOL: f64 = 1e-8;

/// Iteration budget for the fixed-point update.
const BRIDGE_MAX_ITER: usize = 1000;

/// Bridge-sampling estimate of one model's log marginal likelihood.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct EvidenceResult {
    /// Estimated log marginal likelihood of the ongoing data.
    pub log_marginal: f64,
    /// Fixed-point iterations performed.
    pub iterations: usize,
    /// True when the relative change dropped below tolerance in budget.
    pub converged: bool,
    /// Relative change at the final iteration.
    pub relative_change: f64,
}

/// Posterior probability of each model given the ongoing data.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct PosteriorModelProbs {
    probs: Vec<f64>,
}

impl PosteriorModelProbs {
    /// Probabilities in model order; they sum to one.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Estimate the log marginal likelihood of the ongoing data by bridge
/// sampling between the unnormalized posterior and a moment-matched
/// normal proposal.
///
/// `draws` must come from [`crate::mcmc::sample_posterior`] on the same
/// `spec`; their stored log target values are reused directly. The `rng`
/// supplies the proposal draws, so results are reproducible under a fixed
/// stream.
pub fn log_marginal_bridge<R: Rng + ?Sized>(
    spec: &PosteriorSpec,
    draws: &PosteriorDraws,
    rng: &mut R,
) -> Result<EvidenceResult> {
    bridge_impl(
        |theta| spec.log_target(theta),
        &draws.draws,
        Some(&draws.log_target),
        rng,
    )
}

/// Posterior model probabilities from log marginals and prior weights:
/// softmax of log marginal plus log prior, max-subtracted.
pub fn posterior_model_probs(
    log_marginals: &[f64],
    prior: &ModelWeights,
) -> Result<PosteriorModelProbs> {
    let weights = &prior.weights;
    if log_marginals.len() != weights.len() {
        return Err(Error::invalid(format!(
            "{} log marginals for {} prior weights",
            log_marginals.len(),
            weights.len()
        )));
    }
    if log_marginals.iter().any(|m| !m.is_finite()) {
        return Err(Error::invalid("log marginals must be finite"));
    }
    let scores: Vec<f64> = log_marginals
        .iter()
        .zip(weights)
        .map(|(lm, w)| lm + w.ln())
        .collect();
    Ok(PosteriorModelProbs {
        probs: softmax(&scores),
    })
}

/// Bridge sampling between an unnormalized log density and a normal
/// proposal moment-matched to `draws`.
///
/// Draws are split by parity of their index so both halves cover every
/// chain: even indices fit the proposal, odd indices enter the iteration.
/// `stored_lq` carries the log target at each draw when the caller already
/// evaluated it.
fn bridge_impl<R: Rng + ?Sized>(
    log_q: impl Fn(LogParams) -> f64,
    draws: &[LogParams],
    stored_lq: Option<&[f64]>,
    rng: &mut R,
) -> Result<EvidenceResult> {
    if draws.len() < 4 {
        return Err(Error::invalid(format!(
            "bridge sampling needs at least 4 posterior draws, got {}",
            draws.len()
        )));
    }
    if let Some(lq) = stored_lq {
        if lq.len() != draws.len() {
            return Err(Error::invalid(
                "stored log targets must align with the draws",
            ));
        }
    }

    let fit_half: Vec<LogParams> = draws.iter().copied().step_by(2).collect();
    let iter_half: Vec<LogParams> = draws.iter().copied().skip(1).step_by(2).collect();
    let proposal = moment_matched_normal(&fit_half)?;

    // l1 on posterior draws, l2 on proposal draws, each the log ratio of
    // the unnormalized posterior to the proposal density.
    let l1: Vec<f64> = iter_half
        .iter()
        .enumerate()
        .map(|(i, theta)| {
            let lq = match stored_lq {
                Some(lq) => lq[2 * i + 1],
                None => log_q(*theta),
            };
            lq - proposal.logpdf(*theta)
        })
        .collect();
    let n2 = iter_half.len();
    let l2: Vec<f64> = (0..n2)
        .map(|_| {
            let omega = proposal.sample(rng);
            log_q(omega) - proposal.logpdf(omega)
        })
        .collect();

    // Shift both ratio sets by the running maximum so the exponentials
    // in the fixed-point update stay in range.
    let lstar = l1
        .iter()
        .chain(&l2)
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if !lstar.is_finite() {
        return Err(Error::numeric(
            "bridge sampling found no finite density ratios",
        ));
    }

    let n1 = l1.len() as f64;
    let s1 = n1 / (n1 + n2 as f64);
    let s2 = n2 as f64 / (n1 + n2 as f64);
    let e1: Vec<f64> = l1.iter().map(|v| (v - lstar).exp()).collect();
    let e2: Vec<f64> = l2.iter().map(|v| (v - lstar).exp()).collect();

    // Start from the plain importance-sampling estimate under the
    // proposal, which is already close for well-matched proposals.
    let mut r = (e2.iter().sum::<f64>() / n2 as f64).max(f64::MIN_POSITIVE);
    let mut relative_change = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..BRIDGE_MAX_ITER {
        iterations += 1;
        let num: f64 = e2.iter().map(|e| e / (s1 * e + s2 * r)).sum::<f64>() / n2 as f64;
        let den: f64 = e1.iter().map(|e| 1.0 / (s1 * e + s2 * r)).sum::<f64>() / n1;
        let next = num / den;
        if !next.is_finite() || next <= 0.0 {
            return Err(Error::numeric(format!(
                "bridge iteration produced ratio {next}"
            )));
        }
        relative_change = (next - r).abs() / next;
        r = next;
        if relative_change < BRIDGE_TOL {
            converged = true;
            break;
        }
    }

    Ok(EvidenceResult {
        log_marginal: r.ln() + lstar,
        iterations,
        converged,
        relative_change,
    })
}

/// Normal distribution matching the sample mean and covariance of `draws`.
fn moment_matched_normal(draws: &[LogParams]) -> Result<BivariateNormal> {
    let n = draws.len() as f64;
    let mut mean = [0.0; 2];
    for d in draws {
        mean[0] += d.theta1;
        mean[1] += d.theta2;
    }
    mean[0] /= n;
    mean[1] /= n;
    let mut cov = [[0.0; 2]; 2];
    for d in draws {
        let e1 = d.theta1 - mean[0];
        let e2 = d.theta2 - mean[1];
        cov[0][0] += e1 * e1;
        cov[0][1] += e1 * e2;
        cov[1][1] += e2 * e2;
    }
    cov[0][0] /= n - 1.0;
    cov[0][1] /= n - 1.0;
    cov[1][1] /= n - 1.0;
    cov[1][0] = cov[0][1];
    BivariateNormal::new(LogParams::new(mean[0], mean[1]), cov)
        .map_err(|e| Error::numeric(format!("degenerate posterior draws: {e}")))
}
