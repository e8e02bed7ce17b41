//! Regression estimator of the value of extended follow-up.
//!
//! Instead of re-sampling a posterior per simulated dataset, each
//! decision's net benefit is smoothed over the sufficient summaries of
//! the extension window (events and time at risk) by a tensor-spline
//! regression. The fitted values stand in for posterior mean net
//! benefits, so the value is the mean of the per-draw best fitted values
//! minus the best column mean. The standard error propagates smoother
//! coefficient uncertainty by simulating fitted-value vectors.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gam::{fit_tensor_spline, DesignPoint, SmoothFit};
use crate::rng::Streams;

use super::{max_gain_over_best, OuterSample, VoiMethod, VoiResult, TAG_REGRESSION_SE};

/// Fitted-value simulations used for the standard error.
pub const REGRESSION_SE_SIMS: usize = 10_000;

/// Fewer outer draws than this cannot support the smoother.
pub const MIN_REGRESSION_DRAWS: usize = 50;

/// Regression value estimate with the per-decision smoothers behind it.
#[derive(Debug, Clone)]
pub struct RegressionEvsi {
    /// The value estimate and its standard error.
    pub result: VoiResult,
    /// One smoother per decision, in decision order.
    pub fits: [SmoothFit; 2],
}

/// Estimate the value of the extension data by smoothing net benefits
/// over the extension-window summaries.
///
/// Works identically in single and averaged mode: the regression
/// marginalizes whatever parameter and model noise the outer sample
/// carries. The standard error simulates coefficient draws seeded from
/// `streams`, so the result is reproducible for a fixed seed regardless
/// of thread count.
pub fn evsi_regression(outer: &OuterSample, streams: &Streams) -> Result<RegressionEvsi> {
    if outer.len() < MIN_REGRESSION_DRAWS {
        return Err(Error::invalid(format!(
            "regression estimator needs at least {MIN_REGRESSION_DRAWS} outer draws, got {}",
            outer.len()
        )));
    }
    let mut fits: Vec<SmoothFit> = Vec::with_capacity(2);
    for d in 0..2 {
        let inputs: Vec<DesignPoint> = outer
            .draws
            .iter()
            .map(|draw| draw.summaries[d].into())
            .collect();
        let response: Vec<f64> = outer.draws.iter().map(|draw| draw.nb[d]).collect();
        fits.push(fit_tensor_spline(&inputs, &response)?);
    }
    let fitted = [fits[0].fitted.clone(), fits[1].fitted.clone()];
    let (estimate, _) = max_gain_over_best(&fitted)?;
    let se = simulated_se(&fits, streams)?;
    let result = VoiResult {
        estimate,
        se: se.max(f64::MIN_POSITIVE),
        method: VoiMethod::Regression,
        k: outer.len(),
        j: None,
    };
    result.validate()?;
    let mut fits = fits.into_iter();
    let first = fits.next().expect("two fits built above");
    let second = fits.next().expect("two fits built above");
    Ok(RegressionEvsi {
        result,
        fits: [first, second],
    })
}

/// Standard deviation of the value statistic under coefficient draws
/// from both smoothers' posterior covariance.
fn simulated_se(fits: &[SmoothFit], streams: &Streams) -> Result<f64> {
    let n = fits[0].fitted.len();
    let values: Vec<f64> = (0..REGRESSION_SE_SIMS)
        .into_par_iter()
        .map(|s| {
            let mut rng = streams.stream(&[TAG_REGRESSION_SE, s as u64]);
            let mut sim = [vec![0.0; n], vec![0.0; n]];
            for d in 0..2 {
                fits[d].simulate_fitted_into(&mut rng, &mut sim[d]);
            }
            let (mean0, mean1, mean_max) = sim[0].iter().zip(&sim[1]).fold(
                (0.0, 0.0, 0.0),
                |(a, b, m), (&x, &y)| (a + x, b + y, m + x.max(y)),
            );
            (mean_max - mean0.max(mean1)) / n as f64
        })
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / (values.len() as f64 - 1.0);
    Ok(var.sqrt())
}
