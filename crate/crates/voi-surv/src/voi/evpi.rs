//! Expected value of perfect information about the survival parameters.
//!
//! Prices a decision made after the arm-level parameters are revealed.
//! Each Monte Carlo draw realizes both arms jointly from their current
//! posteriors (and, when averaging, from their model weights), scores
//! both decisions by restricted mean survival, and the value is the mean
//! of the per-draw best minus the best of the means.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::Streams;

use super::{max_gain_over_best, AnalysisMode, ArmSpec, VoiMethod, VoiResult, TAG_EVPI};

/// Fewer draws than this leaves the standard error unusable.
pub const MIN_EVPI_DRAWS: usize = 1_000;

/// Estimate the expected value of perfect information by Monte Carlo.
///
/// `arms` holds the new and standard arm in decision order, `n` is the
/// number of parameter draws, and `t_h` the restricted-mean horizon.
/// Draw `k` uses the stream keyed by `(TAG_EVPI, k)`, so the result is
/// reproducible for a fixed seed regardless of thread count.
pub fn evpi_mc(
    arms: &[ArmSpec; 2],
    mode: AnalysisMode,
    n: usize,
    t_h: f64,
    streams: &Streams,
) -> Result<VoiResult> {
    if n < MIN_EVPI_DRAWS {
        return Err(Error::invalid(format!(
            "perfect-information estimate needs at least {MIN_EVPI_DRAWS} draws, got {n}"
        )));
    }
    if !t_h.is_finite() || t_h <= 0.0 {
        return Err(Error::invalid(format!(
            "restricted-mean horizon must be positive and finite, got {t_h}"
        )));
    }
    let per_draw: Vec<[f64; 2]> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut rng = streams.stream(&[TAG_EVPI, k as u64]);
            let mut nb = [0.0; 2];
            for (d, arm) in arms.iter().enumerate() {
                let (idx, theta) = arm.sample(mode, &mut rng)?;
                let family = arm.models()[idx].family;
                nb[d] = family.restricted_mean_survival(theta, t_h)?;
            }
            Ok(nb)
        })
        .collect::<Result<Vec<_>>>()?;
    let values = [
        per_draw.iter().map(|nb| nb[0]).collect::<Vec<f64>>(),
        per_draw.iter().map(|nb| nb[1]).collect::<Vec<f64>>(),
    ];
    let (estimate, se) = max_gain_over_best(&values)?;
    let result = VoiResult {
        estimate,
        se: se.max(f64::MIN_POSITIVE),
        method: VoiMethod::MonteCarlo,
        k: n,
        j: None,
    };
    result.validate()?;
    Ok(result)
}
