//! Outer simulation of candidate extension datasets.
//!
//! Each draw realizes one plausible future for the extra follow-up
//! window: parameters come from the current posterior (and, when
//! averaging, a family per arm from its model weights), every
//! participant still at risk at t1 gets an event time conditional on
//! surviving past t1, and times beyond t2 are administratively censored.
//! The net benefit of each arm is stored at the same drawn parameters so
//! downstream estimators can reuse the draw for both value terms.

use rayon::prelude::*;

use crate::data::{OngoingArmData, SummaryStat};
use crate::dist::{LogParams, SurvivalFamily, MIN_TRUNCATION_SURVIVOR};
use crate::error::{Error, Result};
use crate::rng::Streams;

use super::{AnalysisMode, ArmSpec, TAG_OUTER};

/// Parameter draws whose conditioning event has survivor mass below
/// [`MIN_TRUNCATION_SURVIVOR`] are rejected and redrawn at most this
/// many times per arm before the draw fails.
pub const MAX_TRUNCATION_ATTEMPTS: usize = 100;

/// One simulated future: parameters, net benefits, and extension data.
#[derive(Debug, Clone)]
pub struct OuterDraw {
    /// Family drawn for each arm, in decision order.
    pub families: [SurvivalFamily; 2],
    /// Parameters drawn for each arm.
    pub thetas: [LogParams; 2],
    /// Restricted mean survival of each arm at the drawn parameters.
    pub nb: [f64; 2],
    /// Simulated extension-window data for each arm.
    pub ongoing: [OngoingArmData; 2],
    /// Sufficient summaries (events, time at risk) of the extension data.
    pub summaries: [SummaryStat; 2],
}

/// A full outer Monte Carlo sample for one extension length.
#[derive(Debug, Clone)]
pub struct OuterSample {
    /// Simulated futures in draw order.
    pub draws: Vec<OuterDraw>,
    /// Current follow-up end in months.
    pub t1: f64,
    /// Proposed follow-up end in months.
    pub t2: f64,
    /// Restricted-mean horizon used for the stored net benefits.
    pub t_h: f64,
    /// Uncertainty mode the draws were generated under.
    pub mode: AnalysisMode,
}

/// Net benefits and the draws behind them, in matrix layout.
#[derive(Debug, Clone)]
pub struct NetBenefitSample {
    /// Per-decision net benefit vectors, indexed `[decision][draw]`.
    pub nb: [Vec<f64>; 2],
    /// Parameter draws per outer draw, in decision order.
    pub thetas: Vec<[LogParams; 2]>,
    /// Family draws per outer draw; present only under model averaging.
    pub models: Option<Vec<[SurvivalFamily; 2]>>,
}

impl OuterSample {
    /// Number of outer draws.
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    /// True when the sample holds no draws.
    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// Net benefits of all draws in matrix layout.
    pub fn net_benefits(&self) -> NetBenefitSample {
        let nb = [
            self.draws.iter().map(|d| d.nb[0]).collect(),
            self.draws.iter().map(|d| d.nb[1]).collect(),
        ];
        let thetas = self.draws.iter().map(|d| d.thetas).collect();
        let models = match self.mode {
            AnalysisMode::Single(_) => None,
            AnalysisMode::Averaged => Some(self.draws.iter().map(|d| d.families).collect()),
        };
        NetBenefitSample { nb, thetas, models }
    }
}

/// Simulate `k_draws` candidate extension datasets.
///
/// `n_at_risk` gives the number of participants per arm still event-free
/// at t1; each contributes one time in (t1, t2] per draw, censored at t2.
/// When `t2 == t1` the window is empty and every participant is recorded
/// censored at t1 with zero additional time at risk. Draw `k` uses the
/// stream keyed by `(TAG_OUTER, k)`, so results are reproducible for a
/// fixed seed regardless of thread count.
pub fn generate_outer_sample(
    arms: &[ArmSpec; 2],
    n_at_risk: [usize; 2],
    t1: f64,
    t2: f64,
    t_h: f64,
    k_draws: usize,
    mode: AnalysisMode,
    streams: &Streams,
) -> Result<OuterSample> {
    if !(t1 >= 0.0 && t2 >= t1 && t2.is_finite()) {
        return Err(Error::invalid(format!(
            "follow-up window must satisfy 0 <= t1 <= t2, got [{t1}, {t2}]"
        )));
    }
    if !t_h.is_finite() || t_h <= 0.0 {
        return Err(Error::invalid(format!(
            "restricted-mean horizon must be positive and finite, got {t_h}"
        )));
    }
    if k_draws < 2 {
        return Err(Error::invalid(format!(
            "outer sample needs at least 2 draws, got {k_draws}"
        )));
    }
    if n_at_risk.iter().any(|&n| n == 0) {
        return Err(Error::invalid(
            "each arm needs at least one participant at risk at t1",
        ));
    }
    let draws: Vec<OuterDraw> = (0..k_draws)
        .into_par_iter()
        .map(|k| {
            let mut rng = streams.stream(&[TAG_OUTER, k as u64]);
            simulate_draw(arms, n_at_risk, t1, t2, t_h, mode, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OuterSample {
        draws,
        t1,
        t2,
        t_h,
        mode,
    })
}

fn simulate_draw<R: rand::Rng + ?Sized>(
    arms: &[ArmSpec; 2],
    n_at_risk: [usize; 2],
    t1: f64,
    t2: f64,
    t_h: f64,
    mode: AnalysisMode,
    rng: &mut R,
) -> Result<OuterDraw> {
    let mut families = [SurvivalFamily::Weibull; 2];
    let mut thetas = [LogParams::new(0.0, 0.0); 2];
    let mut nb = [0.0; 2];
    let mut ongoing: [Option<OngoingArmData>; 2] = [None, None];
    let mut summaries = [SummaryStat {
        events: 0,
        time_at_risk: 0.0,
    }; 2];
    for d in 0..2 {
        let (family, theta) = draw_viable_params(&arms[d], mode, t1, rng)?;
        let n = n_at_risk[d];
        let mut times = Vec::with_capacity(n);
        let mut status = Vec::with_capacity(n);
        if t2 > t1 {
            for _ in 0..n {
                let t = family.sample_truncated(rng, theta, t1)?;
                if t < t2 {
                    times.push(t);
                    status.push(true);
                } else {
                    times.push(t2);
                    status.push(false);
                }
            }
        } else {
            times.resize(n, t1);
            status.resize(n, false);
        }
        let data = OngoingArmData::new(times, status, t1, t2)?;
        families[d] = family;
        thetas[d] = theta;
        nb[d] = family.restricted_mean_survival(theta, t_h)?;
        summaries[d] = data.summary_stat();
        ongoing[d] = Some(data);
    }
    let [first, second] = ongoing;
    Ok(OuterDraw {
        families,
        thetas,
        nb,
        ongoing: [first.expect("filled above"), second.expect("filled above")],
        summaries,
    })
}

/// Draw a (family, parameters) pair whose survivor mass past t1 is large
/// enough to condition on, rejecting and redrawing otherwise.
fn draw_viable_params<R: rand::Rng + ?Sized>(
    arm: &ArmSpec,
    mode: AnalysisMode,
    t1: f64,
    rng: &mut R,
) -> Result<(SurvivalFamily, LogParams)> {
    let mut last = None;
    for _ in 0..MAX_TRUNCATION_ATTEMPTS {
        let (idx, theta) = arm.sample(mode, rng)?;
        let family = arm.models()[idx].family;
        if t1 == 0.0 || family.log_survivor(t1, theta) >= MIN_TRUNCATION_SURVIVOR.ln() {
            return Ok((family, theta));
        }
        last = Some((family, theta));
    }
    let (family, theta) = last.expect("at least one rejected draw");
    Err(Error::numeric(format!(
        "no drawn parameters left survivor mass above {MIN_TRUNCATION_SURVIVOR:.0e} \
         past t1 = {t1} after {MAX_TRUNCATION_ATTEMPTS} attempts; last was {family} \
         with theta = ({}, {})",
        theta.theta1, theta.theta2
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posterior::BivariateNormal;
    use crate::voi::ArmModel;

    fn weibull_arm(theta1: f64, theta2: f64, var: f64) -> ArmSpec {
        let posterior =
            BivariateNormal::new(LogParams::new(theta1, theta2), [[var, 0.0], [0.0, var]])
                .unwrap();
        ArmSpec {
            models: vec![ArmModel {
                family: SurvivalFamily::Weibull,
                posterior,
                weight: 1.0,
            }],
        }
    }

    fn test_arms() -> [ArmSpec; 2] {
        [
            weibull_arm(0.28, 4.01, 0.03),
            weibull_arm(0.26, 3.86, 0.03),
        ]
    }

    #[test]
    fn empty_window_records_everyone_censored_at_t1() {
        let arms = test_arms();
        let streams = Streams::new(3);
        let mode = AnalysisMode::Single(SurvivalFamily::Weibull);
        let sample =
            generate_outer_sample(&arms, [30, 25], 12.0, 12.0, 240.0, 5, mode, &streams).unwrap();
        for draw in &sample.draws {
            for d in 0..2 {
                assert!(draw.ongoing[d].times().iter().all(|&t| t == 12.0));
                assert!(draw.ongoing[d].status().iter().all(|&e| !e));
                assert_eq!(draw.summaries[d].events, 0);
                assert_eq!(draw.summaries[d].time_at_risk, 0.0);
            }
        }
    }

    #[test]
    fn extension_data_have_expected_shape_and_summaries() {
        let arms = test_arms();
        let streams = Streams::new(8);
        let mode = AnalysisMode::Single(SurvivalFamily::Weibull);
        let sample =
            generate_outer_sample(&arms, [40, 35], 12.0, 24.0, 240.0, 20, mode, &streams).unwrap();
        assert_eq!(sample.len(), 20);
        for draw in &sample.draws {
            for d in 0..2 {
                let data = &draw.ongoing[d];
                assert_eq!(data.len(), [40, 35][d]);
                let events = data.status().iter().filter(|&&e| e).count();
                let exposure: f64 = data.times().iter().map(|t| t - 12.0).sum();
                assert_eq!(draw.summaries[d].events, events);
                assert!((draw.summaries[d].time_at_risk - exposure).abs() < 1e-9);
                assert!(data
                    .times()
                    .iter()
                    .zip(data.status())
                    .all(|(&t, &e)| if e { t < 24.0 } else { t <= 24.0 }));
            }
            assert!(draw.nb[0].is_finite() && draw.nb[0] > 0.0);
        }
    }

    #[test]
    fn fixed_seed_reproduces_the_same_sample() {
        let arms = test_arms();
        let streams = Streams::new(19);
        let mode = AnalysisMode::Single(SurvivalFamily::Weibull);
        let a = generate_outer_sample(&arms, [20, 20], 12.0, 36.0, 240.0, 8, mode, &streams)
            .unwrap();
        let b = generate_outer_sample(&arms, [20, 20], 12.0, 36.0, 240.0, 8, mode, &streams)
            .unwrap();
        for (da, db) in a.draws.iter().zip(&b.draws) {
            assert_eq!(da.thetas[0], db.thetas[0]);
            assert_eq!(da.ongoing[1], db.ongoing[1]);
        }
    }

    #[test]
    fn single_thread_pool_matches_default_pool() {
        let arms = test_arms();
        let streams = Streams::new(23);
        let mode = AnalysisMode::Single(SurvivalFamily::Weibull);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let serial = pool.install(|| {
            generate_outer_sample(&arms, [15, 15], 12.0, 24.0, 240.0, 12, mode, &streams)
        });
        let parallel =
            generate_outer_sample(&arms, [15, 15], 12.0, 24.0, 240.0, 12, mode, &streams);
        let serial = serial.unwrap();
        let parallel = parallel.unwrap();
        for (a, b) in serial.draws.iter().zip(&parallel.draws) {
            assert_eq!(a.thetas, b.thetas);
            assert_eq!(a.nb, b.nb);
        }
    }

    #[test]
    fn mean_sampled_net_benefit_tracks_the_posterior_mean() {
        let arms = test_arms();
        let streams = Streams::new(41);
        let mode = AnalysisMode::Single(SurvivalFamily::Weibull);
        let sample =
            generate_outer_sample(&arms, [10, 10], 12.0, 24.0, 240.0, 4_000, mode, &streams)
                .unwrap();
        let nbs = sample.net_benefits();
        assert!(nbs.models.is_none());
        let mean0 = nbs.nb[0].iter().sum::<f64>() / nbs.nb[0].len() as f64;
        let at_mean = SurvivalFamily::Weibull
            .restricted_mean_survival(LogParams::new(0.28, 4.01), 240.0)
            .unwrap();
        // Jensen gaps at this spread stay within a couple of months.
        assert!((mean0 - at_mean).abs() < 3.0, "{mean0} vs {at_mean}");
    }

    #[test]
    fn vanishing_survivor_mass_fails_with_the_offending_parameters() {
        // Lognormal centered far in the past: survival past t1 = 12 is
        // effectively zero for every plausible draw.
        let posterior =
            BivariateNormal::new(LogParams::new(-30.0, 0.0), [[0.01, 0.0], [0.0, 0.01]]).unwrap();
        let doomed = ArmSpec {
            models: vec![ArmModel {
                family: SurvivalFamily::Lognormal,
                posterior,
                weight: 1.0,
            }],
        };
        let arms = [doomed, test_arms()[1].clone()];
        let streams = Streams::new(2);
        let mode = AnalysisMode::Single(SurvivalFamily::Lognormal);
        let err = generate_outer_sample(&arms, [5, 5], 12.0, 24.0, 240.0, 4, mode, &streams);
        let message = err.unwrap_err().to_string();
        assert!(message.contains("100 attempts"), "{message}");
        assert!(message.contains("lognormal"), "{message}");
    }

    #[test]
    fn rejects_invalid_windows_and_sizes() {
        let arms = test_arms();
        let streams = Streams::new(1);
        let mode = AnalysisMode::Single(SurvivalFamily::Weibull);
        assert!(
            generate_outer_sample(&arms, [5, 5], 12.0, 11.0, 240.0, 4, mode, &streams).is_err()
        );
        assert!(
            generate_outer_sample(&arms, [5, 0], 12.0, 24.0, 240.0, 4, mode, &streams).is_err()
        );
        assert!(
            generate_outer_sample(&arms, [5, 5], 12.0, 24.0, 240.0, 1, mode, &streams).is_err()
        );
        assert!(
            generate_outer_sample(&arms, [5, 5], 12.0, 24.0, 0.0, 4, mode, &streams).is_err()
        );
    }
}
