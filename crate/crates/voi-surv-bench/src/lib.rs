//! Shared fixtures for the hot-path benchmarks.
//!
//! Everything is built once from the increasing-hazard case study so the
//! benchmarks measure steady-state work, not setup.

use voi_surv::generate::{generate_mixture_arm, ArmGenerator};
use voi_surv::voi::{generate_outer_sample, OuterSample};
use voi_surv::{
    akaike_weights, fit_all, AnalysisMode, ArmSpec, FittedModel, ModelWeights, Streams,
    SurvivalFamily, TrialArm,
};

/// Interim cut of the case-study trial, in months.
pub const T1: f64 = 12.0;
/// Extension endpoint used for the outer-sample fixture.
pub const T2: f64 = 36.0;
/// Restricted-mean horizon, in months.
pub const HORIZON: f64 = 240.0;

/// Inputs every benchmark draws from.
pub struct Fixture {
    /// New-treatment arm, 200 participants censored at [`T1`].
    pub arm: TrialArm,
    /// All four families fitted to [`Fixture::arm`].
    pub fits: Vec<FittedModel>,
    /// Akaike weights of those fits.
    pub weights: ModelWeights,
    /// Posterior mixtures for both arms, new treatment first.
    pub specs: [ArmSpec; 2],
    /// 500 simulated futures of the extension window under the
    /// fitted Weibull model, [`T1`] to [`T2`].
    pub outer: OuterSample,
    /// Stream root shared by the stochastic benchmarks.
    pub streams: Streams,
}

/// Build the increasing-hazard fixture with a fixed seed.
pub fn fixture() -> Fixture {
    let new = ArmGenerator {
        weibull_shape: 1.1,
        weibull_scale: 70.0,
        gamma_shape: 1.8,
        gamma_rate: 0.04,
        n: 200,
    };
    let standard = ArmGenerator {
        weibull_scale: 50.0,
        ..new
    };
    let arm = generate_mixture_arm(&new, T1).expect("generator is valid");
    let standard_arm = generate_mixture_arm(&standard, T1).expect("generator is valid");

    let fits = fit_all(&SurvivalFamily::ALL, &arm).expect("case-study fits converge");
    let standard_fits =
        fit_all(&SurvivalFamily::ALL, &standard_arm).expect("case-study fits converge");
    let aics: Vec<f64> = fits.iter().map(|f| f.aic).collect();
    let standard_aics: Vec<f64> = standard_fits.iter().map(|f| f.aic).collect();
    let weights = akaike_weights(&aics).expect("finite AICs");
    let standard_weights = akaike_weights(&standard_aics).expect("finite AICs");

    let specs = [
        ArmSpec::new(&fits, &weights).expect("posterior approximations exist"),
        ArmSpec::new(&standard_fits, &standard_weights).expect("posterior approximations exist"),
    ];

    let streams = Streams::new(611);
    let at_risk = [
        arm.at_risk(T1).expect("t1 is the censoring time"),
        standard_arm.at_risk(T1).expect("t1 is the censoring time"),
    ];
    let outer = generate_outer_sample(
        &specs,
        at_risk,
        T1,
        T2,
        HORIZON,
        500,
        AnalysisMode::Single(SurvivalFamily::Weibull),
        &streams,
    )
    .expect("outer sample generates");

    Fixture {
        arm,
        fits,
        weights,
        specs,
        outer,
        streams,
    }
}
