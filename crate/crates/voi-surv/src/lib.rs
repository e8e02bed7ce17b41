//! Expected value of sample information for extending follow-up in an
//! ongoing two-arm survival trial.
//!
//! The library covers the full pipeline:
//!
//! - parametric survival families on an unconstrained log scale ([`dist`])
//! - trial datasets with administrative censoring and the synthetic
//!   case-study generator ([`data`], [`generate`])
//! - maximum-likelihood fits, normal posterior approximations, and Akaike
//!   model weights ([`fit`], [`posterior`])
//! - Metropolis posterior sampling and bridge-sampling model evidence for
//!   model-averaged analyses ([`mcmc`], [`evidence`])
//! - the value-of-information engines: expected value of perfect
//!   information, nested Monte Carlo and regression-based expected value of
//!   sample information, and expected net benefit of sampling curves
//!   ([`voi`], [`gam`])
//!
//! Every stochastic routine draws from named [`rng`] streams, so a run is
//! reproduced bit for bit from its seed regardless of thread count.

pub mod config;
pub mod data;
pub mod dist;
pub mod error;
pub mod evidence;
pub mod fit;
pub mod gam;
pub mod generate;
pub mod mcmc;
pub mod posterior;
pub mod quad;
pub mod rng;
pub mod special;
pub mod voi;

pub use config::{GeneratorConfig, ScenarioConfig};
pub use data::{ArmId, OngoingArmData, SummaryStat, TrialArm, TrialDataset};
pub use dist::{LogParams, SurvivalFamily};
pub use error::{Error, Result};
pub use fit::{akaike_weights, fit_all, fit_mle, FittedModel, ModelWeights};
pub use gam::{fit_tensor_spline, DesignPoint, SmoothFit};
pub use posterior::{posterior_approx, BivariateNormal};
pub use rng::Streams;
pub use voi::{AnalysisMode, ArmModel, ArmSpec, EnbsInputs, VoiMethod, VoiResult};
