//! Command layer behind the `voi-surv` binary.
//!
//! The binary stays a thin argument parser; everything it does lives
//! here so integration and acceptance tests can drive the same code
//! paths in process.

pub mod commands;
pub mod report;

pub use commands::{
    cmd_enbs, cmd_evsi, cmd_fit, cmd_generate, dataset_for, generate_dataset, run_scenario,
    CrossingsDoc, Method, EVPI_DRAWS,
};
pub use report::{
    CurveRow, EnbsBlock, EvsiPoint, FitEntry, FitOutcome, FitReport, ResultsDoc, WeightsBlock,
    SCHEMA_VERSION,
};
