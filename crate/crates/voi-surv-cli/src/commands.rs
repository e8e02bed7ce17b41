//! Command implementations shared by the binary and the test suites.
//!
//! Each command is a pure function from validated inputs to result
//! documents plus file writes under an output directory. Wall-clock
//! timings go to stderr so the JSON artifacts stay byte-identical for a
//! fixed scenario and seed regardless of thread count.

use std::path::{Path, PathBuf};
use std::time::Instant;

use voi_surv::config::ScenarioConfig;
use voi_surv::data::{TrialArm, TrialDataset};
use voi_surv::error::{Error, Result};
use voi_surv::fit::{akaike_weights, fit_mle, FittedModel, ModelWeights};
use voi_surv::generate::generate_mixture_arm;
use voi_surv::mcmc::McmcSettings;
use voi_surv::rng::Streams;
use voi_surv::voi::enbs::enbs_curves;
use voi_surv::voi::evpi::evpi_mc;
use voi_surv::voi::nested::evsi_nested_mc;
use voi_surv::voi::outer::generate_outer_sample;
use voi_surv::voi::regression::evsi_regression;
use voi_surv::voi::{ArmSpec, EnbsInputs, VoiResult};

use crate::report::{
    monthly_rows, write_curve_csv, write_evsi_csv, write_json, CurveRow, EnbsBlock, EvsiPoint,
    FitEntry, FitOutcome, FitReport, ResultsDoc, WeightsBlock, SCHEMA_VERSION,
};

/// Draws used for the perfect-information estimate.
pub const EVPI_DRAWS: usize = 100_000;

/// Which value estimators an evsi run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    /// Nested Monte Carlo only.
    Mc,
    /// Tensor-spline regression only.
    Gam,
    /// Both estimators on the same outer draws.
    Both,
}

impl Method {
    fn runs_mc(&self) -> bool {
        matches!(self, Method::Mc | Method::Both)
    }

    fn runs_gam(&self) -> bool {
        matches!(self, Method::Gam | Method::Both)
    }
}

/// Build the synthetic dataset a scenario describes.
pub fn generate_dataset(config: &ScenarioConfig) -> Result<TrialDataset> {
    Ok(TrialDataset::new(
        generate_mixture_arm(&config.generator.new, config.t1)?,
        generate_mixture_arm(&config.generator.standard, config.t1)?,
    ))
}

/// Load the dataset from a path, or regenerate it from the scenario.
pub fn dataset_for(config: &ScenarioConfig, path: Option<&Path>) -> Result<TrialDataset> {
    match path {
        Some(path) => TrialDataset::read_csv_path(path),
        None => generate_dataset(config),
    }
}

/// Write the scenario's synthetic dataset as CSV.
pub fn cmd_generate(config: &ScenarioConfig, out_dir: &Path) -> Result<PathBuf> {
    let dataset = generate_dataset(config)?;
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join("dataset.csv");
    dataset.write_csv_path(&path)?;
    Ok(path)
}

/// Fit every configured family to both arms and write the report.
///
/// A family that fails to fit is reported with its error message and
/// does not stop the others; the weights block is present only when all
/// families fitted in both arms.
pub fn cmd_fit(
    config: &ScenarioConfig,
    dataset: &TrialDataset,
    out_dir: &Path,
) -> Result<PathBuf> {
    let new = fit_outcomes(config, &dataset.new);
    let standard = fit_outcomes(config, &dataset.standard);
    let weights = match (complete_fits(&new), complete_fits(&standard)) {
        (Some(fits_new), Some(fits_standard)) => {
            Some(weights_block_from_entries(&fits_new, &fits_standard)?)
        }
        _ => None,
    };
    let report = FitReport {
        schema_version: SCHEMA_VERSION,
        seed: config.seed,
        t_h: config.t_h,
        new,
        standard,
        weights,
    };
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join("fit.json");
    write_json(&path, &report)?;
    Ok(path)
}

/// Run the full value analysis and write the results document plus the
/// plot-ready value grid (and stopping curves when costs are given).
pub fn cmd_evsi(
    config: &ScenarioConfig,
    dataset: &TrialDataset,
    method: Method,
    force: bool,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    if method.runs_mc() && config.exceeds_budget() && !force {
        return Err(Error::invalid(format!(
            "nested run costs k * j = {} draws, above the configured budget of {}; \
             pass --force to run anyway or lower k/j",
            config.nested_cost(),
            config.mc_budget
        )));
    }
    let doc = run_scenario(config, dataset, method)?;
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let results_path = out_dir.join("results.json");
    write_json(&results_path, &doc)?;
    written.push(results_path);
    let grid_path = out_dir.join("evsi_curve.csv");
    write_evsi_csv(&grid_path, &doc.evsi)?;
    written.push(grid_path);
    if let Some(enbs) = &doc.enbs {
        let curve_path = out_dir.join("enbs_curve.csv");
        write_curve_csv(&curve_path, &enbs.curve)?;
        written.push(curve_path);
    }
    Ok(written)
}

/// Crossings summary written by the enbs command.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct CrossingsDoc {
    /// Document format version.
    pub schema_version: u32,
    /// Seed echoed from the results document.
    pub seed: u64,
    /// Stopping month of the accrual-continues rule, in months of
    /// additional follow-up; null when the rule never fires in range.
    pub crossing_awr: Option<f64>,
    /// Stopping month of the rollout-delayed rule.
    pub crossing_oir: Option<f64>,
}

/// Rebuild stopping curves from a results document, optionally under
/// different cost inputs than the original run.
pub fn cmd_enbs(
    results: &ResultsDoc,
    inputs_override: Option<&EnbsInputs>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let inputs = match inputs_override.or(results.config.enbs.as_ref()) {
        Some(inputs) => inputs,
        None => {
            return Err(Error::invalid(
                "no cost inputs: the results document has no enbs block and none were given",
            ))
        }
    };
    let pairs = value_grid(&results.evsi)?;
    let block = build_enbs(results.config.t1, &pairs, inputs)?;
    std::fs::create_dir_all(out_dir)?;
    let curve_path = out_dir.join("enbs_curve.csv");
    write_curve_csv(&curve_path, &block.curve)?;
    let crossings_path = out_dir.join("crossings.json");
    write_json(
        &crossings_path,
        &CrossingsDoc {
            schema_version: SCHEMA_VERSION,
            seed: results.seed,
            crossing_awr: block.crossing_awr,
            crossing_oir: block.crossing_oir,
        },
    )?;
    Ok(vec![curve_path, crossings_path])
}

/// Run fits, weights, perfect information, and the value grid.
///
/// All stochastic stages derive their streams from the scenario seed, and
/// every follow-up end reuses the same outer parameter streams, so the
/// grid shares its Monte Carlo noise across t2 and the document is
/// byte-stable for a fixed scenario.
pub fn run_scenario(
    config: &ScenarioConfig,
    dataset: &TrialDataset,
    method: Method,
) -> Result<ResultsDoc> {
    config.validate()?;
    let fits_new = fit_models(config, &dataset.new)?;
    let fits_standard = fit_models(config, &dataset.standard)?;
    let weights = weights_block(config, &fits_new, &fits_standard)?;
    let arms = [
        ArmSpec::new(&fits_new, &arm_weights(&weights.new))?,
        ArmSpec::new(&fits_standard, &arm_weights(&weights.standard))?,
    ];
    let streams = Streams::new(config.seed);
    let n_at_risk = [
        dataset.new.at_risk(config.t1)?,
        dataset.standard.at_risk(config.t1)?,
    ];

    let started = Instant::now();
    let evpi = evpi_mc(&arms, config.mode, EVPI_DRAWS, config.t_h, &streams)?;
    eprintln!("evpi: {:.1}s", started.elapsed().as_secs_f64());

    let settings = McmcSettings {
        draws: config.j,
        warmup: config.warmup,
        chains: config.chains,
        seed: 0,
    };
    let mut points = Vec::with_capacity(config.t2_grid.len());
    let (mut mc_seconds, mut gam_seconds) = (0.0, 0.0);
    for &t2 in &config.t2_grid {
        let outer = generate_outer_sample(
            &arms,
            n_at_risk,
            config.t1,
            t2,
            config.t_h,
            config.k,
            config.mode,
            &streams,
        )?;
        let mut point = EvsiPoint {
            t2,
            mc: None,
            mc_diagnostics: None,
            gam: None,
        };
        if method.runs_gam() {
            let started = Instant::now();
            let evsi = evsi_regression(&outer, &streams)?;
            gam_seconds += started.elapsed().as_secs_f64();
            point.gam = Some(evsi.result);
        }
        if method.runs_mc() {
            let started = Instant::now();
            let evsi = evsi_nested_mc(&outer, &arms, &settings, &streams)?;
            mc_seconds += started.elapsed().as_secs_f64();
            point.mc = Some(evsi.result);
            point.mc_diagnostics = Some(evsi.diagnostics);
        }
        points.push(point);
    }
    if method.runs_gam() {
        eprintln!("evsi[gam]: {gam_seconds:.1}s");
    }
    if method.runs_mc() {
        eprintln!("evsi[mc]: {mc_seconds:.1}s");
    }

    let enbs = match &config.enbs {
        Some(inputs) => {
            let pairs = value_grid(&points)?;
            Some(build_enbs(config.t1, &pairs, inputs)?)
        }
        None => None,
    };
    Ok(ResultsDoc {
        schema_version: SCHEMA_VERSION,
        seed: config.seed,
        config: config.clone(),
        fits_new: fit_entries(config, &fits_new)?,
        fits_standard: fit_entries(config, &fits_standard)?,
        weights,
        evpi,
        evsi: points,
        enbs,
    })
}

/// Fit all configured families to one arm, failing on the first error.
fn fit_models(config: &ScenarioConfig, arm: &TrialArm) -> Result<Vec<FittedModel>> {
    config
        .families
        .iter()
        .map(|&family| fit_mle(family, arm))
        .collect()
}

/// Fit each configured family, capturing failures per family.
fn fit_outcomes(config: &ScenarioConfig, arm: &TrialArm) -> Vec<FitOutcome> {
    config
        .families
        .iter()
        .map(|&family| {
            let attempt = fit_mle(family, arm).and_then(|model| {
                let rmst = model.family.restricted_mean_survival(model.theta_hat, config.t_h)?;
                Ok(FitEntry { model, rmst })
            });
            match attempt {
                Ok(fit) => FitOutcome {
                    family,
                    fit: Some(fit),
                    error: None,
                },
                Err(e) => FitOutcome {
                    family,
                    fit: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

/// Successful entries, or None when any family failed.
fn complete_fits(outcomes: &[FitOutcome]) -> Option<Vec<FitEntry>> {
    outcomes.iter().map(|o| o.fit.clone()).collect()
}

/// Akaike weights and weighted net benefits over both arms' fits.
fn weights_block(
    config: &ScenarioConfig,
    new: &[FittedModel],
    standard: &[FittedModel],
) -> Result<WeightsBlock> {
    weights_block_from_entries(&fit_entries(config, new)?, &fit_entries(config, standard)?)
}

fn weights_block_from_entries(
    new: &[FitEntry],
    standard: &[FitEntry],
) -> Result<WeightsBlock> {
    let weights_new = akaike_weights(&new.iter().map(|f| f.model.aic).collect::<Vec<_>>())?;
    let weights_standard =
        akaike_weights(&standard.iter().map(|f| f.model.aic).collect::<Vec<_>>())?;
    let nb_new: f64 = new
        .iter()
        .zip(&weights_new.weights)
        .map(|(f, w)| f.rmst * w)
        .sum();
    let nb_standard: f64 = standard
        .iter()
        .zip(&weights_standard.weights)
        .map(|(f, w)| f.rmst * w)
        .sum();
    Ok(WeightsBlock {
        new: weights_new.weights,
        standard: weights_standard.weights,
        averaged_nb_new: nb_new,
        averaged_nb_standard: nb_standard,
        incremental_nb: nb_new - nb_standard,
    })
}

fn arm_weights(weights: &[f64]) -> ModelWeights {
    ModelWeights {
        weights: weights.to_vec(),
    }
}

/// Fit entries with net benefits at the scenario horizon.
fn fit_entries(config: &ScenarioConfig, fits: &[FittedModel]) -> Result<Vec<FitEntry>> {
    fits.iter()
        .map(|model| {
            let rmst = model
                .family
                .restricted_mean_survival(model.theta_hat, config.t_h)?;
            Ok(FitEntry {
                model: model.clone(),
                rmst,
            })
        })
        .collect()
}

/// Pick one value estimate per grid point, preferring the regression
/// column when it is complete, else the nested column.
fn value_grid(points: &[EvsiPoint]) -> Result<Vec<(f64, VoiResult)>> {
    if points.iter().all(|p| p.gam.is_some()) {
        return Ok(points
            .iter()
            .map(|p| (p.t2, p.gam.expect("checked above")))
            .collect());
    }
    if points.iter().all(|p| p.mc.is_some()) {
        return Ok(points
            .iter()
            .map(|p| (p.t2, p.mc.expect("checked above")))
            .collect());
    }
    Err(Error::invalid(
        "stopping curves need one method's estimate at every grid point",
    ))
}

/// Stopping curves plus monthly rows on the absolute month scale.
fn build_enbs(t1: f64, pairs: &[(f64, VoiResult)], inputs: &EnbsInputs) -> Result<EnbsBlock> {
    let curves = enbs_curves(t1, pairs, inputs)?;
    let curve: Vec<CurveRow> = monthly_rows(&curves, t1);
    Ok(EnbsBlock {
        crossing_awr: curves.crossing_awr,
        crossing_oir: curves.crossing_oir,
        curve,
    })
}
