//! Serializable result documents and plot-ready tables.
//!
//! One results document captures a full run: the scenario that produced
//! it, the fitted models, the model weights, and every value estimate.
//! Documents round-trip through JSON so downstream commands and
//! reproduction scripts can consume them without recomputation.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use voi_surv::config::ScenarioConfig;
use voi_surv::dist::SurvivalFamily;
use voi_surv::error::{Error, Result};
use voi_surv::fit::FittedModel;
use voi_surv::voi::enbs::EnbsCurves;
use voi_surv::voi::nested::NestedDiagnostics;
use voi_surv::voi::VoiResult;

/// Version stamp written into every JSON document.
pub const SCHEMA_VERSION: u32 = 1;

/// One fitted model with its net benefit at the scenario horizon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitEntry {
    /// The maximum-likelihood fit.
    #[serde(flatten)]
    pub model: FittedModel,
    /// Restricted mean survival at the scenario horizon.
    pub rmst: f64,
}

/// Fit result or failure for one family, so one bad family cannot sink
/// the rest of a report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitOutcome {
    /// Family the fit was attempted for.
    pub family: SurvivalFamily,
    /// The successful fit, absent on failure.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitEntry>,
    /// The failure message, absent on success.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Model weights and weighted net benefits for both arms.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightsBlock {
    /// Akaike weights per family, new arm, in family order.
    pub new: Vec<f64>,
    /// Akaike weights per family, standard arm.
    pub standard: Vec<f64>,
    /// Weight-averaged net benefit of the new arm.
    pub averaged_nb_new: f64,
    /// Weight-averaged net benefit of the standard arm.
    pub averaged_nb_standard: f64,
    /// Difference of the two averaged net benefits.
    pub incremental_nb: f64,
}

/// Standalone fit report, the output of the fit command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    /// Document format version.
    pub schema_version: u32,
    /// Seed echoed from the scenario.
    pub seed: u64,
    /// Net-benefit horizon the entries' RMST values use.
    pub t_h: f64,
    /// Per-family outcomes for the new arm, in configured order.
    pub new: Vec<FitOutcome>,
    /// Per-family outcomes for the standard arm.
    pub standard: Vec<FitOutcome>,
    /// Weights over the families that fitted in both arms; absent when
    /// any configured family failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightsBlock>,
}

/// Value estimates for one candidate follow-up end.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvsiPoint {
    /// Follow-up end this row extends to.
    pub t2: f64,
    /// Nested Monte Carlo estimate, when that method ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<VoiResult>,
    /// Inner sampler bookkeeping behind the nested estimate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_diagnostics: Option<NestedDiagnostics>,
    /// Regression estimate, when that method ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gam: Option<VoiResult>,
}

/// One row of the stopping-rule curve on the absolute month scale.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CurveRow {
    /// Absolute trial month.
    pub month: f64,
    /// Marginal benefit of extending follow-up through this month.
    pub mb: f64,
    /// Marginal cost while accrual continues under randomization.
    pub mc_awr: f64,
    /// Marginal cost while the rollout waits on the trial.
    pub mc_oir: f64,
}

/// Stopping curves and crossings, reported alongside the value grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnbsBlock {
    /// Months of additional follow-up where the accrual-continues rule
    /// fires; null when the benefit never falls to that cost.
    pub crossing_awr: Option<f64>,
    /// Months of additional follow-up where the rollout-delayed rule
    /// fires; null when absent.
    pub crossing_oir: Option<f64>,
    /// Monthly curve rows from one month past current follow-up to the
    /// largest configured follow-up end.
    pub curve: Vec<CurveRow>,
}

/// Full results document, the output of the evsi command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultsDoc {
    /// Document format version.
    pub schema_version: u32,
    /// Seed the run used after any command-line override.
    pub seed: u64,
    /// The scenario that produced this document.
    pub config: ScenarioConfig,
    /// Fitted models with net benefits, new arm, in family order.
    pub fits_new: Vec<FitEntry>,
    /// Fitted models with net benefits, standard arm.
    pub fits_standard: Vec<FitEntry>,
    /// Model weights and weighted net benefits.
    pub weights: WeightsBlock,
    /// Perfect-information value under the scenario mode.
    pub evpi: VoiResult,
    /// Sample-information value per candidate follow-up end.
    pub evsi: Vec<EvsiPoint>,
    /// Stopping curves, present when the scenario has cost inputs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enbs: Option<EnbsBlock>,
}

impl ResultsDoc {
    /// Read a results document from a JSON file.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::data(format!("results {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::data(format!("results {}: {e}", path.display())))
    }
}

/// Convert stopping curves from extension months to absolute months,
/// keeping one row per whole month from t1+1 to the grid end.
pub fn monthly_rows(curves: &EnbsCurves, t1: f64) -> Vec<CurveRow> {
    let last = match curves.points.last() {
        Some(p) => p.additional_followup,
        None => return Vec::new(),
    };
    let mut rows = Vec::new();
    let mut extension = 1.0;
    while extension <= last + 1e-9 {
        let idx = (extension / voi_surv::voi::enbs::ENBS_GRID_STEP).round() as usize;
        let point = &curves.points[idx.min(curves.points.len() - 1)];
        rows.push(CurveRow {
            month: t1 + extension,
            mb: point.marginal_benefit,
            mc_awr: point.cost_awr,
            mc_oir: point.cost_oir,
        });
        extension += 1.0;
    }
    rows
}

/// Write a JSON document with a trailing newline.
pub fn write_json<T: Serialize>(path: impl AsRef<Path>, doc: &T) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(doc)
        .map_err(|e| Error::numeric(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text).map_err(Error::from)
}

/// Write the value grid as CSV: one row per follow-up end and method.
pub fn write_evsi_csv(path: impl AsRef<Path>, points: &[EvsiPoint]) -> Result<()> {
    let mut file = std::fs::File::create(path.as_ref())?;
    writeln!(file, "t2,method,estimate,se,k,j")?;
    for point in points {
        for (name, result) in [("mc", &point.mc), ("gam", &point.gam)] {
            if let Some(r) = result {
                let j = r.j.map(|j| j.to_string()).unwrap_or_default();
                writeln!(
                    file,
                    "{},{name},{},{},{},{j}",
                    point.t2, r.estimate, r.se, r.k
                )?;
            }
        }
    }
    Ok(())
}

/// Write the stopping-rule curve as CSV with one row per month.
pub fn write_curve_csv(path: impl AsRef<Path>, rows: &[CurveRow]) -> Result<()> {
    let mut file = std::fs::File::create(path.as_ref())?;
    writeln!(file, "month,mb,mc_awr,mc_oir")?;
    for row in rows {
        writeln!(file, "{},{},{},{}", row.month, row.mb, row.mc_awr, row.mc_oir)?;
    }
    Ok(())
}
