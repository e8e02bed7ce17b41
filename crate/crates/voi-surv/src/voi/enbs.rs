//! Per-month benefit and cost curves for follow-up stopping rules.
//!
//! A value curve over candidate extension lengths is interpolated by a
//! monotone cubic through the origin, and its derivative is scaled to
//! the population served per month to give the marginal benefit of one
//! more month of follow-up. Two flat marginal costs face it: running
//! costs alone when patients keep enrolling under randomization, and
//! running costs plus the forgone benefit of randomizing away from the
//! currently preferred arm when only the trial delays a rollout. The
//! first month where benefit no longer exceeds cost is the stopping
//! point under each rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{EnbsInputs, VoiResult};

/// Spacing in months of the reported curve points.
pub const ENBS_GRID_STEP: f64 = 0.1;

/// Bisection width at which a crossing is considered located.
const CROSSING_TOL: f64 = 1e-9;

/// One reported point of the benefit and cost curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnbsPoint {
    /// Months of follow-up beyond the current end.
    pub additional_followup: f64,
    /// Value of one more month of follow-up to the served population.
    pub marginal_benefit: f64,
    /// Marginal cost while accrual continues under randomization.
    pub cost_awr: f64,
    /// Marginal cost while the rollout waits on the trial alone.
    pub cost_oir: f64,
}

/// Benefit and cost curves with the stopping month under each rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnbsCurves {
    /// Curve points every [`ENBS_GRID_STEP`] months of extra follow-up.
    pub points: Vec<EnbsPoint>,
    /// First month where benefit stops exceeding the accrual-continues
    /// cost; absent when benefit stays above it over the whole range.
    pub crossing_awr: Option<f64>,
    /// Stopping month against the rollout-delayed cost.
    pub crossing_oir: Option<f64>,
}

/// Build the marginal benefit and cost curves from a value curve.
///
/// `evsi_by_t2` pairs each candidate follow-up end with its value
/// estimate, in strictly increasing order of `t2` starting above `t1`.
/// The interpolant is anchored at zero value for zero extension, so the
/// curves live on months of additional follow-up.
pub fn enbs_curves(
    t1: f64,
    evsi_by_t2: &[(f64, VoiResult)],
    inputs: &EnbsInputs,
) -> Result<EnbsCurves> {
    inputs.validate()?;
    if !t1.is_finite() || t1 < 0.0 {
        return Err(Error::invalid(format!(
            "current follow-up end must be finite and nonnegative, got {t1}"
        )));
    }
    if evsi_by_t2.len() < 2 {
        return Err(Error::invalid(format!(
            "stopping curves need at least 2 value points, got {}",
            evsi_by_t2.len()
        )));
    }
    let mut tau = vec![0.0];
    let mut value = vec![0.0];
    for (i, (t2, result)) in evsi_by_t2.iter().enumerate() {
        if !result.estimate.is_finite() {
            return Err(Error::invalid(format!(
                "value estimate at t2 = {t2} is not finite"
            )));
        }
        let extension = t2 - t1;
        if extension <= *tau.last().expect("seeded with the origin") {
            return Err(Error::invalid(format!(
                "follow-up ends must be strictly increasing and above t1 = {t1}, \
                 but point {i} has t2 = {t2}"
            )));
        }
        tau.push(extension);
        value.push(result.estimate);
    }
    let curve = MonotoneCubic::fit(&tau, &value)?;
    let scale = inputs.accrual_rate * inputs.horizon;
    let cost_awr = inputs.trial_cost_rate;
    let cost_oir = inputs.trial_cost_rate + inputs.accrual_rate * inputs.incremental_nb;
    let tau_max = *tau.last().expect("nonempty");
    let grid = month_grid(tau_max);
    let points = grid
        .iter()
        .map(|&t| EnbsPoint {
            additional_followup: t,
            marginal_benefit: scale * curve.derivative(t),
            cost_awr,
            cost_oir,
        })
        .collect();
    Ok(EnbsCurves {
        points,
        crossing_awr: first_crossing(&curve, scale, cost_awr, &grid),
        crossing_oir: first_crossing(&curve, scale, cost_oir, &grid),
    })
}

/// Grid from zero to `tau_max` inclusive in [`ENBS_GRID_STEP`] steps.
fn month_grid(tau_max: f64) -> Vec<f64> {
    let steps = (tau_max / ENBS_GRID_STEP).floor() as usize;
    let mut grid: Vec<f64> = (0..=steps).map(|j| j as f64 * ENBS_GRID_STEP).collect();
    if *grid.last().expect("at least the origin") < tau_max {
        grid.push(tau_max);
    }
    grid
}

/// First month where the scaled derivative stops exceeding `cost`.
///
/// A benefit already at or below cost at zero extension stops the trial
/// immediately; otherwise the crossing is bisected inside the first grid
/// interval with a sign change, and absence over the range means the
/// rule never fires.
fn first_crossing(curve: &MonotoneCubic, scale: f64, cost: f64, grid: &[f64]) -> Option<f64> {
    let excess = |t: f64| scale * curve.derivative(t) - cost;
    if excess(grid[0]) <= 0.0 {
        return Some(grid[0]);
    }
    for pair in grid.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if excess(b) > 0.0 {
            continue;
        }
        let (mut lo, mut hi) = (a, b);
        while hi - lo > CROSSING_TOL {
            let mid = 0.5 * (lo + hi);
            if excess(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return Some(0.5 * (lo + hi));
    }
    None
}

/// Shape-preserving cubic interpolant with continuous derivative.
#[derive(Debug, Clone)]
struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    slope: Vec<f64>,
}

impl MonotoneCubic {
    /// Fit knot slopes that preserve monotone runs of the data, using
    /// harmonic-mean interior slopes and clamped three-point endpoint
    /// slopes.
    fn fit(x: &[f64], y: &[f64]) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::invalid(
                "monotone cubic needs matching x and y with at least 2 points",
            ));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        if h.iter().any(|&dx| !(dx > 0.0)) {
            return Err(Error::invalid("interpolation knots must strictly increase"));
        }
        let delta: Vec<f64> = h
            .iter()
            .enumerate()
            .map(|(i, &dx)| (y[i + 1] - y[i]) / dx)
            .collect();
        let mut slope = vec![0.0; n];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                slope[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        slope[0] = endpoint_slope(h[0], h.get(1).copied(), delta[0], delta.get(1).copied());
        slope[n - 1] = endpoint_slope(
            h[n - 2],
            (n >= 3).then(|| h[n - 3]),
            delta[n - 2],
            (n >= 3).then(|| delta[n - 3]),
        );
        Ok(MonotoneCubic {
            x: x.to_vec(),
            y: y.to_vec(),
            slope,
        })
    }

    /// Index of the interval containing `t`, clamping outside the range.
    fn interval(&self, t: f64) -> usize {
        let n = self.x.len();
        self.x[1..n - 1].partition_point(|&knot| knot <= t)
    }

    /// Interpolated value at `t`.
    #[cfg(test)]
    fn value(&self, t: f64) -> f64 {
        let i = self.interval(t);
        let hi = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / hi;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * self.y[i]
            + h10 * hi * self.slope[i]
            + h01 * self.y[i + 1]
            + h11 * hi * self.slope[i + 1]
    }

    /// Derivative of the interpolant at `t`.
    fn derivative(&self, t: f64) -> f64 {
        let i = self.interval(t);
        let hi = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / hi;
        (6.0 * s * s - 6.0 * s) * (self.y[i] - self.y[i + 1]) / hi
            + (3.0 * s * s - 4.0 * s + 1.0) * self.slope[i]
            + (3.0 * s * s - 2.0 * s) * self.slope[i + 1]
    }
}

/// Three-point endpoint slope, clamped so the boundary segment keeps the
/// shape of the data; falls back to the secant with only two points.
fn endpoint_slope(h0: f64, h1: Option<f64>, d0: f64, d1: Option<f64>) -> f64 {
    let (Some(h1), Some(d1)) = (h1, d1) else {
        return d0;
    };
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voi::VoiMethod;

    fn value_at(estimate: f64) -> VoiResult {
        VoiResult {
            estimate,
            se: 0.1,
            method: VoiMethod::Regression,
            k: 1000,
            j: None,
        }
    }

    fn saturating_curve() -> Vec<(f64, VoiResult)> {
        // 10 (1 - exp(-tau / 15)) sampled on a coarse grid past t1 = 12.
        [6.0, 12.0, 24.0, 36.0, 48.0]
            .iter()
            .map(|&tau: &f64| {
                (12.0 + tau, value_at(10.0 * (1.0 - (-tau / 15.0).exp())))
            })
            .collect()
    }

    fn typical_inputs() -> EnbsInputs {
        EnbsInputs {
            trial_cost_rate: 5.0,
            accrual_rate: 5.0,
            horizon: 120.0,
            incremental_nb: 8.0,
        }
    }

    #[test]
    fn interpolant_passes_through_its_knots_monotonically() {
        let x = [0.0, 6.0, 18.0, 30.0, 48.0];
        let y = [0.0, 2.0, 4.5, 5.5, 6.0];
        let curve = MonotoneCubic::fit(&x, &y).unwrap();
        for (&xi, &yi) in x.iter().zip(&y) {
            assert!((curve.value(xi) - yi).abs() < 1e-12);
        }
        let mut prev = curve.value(0.0);
        for j in 1..=480 {
            let t = j as f64 * 0.1;
            let now = curve.value(t);
            assert!(now >= prev - 1e-9, "dip at {t}: {now} < {prev}");
            assert!(curve.derivative(t) >= -1e-9);
            prev = now;
        }
    }

    #[test]
    fn crossing_matches_the_analytic_stopping_month() {
        let curves = enbs_curves(12.0, &saturating_curve(), &typical_inputs()).unwrap();
        // Marginal benefit is 600 * (10/15) exp(-tau/15) = 400 exp(-tau/15).
        // Against cost 45 the crossing sits at 15 ln(400/45) = 32.75; the
        // coarse knots bend the interpolant slightly.
        let oir = curves.crossing_oir.expect("benefit falls below 45");
        assert!((oir - 32.75).abs() < 1.5, "got {oir}");
        // Against cost 5 the crossing at 15 ln 80 = 65.7 lies out of range.
        assert!(curves.crossing_awr.is_none());
        let first = &curves.points[0];
        assert_eq!(first.additional_followup, 0.0);
        assert!((first.marginal_benefit - 400.0).abs() < 60.0);
        assert_eq!(first.cost_awr, 5.0);
        assert_eq!(first.cost_oir, 45.0);
        let last = curves.points.last().unwrap();
        assert!((last.additional_followup - 48.0).abs() < 1e-12);
    }

    #[test]
    fn flat_value_curve_stops_immediately() {
        let flat: Vec<(f64, VoiResult)> =
            [24.0, 36.0, 48.0].iter().map(|&t2| (t2, value_at(0.0))).collect();
        let curves = enbs_curves(12.0, &flat, &typical_inputs()).unwrap();
        assert_eq!(curves.crossing_awr, Some(0.0));
        assert_eq!(curves.crossing_oir, Some(0.0));
        assert!(curves.points.iter().all(|p| p.marginal_benefit == 0.0));
    }

    #[test]
    fn free_trial_with_growing_value_never_stops() {
        let inputs = EnbsInputs {
            trial_cost_rate: 0.0,
            accrual_rate: 5.0,
            horizon: 120.0,
            incremental_nb: 0.0,
        };
        let curves = enbs_curves(12.0, &saturating_curve(), &inputs).unwrap();
        assert_eq!(curves.crossing_awr, None);
        assert_eq!(curves.crossing_oir, None);
    }

    #[test]
    fn noise_dips_flatten_instead_of_overshooting() {
        let noisy: Vec<(f64, VoiResult)> = [
            (18.0, 3.0),
            (24.0, 2.8),
            (36.0, 4.0),
            (48.0, 4.1),
        ]
        .iter()
        .map(|&(t2, v)| (t2, value_at(v)))
        .collect();
        let curves = enbs_curves(12.0, &noisy, &typical_inputs()).unwrap();
        assert!(curves
            .points
            .iter()
            .all(|p| p.marginal_benefit.is_finite()));
        // The dip between 6 and 12 months forces a zero-slope knot, so
        // the OIR rule fires inside that window.
        let oir = curves.crossing_oir.expect("zero-slope region crosses");
        assert!(oir > 0.0 && oir < 12.0, "got {oir}");
    }

    #[test]
    fn rejects_bad_grids_and_inputs() {
        let inputs = typical_inputs();
        let one_point = vec![(24.0, value_at(3.0))];
        assert!(enbs_curves(12.0, &one_point, &inputs).is_err());
        let unsorted = vec![(36.0, value_at(3.0)), (24.0, value_at(2.0))];
        assert!(enbs_curves(12.0, &unsorted, &inputs).is_err());
        let below_t1 = vec![(10.0, value_at(1.0)), (24.0, value_at(2.0))];
        assert!(enbs_curves(12.0, &below_t1, &inputs).is_err());
        let bad_inputs = EnbsInputs {
            trial_cost_rate: f64::NAN,
            ..inputs
        };
        assert!(enbs_curves(12.0, &saturating_curve(), &bad_inputs).is_err());
    }
}
