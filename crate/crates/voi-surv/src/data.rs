//! Dataset model for a two-arm survival trial.
//!
//! A `TrialArm` holds right-censored observations up to an administrative
//! follow-up end. `OngoingArmData` holds the extra observations accrued by
//! participants still at risk when follow-up is extended from t1 to t2.
//! `SummaryStat` condenses that window into events and person-time, the
//! sufficient inputs for the regression-based value-of-information methods.

use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Identifies the two trial arms. Serialized as 1 (new treatment) and
/// 2 (standard care) in dataset files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArmId {
    New,
    Standard,
}

impl ArmId {
    /// Both arms in reporting order.
    pub const BOTH: [ArmId; 2] = [ArmId::New, ArmId::Standard];

    /// Numeric code used in the CSV dataset format.
    pub fn code(&self) -> u8 {
        match self {
            ArmId::New => 1,
            ArmId::Standard => 2,
        }
    }

    /// Parse the CSV numeric code.
    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            1 => Ok(ArmId::New),
            2 => Ok(ArmId::Standard),
            other => Err(Error::data(format!(
                "arm code must be 1 (new) or 2 (standard), got {other}"
            ))),
        }
    }

    /// Stable lowercase label, matching the serialized form.
    pub fn name(&self) -> &'static str {
        match self {
            ArmId::New => "new",
            ArmId::Standard => "standard",
        }
    }
}

impl std::fmt::Display for ArmId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One arm of right-censored survival data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialArm {
    times: Vec<f64>,
    status: Vec<bool>,
    followup_end: f64,
}

impl TrialArm {
    /// Build an arm, validating the data invariants: equal-length vectors,
    /// every time in (0, followup_end].
    pub fn new(times: Vec<f64>, status: Vec<bool>, followup_end: f64) -> Result<Self> {
        if times.len() != status.len() {
            return Err(Error::data(format!(
                "times ({}) and status ({}) lengths differ",
                times.len(),
                status.len()
            )));
        }
        if !(followup_end > 0.0 && followup_end.is_finite()) {
            return Err(Error::data(format!(
                "follow-up end must be positive and finite, got {followup_end}"
            )));
        }
        for (i, &t) in times.iter().enumerate() {
            if !(t > 0.0) || t > followup_end {
                return Err(Error::data(format!(
                    "time {t} at row {i} is outside (0, {followup_end}]"
                )));
            }
        }
        Ok(TrialArm {
            times,
            status,
            followup_end,
        })
    }

    /// Observation times in months.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Event flags aligned with `times` (true = observed event).
    pub fn status(&self) -> &[bool] {
        &self.status
    }

    /// Administrative end of follow-up for this arm.
    pub fn followup_end(&self) -> f64 {
        self.followup_end
    }

    /// Number of participants.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    /// True when the arm has no participants.
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Number of observed events.
    pub fn events(&self) -> usize {
        self.status.iter().filter(|&&e| e).count()
    }

    /// Participants alive and under observation at `t1`: observation time
    /// beyond t1, or censored exactly at t1.
    pub fn at_risk(&self, t1: f64) -> Result<usize> {
        if t1 > self.followup_end {
            return Err(Error::invalid(format!(
                "at-risk time {t1} exceeds follow-up end {}",
                self.followup_end
            )));
        }
        Ok(self
            .times
            .iter()
            .zip(&self.status)
            .filter(|&(&t, &event)| t > t1 || (t == t1 && !event))
            .count())
    }

    /// Kaplan-Meier product-limit estimate as (time, survival) step points,
    /// beginning at (0, 1). Ties between events and censorings at the same
    /// time keep the censored subjects in the risk set for that time.
    pub fn kaplan_meier(&self) -> Result<Vec<(f64, f64)>> {
        if self.is_empty() {
            return Err(Error::data("Kaplan-Meier estimate needs a non-empty arm"));
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&i, &j| self.times[i].total_cmp(&self.times[j]));

        let mut curve = vec![(0.0, 1.0)];
        let mut survival = 1.0;
        let mut at_risk = self.len();
        let mut idx = 0;
        while idx < order.len() {
            let t = self.times[order[idx]];
            let mut events = 0usize;
            let mut removed = 0usize;
            while idx < order.len() && self.times[order[idx]] == t {
                if self.status[order[idx]] {
                    events += 1;
                }
                removed += 1;
                idx += 1;
            }
            if events > 0 {
                survival *= 1.0 - events as f64 / at_risk as f64;
                curve.push((t, survival));
            }
            at_risk -= removed;
        }
        Ok(curve)
    }
}

/// Additional follow-up observations for one arm: participants at risk at
/// t1, followed until event, loss, or administrative censoring at t2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OngoingArmData {
    times: Vec<f64>,
    status: Vec<bool>,
    t1: f64,
    t2: f64,
}

impl OngoingArmData {
    /// Build extended-window data, validating that every time lies in
    /// [t1, t2] and that times at t2 are censored.
    pub fn new(times: Vec<f64>, status: Vec<bool>, t1: f64, t2: f64) -> Result<Self> {
        if times.len() != status.len() {
            return Err(Error::data(format!(
                "times ({}) and status ({}) lengths differ",
                times.len(),
                status.len()
            )));
        }
        if !(t1 >= 0.0 && t2 >= t1 && t2.is_finite()) {
            return Err(Error::data(format!(
                "follow-up window must satisfy 0 <= t1 <= t2, got [{t1}, {t2}]"
            )));
        }
        for (i, (&t, &event)) in times.iter().zip(&status).enumerate() {
            if t < t1 || t > t2 {
                return Err(Error::data(format!(
                    "time {t} at row {i} is outside [{t1}, {t2}]"
                )));
            }
            if t == t2 && event && t2 > t1 {
                return Err(Error::data(format!(
                    "row {i} marks an event at the administrative censoring time {t2}"
                )));
            }
        }
        Ok(OngoingArmData {
            times,
            status,
            t1,
            t2,
        })
    }

    /// Observation times in months, all within [t1, t2].
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Event flags aligned with `times`.
    pub fn status(&self) -> &[bool] {
        &self.status
    }

    /// Start of the extension window.
    pub fn t1(&self) -> f64 {
        self.t1
    }

    /// End of the extension window.
    pub fn t2(&self) -> f64 {
        self.t2
    }

    /// Number of participants in the window.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    /// True when no participants entered the window.
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Events and additional person-time accrued in the window:
    /// e = sum of event flags, y = sum of (time - t1).
    pub fn summary_stat(&self) -> SummaryStat {
        let events = self.status.iter().filter(|&&e| e).count();
        let time_at_risk = self.times.iter().map(|&t| t - self.t1).sum();
        SummaryStat {
            events,
            time_at_risk,
        }
    }
}

/// Sufficient summary of one arm's extension window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStat {
    /// Number of events observed in (t1, t2].
    pub events: usize,
    /// Total person-months at risk after t1.
    pub time_at_risk: f64,
}

/// A complete two-arm dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialDataset {
    /// New-treatment arm (CSV arm code 1).
    pub new: TrialArm,
    /// Standard-care arm (CSV arm code 2).
    pub standard: TrialArm,
}

/// One row of the CSV dataset format.
#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    id: u64,
    arm: u8,
    time: f64,
    status: u8,
}

impl TrialDataset {
    /// Bundle the two arms.
    pub fn new(new: TrialArm, standard: TrialArm) -> Self {
        TrialDataset { new, standard }
    }

    /// Access one arm by identifier.
    pub fn arm(&self, id: ArmId) -> &TrialArm {
        match id {
            ArmId::New => &self.new,
            ArmId::Standard => &self.standard,
        }
    }

    /// Read the `id,arm,time,status` CSV format.
    ///
    /// The follow-up end of each arm is taken as the maximum observed time
    /// in that arm; administratively censored rows sit exactly there.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut csv_reader = csv::Reader::from_reader(reader);
        let mut times: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        let mut status: [Vec<bool>; 2] = [Vec::new(), Vec::new()];
        for (line, row) in csv_reader.deserialize::<CsvRow>().enumerate() {
            let row = row?;
            let arm = ArmId::from_code(row.arm)?;
            let event = match row.status {
                0 => false,
                1 => true,
                other => {
                    return Err(Error::data(format!(
                        "status must be 0 or 1, got {other} on data row {}",
                        line + 1
                    )));
                }
            };
            let slot = (arm.code() - 1) as usize;
            times[slot].push(row.time);
            status[slot].push(event);
        }
        let [times_new, times_std] = times;
        let [status_new, status_std] = status;
        if times_new.is_empty() || times_std.is_empty() {
            return Err(Error::data("dataset must contain both arms"));
        }
        let end_new = times_new.iter().cloned().fold(f64::MIN, f64::max);
        let end_std = times_std.iter().cloned().fold(f64::MIN, f64::max);
        Ok(TrialDataset::new(
            TrialArm::new(times_new, status_new, end_new)?,
            TrialArm::new(times_std, status_std, end_std)?,
        ))
    }

    /// Write the `id,arm,time,status` CSV format, times to six decimals,
    /// ids sequential from 1 across the new arm then the standard arm.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut csv_writer = csv::Writer::from_writer(writer);
        csv_writer.write_record(["id", "arm", "time", "status"])?;
        let mut id = 0u64;
        for arm_id in ArmId::BOTH {
            let arm = self.arm(arm_id);
            for (&t, &event) in arm.times().iter().zip(arm.status()) {
                id += 1;
                csv_writer.write_record([
                    id.to_string(),
                    arm_id.code().to_string(),
                    format!("{t:.6}"),
                    u8::from(event).to_string(),
                ])?;
            }
        }
        csv_writer.flush()?;
        Ok(())
    }

    /// Read a dataset from a CSV file path.
    pub fn read_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::read_csv(std::io::BufReader::new(file))
    }

    /// Write a dataset to a CSV file path.
    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path.as_ref())?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// The worked five-participant example arm: one event at 9.3, one loss
    /// to follow-up at 6.7, three administratively censored at 12.
    fn example_arm() -> TrialArm {
        TrialArm::new(
            vec![9.3, 6.7, 12.0, 12.0, 12.0],
            vec![true, false, false, false, false],
            12.0,
        )
        .unwrap()
    }

    /// The matching extension window: an event at 13.4, a loss at 15.9,
    /// administrative censoring at 24.
    fn example_ongoing() -> OngoingArmData {
        OngoingArmData::new(
            vec![13.4, 24.0, 15.9],
            vec![true, false, false],
            12.0,
            24.0,
        )
        .unwrap()
    }

    #[test]
    fn at_risk_counts_censored_at_cutoff() {
        assert_eq!(example_arm().at_risk(12.0).unwrap(), 3);
    }

    #[test]
    fn at_risk_is_zero_when_all_events_precede_cutoff() {
        let arm = TrialArm::new(vec![1.0, 2.0, 5.0], vec![true, true, true], 12.0).unwrap();
        assert_eq!(arm.at_risk(12.0).unwrap(), 0);
    }

    #[test]
    fn at_risk_beyond_followup_is_rejected() {
        assert!(example_arm().at_risk(13.0).is_err());
    }

    #[test]
    fn summary_stat_matches_hand_sum() {
        let stat = example_ongoing().summary_stat();
        assert_eq!(stat.events, 1);
        assert_relative_eq!(stat.time_at_risk, 17.3, max_relative = 1e-12);
    }

    #[test]
    fn summary_stat_of_empty_window_is_zero() {
        let ongoing = OngoingArmData::new(vec![], vec![], 12.0, 24.0).unwrap();
        let stat = ongoing.summary_stat();
        assert_eq!(stat.events, 0);
        assert_eq!(stat.time_at_risk, 0.0);
    }

    #[test]
    fn summary_stat_all_censored_is_full_exposure() {
        let ongoing =
            OngoingArmData::new(vec![24.0; 4], vec![false; 4], 12.0, 24.0).unwrap();
        let stat = ongoing.summary_stat();
        assert_eq!(stat.events, 0);
        assert_relative_eq!(stat.time_at_risk, 4.0 * 12.0, max_relative = 1e-12);
    }

    #[test]
    fn events_plus_survivors_accounts_for_everyone() {
        // With no loss to follow-up, events in the window plus censorings
        // at t2 partition the entrants.
        let ongoing = OngoingArmData::new(
            vec![14.0, 24.0, 18.5, 24.0],
            vec![true, false, true, false],
            12.0,
            24.0,
        )
        .unwrap();
        let at_t2 = ongoing
            .times()
            .iter()
            .filter(|&&t| t == ongoing.t2())
            .count();
        assert_eq!(ongoing.summary_stat().events + at_t2, ongoing.len());
    }

    #[test]
    fn kaplan_meier_matches_hand_product_limit() {
        // Risk set at 9.3 excludes the 6.7-month loss: S = 1 - 1/4.
        let curve = example_arm().kaplan_meier().unwrap();
        assert_eq!(curve[0], (0.0, 1.0));
        assert_eq!(curve.len(), 2);
        assert_relative_eq!(curve[1].1, 0.75, max_relative = 1e-12);
        assert_relative_eq!(curve[1].0, 9.3, max_relative = 1e-12);
    }

    #[test]
    fn kaplan_meier_without_events_is_constant_one() {
        let arm = TrialArm::new(vec![3.0, 12.0], vec![false, false], 12.0).unwrap();
        let curve = arm.kaplan_meier().unwrap();
        assert_eq!(curve, vec![(0.0, 1.0)]);
    }

    #[test]
    fn kaplan_meier_all_events_is_empirical_survivor() {
        let arm = TrialArm::new(
            vec![2.0, 4.0, 6.0, 8.0],
            vec![true, true, true, true],
            12.0,
        )
        .unwrap();
        let curve = arm.kaplan_meier().unwrap();
        let expected = [(0.0, 1.0), (2.0, 0.75), (4.0, 0.5), (6.0, 0.25), (8.0, 0.0)];
        assert_eq!(curve.len(), expected.len());
        for ((t, s), (et, es)) in curve.iter().zip(expected) {
            assert_relative_eq!(*t, et, max_relative = 1e-12);
            assert_relative_eq!(*s, es, epsilon = 1e-12);
        }
    }

    #[test]
    fn arm_validation_rejects_bad_rows() {
        assert!(TrialArm::new(vec![0.0], vec![true], 12.0).is_err());
        assert!(TrialArm::new(vec![12.5], vec![false], 12.0).is_err());
        assert!(TrialArm::new(vec![1.0, 2.0], vec![true], 12.0).is_err());
    }

    #[test]
    fn ongoing_validation_rejects_out_of_window_rows() {
        assert!(OngoingArmData::new(vec![11.9], vec![false], 12.0, 24.0).is_err());
        assert!(OngoingArmData::new(vec![24.1], vec![false], 12.0, 24.0).is_err());
        // An event exactly at the administrative cutoff contradicts censoring.
        assert!(OngoingArmData::new(vec![24.0], vec![true], 12.0, 24.0).is_err());
    }

    #[test]
    fn csv_round_trip_preserves_data_to_six_decimals() {
        let dataset = TrialDataset::new(
            example_arm(),
            TrialArm::new(vec![4.25, 12.0], vec![true, false], 12.0).unwrap(),
        );
        let mut buffer = Vec::new();
        dataset.write_csv(&mut buffer).unwrap();
        let text = String::from_utf8(buffer.clone()).unwrap();
        assert!(text.starts_with("id,arm,time,status\n"));
        assert!(text.contains("1,1,9.300000,1"));
        assert!(text.contains("6,2,4.250000,1"));

        let back = TrialDataset::read_csv(&buffer[..]).unwrap();
        assert_eq!(back, dataset);
    }

    #[test]
    fn csv_rejects_bad_arm_and_status_codes() {
        let bad_arm = "id,arm,time,status\n1,3,5.0,1\n";
        assert!(TrialDataset::read_csv(bad_arm.as_bytes()).is_err());
        let bad_status = "id,arm,time,status\n1,1,5.0,2\n";
        assert!(TrialDataset::read_csv(bad_status.as_bytes()).is_err());
    }
}
