//! Separation and intelligibility metrics, plus batch evaluation.
//!
//! The kernels are [`si_sdr`] and [`stoi`]. [`evaluate_set`] runs a set of
//! mixture records through the listed conditions (raw mixture, fixed-target
//! enhancement on either speaker, gaze-guided enhancement), scores each
//! against the record's reference, and aggregates per-condition means.
//! Infinite SI-SDR values, which identity estimates produce, are excluded
//! from means and counted separately. PESQ is available only through an
//! external command adapter and is disabled by default.

mod resample;
mod si_sdr;
mod stoi;

pub use si_sdr::si_sdr;
pub use stoi::stoi;

use std::fmt;
use std::path::Path;
use std::process::Command;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attention::{debounce, track_attention, AttentionError};
use crate::audio::Waveform;
use crate::dataset::{load_record_audio, DatasetError, MixtureRecord, RecordAudio};
use crate::enhance::{fixed_target_enhance, gaze_gated_enhance, EnhanceError};
use crate::geometry::AttentionConfig;
use crate::stft::StftConfig;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("reference has {reference} samples, estimate {estimate}")]
    LengthMismatch { reference: usize, estimate: usize },
    #[error("reference rate {reference} Hz, estimate rate {estimate} Hz")]
    RateMismatch { reference: u32, estimate: u32 },
    #[error("rate {rate} Hz unsupported, need 16000")]
    UnsupportedRate { rate: u32 },
    #[error("reference is zero after mean removal")]
    ZeroReference,
    #[error("only {frames} analysis frames, need {needed}")]
    TooShort { frames: usize, needed: usize },
    #[error("unknown condition {0:?}")]
    UnknownCondition(String),
    #[error("record has no scene, required by gaze_guided")]
    MissingScene,
    #[error("no records to evaluate")]
    NoRecords,
    #[error("all {} records failed to evaluate", failures.len())]
    AllRecordsFailed { failures: Vec<(String, String)> },
    #[error("pesq adapter: {0}")]
    Pesq(String),
    #[error(transparent)]
    Attention(#[from] AttentionError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Enhance(#[from] EnhanceError),
}

/// Evaluation condition, named as in the report tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Condition {
    #[serde(rename = "mixed")]
    Mixed,
    #[serde(rename = "fixed_A")]
    FixedA,
    #[serde(rename = "fixed_B")]
    FixedB,
    #[serde(rename = "gaze_guided")]
    GazeGuided,
}

impl Condition {
    pub const ALL: [Condition; 4] = [
        Condition::Mixed,
        Condition::FixedA,
        Condition::FixedB,
        Condition::GazeGuided,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Condition::Mixed => "mixed",
            Condition::FixedA => "fixed_A",
            Condition::FixedB => "fixed_B",
            Condition::GazeGuided => "gaze_guided",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mixed" => Ok(Condition::Mixed),
            "fixed_A" => Ok(Condition::FixedA),
            "fixed_B" => Ok(Condition::FixedB),
            "gaze_guided" => Ok(Condition::GazeGuided),
            other => Err(MetricsError::UnknownCondition(other.to_string())),
        }
    }
}

/// Settings of [`evaluate_set`].
#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub conditions: Vec<Condition>,
    pub attention: AttentionConfig,
    /// Frames a new selection must persist before it commits; 1 disables.
    pub debounce_k: usize,
    pub stft: StftConfig,
    /// External PESQ executable, called as `cmd reference.wav estimate.wav`;
    /// the last float token of its stdout is the score.
    pub pesq_command: Option<String>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            conditions: Condition::ALL.to_vec(),
            attention: AttentionConfig::default(),
            debounce_k: 1,
            stft: StftConfig::default(),
            pesq_command: None,
        }
    }
}

/// Scores of one record under one condition.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordScores {
    pub record_id: String,
    pub condition: Condition,
    pub stoi: f64,
    pub si_sdr: f64,
    pub pesq: Option<f64>,
}

/// One aggregate line: a condition/metric pair with its mean over records.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub condition: Condition,
    pub metric: &'static str,
    /// Mean over finite per-record values; NaN when none were finite.
    pub mean: f64,
    pub count: usize,
    pub inf_count: usize,
}

/// Aggregated evaluation output.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
    pub per_record: Vec<RecordScores>,
    /// (record id, error) for records that could not be evaluated.
    pub failures: Vec<(String, String)>,
}

impl MetricReport {
    pub fn mean(&self, condition: Condition, metric: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.condition == condition && r.metric == metric)
            .map(|r| r.mean)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("condition,metric,mean,count,inf_count\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.condition, row.metric, row.mean, row.count, row.inf_count
            ));
        }
        out
    }

    pub fn per_record_csv(&self) -> String {
        let mut out = String::from("record_id,condition,stoi,si_sdr,pesq\n");
        for s in &self.per_record {
            let pesq = s.pesq.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                s.record_id, s.condition, s.stoi, s.si_sdr, pesq
            ));
        }
        out
    }

    /// Aligned text table, one condition per line.
    pub fn to_table(&self) -> String {
        let cell = |condition: Condition, metric: &str| -> String {
            match self
                .rows
                .iter()
                .find(|r| r.condition == condition && r.metric == metric)
            {
                None => "-".to_string(),
                Some(row) if row.count == 0 && row.inf_count > 0 => "+inf".to_string(),
                Some(row) if row.count == 0 => "-".to_string(),
                Some(row) => format!("{:.4}", row.mean),
            }
        };
        let conditions: Vec<Condition> = {
            let mut seen = Vec::new();
            for row in &self.rows {
                if !seen.contains(&row.condition) {
                    seen.push(row.condition);
                }
            }
            seen
        };
        let mut out = format!(
            "{:<12} {:>8} {:>8} {:>12}\n",
            "condition", "PESQ", "STOI", "SI-SDR (dB)"
        );
        for c in conditions {
            out.push_str(&format!(
                "{:<12} {:>8} {:>8} {:>12}\n",
                c.as_str(),
                cell(c, "pesq"),
                cell(c, "stoi"),
                cell(c, "si_sdr"),
            ));
        }
        out
    }
}

fn external_pesq(command: &str, reference: &Path, estimate: &Path) -> Result<f64, MetricsError> {
    let output = Command::new(command)
        .arg(reference)
        .arg(estimate)
        .output()
        .map_err(|e| MetricsError::Pesq(format!("{command}: {e}")))?;
    if !output.status.success() {
        return Err(MetricsError::Pesq(format!(
            "{command} exited with {}",
            output.status
        )));
    }
    let stdout = String::from_utf8_lossy(&output.stdout);
    stdout
        .split_whitespace()
        .rev()
        .find_map(|tok| tok.parse::<f64>().ok())
        .ok_or_else(|| MetricsError::Pesq(format!("{command} printed no numeric score")))
}

/// Renders the condition's estimate for one loaded record.
pub fn condition_estimate(
    audio: &RecordAudio,
    condition: Condition,
    options: &EvalOptions,
) -> Result<Waveform, MetricsError> {
    match condition {
        Condition::Mixed => Ok(audio.mixture.clone()),
        Condition::FixedA => {
            Ok(fixed_target_enhance(&audio.mixture, &audio.sources, 0, &options.stft)?)
        }
        Condition::FixedB => {
            Ok(fixed_target_enhance(&audio.mixture, &audio.sources, 1, &options.stft)?)
        }
        Condition::GazeGuided => {
            let scene = audio.scene.as_ref().ok_or(MetricsError::MissingScene)?;
            let mut attention = options.attention;
            attention.frame_width = f64::from(scene.config.frame_width);
            attention.frame_height = f64::from(scene.config.frame_height);
            let raw = track_attention(scene, &attention)?;
            let selection = debounce(&raw, options.debounce_k);
            Ok(gaze_gated_enhance(
                &audio.mixture,
                &audio.sources,
                &selection,
                &options.stft,
            )?)
        }
    }
}

/// Evaluates one record under every requested condition.
pub fn evaluate_record(
    record: &MixtureRecord,
    base: &Path,
    options: &EvalOptions,
) -> Result<Vec<RecordScores>, MetricsError> {
    let audio = load_record_audio(record, base)?;
    let mut scores = Vec::with_capacity(options.conditions.len());
    for &condition in &options.conditions {
        let estimate = condition_estimate(&audio, condition, options)?;
        let stoi_score = stoi(&audio.reference, &estimate, audio.reference.rate)?;
        let si_sdr_score = si_sdr(&audio.reference, &estimate)?;
        let pesq = match &options.pesq_command {
            None => None,
            Some(cmd) => {
                let dir = tempfile::tempdir().map_err(|e| MetricsError::Pesq(e.to_string()))?;
                let est_path = dir.path().join("estimate.wav");
                crate::wav::write_wav(&est_path, &estimate).map_err(DatasetError::from)?;
                Some(external_pesq(
                    cmd,
                    &base.join(&record.reference_path),
                    &est_path,
                )?)
            }
        };
        scores.push(RecordScores {
            record_id: record.id.clone(),
            condition,
            stoi: stoi_score,
            si_sdr: si_sdr_score,
            pesq,
        });
    }
    Ok(scores)
}

/// Aggregates per-record scores into per-condition mean rows.
fn aggregate(
    mut per_record: Vec<RecordScores>,
    failures: Vec<(String, String)>,
    conditions: &[Condition],
    pesq_enabled: bool,
) -> MetricReport {
    per_record.sort_by(|a, b| {
        a.record_id
            .cmp(&b.record_id)
            .then(a.condition.cmp(&b.condition))
    });
    let mut rows = Vec::new();
    for &condition in conditions {
        let values: Vec<&RecordScores> = per_record
            .iter()
            .filter(|s| s.condition == condition)
            .collect();
        let mut push = |metric: &'static str, pick: &dyn Fn(&RecordScores) -> Option<f64>| {
            let picked: Vec<f64> = values.iter().filter_map(|s| pick(s)).collect();
            let finite: Vec<f64> = picked.iter().copied().filter(|v| v.is_finite()).collect();
            let inf_count = picked.iter().filter(|v| v.is_infinite()).count();
            let mean = if finite.is_empty() {
                f64::NAN
            } else {
                finite.iter().sum::<f64>() / finite.len() as f64
            };
            rows.push(MetricRow {
                condition,
                metric,
                mean,
                count: finite.len(),
                inf_count,
            });
        };
        if pesq_enabled {
            push("pesq", &|s| s.pesq);
        }
        push("stoi", &|s| Some(s.stoi));
        push("si_sdr", &|s| Some(s.si_sdr));
    }
    MetricReport {
        rows,
        per_record,
        failures,
    }
}

/// Evaluates every record in parallel and aggregates deterministically.
///
/// Per-record failures are collected into the report, not raised; the call
/// errors only when no record succeeds at all.
pub fn evaluate_set(
    records: &[MixtureRecord],
    base: &Path,
    options: &EvalOptions,
) -> Result<MetricReport, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::NoRecords);
    }
    if options.conditions.is_empty() {
        return Err(MetricsError::UnknownCondition("<none>".into()));
    }
    let results: Vec<(String, Result<Vec<RecordScores>, MetricsError>)> = records
        .par_iter()
        .map(|record| (record.id.clone(), evaluate_record(record, base, options)))
        .collect();

    let mut per_record = Vec::new();
    let mut failures = Vec::new();
    for (id, result) in results {
        match result {
            Ok(scores) => per_record.extend(scores),
            Err(e) => failures.push((id, e.to_string())),
        }
    }
    if per_record.is_empty() {
        failures.sort();
        return Err(MetricsError::AllRecordsFailed { failures });
    }
    failures.sort();
    Ok(aggregate(
        per_record,
        failures,
        &options.conditions,
        options.pesq_command.is_some(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn score(id: &str, condition: Condition, stoi: f64, si_sdr: f64) -> RecordScores {
        RecordScores {
            record_id: id.into(),
            condition,
            stoi,
            si_sdr,
            pesq: None,
        }
    }

    #[test]
    fn condition_names_roundtrip() {
        for c in Condition::ALL {
            assert_eq!(c.as_str().parse::<Condition>().unwrap(), c);
        }
        assert!(matches!(
            "fixed_C".parse::<Condition>(),
            Err(MetricsError::UnknownCondition(_))
        ));
    }

    #[test]
    fn aggregate_means_and_infinities() {
        let report = aggregate(
            vec![
                score("r1", Condition::Mixed, 0.8, 4.0),
                score("r2", Condition::Mixed, 0.9, 6.0),
                score("r3", Condition::Mixed, 1.0, f64::INFINITY),
            ],
            Vec::new(),
            &[Condition::Mixed],
            false,
        );
        let si = report
            .rows
            .iter()
            .find(|r| r.metric == "si_sdr")
            .unwrap();
        assert_eq!(si.mean, 5.0);
        assert_eq!(si.count, 2);
        assert_eq!(si.inf_count, 1);
        let st = report.rows.iter().find(|r| r.metric == "stoi").unwrap();
        assert!((st.mean - 0.9).abs() < 1e-12);
        assert_eq!(st.count, 3);
        assert_eq!(st.inf_count, 0);
    }

    #[test]
    fn identity_record_reports_infinity_count_only() {
        let report = aggregate(
            vec![score("r1", Condition::Mixed, 1.0, f64::INFINITY)],
            Vec::new(),
            &[Condition::Mixed],
            false,
        );
        let si = report
            .rows
            .iter()
            .find(|r| r.metric == "si_sdr")
            .unwrap();
        assert!(si.mean.is_nan());
        assert_eq!((si.count, si.inf_count), (0, 1));
        let table = report.to_table();
        assert!(table.contains("+inf"), "{table}");
    }

    #[test]
    fn csv_layout_is_stable() {
        let report = aggregate(
            vec![
                score("r1", Condition::Mixed, 0.75, 1.5),
                score("r1", Condition::GazeGuided, 0.95, 9.5),
            ],
            Vec::new(),
            &[Condition::Mixed, Condition::GazeGuided],
            false,
        );
        assert_eq!(
            report.to_csv(),
            "condition,metric,mean,count,inf_count\n\
             mixed,stoi,0.75,1,0\n\
             mixed,si_sdr,1.5,1,0\n\
             gaze_guided,stoi,0.95,1,0\n\
             gaze_guided,si_sdr,9.5,1,0\n"
        );
        assert_eq!(
            report.per_record_csv(),
            "record_id,condition,stoi,si_sdr,pesq\n\
             r1,mixed,0.75,1.5,\n\
             r1,gaze_guided,0.95,9.5,\n"
        );
    }

    #[test]
    fn table_shows_dash_for_disabled_pesq() {
        let report = aggregate(
            vec![score("r1", Condition::Mixed, 0.8, 2.0)],
            Vec::new(),
            &[Condition::Mixed],
            false,
        );
        let table = report.to_table();
        let line = table.lines().nth(1).unwrap();
        assert!(line.starts_with("mixed"));
        assert!(line.contains(" - "), "{line}");
        assert!(line.contains("0.8000"));
        assert!(line.contains("2.0000"));
    }

    #[test]
    fn per_record_rows_sort_by_id_then_condition() {
        let report = aggregate(
            vec![
                score("z", Condition::Mixed, 0.5, 1.0),
                score("a", Condition::GazeGuided, 0.6, 2.0),
                score("a", Condition::Mixed, 0.7, 3.0),
            ],
            Vec::new(),
            &[Condition::Mixed, Condition::GazeGuided],
            false,
        );
        let order: Vec<(String, Condition)> = report
            .per_record
            .iter()
            .map(|s| (s.record_id.clone(), s.condition))
            .collect();
        assert_eq!(
            order,
            vec![
                ("a".into(), Condition::Mixed),
                ("a".into(), Condition::GazeGuided),
                ("z".into(), Condition::Mixed),
            ]
        );
    }
}
