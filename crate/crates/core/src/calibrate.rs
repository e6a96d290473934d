//! Confidence-threshold calibration: sweep the threshold over 0..100% and
//! pick the F1-maximising value (smallest such threshold on ties).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{dataset_counts, f1, precision, recall, EvalConfig, GtMap};
use crate::voc::Detection;

/// One row of the sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub threshold_pct: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Full sweep plus the selected operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub best_threshold_pct: f64,
    pub best_f1: f64,
}

/// Sweeps every integer percent threshold 0..=100. A confidence threshold
/// keeps all detections with confidence greater than or equal to it.
pub fn sweep(dets: &[Detection], gts: &GtMap, config: &EvalConfig) -> Result<SweepResult> {
    sweep_with_resolution(dets, gts, config, 1)
}

/// Sweep with `steps_per_pct` rows per percent (1 gives the standard
/// 1% steps; larger values refine the grid while still covering every
/// integer threshold).
pub fn sweep_with_resolution(
    dets: &[Detection],
    gts: &GtMap,
    config: &EvalConfig,
    steps_per_pct: u32,
) -> Result<SweepResult> {
    if steps_per_pct == 0 {
        return Err(Error::Usage("steps_per_pct must be at least 1".into()));
    }
    let total_gt: usize = gts.values().map(Vec::len).sum();
    if total_gt == 0 {
        return Err(Error::Usage(
            "calibration needs at least one ground truth".into(),
        ));
    }

    let mut rows = Vec::with_capacity(100 * steps_per_pct as usize + 1);
    for k in 0..=(100 * steps_per_pct as u64) {
        let threshold_pct = k as f64 / steps_per_pct as f64;
        let cfg = EvalConfig {
            confidence_threshold: threshold_pct / 100.0,
            ..*config
        };
        let counts = dataset_counts(dets, gts, &cfg)?;
        let p = precision(counts.tp, counts.fp);
        let r = recall(counts.tp, counts.fn_);
        rows.push(SweepRow {
            threshold_pct,
            tp: counts.tp,
            fp: counts.fp,
            fn_: counts.fn_,
            precision: p,
            recall: r,
            f1: f1(p, r),
        });
    }

    // Argmax of F1, smallest threshold on ties.
    let best = rows
        .iter()
        .fold(None::<&SweepRow>, |acc, row| match acc {
            Some(best) if row.f1 > best.f1 => Some(row),
            None => Some(row),
            _ => acc,
        })
        .expect("sweep produced rows");

    Ok(SweepResult {
        best_threshold_pct: best.threshold_pct,
        best_f1: best.f1,
        rows,
    })
}

/// Keeps detections with confidence at or above `threshold_pct / 100`.
pub fn apply_calibration(dets: &[Detection], threshold_pct: f64) -> Vec<Detection> {
    let tau = threshold_pct / 100.0;
    dets.iter()
        .filter(|d| d.confidence >= tau)
        .cloned()
        .collect()
}

/// Writes the sweep table as CSV
/// `threshold_pct,tp,fp,fn,precision,recall,f1`.
pub fn write_sweep_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    for row in &result.rows {
        writer
            .serialize(row)
            .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// The calibration summary persisted as JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub best_threshold_pct: f64,
    pub best_f1: f64,
}

impl From<&SweepResult> for Calibration {
    fn from(s: &SweepResult) -> Self {
        Calibration {
            best_threshold_pct: s.best_threshold_pct,
            best_f1: s.best_f1,
        }
    }
}
