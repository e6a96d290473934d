//! Detection evaluation: IoU gating, greedy confidence-ordered matching,
//! TP/FP/FN accounting, precision/recall/F1, precision x recall curves,
//! AP/mAP, and TP/FP/FN-vs-threshold tables.
//!
//! Matching follows the Pascal VOC protocol: detections are processed in
//! descending confidence and each one claims the unmatched ground truth of
//! highest IoU, provided that IoU reaches the gate `t`. Equal confidences
//! are broken lexicographically by box coordinates, then by input order,
//! so results are platform-deterministic and permutation-invariant.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bbox::{cmp_boxes, BBox};
use crate::error::{Error, Result};
use crate::voc::{Detection, GroundTruthObject, ImageAnnotation};

/// Ground truths per image id, for one class.
pub type GtMap = BTreeMap<String, Vec<GroundTruthObject>>;

/// Intersection over union of two boxes; 0 when disjoint.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    match a.intersection(b) {
        None => 0.0,
        Some(i) => {
            let inter = i.area();
            inter / (a.area() + b.area() - inter)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Area under the right-max precision envelope at every recall step.
    AllPoint,
    /// Mean interpolated precision at recalls {0, 0.1, ..., 1.0}.
    ElevenPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// IoU gate `t`; a detection only counts as TP at IoU >= t.
    pub iou_threshold: f64,
    /// Detections below this confidence are excluded before matching
    /// (the filter is >=, so 0 keeps everything).
    pub confidence_threshold: f64,
    pub interpolation: Interpolation,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            iou_threshold: 0.5,
            confidence_threshold: 0.0,
            interpolation: Interpolation::AllPoint,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.iou_threshold > 0.0 && self.iou_threshold <= 1.0) {
            return Err(Error::Usage(format!(
                "iou_threshold {} outside (0, 1]",
                self.iou_threshold
            )));
        }
        if !(0.0..=1.0).contains(&self.confidence_threshold) {
            return Err(Error::Usage(format!(
                "confidence_threshold {} outside [0, 1]",
                self.confidence_threshold
            )));
        }
        Ok(())
    }
}

/// TP/FP/FN totals of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

/// Flag for one retained detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectionFlag {
    /// Index into the input detection slice.
    pub det_index: usize,
    /// Matched ground-truth index, `None` for a false positive.
    pub matched_gt: Option<usize>,
}

/// Result of matching one image's detections against its ground truths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchOutcome {
    /// One flag per retained detection, in processing (descending
    /// confidence) order.
    pub flags: Vec<DetectionFlag>,
    pub counts: Counts,
}

/// Deterministic processing order: descending confidence, ties broken by
/// box coordinates and finally input position.
fn processing_order(dets: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&i, &j| {
        dets[j]
            .confidence
            .total_cmp(&dets[i].confidence)
            .then_with(|| cmp_boxes(&dets[i].bbox, &dets[j].bbox))
            .then(i.cmp(&j))
    });
    order
}

/// Greedy matching for a single image and class.
pub fn match_detections(
    dets: &[Detection],
    gts: &[GroundTruthObject],
    config: &EvalConfig,
) -> Result<MatchOutcome> {
    config.validate()?;
    if let Some(first) = dets.first() {
        if dets.iter().any(|d| d.image_id != first.image_id) {
            return Err(Error::Usage(
                "match_detections expects detections of a single image".into(),
            ));
        }
        if dets.iter().any(|d| d.label != first.label) {
            return Err(Error::Usage(
                "match_detections expects detections of a single class".into(),
            ));
        }
    }
    if let Some(first) = gts.first() {
        if gts.iter().any(|g| g.label != first.label) {
            return Err(Error::Usage(
                "match_detections expects ground truths of a single class".into(),
            ));
        }
    }

    let retained: Vec<usize> = processing_order(dets)
        .into_iter()
        .filter(|&i| dets[i].confidence >= config.confidence_threshold)
        .collect();

    let mut gt_taken = vec![false; gts.len()];
    let mut flags = Vec::with_capacity(retained.len());
    let mut counts = Counts::default();
    for det_index in retained {
        let det = &dets[det_index];
        let mut best: Option<(usize, f64)> = None;
        for (gi, gt) in gts.iter().enumerate() {
            if gt_taken[gi] {
                continue;
            }
            let overlap = iou(&det.bbox, &gt.bbox);
            if best.is_none_or(|(_, b)| overlap > b) {
                best = Some((gi, overlap));
            }
        }
        let matched_gt = match best {
            Some((gi, overlap)) if overlap >= config.iou_threshold => {
                gt_taken[gi] = true;
                counts.tp += 1;
                Some(gi)
            }
            _ => {
                counts.fp += 1;
                None
            }
        };
        flags.push(DetectionFlag {
            det_index,
            matched_gt,
        });
    }
    counts.fn_ = gt_taken.iter().filter(|taken| !**taken).count();

    debug_assert_eq!(counts.tp + counts.fn_, gts.len());
    debug_assert_eq!(counts.tp + counts.fp, flags.len());
    Ok(MatchOutcome { flags, counts })
}

pub fn precision(tp: usize, fp: usize) -> f64 {
    if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    }
}

pub fn recall(tp: usize, fn_: usize) -> f64 {
    if tp + fn_ == 0 {
        0.0
    } else {
        tp as f64 / (tp + fn_) as f64
    }
}

/// First harmonic mean of precision and recall; 0 when both vanish.
pub fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn check_class_homogeneous(dets: &[Detection], gts: &GtMap) -> Result<()> {
    let mut label: Option<&str> = None;
    for l in dets
        .iter()
        .map(|d| d.label.as_str())
        .chain(gts.values().flatten().map(|g| g.label.as_str()))
    {
        match label {
            None => label = Some(l),
            Some(seen) if seen != l => {
                return Err(Error::Usage(format!(
                    "expected a single class, found '{seen}' and '{l}'"
                )))
            }
            _ => {}
        }
    }
    Ok(())
}

/// TP/FP/FN over a whole single-class dataset: per-image greedy matching,
/// then summation.
pub fn dataset_counts(dets: &[Detection], gts: &GtMap, config: &EvalConfig) -> Result<Counts> {
    config.validate()?;
    check_class_homogeneous(dets, gts)?;

    let mut per_image: BTreeMap<&str, Vec<Detection>> = BTreeMap::new();
    for det in dets {
        per_image
            .entry(det.image_id.as_str())
            .or_default()
            .push(det.clone());
    }

    let mut total = Counts::default();
    static EMPTY: Vec<GroundTruthObject> = Vec::new();
    for (image_id, image_dets) in &per_image {
        let image_gts = gts.get(*image_id).unwrap_or(&EMPTY);
        let outcome = match_detections(image_dets, image_gts, config)?;
        total.tp += outcome.counts.tp;
        total.fp += outcome.counts.fp;
        total.fn_ += outcome.counts.fn_;
    }
    // Ground truths of images that received no detections are all missed.
    for (image_id, image_gts) in gts {
        if !per_image.contains_key(image_id.as_str()) {
            total.fn_ += image_gts.len();
        }
    }
    Ok(total)
}

/// One point of a precision x recall curve, tagged with the confidence of
/// the detection that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PRPoint {
    pub recall: f64,
    pub precision: f64,
    pub confidence: f64,
}

/// Precision x recall curve from descending-confidence accumulation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PRCurve {
    pub points: Vec<PRPoint>,
}

impl PRCurve {
    /// Points with confidence at or above the threshold; because points are
    /// emitted in descending confidence this is a prefix of the curve.
    pub fn truncate_at(&self, confidence_threshold: f64) -> PRCurve {
        PRCurve {
            points: self
                .points
                .iter()
                .copied()
                .take_while(|p| p.confidence >= confidence_threshold)
                .collect(),
        }
    }
}

struct FlaggedDetection {
    confidence: f64,
    bbox: BBox,
    input_ordinal: usize,
    is_tp: bool,
}

/// Flags every retained detection TP/FP using per-image greedy matching and
/// returns them sorted by the global processing order.
fn flag_dataset(
    dets: &[Detection],
    gts: &GtMap,
    config: &EvalConfig,
) -> Result<Vec<FlaggedDetection>> {
    check_class_homogeneous(dets, gts)?;
    let mut per_image: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, det) in dets.iter().enumerate() {
        per_image.entry(det.image_id.as_str()).or_default().push(i);
    }

    let mut flagged = Vec::new();
    static EMPTY: Vec<GroundTruthObject> = Vec::new();
    for (image_id, indices) in &per_image {
        let image_dets: Vec<Detection> = indices.iter().map(|&i| dets[i].clone()).collect();
        let image_gts = gts.get(*image_id).unwrap_or(&EMPTY);
        let outcome = match_detections(&image_dets, image_gts, config)?;
        for flag in outcome.flags {
            let original = indices[flag.det_index];
            flagged.push(FlaggedDetection {
                confidence: dets[original].confidence,
                bbox: dets[original].bbox,
                input_ordinal: original,
                is_tp: flag.matched_gt.is_some(),
            });
        }
    }
    flagged.sort_by(|a, b| {
        b.confidence
            .total_cmp(&a.confidence)
            .then_with(|| cmp_boxes(&a.bbox, &b.bbox))
            .then(a.input_ordinal.cmp(&b.input_ordinal))
    });
    Ok(flagged)
}

fn accumulate_curve(flagged: &[FlaggedDetection], total_gt: usize) -> PRCurve {
    let mut points = Vec::with_capacity(flagged.len());
    let mut tp = 0usize;
    let mut fp = 0usize;
    for f in flagged {
        if f.is_tp {
            tp += 1;
        } else {
            fp += 1;
        }
        points.push(PRPoint {
            recall: tp as f64 / total_gt as f64,
            precision: tp as f64 / (tp + fp) as f64,
            confidence: f.confidence,
        });
    }
    PRCurve { points }
}

/// Builds the precision x recall curve for a single class: all detections
/// are sorted globally by descending confidence, matched greedily within
/// their image, and one (recall, precision) point is emitted per detection.
pub fn pr_curve(dets: &[Detection], gts: &GtMap, config: &EvalConfig) -> Result<PRCurve> {
    config.validate()?;
    let total_gt: usize = gts.values().map(Vec::len).sum();
    if total_gt == 0 {
        return Err(Error::Usage(
            "recall is undefined without ground truths".into(),
        ));
    }
    let threshold = config.confidence_threshold;
    let filtered: Vec<Detection> = dets
        .iter()
        .filter(|d| d.confidence >= threshold)
        .cloned()
        .collect();
    let inner = EvalConfig {
        confidence_threshold: 0.0,
        ..*config
    };
    let flagged = flag_dataset(&filtered, gts, &inner)?;
    Ok(accumulate_curve(&flagged, total_gt))
}

/// Average precision of a curve.
///
/// All-point mode integrates the right-max precision envelope over recall;
/// 11-point mode averages the interpolated precision at the 11 canonical
/// recall levels. An empty curve has AP 0.
pub fn average_precision(curve: &PRCurve, mode: Interpolation) -> f64 {
    if curve.points.is_empty() {
        return 0.0;
    }
    match mode {
        Interpolation::AllPoint => {
            let n = curve.points.len();
            let mut envelope = vec![0.0f64; n];
            let mut running = 0.0f64;
            for i in (0..n).rev() {
                running = running.max(curve.points[i].precision);
                envelope[i] = running;
            }
            let mut ap = 0.0;
            let mut prev_recall = 0.0;
            for (point, env) in curve.points.iter().zip(&envelope) {
                ap += (point.recall - prev_recall) * env;
                prev_recall = point.recall;
            }
            ap
        }
        Interpolation::ElevenPoint => {
            let mut sum = 0.0;
            for k in 0..=10 {
                let level = k as f64 / 10.0;
                let p_interp = curve
                    .points
                    .iter()
                    .filter(|p| p.recall >= level)
                    .map(|p| p.precision)
                    .fold(0.0f64, f64::max);
                sum += p_interp;
            }
            sum / 11.0
        }
    }
}

/// Unweighted mean of per-class average precisions.
pub fn mean_average_precision(per_class_ap: &BTreeMap<String, f64>) -> Result<f64> {
    if per_class_ap.is_empty() {
        return Err(Error::Usage("mAP of zero classes is undefined".into()));
    }
    Ok(per_class_ap.values().sum::<f64>() / per_class_ap.len() as f64)
}

/// One row of the TP/FP/FN-vs-threshold table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCounts {
    pub threshold: f64,
    #[serde(flatten)]
    pub counts: Counts,
}

/// Counts at every confidence threshold `0, step, ..., 1`. The step is
/// interpreted as `1/round(1/step)` so thresholds are exact decimals.
pub fn counts_vs_threshold(
    dets: &[Detection],
    gts: &GtMap,
    config: &EvalConfig,
    step: f64,
) -> Result<Vec<ThresholdCounts>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::Usage(format!("step {step} outside (0, 1]")));
    }
    let n = (1.0 / step).round().max(1.0) as usize;
    let mut rows = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let threshold = k as f64 / n as f64;
        let cfg = EvalConfig {
            confidence_threshold: threshold,
            ..*config
        };
        rows.push(ThresholdCounts {
            threshold,
            counts: dataset_counts(dets, gts, &cfg)?,
        });
    }
    Ok(rows)
}

/// Ground truths of all annotations grouped per class, then per image.
pub fn group_ground_truths(anns: &[ImageAnnotation]) -> BTreeMap<String, GtMap> {
    let mut by_class: BTreeMap<String, GtMap> = BTreeMap::new();
    for ann in anns {
        for obj in &ann.objects {
            by_class
                .entry(obj.label.clone())
                .or_default()
                .entry(ann.image_id.clone())
                .or_default()
                .push(obj.clone());
        }
    }
    by_class
}

/// Detections grouped per class.
pub fn group_detections(dets: &[Detection]) -> BTreeMap<String, Vec<Detection>> {
    let mut by_class: BTreeMap<String, Vec<Detection>> = BTreeMap::new();
    for det in dets {
        by_class.entry(det.label.clone()).or_default().push(det.clone());
    }
    by_class
}

/// Per-class metrics of a full evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub ap: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Complete evaluation of a detection run against ground truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Evaluation {
    pub config: EvalConfig,
    pub per_class: BTreeMap<String, ClassMetrics>,
    pub map: f64,
    /// `[recall, precision]` pairs of the pooled curve (equal to the
    /// single class's curve for a one-class dataset).
    pub curve: Vec<[f64; 2]>,
    #[serde(skip)]
    pub full_curve: PRCurve,
}

/// Evaluates detections against annotations: per-class AP and totals at
/// the configured confidence threshold, mAP, and the pooled PR curve.
pub fn evaluate(
    dets: &[Detection],
    anns: &[ImageAnnotation],
    config: &EvalConfig,
) -> Result<Evaluation> {
    config.validate()?;
    let gt_by_class = group_ground_truths(anns);
    let det_by_class = group_detections(dets);

    for class in det_by_class.keys() {
        if !gt_by_class.contains_key(class) {
            return Err(Error::Usage(format!(
                "detections of class '{class}' have no ground truths; recall undefined"
            )));
        }
    }

    let empty: Vec<Detection> = Vec::new();
    let mut per_class = BTreeMap::new();
    let mut ap_by_class = BTreeMap::new();
    let mut pooled: Vec<FlaggedDetection> = Vec::new();
    let mut total_gt = 0usize;
    for (class, gts) in &gt_by_class {
        let class_dets: Vec<Detection> = det_by_class
            .get(class)
            .unwrap_or(&empty)
            .iter()
            .filter(|d| d.confidence >= config.confidence_threshold)
            .cloned()
            .collect();
        let inner = EvalConfig {
            confidence_threshold: 0.0,
            ..*config
        };
        let curve = pr_curve(&class_dets, gts, &inner)?;
        let ap = average_precision(&curve, config.interpolation);
        let counts = dataset_counts(&class_dets, gts, &inner)?;
        let p = precision(counts.tp, counts.fp);
        let r = recall(counts.tp, counts.fn_);
        per_class.insert(
            class.clone(),
            ClassMetrics {
                ap,
                tp: counts.tp,
                fp: counts.fp,
                fn_: counts.fn_,
                precision: p,
                recall: r,
                f1: f1(p, r),
            },
        );
        ap_by_class.insert(class.clone(), ap);
        pooled.extend(flag_dataset(&class_dets, gts, &inner)?);
        total_gt += gts.values().map(Vec::len).sum::<usize>();
    }
    let map = mean_average_precision(&ap_by_class)?;

    pooled.sort_by(|a, b| {
        b.confidence
            .total_cmp(&a.confidence)
            .then_with(|| cmp_boxes(&a.bbox, &b.bbox))
            .then(a.input_ordinal.cmp(&b.input_ordinal))
    });
    let full_curve = accumulate_curve(&pooled, total_gt);
    let curve = full_curve
        .points
        .iter()
        .map(|p| [p.recall, p.precision])
        .collect();

    Ok(Evaluation {
        config: *config,
        per_class,
        map,
        curve,
        full_curve,
    })
}
