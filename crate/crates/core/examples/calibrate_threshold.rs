//! Confidence-threshold calibration: sweep F1 over every integer percent
//! and keep the smallest threshold attaining the maximum.

use vocdet::bbox::BBox;
use vocdet::calibrate::{apply_calibration, sweep};
use vocdet::eval::{EvalConfig, GtMap};
use vocdet::voc::{Detection, GroundTruthObject};

fn det(conf: f64, bbox: BBox) -> Detection {
    Detection {
        image_id: "frame".into(),
        label: "tomato".into(),
        confidence: conf,
        bbox,
    }
}

fn main() -> vocdet::Result<()> {
    // One true hit at confidence 0.60, one false alarm at 0.30: any
    // threshold in 31..=60 percent keeps the hit and drops the alarm.
    let gts: GtMap = [(
        "frame".to_string(),
        vec![GroundTruthObject {
            label: "tomato".into(),
            bbox: BBox::new(0.0, 0.0, 10.0, 10.0)?,
        }],
    )]
    .into();
    let dets = vec![
        det(0.60, BBox::new(0.0, 0.0, 10.0, 10.0)?),
        det(0.30, BBox::new(50.0, 50.0, 60.0, 60.0)?),
    ];

    let result = sweep(&dets, &gts, &EvalConfig::default())?;
    println!(
        "best threshold: {}%  (F1 {:.4})",
        result.best_threshold_pct, result.best_f1
    );

    println!("\nthreshold  TP FP FN  precision recall     F1");
    for row in result.rows.iter().step_by(10) {
        println!(
            "   {:>4}%    {}  {}  {}     {:.3}   {:.3}  {:.4}",
            row.threshold_pct, row.tp, row.fp, row.fn_, row.precision, row.recall, row.f1
        );
    }

    let kept = apply_calibration(&dets, result.best_threshold_pct);
    println!(
        "\nafter calibration {} of {} detections remain (confidence >= {}%)",
        kept.len(),
        dets.len(),
        result.best_threshold_pct
    );
    Ok(())
}
