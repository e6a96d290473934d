//! Detection evaluation end to end on a small hand-checkable scene:
//! IoU gating, greedy matching, the PR curve, AP, and threshold tables.

use vocdet::bbox::BBox;
use vocdet::eval::{
    average_precision, counts_vs_threshold, iou, match_detections, pr_curve, EvalConfig, GtMap,
    Interpolation,
};
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
    let a = BBox::new(0.0, 0.0, 10.0, 10.0)?;
    let b = BBox::new(5.0, 0.0, 15.0, 10.0)?;
    println!("iou of half-overlapping boxes: {:.4}", iou(&a, &b));

    // Two ground truths; three detections ranked by confidence come out
    // TP, FP, TP under the greedy IoU >= 0.5 protocol.
    let gts = vec![
        GroundTruthObject { label: "tomato".into(), bbox: a },
        GroundTruthObject { label: "tomato".into(), bbox: BBox::new(20.0, 0.0, 30.0, 10.0)? },
    ];
    let dets = vec![
        det(0.9, BBox::new(0.0, 0.0, 10.0, 9.0)?),
        det(0.8, BBox::new(50.0, 50.0, 60.0, 60.0)?),
        det(0.7, BBox::new(20.0, 0.0, 30.0, 9.0)?),
    ];
    let config = EvalConfig::default();
    let outcome = match_detections(&dets, &gts, &config)?;
    println!(
        "matching: TP={} FP={} FN={}",
        outcome.counts.tp, outcome.counts.fp, outcome.counts.fn_
    );

    let gt_map: GtMap = [("frame".to_string(), gts)].into();
    let curve = pr_curve(&dets, &gt_map, &config)?;
    println!("PR points (recall, precision):");
    for p in &curve.points {
        println!("  conf {:.2} -> ({:.3}, {:.3})", p.confidence, p.recall, p.precision);
    }
    println!(
        "AP all-point: {:.4}   AP 11-point: {:.4}",
        average_precision(&curve, Interpolation::AllPoint),
        average_precision(&curve, Interpolation::ElevenPoint)
    );

    // TP/FP/FN as the confidence threshold rises in 10% steps.
    println!("\nthreshold  TP FP FN");
    for row in counts_vs_threshold(&dets, &gt_map, &config, 0.10)? {
        println!(
            "   {:>4.0}%    {}  {}  {}",
            row.threshold * 100.0,
            row.counts.tp,
            row.counts.fp,
            row.counts.fn_
        );
    }
    Ok(())
}
