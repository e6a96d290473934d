//! Summary tables and SVG plots from evaluation numbers.

use vocdet::report::{
    emit_plot, emit_summary, timing_stats, PlotKind, PlotSeries, SummaryFormat, SummaryRow,
    TimingLog,
};

fn main() -> vocdet::Result<()> {
    let rows = vec![
        SummaryRow {
            model: "detector-a".into(),
            confidence_threshold_pct: 0.0,
            mean_inference_ms: Some(16.44),
            map: 0.5799,
            precision: 0.7807,
            recall: 0.6244,
        },
        SummaryRow {
            model: "detector-a".into(),
            confidence_threshold_pct: 40.0,
            mean_inference_ms: Some(16.44),
            map: 0.5146,
            precision: 0.8437,
            recall: 0.5440,
        },
    ];
    // F1 is recomputed from precision and recall; percentages render with
    // two decimals, rounded half up.
    println!("{}", emit_summary(&rows, SummaryFormat::Csv));
    println!("{}", emit_summary(&rows, SummaryFormat::Markdown));

    let log = TimingLog {
        model: "detector-a".into(),
        durations_ms: vec![15.8, 16.2, 16.4, 16.9, 17.0, 18.3],
    };
    let stats = timing_stats(&log)?;
    println!(
        "timing: mean {:.2} ms, median {:.2} ms, p95 {:.2} ms",
        stats.mean_ms, stats.median_ms, stats.p95_ms
    );

    let curve = PlotSeries {
        label: "detector-a".into(),
        points: vec![(0.1, 1.0), (0.3, 0.95), (0.5, 0.9), (0.6, 0.7), (0.62, 0.4)],
    };
    let svg = emit_plot(PlotKind::PrCurve, &[curve])?;
    let path = std::env::temp_dir().join("vocdet_example_pr_curve.svg");
    std::fs::write(&path, &svg).expect("write svg");
    println!("wrote {} ({} bytes, deterministic)", path.display(), svg.len());
    Ok(())
}
