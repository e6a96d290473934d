//! Report emission: per-model summary tables, inference-time statistics,
//! and deterministic SVG plots of the evaluation curves.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::f1;

/// Per-image inference durations for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingLog {
    pub model: String,
    pub durations_ms: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p95_ms: f64,
}

/// Mean (plus median and p95) of an inference-time log.
pub fn timing_stats(log: &TimingLog) -> Result<TimingStats> {
    if log.durations_ms.is_empty() {
        return Err(Error::Usage(format!(
            "timing log for '{}' is empty",
            log.model
        )));
    }
    if let Some(bad) = log
        .durations_ms
        .iter()
        .find(|d| !d.is_finite() || **d <= 0.0)
    {
        return Err(Error::Range(format!(
            "timing log for '{}' contains non-positive duration {bad}",
            log.model
        )));
    }
    let n = log.durations_ms.len();
    let mean_ms = log.durations_ms.iter().sum::<f64>() / n as f64;
    let mut sorted = log.durations_ms.clone();
    sorted.sort_by(f64::total_cmp);
    let median_ms = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    // Nearest-rank percentile.
    let p95_index = ((0.95 * n as f64).ceil() as usize).clamp(1, n) - 1;
    Ok(TimingStats {
        mean_ms,
        median_ms,
        p95_ms: sorted[p95_index],
    })
}

/// Parses a timing file: one duration in milliseconds per line.
pub fn parse_timing_log(text: &str, model: &str) -> Result<TimingLog> {
    let mut durations_ms = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let value = line.parse::<f64>().map_err(|_| Error::LineParse {
            line: idx + 1,
            message: format!("non-numeric duration '{line}'"),
        })?;
        durations_ms.push(value);
    }
    Ok(TimingLog {
        model: model.to_string(),
        durations_ms,
    })
}

/// One model's line of the results table. Metric fields are fractions;
/// rendering converts them to percentages. F1 is recomputed from precision
/// and recall at render time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: String,
    pub confidence_threshold_pct: f64,
    pub mean_inference_ms: Option<f64>,
    pub map: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SummaryFormat {
    Csv,
    Markdown,
}

/// Percentage with two decimals, rounded half up.
fn pct(fraction: f64) -> String {
    let v = (fraction * 100.0 * 100.0).round() / 100.0;
    format!("{v:.2}%")
}

fn threshold_pct(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{}%", v as i64)
    } else {
        format!("{v}%")
    }
}

fn inference(ms: Option<f64>) -> String {
    match ms {
        Some(v) => format!("{v:.2} ms"),
        None => String::new(),
    }
}

const SUMMARY_HEADER: [&str; 7] = [
    "Model",
    "Confidence >=",
    "Inference Time",
    "mAP",
    "Precision",
    "Recall",
    "F1",
];

/// Renders the summary rows in the results-table column order.
pub fn emit_summary(rows: &[SummaryRow], format: SummaryFormat) -> String {
    let rendered: Vec<[String; 7]> = rows
        .iter()
        .map(|r| {
            [
                r.model.clone(),
                threshold_pct(r.confidence_threshold_pct),
                inference(r.mean_inference_ms),
                pct(r.map),
                pct(r.precision),
                pct(r.recall),
                pct(f1(r.precision, r.recall)),
            ]
        })
        .collect();

    let mut out = String::new();
    match format {
        SummaryFormat::Csv => {
            out.push_str(&SUMMARY_HEADER.join(","));
            out.push('\n');
            for row in &rendered {
                let quoted: Vec<String> = row
                    .iter()
                    .map(|cell| {
                        if cell.contains(',') || cell.contains('"') {
                            format!("\"{}\"", cell.replace('"', "\"\""))
                        } else {
                            cell.clone()
                        }
                    })
                    .collect();
                out.push_str(&quoted.join(","));
                out.push('\n');
            }
        }
        SummaryFormat::Markdown => {
            let _ = writeln!(out, "| {} |", SUMMARY_HEADER.join(" | "));
            let _ = writeln!(out, "|{}", "---|".repeat(SUMMARY_HEADER.len()));
            for row in &rendered {
                let _ = writeln!(out, "| {} |", row.join(" | "));
            }
        }
    }
    out
}

/// What a plot renders; fixes axis ranges and labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Recall on x, precision on y, both in [0, 1].
    PrCurve,
    /// Confidence threshold (fraction) on x, F1 on y, both in [0, 1].
    F1VsThreshold,
    /// Confidence threshold (fraction) on x, TP/FP/FN counts on y.
    CountsVsThreshold,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

const PLOT_W: f64 = 800.0;
const PLOT_H: f64 = 600.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 56.0;

fn nice_ceiling(v: f64) -> f64 {
    if v <= 0.0 {
        return 1.0;
    }
    let magnitude = 10f64.powf(v.log10().floor());
    for mult in [1.0, 2.0, 5.0, 10.0] {
        if mult * magnitude >= v {
            return mult * magnitude;
        }
    }
    10.0 * magnitude
}

fn fmt2(v: f64) -> String {
    format!("{v:.2}")
}

/// Renders a standalone SVG plot. Output is a pure function of the input:
/// identical series produce byte-identical documents.
pub fn emit_plot(kind: PlotKind, series: &[PlotSeries]) -> Result<String> {
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        return Err(Error::Usage("plot needs at least one data point".into()));
    }
    let (x_label, y_label, title) = match kind {
        PlotKind::PrCurve => ("Recall", "Precision", "Precision x recall curve"),
        PlotKind::F1VsThreshold => ("Confidence threshold", "F1-score", "F1 vs confidence threshold"),
        PlotKind::CountsVsThreshold => ("Confidence threshold", "Count", "TP/FP/FN vs confidence threshold"),
    };
    let y_max = match kind {
        PlotKind::PrCurve | PlotKind::F1VsThreshold => 1.0,
        PlotKind::CountsVsThreshold => nice_ceiling(
            series
                .iter()
                .flat_map(|s| s.points.iter().map(|p| p.1))
                .fold(0.0f64, f64::max),
        ),
    };

    let inner_w = PLOT_W - MARGIN_L - MARGIN_R;
    let inner_h = PLOT_H - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x / 1.0) * inner_w;
    let sy = |y: f64| MARGIN_T + inner_h - (y / y_max) * inner_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PLOT_W}" height="{PLOT_H}" viewBox="0 0 {PLOT_W} {PLOT_H}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="0" y="0" width="{PLOT_W}" height="{PLOT_H}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{title}</text>"#,
        fmt2(PLOT_W / 2.0)
    );

    // Axes and ticks.
    let _ = writeln!(
        svg,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black" stroke-width="1"/>"#,
        fmt2(MARGIN_L),
        fmt2(MARGIN_T),
        fmt2(inner_w),
        fmt2(inner_h)
    );
    for k in 0..=10 {
        let fx = k as f64 / 10.0;
        let x = sx(fx);
        let _ = writeln!(
            svg,
            r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black" stroke-width="1"/>"#,
            x0 = fmt2(x),
            y0 = fmt2(MARGIN_T + inner_h),
            y1 = fmt2(MARGIN_T + inner_h + 5.0)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x0}" y="{y}" font-family="sans-serif" font-size="11" text-anchor="middle">{v}</text>"#,
            x0 = fmt2(x),
            y = fmt2(MARGIN_T + inner_h + 18.0),
            v = fmt2(fx).trim_end_matches('0').trim_end_matches('.')
        );
        let fy = y_max * k as f64 / 10.0;
        let y = sy(fy);
        let _ = writeln!(
            svg,
            r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black" stroke-width="1"/>"#,
            x0 = fmt2(MARGIN_L - 5.0),
            x1 = fmt2(MARGIN_L),
            y0 = fmt2(y)
        );
        let tick = if y_max <= 1.0 {
            fmt2(fy).trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            format!("{}", fy.round() as i64)
        };
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{y0}" font-family="sans-serif" font-size="11" text-anchor="end">{tick}</text>"#,
            x = fmt2(MARGIN_L - 8.0),
            y0 = fmt2(y + 4.0)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{x}" y="{y}" font-family="sans-serif" font-size="13" text-anchor="middle">{x_label}</text>"#,
        x = fmt2(MARGIN_L + inner_w / 2.0),
        y = fmt2(PLOT_H - 16.0)
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{y}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 18 {y})">{y_label}</text>"#,
        y = fmt2(MARGIN_T + inner_h / 2.0)
    );

    // Series: polyline per series plus one circle marker per point.
    for (si, s) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        if s.points.len() > 1 {
            let pts: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| format!("{},{}", fmt2(sx(x)), fmt2(sy(y.min(y_max)))))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                pts.join(" ")
            );
        }
        for &(x, y) in &s.points {
            let _ = writeln!(
                svg,
                r#"<circle cx="{}" cy="{}" r="2.5" fill="{color}"/>"#,
                fmt2(sx(x)),
                fmt2(sy(y.min(y_max)))
            );
        }
    }

    // Legend swatches, top right inside the plot area.
    for (si, s) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let y = MARGIN_T + 14.0 + si as f64 * 18.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{x}" y="{y0}" width="18" height="4" fill="{color}"/>"#,
            x = fmt2(MARGIN_L + inner_w - 150.0),
            y0 = fmt2(y - 2.0)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{y0}" font-family="sans-serif" font-size="12">{label}</text>"#,
            x = fmt2(MARGIN_L + inner_w - 126.0),
            y0 = fmt2(y + 4.0),
            label = s.label
        );
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn timing_stats_single_and_pair() {
        let single = TimingLog {
            model: "m".into(),
            durations_ms: vec![16.44],
        };
        assert_eq!(timing_stats(&single).unwrap().mean_ms, 16.44);

        let pair = TimingLog {
            model: "m".into(),
            durations_ms: vec![10.0, 20.0],
        };
        let stats = timing_stats(&pair).unwrap();
        assert_eq!(stats.mean_ms, 15.0);
        assert_eq!(stats.median_ms, 15.0);
        assert_eq!(stats.p95_ms, 20.0);
    }

    #[test]
    fn timing_rejects_empty_and_nonpositive() {
        let empty = TimingLog {
            model: "m".into(),
            durations_ms: vec![],
        };
        assert!(matches!(timing_stats(&empty).unwrap_err(), Error::Usage(_)));
        let bad = TimingLog {
            model: "m".into(),
            durations_ms: vec![5.0, 0.0],
        };
        assert!(matches!(timing_stats(&bad).unwrap_err(), Error::Range(_)));
    }

    #[test]
    fn timing_log_parses_lines() {
        let log = parse_timing_log("16.4\n\n17.2\n", "m").unwrap();
        assert_eq!(log.durations_ms, vec![16.4, 17.2]);
        assert!(parse_timing_log("16.4\nxyz\n", "m").is_err());
    }

    fn table4_row() -> SummaryRow {
        SummaryRow {
            model: "SSD MobileNet v2".into(),
            confidence_threshold_pct: 0.0,
            mean_inference_ms: Some(16.44),
            map: 0.5799,
            precision: 0.7807,
            recall: 0.6244,
        }
    }

    #[test]
    fn summary_prints_percentages_with_recomputed_f1() {
        let csv = emit_summary(&[table4_row()], SummaryFormat::Csv);
        assert!(csv.contains("78.07%"), "{csv}");
        assert!(csv.contains("62.44%"));
        assert!(csv.contains("69.39%"));
        assert!(csv.contains("16.44 ms"));
        assert!(csv.contains("57.99%"));
        assert!(csv.starts_with("Model,Confidence >=,Inference Time,mAP,Precision,Recall,F1\n"));
    }

    #[test]
    fn summary_empty_is_header_only() {
        let csv = emit_summary(&[], SummaryFormat::Csv);
        assert_eq!(csv.lines().count(), 1);
    }

    #[test]
    fn summary_markdown_matches_csv_numbers() {
        let md = emit_summary(&[table4_row()], SummaryFormat::Markdown);
        for cell in ["78.07%", "62.44%", "69.39%", "57.99%", "16.44 ms", "0%"] {
            assert!(md.contains(cell), "missing {cell} in {md}");
        }
        assert!(md.starts_with("| Model | "));
    }

    #[test]
    fn percent_rounding_is_half_up() {
        assert_eq!(pct(0.068092), "6.81%");
        assert_eq!(pct(0.00125), "0.13%");
        assert_eq!(pct(1.0), "100.00%");
    }

    #[test]
    fn plot_single_point_has_one_marker() {
        let svg = emit_plot(
            PlotKind::PrCurve,
            &[PlotSeries {
                label: "model".into(),
                points: vec![(0.5, 0.75)],
            }],
        )
        .unwrap();
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(svg.contains("</svg>"));
    }

    #[test]
    fn plot_is_deterministic() {
        let series = [PlotSeries {
            label: "a".into(),
            points: vec![(0.0, 1.0), (0.5, 0.8), (1.0, 0.3)],
        }];
        let one = emit_plot(PlotKind::PrCurve, &series).unwrap();
        let two = emit_plot(PlotKind::PrCurve, &series).unwrap();
        assert_eq!(one, two);
    }

    #[test]
    fn plot_rejects_empty() {
        assert!(emit_plot(PlotKind::PrCurve, &[]).is_err());
    }

    #[test]
    fn counts_axis_uses_nice_ceiling() {
        assert_abs_diff_eq!(nice_ceiling(7.0), 10.0);
        assert_abs_diff_eq!(nice_ceiling(14.0), 20.0);
        assert_abs_diff_eq!(nice_ceiling(50.0), 50.0);
        assert_abs_diff_eq!(nice_ceiling(51.0), 100.0);
    }
}
