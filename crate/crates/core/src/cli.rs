//! Command-line surface. Every subcommand maps 1:1 onto a library
//! operation; exit codes are 0 on success, 1 on validation errors, 2 on IO
//! errors. Each run writes a machine-readable `run_manifest.json` next to
//! its artifacts (inputs, config hash, seed, outputs).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Component, Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::augment::{augment_dataset, AugmentOptions};
use crate::calibrate::{sweep_with_resolution, write_sweep_csv, Calibration, SweepRow};
use crate::config::ConfigFile;
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalConfig, Evaluation, Interpolation};
use crate::manifest::{
    read_frames_csv, split_train_val, subsample_frames, write_frames_csv, write_manifest,
    ManifestEntry, SplitManifest,
};
use crate::report::{
    emit_plot, emit_summary, parse_timing_log, timing_stats, PlotKind, PlotSeries, SummaryFormat,
    SummaryRow,
};
use crate::tiling::{tile_dataset, KeepPolicy, TileDatasetOptions};
use crate::voc::{parse_annotation, parse_detections, Detection, ImageAnnotation};

#[derive(Parser, Debug)]
#[command(
    name = "vocdet",
    version,
    about = "Dataset preparation and Pascal-VOC-style detection evaluation"
)]
struct Cli {
    /// Flat key-value TOML config; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Seed for every randomized stage.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Select frames from a time-ordered sequence at a fixed interval
    Subsample(SubsampleArgs),
    /// Split annotated frames into fixed-size overlapping tiles
    Tile(TileArgs),
    /// Emit seeded transformed copies of a tiled dataset
    Augment(AugmentArgs),
    /// Shuffle dataset items into train/val manifests
    Split(SplitArgs),
    /// Evaluate detections against ground-truth annotations
    Evaluate(EvaluateArgs),
    /// Sweep the confidence threshold and pick the F1 optimum
    Calibrate(CalibrateArgs),
    /// Render summary tables and plots from evaluation artifacts
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct SubsampleArgs {
    /// CSV with header `path,timestamp` describing the frame sequence
    #[arg(long, value_name = "FILE")]
    frames: PathBuf,
    /// Minimum seconds between selected frames [config: interval]
    #[arg(long)]
    interval: Option<f64>,
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct KeepPolicyArgs {
    /// Minimum visible fraction for a clipped box to survive
    /// [config: min_visible_fraction]
    #[arg(long)]
    min_visible_fraction: Option<f64>,
    /// Minimum side length in pixels for a clipped box to survive
    /// [config: min_side_px]
    #[arg(long)]
    min_side_px: Option<f64>,
}

impl KeepPolicyArgs {
    fn resolve(&self, cfg: &ConfigFile) -> Result<KeepPolicy> {
        let default = KeepPolicy::default();
        Ok(KeepPolicy {
            min_visible_fraction: pick_f64(
                self.min_visible_fraction,
                cfg,
                "min_visible_fraction",
                default.min_visible_fraction,
            )?,
            min_side_px: pick_f64(self.min_side_px, cfg, "min_side_px", default.min_side_px)?,
        })
    }
}

#[derive(Args, Debug)]
struct TileArgs {
    /// Directory of VOC XML annotations, one per parent image
    #[arg(long, value_name = "DIR")]
    annotations: PathBuf,
    /// Directory of parent rasters (PNG or JPEG)
    #[arg(long, value_name = "DIR")]
    images: PathBuf,
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// Tile side in pixels [config: tile_size]
    #[arg(long)]
    size: Option<u32>,
    /// Minimum overlap between adjacent tiles as a fraction of the tile
    /// side [config: min_overlap]
    #[arg(long)]
    min_overlap: Option<f64>,
    #[command(flatten)]
    keep: KeepPolicyArgs,
    /// Omit tiles left without any annotation [config: drop_empty]
    #[arg(long)]
    drop_empty: bool,
}

#[derive(Args, Debug)]
struct AugmentArgs {
    /// Directory of tiles (PNG + VOC XML pairs)
    #[arg(long, value_name = "DIR")]
    tiles: PathBuf,
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// Transformed copies per source tile [config: multiplicity]
    #[arg(long)]
    multiplicity: Option<u32>,
    #[command(flatten)]
    keep: KeepPolicyArgs,
}

#[derive(Args, Debug)]
struct SplitArgs {
    /// Directory of dataset items (PNG + VOC XML pairs)
    #[arg(long, value_name = "DIR")]
    tiles: PathBuf,
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// Fraction of items assigned to the training split
    /// [config: train_fraction]
    #[arg(long)]
    train_fraction: Option<f64>,
    /// Split whole parent frames instead of individual tiles, preventing
    /// near-duplicate leakage across splits
    #[arg(long)]
    group_by_parent: bool,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Directory of ground-truth VOC XML files
    #[arg(long, value_name = "DIR")]
    gt: PathBuf,
    /// Directory of detection text files, one `<stem>.txt` per image
    #[arg(long, value_name = "DIR")]
    det: PathBuf,
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// IoU gate for a detection to count as a true positive [config: iou]
    #[arg(long)]
    iou: Option<f64>,
    /// Confidence threshold in percent; detections below it are dropped
    #[arg(long, conflicts_with = "threshold_from")]
    threshold: Option<f64>,
    /// Read the confidence threshold from a calibration JSON
    #[arg(long, value_name = "FILE")]
    threshold_from: Option<PathBuf>,
    /// AP interpolation: all-point or 11-point [config: interpolation]
    #[arg(long, value_parser = parse_interpolation)]
    interpolation: Option<Interpolation>,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    #[arg(long, value_name = "DIR")]
    gt: PathBuf,
    #[arg(long, value_name = "DIR")]
    det: PathBuf,
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// IoU gate [config: iou]
    #[arg(long)]
    iou: Option<f64>,
    /// Sweep step in percent; must divide 1% evenly [config: step]
    #[arg(long)]
    step: Option<f64>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Evaluation report to include, as NAME=PATH (repeatable)
    #[arg(long = "eval", value_name = "NAME=PATH", required = true)]
    evals: Vec<String>,
    /// Inference timing log (one ms value per line), as NAME=PATH
    #[arg(long = "timing", value_name = "NAME=PATH")]
    timings: Vec<String>,
    /// Calibration sweep CSV for threshold plots, as NAME=PATH
    #[arg(long = "sweep", value_name = "NAME=PATH")]
    sweeps: Vec<String>,
    /// Output table format [config: format]
    #[arg(long, value_parser = parse_format)]
    format: Option<SummaryFormat>,
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    /// Also print median and p95 inference times
    #[arg(long)]
    verbose: bool,
}

fn parse_interpolation(s: &str) -> std::result::Result<Interpolation, String> {
    match s {
        "all-point" | "all" => Ok(Interpolation::AllPoint),
        "11-point" | "eleven-point" => Ok(Interpolation::ElevenPoint),
        other => Err(format!(
            "unknown interpolation '{other}' (expected all-point or 11-point)"
        )),
    }
}

fn parse_format(s: &str) -> std::result::Result<SummaryFormat, String> {
    match s {
        "csv" => Ok(SummaryFormat::Csv),
        "markdown" | "md" => Ok(SummaryFormat::Markdown),
        other => Err(format!("unknown format '{other}' (expected csv or markdown)")),
    }
}

/// Runs the CLI on the given argv (including the program name) and returns
/// the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::empty(),
    };
    let seed = match cli.seed {
        Some(s) => s,
        None => config.get_u64("seed")?.unwrap_or(0),
    };
    let ctx = Ctx { config, seed };
    match cli.command {
        Command::Subsample(args) => run_subsample(args, &ctx),
        Command::Tile(args) => run_tile(args, &ctx),
        Command::Augment(args) => run_augment(args, &ctx),
        Command::Split(args) => run_split(args, &ctx),
        Command::Evaluate(args) => run_evaluate(args, &ctx),
        Command::Calibrate(args) => run_calibrate(args, &ctx),
        Command::Report(args) => run_report(args, &ctx),
    }
}

struct Ctx {
    config: ConfigFile,
    seed: u64,
}

fn pick_f64(cli: Option<f64>, cfg: &ConfigFile, key: &str, default: f64) -> Result<f64> {
    match cli {
        Some(v) => Ok(v),
        None => Ok(cfg.get_f64(key)?.unwrap_or(default)),
    }
}

fn pick_u32(cli: Option<u32>, cfg: &ConfigFile, key: &str, default: u32) -> Result<u32> {
    match cli {
        Some(v) => Ok(v),
        None => Ok(cfg.get_u32(key)?.unwrap_or(default)),
    }
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    inputs: Vec<String>,
    outputs: Vec<String>,
    seed: Option<u64>,
    config_hash: Option<String>,
    settings: BTreeMap<String, serde_json::Value>,
}

fn write_run_manifest(
    out_dir: &Path,
    command: &str,
    inputs: &[&Path],
    seed: Option<u64>,
    ctx: &Ctx,
    settings: BTreeMap<String, serde_json::Value>,
) -> Result<()> {
    let outputs = list_outputs(out_dir)?;
    let manifest = RunManifest {
        command: command.to_string(),
        inputs: inputs
            .iter()
            .map(|p| p.to_string_lossy().into_owned())
            .collect(),
        outputs,
        seed,
        config_hash: ctx.config.hash(),
        settings,
    };
    let path = out_dir.join("run_manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn list_outputs(out_dir: &Path) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for entry in walkdir::WalkDir::new(out_dir).min_depth(1).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::io(out_dir, std::io::Error::other(e.to_string())))?;
        if entry.file_type().is_file() {
            let rel = entry
                .path()
                .strip_prefix(out_dir)
                .unwrap_or(entry.path())
                .to_string_lossy()
                .replace('\\', "/");
            if rel != "run_manifest.json" {
                names.push(rel);
            }
        }
    }
    names.sort();
    Ok(names)
}

fn ensure_out_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Relative path from `base` (a directory) to `target`, both resolved
/// against the current directory first.
fn relative_to(base: &Path, target: &Path) -> PathBuf {
    let (Ok(base_abs), Ok(target_abs)) = (std::path::absolute(base), std::path::absolute(target))
    else {
        return target.to_path_buf();
    };
    let base_parts: Vec<Component> = base_abs.components().collect();
    let target_parts: Vec<Component> = target_abs.components().collect();
    let common = base_parts
        .iter()
        .zip(target_parts.iter())
        .take_while(|(a, b)| a == b)
        .count();
    let mut rel = PathBuf::new();
    for _ in common..base_parts.len() {
        rel.push("..");
    }
    for part in &target_parts[common..] {
        rel.push(part.as_os_str());
    }
    if rel.as_os_str().is_empty() {
        rel.push(".");
    }
    rel
}

fn sorted_xml_stems(dir: &Path) -> Result<Vec<String>> {
    let mut stems: Vec<String> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| {
            let path = entry.ok()?.path();
            if path.extension().is_some_and(|e| e == "xml") {
                Some(path.file_stem()?.to_string_lossy().into_owned())
            } else {
                None
            }
        })
        .collect();
    stems.sort();
    Ok(stems)
}

fn load_annotations(dir: &Path) -> Result<Vec<ImageAnnotation>> {
    sorted_xml_stems(dir)?
        .into_iter()
        .map(|stem| {
            let path = dir.join(format!("{stem}.xml"));
            let xml = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            parse_annotation(&xml)
                .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
        })
        .collect()
}

/// Loads paired ground truths and detections: one XML per image under
/// `gt`, an optional `<stem>.txt` under `det` (absent means no
/// detections), and no orphan detection files.
fn load_eval_inputs(gt: &Path, det: &Path) -> Result<(Vec<ImageAnnotation>, Vec<Detection>)> {
    let anns = load_annotations(gt)?;
    let known: std::collections::BTreeSet<&str> =
        anns.iter().map(|a| a.image_id.as_str()).collect();

    let mut dets = Vec::new();
    for ann in &anns {
        let path = det.join(format!("{}.txt", ann.image_id));
        if path.is_file() {
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            dets.extend(
                parse_detections(&text, &ann.image_id)
                    .map_err(|e| Error::Consistency(format!("{}: {e}", path.display())))?,
            );
        }
    }

    for entry in std::fs::read_dir(det).map_err(|e| Error::io(det, e))? {
        let path = entry.map_err(|e| Error::io(det, e))?.path();
        if path.extension().is_some_and(|e| e == "txt") {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            if !known.contains(stem.as_str()) {
                return Err(Error::Usage(format!(
                    "detection file {} has no matching ground-truth annotation",
                    path.display()
                )));
            }
        }
    }
    Ok((anns, dets))
}

fn run_subsample(args: SubsampleArgs, ctx: &Ctx) -> Result<()> {
    let interval = pick_f64(args.interval, &ctx.config, "interval", 3.0)?;
    let frames = read_frames_csv(&args.frames)?;
    let selected = subsample_frames(&frames, interval)?;
    ensure_out_dir(&args.out_dir)?;
    write_frames_csv(&selected, &args.out_dir.join("selected_frames.csv"))?;
    println!("selected {} of {} frames", selected.len(), frames.len());
    write_run_manifest(
        &args.out_dir,
        "subsample",
        &[&args.frames],
        None,
        ctx,
        [("interval".to_string(), json!(interval))].into(),
    )
}

fn run_tile(args: TileArgs, ctx: &Ctx) -> Result<()> {
    let opts = TileDatasetOptions {
        tile_size: pick_u32(args.size, &ctx.config, "tile_size", 300)?,
        min_overlap: pick_f64(args.min_overlap, &ctx.config, "min_overlap", 0.20)?,
        keep_policy: args.keep.resolve(&ctx.config)?,
        drop_empty: args.drop_empty || ctx.config.get_bool("drop_empty")?.unwrap_or(false),
    };
    let anns = load_annotations(&args.annotations)?;
    ensure_out_dir(&args.out_dir)?;
    let rows = tile_dataset(&anns, &args.images, &args.out_dir, &opts)?;
    println!("emitted {} tiles from {} frames", rows.len(), anns.len());
    write_run_manifest(
        &args.out_dir,
        "tile",
        &[&args.annotations, &args.images],
        None,
        ctx,
        [
            ("tile_size".to_string(), json!(opts.tile_size)),
            ("min_overlap".to_string(), json!(opts.min_overlap)),
            (
                "min_visible_fraction".to_string(),
                json!(opts.keep_policy.min_visible_fraction),
            ),
            ("min_side_px".to_string(), json!(opts.keep_policy.min_side_px)),
            ("drop_empty".to_string(), json!(opts.drop_empty)),
        ]
        .into(),
    )
}

fn run_augment(args: AugmentArgs, ctx: &Ctx) -> Result<()> {
    let opts = AugmentOptions {
        multiplicity: pick_u32(args.multiplicity, &ctx.config, "multiplicity", 3)?,
        seed: ctx.seed,
        keep_policy: args.keep.resolve(&ctx.config)?,
    };
    ensure_out_dir(&args.out_dir)?;
    let rows = augment_dataset(&args.tiles, &args.out_dir, &opts)?;
    println!("emitted {} items", rows.len());
    write_run_manifest(
        &args.out_dir,
        "augment",
        &[&args.tiles],
        Some(ctx.seed),
        ctx,
        [
            ("multiplicity".to_string(), json!(opts.multiplicity)),
            (
                "min_visible_fraction".to_string(),
                json!(opts.keep_policy.min_visible_fraction),
            ),
            ("min_side_px".to_string(), json!(opts.keep_policy.min_side_px)),
        ]
        .into(),
    )
}

/// Parent frame id of a tile id: everything before the first
/// `_r<digits>_c<digits>` marker (augmented copies keep their suffixes).
fn parent_of(tile_id: &str) -> &str {
    let mut search_from = 0;
    while let Some(found) = tile_id[search_from..].find("_r") {
        let start = search_from + found;
        let rest = &tile_id[start + 2..];
        if let Some(cpos) = rest.find("_c") {
            let row = &rest[..cpos];
            let col_and_tail = &rest[cpos + 2..];
            let col_end = col_and_tail
                .find(|c: char| !c.is_ascii_digit())
                .unwrap_or(col_and_tail.len());
            let col = &col_and_tail[..col_end];
            if !row.is_empty()
                && row.bytes().all(|b| b.is_ascii_digit())
                && !col.is_empty()
            {
                return &tile_id[..start];
            }
        }
        search_from = start + 1;
    }
    tile_id
}

fn run_split(args: SplitArgs, ctx: &Ctx) -> Result<()> {
    let train_fraction = pick_f64(args.train_fraction, &ctx.config, "train_fraction", 0.8)?;
    let stems = sorted_xml_stems(&args.tiles)?;
    if stems.is_empty() {
        eprintln!("warning: no dataset items under {}", args.tiles.display());
    }

    let (train_ids, val_ids) = if args.group_by_parent {
        let mut parents: Vec<String> = stems.iter().map(|s| parent_of(s).to_string()).collect();
        parents.sort();
        parents.dedup();
        let (train_parents, _) = split_train_val(&parents, train_fraction, ctx.seed)?;
        let train_set: std::collections::BTreeSet<&String> = train_parents.iter().collect();
        let (mut train, mut val) = (Vec::new(), Vec::new());
        for stem in &stems {
            if train_set.contains(&parent_of(stem).to_string()) {
                train.push(stem.clone());
            } else {
                val.push(stem.clone());
            }
        }
        (train, val)
    } else {
        split_train_val(&stems, train_fraction, ctx.seed)?
    };

    ensure_out_dir(&args.out_dir)?;
    for (name, mut ids) in [("train", train_ids), ("val", val_ids)] {
        ids.sort();
        let entries = ids
            .iter()
            .map(|id| {
                let xml_path = args.tiles.join(format!("{id}.xml"));
                let xml =
                    std::fs::read_to_string(&xml_path).map_err(|e| Error::io(&xml_path, e))?;
                let ann = parse_annotation(&xml)?;
                Ok(ManifestEntry {
                    id: id.clone(),
                    image_path: relative_to(&args.out_dir, &args.tiles.join(format!("{id}.png")))
                        .to_string_lossy()
                        .replace('\\', "/"),
                    xml_path: relative_to(&args.out_dir, &xml_path)
                        .to_string_lossy()
                        .replace('\\', "/"),
                    n_annotations: ann.objects.len(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let manifest = SplitManifest {
            name: name.to_string(),
            entries,
        };
        write_manifest(&manifest, &args.out_dir.join(format!("{name}.csv")))?;
        println!(
            "{name}: {} images, {} annotations",
            manifest.n_images(),
            manifest.n_annotations()
        );
    }
    write_run_manifest(
        &args.out_dir,
        "split",
        &[&args.tiles],
        Some(ctx.seed),
        ctx,
        [
            ("train_fraction".to_string(), json!(train_fraction)),
            ("group_by_parent".to_string(), json!(args.group_by_parent)),
        ]
        .into(),
    )
}

fn resolve_eval_config(
    iou: Option<f64>,
    threshold_pct: Option<f64>,
    threshold_from: Option<&Path>,
    interpolation: Option<Interpolation>,
    ctx: &Ctx,
) -> Result<EvalConfig> {
    let confidence_threshold = if let Some(pct) = threshold_pct {
        if !(0.0..=100.0).contains(&pct) {
            return Err(Error::Usage(format!("threshold {pct}% outside 0..100")));
        }
        pct / 100.0
    } else if let Some(path) = threshold_from {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let calib: Calibration = serde_json::from_str(&text)
            .map_err(|e| Error::Usage(format!("{}: {e}", path.display())))?;
        calib.best_threshold_pct / 100.0
    } else {
        0.0
    };
    let interpolation = match interpolation {
        Some(mode) => mode,
        None => match ctx.config.get_str("interpolation")? {
            Some(s) => parse_interpolation(&s).map_err(Error::Usage)?,
            None => Interpolation::AllPoint,
        },
    };
    let config = EvalConfig {
        iou_threshold: pick_f64(iou, &ctx.config, "iou", 0.5)?,
        confidence_threshold,
        interpolation,
    };
    config.validate()?;
    Ok(config)
}

fn run_evaluate(args: EvaluateArgs, ctx: &Ctx) -> Result<()> {
    let config = resolve_eval_config(
        args.iou,
        args.threshold,
        args.threshold_from.as_deref(),
        args.interpolation,
        ctx,
    )?;
    let (anns, dets) = load_eval_inputs(&args.gt, &args.det)?;
    let evaluation = evaluate(&dets, &anns, &config)?;

    ensure_out_dir(&args.out_dir)?;
    let report_path = args.out_dir.join("report.json");
    let mut text = serde_json::to_string_pretty(&evaluation).expect("report serializes");
    text.push('\n');
    std::fs::write(&report_path, text).map_err(|e| Error::io(&report_path, e))?;

    let curve_path = args.out_dir.join("pr_curve.csv");
    let mut w = csv::Writer::from_path(&curve_path)
        .map_err(|e| Error::io(&curve_path, std::io::Error::other(e.to_string())))?;
    w.write_record(["confidence", "recall", "precision"])
        .map_err(|e| Error::io(&curve_path, std::io::Error::other(e.to_string())))?;
    for p in &evaluation.full_curve.points {
        w.write_record([
            p.confidence.to_string(),
            p.recall.to_string(),
            p.precision.to_string(),
        ])
        .map_err(|e| Error::io(&curve_path, std::io::Error::other(e.to_string())))?;
    }
    w.flush().map_err(|e| Error::io(&curve_path, e))?;

    println!("mAP {:.4}", evaluation.map);
    write_run_manifest(
        &args.out_dir,
        "evaluate",
        &[&args.gt, &args.det],
        None,
        ctx,
        [(
            "eval_config".to_string(),
            serde_json::to_value(config).expect("config serializes"),
        )]
        .into(),
    )
}

fn run_calibrate(args: CalibrateArgs, ctx: &Ctx) -> Result<()> {
    let config = resolve_eval_config(args.iou, None, None, None, ctx)?;
    let step_pct = pick_f64(args.step, &ctx.config, "step", 1.0)?;
    if !(step_pct > 0.0 && step_pct <= 1.0) {
        return Err(Error::Usage(format!(
            "step {step_pct}% outside (0, 1] (only refinements of the 1% grid are supported)"
        )));
    }
    let steps_per_pct = (1.0 / step_pct).round();
    if ((1.0 / step_pct) - steps_per_pct).abs() > 1e-9 {
        return Err(Error::Usage(format!("step {step_pct}% must divide 1% evenly")));
    }

    let (anns, dets) = load_eval_inputs(&args.gt, &args.det)?;
    let gt_by_class = crate::eval::group_ground_truths(&anns);
    if gt_by_class.len() != 1 {
        return Err(Error::Usage(format!(
            "calibration expects a single-class dataset, found {} classes",
            gt_by_class.len()
        )));
    }
    let (_, gts) = gt_by_class.into_iter().next().expect("one class");
    let result = sweep_with_resolution(&dets, &gts, &config, steps_per_pct as u32)?;

    ensure_out_dir(&args.out_dir)?;
    write_sweep_csv(&result, &args.out_dir.join("sweep.csv"))?;
    let calib = Calibration::from(&result);
    let json_path = args.out_dir.join("calibration.json");
    let mut text = serde_json::to_string_pretty(&calib).expect("calibration serializes");
    text.push('\n');
    std::fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))?;

    println!(
        "best threshold {}% (F1 {:.4})",
        calib.best_threshold_pct, calib.best_f1
    );
    write_run_manifest(
        &args.out_dir,
        "calibrate",
        &[&args.gt, &args.det],
        None,
        ctx,
        [
            ("iou".to_string(), json!(config.iou_threshold)),
            ("step_pct".to_string(), json!(step_pct)),
        ]
        .into(),
    )
}

fn parse_named_path(spec: &str, flag: &str) -> Result<(String, PathBuf)> {
    match spec.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => {
            Ok((name.to_string(), PathBuf::from(path)))
        }
        _ => Err(Error::Usage(format!(
            "--{flag} expects NAME=PATH, got '{spec}'"
        ))),
    }
}

fn read_sweep_rows(path: &Path) -> Result<Vec<SweepRow>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    let mut rows = Vec::new();
    for record in reader.deserialize::<SweepRow>() {
        rows.push(record.map_err(|e| Error::Consistency(format!("{}: {e}", path.display())))?);
    }
    Ok(rows)
}

fn run_report(args: ReportArgs, ctx: &Ctx) -> Result<()> {
    let format = match args.format {
        Some(f) => f,
        None => match ctx.config.get_str("format")? {
            Some(s) => parse_format(&s).map_err(Error::Usage)?,
            None => SummaryFormat::Csv,
        },
    };

    let mut timing_by_model: BTreeMap<String, f64> = BTreeMap::new();
    for spec in &args.timings {
        let (name, path) = parse_named_path(spec, "timing")?;
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let log = parse_timing_log(&text, &name)?;
        let stats = timing_stats(&log)?;
        if args.verbose {
            println!(
                "{name}: mean {:.2} ms, median {:.2} ms, p95 {:.2} ms",
                stats.mean_ms, stats.median_ms, stats.p95_ms
            );
        }
        timing_by_model.insert(name, stats.mean_ms);
    }

    let mut rows = Vec::new();
    let mut pr_series = Vec::new();
    let mut inputs: Vec<PathBuf> = Vec::new();
    for spec in &args.evals {
        let (name, path) = parse_named_path(spec, "eval")?;
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let evaluation: Evaluation = serde_json::from_str(&text)
            .map_err(|e| Error::Usage(format!("{}: {e}", path.display())))?;
        let tp: usize = evaluation.per_class.values().map(|m| m.tp).sum();
        let fp: usize = evaluation.per_class.values().map(|m| m.fp).sum();
        let fn_: usize = evaluation.per_class.values().map(|m| m.fn_).sum();
        rows.push(SummaryRow {
            model: name.clone(),
            confidence_threshold_pct: evaluation.config.confidence_threshold * 100.0,
            mean_inference_ms: timing_by_model.get(&name).copied(),
            map: evaluation.map,
            precision: crate::eval::precision(tp, fp),
            recall: crate::eval::recall(tp, fn_),
        });
        pr_series.push(PlotSeries {
            label: name,
            points: evaluation.curve.iter().map(|rp| (rp[0], rp[1])).collect(),
        });
        inputs.push(path);
    }

    ensure_out_dir(&args.out_dir)?;
    let (summary_name, summary) = match format {
        SummaryFormat::Csv => ("summary.csv", emit_summary(&rows, format)),
        SummaryFormat::Markdown => ("summary.md", emit_summary(&rows, format)),
    };
    let summary_path = args.out_dir.join(summary_name);
    std::fs::write(&summary_path, &summary).map_err(|e| Error::io(&summary_path, e))?;
    print!("{summary}");

    if pr_series.iter().any(|s| !s.points.is_empty()) {
        let svg = emit_plot(PlotKind::PrCurve, &pr_series)?;
        let path = args.out_dir.join("pr_curve.svg");
        std::fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
    }

    if !args.sweeps.is_empty() {
        let mut f1_series = Vec::new();
        let mut count_series = Vec::new();
        for spec in &args.sweeps {
            let (name, path) = parse_named_path(spec, "sweep")?;
            let sweep_rows = read_sweep_rows(&path)?;
            f1_series.push(PlotSeries {
                label: name.clone(),
                points: sweep_rows
                    .iter()
                    .map(|r| (r.threshold_pct / 100.0, r.f1))
                    .collect(),
            });
            for (kind, get) in [
                ("TP", &(|r: &SweepRow| r.tp) as &dyn Fn(&SweepRow) -> usize),
                ("FP", &|r: &SweepRow| r.fp),
                ("FN", &|r: &SweepRow| r.fn_),
            ] {
                count_series.push(PlotSeries {
                    label: format!("{name} {kind}"),
                    points: sweep_rows
                        .iter()
                        .map(|r| (r.threshold_pct / 100.0, get(r) as f64))
                        .collect(),
                });
            }
            inputs.push(path);
        }
        let svg = emit_plot(PlotKind::F1VsThreshold, &f1_series)?;
        let path = args.out_dir.join("f1_vs_threshold.svg");
        std::fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
        let svg = emit_plot(PlotKind::CountsVsThreshold, &count_series)?;
        let path = args.out_dir.join("counts_vs_threshold.svg");
        std::fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
    }

    let input_refs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    write_run_manifest(
        &args.out_dir,
        "report",
        &input_refs,
        None,
        ctx,
        [(
            "format".to_string(),
            json!(match format {
                SummaryFormat::Csv => "csv",
                SummaryFormat::Markdown => "markdown",
            }),
        )]
        .into(),
    )
}
