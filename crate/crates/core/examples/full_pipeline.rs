//! The whole pipeline on a synthetic corpus, driven through the library
//! API: tile -> augment -> split -> synthetic detections -> calibrate ->
//! evaluate -> report. The CLI subcommands wrap exactly these calls.

use std::path::Path;

use image::RgbImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vocdet::augment::{augment_dataset, AugmentOptions};
use vocdet::bbox::BBox;
use vocdet::calibrate::{sweep, Calibration};
use vocdet::eval::{evaluate, EvalConfig, GtMap};
use vocdet::manifest::split_train_val;
use vocdet::report::{emit_summary, SummaryFormat, SummaryRow};
use vocdet::tiling::{tile_dataset, TileDatasetOptions};
use vocdet::voc::{
    parse_annotation, write_annotation, Detection, GroundTruthObject, ImageAnnotation,
};

fn write_synthetic_corpus(images: &Path, ann: &Path, frames: u32) -> vocdet::Result<()> {
    std::fs::create_dir_all(images).expect("create dirs");
    std::fs::create_dir_all(ann).expect("create dirs");
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for f in 0..frames {
        let mut boxes = Vec::new();
        for _ in 0..rng.random_range(2..5) {
            let w = rng.random_range(30..80) as f64;
            let h = rng.random_range(30..80) as f64;
            let x0 = rng.random_range(0..1180) as f64;
            let y0 = rng.random_range(0..620) as f64;
            boxes.push(BBox::new(x0, y0, x0 + w, y0 + h)?);
        }
        let mut img = RgbImage::from_fn(1280, 720, |x, y| {
            image::Rgb([25, 80 + ((x * 7 + y * 3 + f * 13) % 70) as u8, 30])
        });
        for b in &boxes {
            for y in b.ymin as u32..b.ymax as u32 {
                for x in b.xmin as u32..b.xmax as u32 {
                    img.put_pixel(x, y, image::Rgb([210, 45, 35]));
                }
            }
        }
        let id = format!("frame_{f:04}");
        img.save(images.join(format!("{id}.png"))).expect("save frame");
        let record = ImageAnnotation {
            image_id: id,
            width: 1280,
            height: 720,
            depth: 3,
            objects: boxes
                .into_iter()
                .map(|bbox| GroundTruthObject { label: "tomato".into(), bbox })
                .collect(),
        };
        std::fs::write(
            ann.join(format!("{}.xml", record.image_id)),
            write_annotation(&record)?,
        )
        .expect("write xml");
    }
    Ok(())
}

fn main() -> vocdet::Result<()> {
    let root = std::env::temp_dir().join("vocdet_example_pipeline");
    let _ = std::fs::remove_dir_all(&root);
    write_synthetic_corpus(&root.join("frames"), &root.join("ann"), 4)?;

    // Tile the frames into 300 px squares with 20% minimum overlap.
    let annotations: Vec<ImageAnnotation> = {
        let mut anns = Vec::new();
        let mut stems: Vec<_> = std::fs::read_dir(root.join("ann"))
            .expect("list ann")
            .map(|e| e.expect("entry").path())
            .collect();
        stems.sort();
        for path in stems {
            anns.push(parse_annotation(&std::fs::read_to_string(path).expect("read xml"))?);
        }
        anns
    };
    let tiles = tile_dataset(
        &annotations,
        &root.join("frames"),
        &root.join("tiles"),
        &TileDatasetOptions::default(),
    )?;
    println!("tiled {} frames into {} tiles", annotations.len(), tiles.len());

    // Three augmented copies per tile, fully seeded.
    let aug_rows = augment_dataset(
        &root.join("tiles"),
        &root.join("aug"),
        &AugmentOptions { multiplicity: 3, seed: 42, ..Default::default() },
    )?;
    println!("augmented dataset holds {} items", aug_rows.len());

    // 80/20 split over augmented tiles.
    let ids: Vec<String> = aug_rows.iter().map(|r| r.aug_id.clone()).collect();
    let (train, val) = split_train_val(&ids, 0.8, 42)?;
    println!("split: {} train / {} val", train.len(), val.len());

    // Pretend a model ran on the validation tiles: jitter the ground
    // truths and add some low-confidence noise.
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut val_anns = Vec::new();
    let mut dets: Vec<Detection> = Vec::new();
    for id in &val {
        let xml = std::fs::read_to_string(root.join("aug").join(format!("{id}.xml")))
            .expect("read tile xml");
        let ann = parse_annotation(&xml)?;
        for obj in &ann.objects {
            let d = |rng: &mut ChaCha8Rng| rng.random_range(-30..=30) as f64 / 10.0;
            let (dx, dy) = (d(&mut rng), d(&mut rng));
            let b = obj.bbox;
            let xmin = (b.xmin + dx).clamp(0.0, 298.0);
            let ymin = (b.ymin + dy).clamp(0.0, 298.0);
            dets.push(Detection {
                image_id: id.clone(),
                label: "tomato".into(),
                confidence: rng.random_range(35..=99) as f64 / 100.0,
                bbox: BBox::new(
                    xmin,
                    ymin,
                    (b.xmax + dx).clamp(xmin + 1.0, 300.0),
                    (b.ymax + dy).clamp(ymin + 1.0, 300.0),
                )?,
            });
        }
        if rng.random_bool(0.25) {
            dets.push(Detection {
                image_id: id.clone(),
                label: "tomato".into(),
                confidence: rng.random_range(5..=34) as f64 / 100.0,
                bbox: BBox::new(2.0, 2.0, 28.0, 28.0)?,
            });
        }
        val_anns.push(ann);
    }

    // Calibrate the confidence threshold on the validation split.
    let gts: GtMap = val_anns
        .iter()
        .map(|a| (a.image_id.clone(), a.objects.clone()))
        .collect();
    let result = sweep(&dets, &gts, &EvalConfig::default())?;
    let calib = Calibration::from(&result);
    println!(
        "calibrated threshold {}% (validation F1 {:.4})",
        calib.best_threshold_pct, calib.best_f1
    );

    // Evaluate with and without the calibrated threshold.
    let mut rows = Vec::new();
    for (name, threshold_pct) in [("all", 0.0), ("calibrated", calib.best_threshold_pct)] {
        let config = EvalConfig {
            confidence_threshold: threshold_pct / 100.0,
            ..EvalConfig::default()
        };
        let eval = evaluate(&dets, &val_anns, &config)?;
        let m = &eval.per_class["tomato"];
        rows.push(SummaryRow {
            model: format!("synthetic ({name})"),
            confidence_threshold_pct: threshold_pct,
            mean_inference_ms: None,
            map: eval.map,
            precision: m.precision,
            recall: m.recall,
        });
    }
    println!("\n{}", emit_summary(&rows, SummaryFormat::Markdown));
    println!("artifacts under {}", root.display());
    Ok(())
}
