//! Shared helpers for integration tests: synthetic corpus generation and
//! deterministic scene sampling.
//!
//! Each test binary compiles this module separately, so not every helper
//! is referenced by every binary.
#![allow(dead_code)]

use std::path::Path;

use image::RgbImage;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use vocdet::bbox::BBox;
use vocdet::voc::{Detection, GroundTruthObject, ImageAnnotation};

/// A deterministic 1280x720 frame: smooth background with solid rectangles
/// where the annotated objects sit.
pub fn synthetic_frame(frame_index: u32, boxes: &[BBox]) -> RgbImage {
    let mut img = RgbImage::from_fn(1280, 720, |x, y| {
        let g = 80 + ((x * 13 + y * 7 + frame_index * 29) % 60) as u8;
        image::Rgb([28, g, 36])
    });
    for b in boxes {
        for y in b.ymin as u32..b.ymax as u32 {
            for x in b.xmin as u32..b.xmax as u32 {
                img.put_pixel(x, y, image::Rgb([204, 44, 32]));
            }
        }
    }
    img
}

/// Seeded boxes for one frame, kept inside the canvas.
pub fn synthetic_boxes(rng: &mut ChaCha8Rng, count: usize) -> Vec<BBox> {
    (0..count)
        .map(|_| {
            let w = rng.random_range(30..90) as f64;
            let h = rng.random_range(30..90) as f64;
            let x0 = rng.random_range(0..(1280 - 100)) as f64;
            let y0 = rng.random_range(0..(720 - 100)) as f64;
            BBox::new(x0, y0, x0 + w, y0 + h).unwrap()
        })
        .collect()
}

/// Writes `count` annotated frames (PNG + VOC XML) into `images`/`ann`.
pub fn write_corpus(
    images: &Path,
    ann: &Path,
    count: u32,
    seed: u64,
) -> Vec<ImageAnnotation> {
    use rand::SeedableRng;
    std::fs::create_dir_all(images).unwrap();
    std::fs::create_dir_all(ann).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for f in 0..count {
        let n = rng.random_range(2..6);
        let boxes = synthetic_boxes(&mut rng, n);
        let id = format!("frame_{f:04}");
        let record = ImageAnnotation {
            image_id: id.clone(),
            width: 1280,
            height: 720,
            depth: 3,
            objects: boxes
                .iter()
                .map(|b| GroundTruthObject {
                    label: "tomato".into(),
                    bbox: *b,
                })
                .collect(),
        };
        synthetic_frame(f, &boxes)
            .save_with_format(images.join(format!("{id}.png")), image::ImageFormat::Png)
            .unwrap();
        std::fs::write(
            ann.join(format!("{id}.xml")),
            vocdet::voc::write_annotation(&record).unwrap(),
        )
        .unwrap();
        out.push(record);
    }
    out
}

/// A random single-image scene: ground truths on a slot grid plus
/// detections that either sit on a slot (candidate TP) or far away (FP).
/// Confidences are quantized to two decimals so ties occur.
pub fn random_scene(
    rng: &mut ChaCha8Rng,
    max_dets: usize,
    max_gts: usize,
) -> (Vec<Detection>, Vec<GroundTruthObject>) {
    let n_gts = rng.random_range(0..=max_gts);
    let gts: Vec<GroundTruthObject> = (0..n_gts)
        .map(|slot| {
            let x = slot as f64 * 40.0;
            let w = rng.random_range(10..30) as f64;
            let h = rng.random_range(10..30) as f64;
            GroundTruthObject {
                label: "tomato".into(),
                bbox: BBox::new(x, 0.0, x + w, h).unwrap(),
            }
        })
        .collect();
    let n_dets = rng.random_range(0..=max_dets);
    let dets: Vec<Detection> = (0..n_dets)
        .map(|_| {
            let confidence = rng.random_range(0..=100) as f64 / 100.0;
            let bbox = if !gts.is_empty() && rng.random_bool(0.7) {
                // Perturb a ground truth so IoU varies around the gate.
                let gt = &gts[rng.random_range(0..gts.len())].bbox;
                let dx = rng.random_range(-8..=8) as f64;
                let dy = rng.random_range(-8..=8) as f64;
                let grow = rng.random_range(-5..=5) as f64;
                BBox::new(
                    (gt.xmin + dx).max(0.0),
                    (gt.ymin + dy).max(0.0),
                    (gt.xmax + dx + grow).max((gt.xmin + dx).max(0.0) + 1.0),
                    (gt.ymax + dy + grow).max((gt.ymin + dy).max(0.0) + 1.0),
                )
                .unwrap()
            } else {
                let x = 500.0 + rng.random_range(0..200) as f64;
                BBox::new(x, 0.0, x + 20.0, 20.0).unwrap()
            };
            Detection {
                image_id: "scene".into(),
                label: "tomato".into(),
                confidence,
                bbox,
            }
        })
        .collect();
    (dets, gts)
}
