//! Seeded, bbox-aware image augmentation.
//!
//! Seven transform families are supported: rotation, scaling, horizontal
//! translation, horizontal flip, Gaussian blur, additive Gaussian noise,
//! and a composition of three distinct single transforms. Geometric
//! parameters are sampled uniformly from fixed ranges; every sampled item
//! gets its own RNG derived from (global seed, item ordinal) so results do
//! not depend on worker count or iteration order.

use std::fmt;
use std::path::Path;

use image::RgbImage;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bbox::BBox;
use crate::error::{Error, Result};
use crate::tiling::{load_image, save_png, KeepPolicy};
use crate::voc::{parse_annotation, write_annotation, GroundTruthObject, ImageAnnotation};

/// Sampling ranges for the transform parameters.
pub mod ranges {
    /// Rotation angle in degrees.
    pub const ROTATION_DEG: (f64, f64) = (-60.0, 60.0);
    /// Scale factor.
    pub const SCALING: (f64, f64) = (0.50, 1.50);
    /// Horizontal translation as a fraction of image width (either side).
    pub const TRANSLATION_FRACTION: (f64, f64) = (0.0, 0.30);
    /// Gaussian blur kernel sigma.
    pub const BLUR_SIGMA: (f64, f64) = (1.0, 3.0);
    /// Additive noise sigma in 8-bit intensity units.
    pub const NOISE_SIGMA: (f64, f64) = (0.03 * 255.0, 0.07 * 255.0);
}

/// Transform family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Rotation,
    Scaling,
    Translation,
    Flip,
    Blur,
    Noise,
    Combination3,
}

/// The six single-transform families eligible for composition.
pub const SINGLE_VARIANTS: [Variant; 6] = [
    Variant::Rotation,
    Variant::Scaling,
    Variant::Translation,
    Variant::Flip,
    Variant::Blur,
    Variant::Noise,
];

/// All seven rows an augmented copy is drawn from.
pub const ALL_VARIANTS: [Variant; 7] = [
    Variant::Rotation,
    Variant::Scaling,
    Variant::Translation,
    Variant::Flip,
    Variant::Blur,
    Variant::Noise,
    Variant::Combination3,
];

impl Variant {
    pub fn slug(&self) -> &'static str {
        match self {
            Variant::Rotation => "rotation",
            Variant::Scaling => "scaling",
            Variant::Translation => "translation",
            Variant::Flip => "flip",
            Variant::Blur => "blur",
            Variant::Noise => "noise",
            Variant::Combination3 => "combo3",
        }
    }

    /// Canonical composition rank: geometric transforms come first
    /// (rotation, scaling, flip, translation), photometric after
    /// (blur, noise). Flip precedes translation so a sampled direction
    /// names the side the content actually moves toward.
    fn compose_rank(&self) -> u8 {
        match self {
            Variant::Rotation => 0,
            Variant::Scaling => 1,
            Variant::Flip => 2,
            Variant::Translation => 3,
            Variant::Blur => 4,
            Variant::Noise => 5,
            Variant::Combination3 => 6,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

/// A fully parameterised transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentOp {
    Rotation {
        degrees: f64,
    },
    Scaling {
        factor: f64,
    },
    /// Signed fraction of image width; negative moves content left.
    Translation {
        fraction: f64,
    },
    Flip,
    Blur {
        sigma: f64,
    },
    Noise {
        sigma: f64,
    },
    Combination3 {
        ops: Vec<AugmentOp>,
    },
}

impl AugmentOp {
    pub fn variant(&self) -> Variant {
        match self {
            AugmentOp::Rotation { .. } => Variant::Rotation,
            AugmentOp::Scaling { .. } => Variant::Scaling,
            AugmentOp::Translation { .. } => Variant::Translation,
            AugmentOp::Flip => Variant::Flip,
            AugmentOp::Blur { .. } => Variant::Blur,
            AugmentOp::Noise { .. } => Variant::Noise,
            AugmentOp::Combination3 { .. } => Variant::Combination3,
        }
    }

    pub fn is_geometric(&self) -> bool {
        matches!(
            self,
            AugmentOp::Rotation { .. }
                | AugmentOp::Scaling { .. }
                | AugmentOp::Translation { .. }
                | AugmentOp::Flip
        )
    }

    pub fn is_photometric(&self) -> bool {
        matches!(self, AugmentOp::Blur { .. } | AugmentOp::Noise { .. })
    }
}

/// Draws transform parameters uniformly from the fixed ranges.
pub fn sample_op(variant: Variant, rng: &mut impl Rng) -> AugmentOp {
    match variant {
        Variant::Rotation => AugmentOp::Rotation {
            degrees: rng.random_range(ranges::ROTATION_DEG.0..=ranges::ROTATION_DEG.1),
        },
        Variant::Scaling => AugmentOp::Scaling {
            factor: rng.random_range(ranges::SCALING.0..=ranges::SCALING.1),
        },
        Variant::Translation => {
            let magnitude = rng
                .random_range(ranges::TRANSLATION_FRACTION.0..=ranges::TRANSLATION_FRACTION.1);
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            AugmentOp::Translation {
                fraction: sign * magnitude,
            }
        }
        Variant::Flip => AugmentOp::Flip,
        Variant::Blur => AugmentOp::Blur {
            sigma: rng.random_range(ranges::BLUR_SIGMA.0..=ranges::BLUR_SIGMA.1),
        },
        Variant::Noise => AugmentOp::Noise {
            sigma: rng.random_range(ranges::NOISE_SIGMA.0..=ranges::NOISE_SIGMA.1),
        },
        Variant::Combination3 => {
            // Partial Fisher-Yates over the six singles, then canonical order.
            let mut pool = SINGLE_VARIANTS.to_vec();
            for i in 0..3 {
                let j = i + rng.random_range(0..pool.len() - i);
                pool.swap(i, j);
            }
            let mut chosen = pool[..3].to_vec();
            chosen.sort_by_key(Variant::compose_rank);
            let ops = chosen.into_iter().map(|v| sample_op(v, rng)).collect();
            AugmentOp::Combination3 { ops }
        }
    }
}

/// Row-major 2x3 affine map: `x' = m0 x + m1 y + m2`, `y' = m3 x + m4 y + m5`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub m: [f64; 6],
}

impl Affine {
    pub fn identity() -> Affine {
        Affine {
            m: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        }
    }

    pub fn translation(dx: f64, dy: f64) -> Affine {
        Affine {
            m: [1.0, 0.0, dx, 0.0, 1.0, dy],
        }
    }

    pub fn rotation_about_deg(degrees: f64, cx: f64, cy: f64) -> Affine {
        let rad = degrees.to_radians();
        let (sin, cos) = rad.sin_cos();
        // p' = R (p - c) + c
        Affine {
            m: [
                cos,
                -sin,
                cx - cos * cx + sin * cy,
                sin,
                cos,
                cy - sin * cx - cos * cy,
            ],
        }
    }

    pub fn scaling_about(factor: f64, cx: f64, cy: f64) -> Affine {
        Affine {
            m: [factor, 0.0, cx * (1.0 - factor), 0.0, factor, cy * (1.0 - factor)],
        }
    }

    pub fn flip_horizontal(width: f64) -> Affine {
        Affine {
            m: [-1.0, 0.0, width, 0.0, 1.0, 0.0],
        }
    }

    pub fn apply(&self, p: (f64, f64)) -> (f64, f64) {
        let [a, b, c, d, e, f] = self.m;
        (a * p.0 + b * p.1 + c, d * p.0 + e * p.1 + f)
    }

    /// `self` first, then `next`.
    pub fn then(&self, next: &Affine) -> Affine {
        let [a1, b1, c1, d1, e1, f1] = self.m;
        let [a2, b2, c2, d2, e2, f2] = next.m;
        Affine {
            m: [
                a2 * a1 + b2 * d1,
                a2 * b1 + b2 * e1,
                a2 * c1 + b2 * f1 + c2,
                d2 * a1 + e2 * d1,
                d2 * b1 + e2 * e1,
                d2 * c1 + e2 * f1 + f2,
            ],
        }
    }

    pub fn inverse(&self) -> Affine {
        let [a, b, c, d, e, f] = self.m;
        let det = a * e - b * d;
        assert!(det.abs() > 1e-12, "singular affine transform");
        let ia = e / det;
        let ib = -b / det;
        let id = -d / det;
        let ie = a / det;
        Affine {
            m: [ia, ib, -(ia * c + ib * f), id, ie, -(id * c + ie * f)],
        }
    }
}

/// Affine map of a geometric op on a `width x height` canvas. Rotation and
/// scaling act about the canvas centre, translation along x only.
pub fn geometric_affine(op: &AugmentOp, width: u32, height: u32) -> Result<Affine> {
    let cx = width as f64 / 2.0;
    let cy = height as f64 / 2.0;
    match op {
        AugmentOp::Rotation { degrees } => Ok(Affine::rotation_about_deg(*degrees, cx, cy)),
        AugmentOp::Scaling { factor } => Ok(Affine::scaling_about(*factor, cx, cy)),
        AugmentOp::Translation { fraction } => {
            Ok(Affine::translation(fraction * width as f64, 0.0))
        }
        AugmentOp::Flip => Ok(Affine::flip_horizontal(width as f64)),
        other => Err(Error::Usage(format!(
            "{} is not a geometric transform",
            other.variant()
        ))),
    }
}

fn bilinear_sample(img: &RgbImage, fx: f64, fy: f64) -> [f64; 3] {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let x0 = fx.floor() as i64;
    let y0 = fy.floor() as i64;
    let dx = fx - x0 as f64;
    let dy = fy - y0 as f64;
    let mut acc = [0.0f64; 3];
    for (yy, wy) in [(y0, 1.0 - dy), (y0 + 1, dy)] {
        for (xx, wx) in [(x0, 1.0 - dx), (x0 + 1, dx)] {
            let weight = wx * wy;
            if weight == 0.0 {
                continue;
            }
            if xx >= 0 && xx < w && yy >= 0 && yy < h {
                let p = img.get_pixel(xx as u32, yy as u32);
                for ch in 0..3 {
                    acc[ch] += weight * p[ch] as f64;
                }
            }
            // Out-of-canvas samples contribute black fill.
        }
    }
    acc
}

/// Warps an image through an affine map by inverse mapping with bilinear
/// sampling; regions pulled from outside the source are black.
pub fn warp_image(img: &RgbImage, transform: &Affine) -> RgbImage {
    let inv = transform.inverse();
    let (w, h) = img.dimensions();
    RgbImage::from_fn(w, h, |x, y| {
        let (sx, sy) = inv.apply((x as f64 + 0.5, y as f64 + 0.5));
        let acc = bilinear_sample(img, sx - 0.5, sy - 0.5);
        image::Rgb([
            acc[0].round().clamp(0.0, 255.0) as u8,
            acc[1].round().clamp(0.0, 255.0) as u8,
            acc[2].round().clamp(0.0, 255.0) as u8,
        ])
    })
}

/// Maps boxes through an affine transform: each box's four corners are
/// transformed, the axis-aligned hull is clipped to the canvas, and the
/// keep policy is applied against the pre-transform area.
pub fn transform_boxes(
    boxes: &[GroundTruthObject],
    transform: &Affine,
    width: u32,
    height: u32,
    keep_policy: &KeepPolicy,
) -> Vec<GroundTruthObject> {
    boxes
        .iter()
        .filter_map(|obj| {
            let corners: Vec<(f64, f64)> =
                obj.bbox.corners().iter().map(|&p| transform.apply(p)).collect();
            let hull = BBox::hull_of(&corners);
            let clipped = hull.clip(width as f64, height as f64)?;
            let fraction = clipped.area() / obj.bbox.area();
            if fraction < keep_policy.min_visible_fraction
                || clipped.width() < keep_policy.min_side_px
                || clipped.height() < keep_policy.min_side_px
            {
                return None;
            }
            Some(GroundTruthObject {
                label: obj.label.clone(),
                bbox: clipped,
            })
        })
        .collect()
}

/// Applies one geometric transform to an image and its boxes.
pub fn apply_geometric(
    image: &RgbImage,
    boxes: &[GroundTruthObject],
    op: &AugmentOp,
    keep_policy: &KeepPolicy,
) -> Result<(RgbImage, Vec<GroundTruthObject>)> {
    let (w, h) = image.dimensions();
    let transform = geometric_affine(op, w, h)?;
    let warped = warp_image(image, &transform);
    let mapped = transform_boxes(boxes, &transform, w, h, keep_policy);
    Ok((warped, mapped))
}

fn reflect_index(mut i: i64, n: i64) -> i64 {
    // Mirror repeatedly until inside [0, n).
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i;
        }
    }
}

/// Separable Gaussian blur with kernel radius `ceil(3*sigma)` and
/// reflected edges.
pub fn gaussian_blur(img: &RgbImage, sigma: f64) -> RgbImage {
    assert!(sigma > 0.0, "blur sigma must be positive");
    let radius = (3.0 * sigma).ceil() as i64;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let norm: f64 = kernel.iter().sum();
    let kernel: Vec<f64> = kernel.into_iter().map(|k| k / norm).collect();

    let (w, h) = (img.width() as i64, img.height() as i64);
    // Horizontal pass into a float buffer, then vertical pass.
    let mut mid = vec![0.0f64; (w * h * 3) as usize];
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0f64; 3];
            for (k, kw) in kernel.iter().enumerate() {
                let sx = reflect_index(x + k as i64 - radius, w);
                let p = img.get_pixel(sx as u32, y as u32);
                for ch in 0..3 {
                    acc[ch] += kw * p[ch] as f64;
                }
            }
            let base = ((y * w + x) * 3) as usize;
            mid[base..base + 3].copy_from_slice(&acc);
        }
    }
    RgbImage::from_fn(img.width(), img.height(), |x, y| {
        let mut acc = [0.0f64; 3];
        for (k, kw) in kernel.iter().enumerate() {
            let sy = reflect_index(y as i64 + k as i64 - radius, h);
            let base = ((sy * w + x as i64) * 3) as usize;
            for ch in 0..3 {
                acc[ch] += kw * mid[base + ch];
            }
        }
        image::Rgb([
            acc[0].round().clamp(0.0, 255.0) as u8,
            acc[1].round().clamp(0.0, 255.0) as u8,
            acc[2].round().clamp(0.0, 255.0) as u8,
        ])
    })
}

/// Adds independent per-pixel, per-channel Gaussian noise, clamped to
/// [0, 255].
pub fn add_gaussian_noise(img: &RgbImage, sigma: f64, rng: &mut impl Rng) -> RgbImage {
    let normal = Normal::new(0.0, sigma).expect("valid noise sigma");
    let mut out = img.clone();
    for p in out.pixels_mut() {
        for ch in 0..3 {
            let v = p[ch] as f64 + normal.sample(rng);
            p[ch] = v.round().clamp(0.0, 255.0) as u8;
        }
    }
    out
}

/// Applies a photometric transform. Annotations are untouched by these, so
/// only the image is returned.
pub fn apply_photometric(
    image: &RgbImage,
    op: &AugmentOp,
    rng: &mut impl Rng,
) -> Result<RgbImage> {
    match op {
        AugmentOp::Blur { sigma } => Ok(gaussian_blur(image, *sigma)),
        AugmentOp::Noise { sigma } => Ok(add_gaussian_noise(image, *sigma, rng)),
        other => Err(Error::Usage(format!(
            "{} is not a photometric transform",
            other.variant()
        ))),
    }
}

/// Applies a composition of three distinct single transforms: the
/// geometric members collapse into one affine map (single warp, single
/// corner-hull box mapping), photometric members follow.
pub fn apply_combination3(
    image: &RgbImage,
    boxes: &[GroundTruthObject],
    ops: &[AugmentOp],
    rng: &mut impl Rng,
    keep_policy: &KeepPolicy,
) -> Result<(RgbImage, Vec<GroundTruthObject>)> {
    if ops.len() != 3 {
        return Err(Error::Usage(format!(
            "combination requires exactly 3 transforms, got {}",
            ops.len()
        )));
    }
    let mut seen = Vec::new();
    for op in ops {
        let v = op.variant();
        if v == Variant::Combination3 {
            return Err(Error::Usage("combinations cannot nest".into()));
        }
        if seen.contains(&v) {
            return Err(Error::Usage(format!("duplicate transform {v} in combination")));
        }
        seen.push(v);
    }
    let mut ordered = ops.to_vec();
    ordered.sort_by_key(|op| op.variant().compose_rank());

    let (w, h) = image.dimensions();
    let mut transform = Affine::identity();
    let mut has_geometric = false;
    for op in ordered.iter().filter(|op| op.is_geometric()) {
        transform = transform.then(&geometric_affine(op, w, h)?);
        has_geometric = true;
    }

    let (mut img, mapped) = if has_geometric {
        (
            warp_image(image, &transform),
            transform_boxes(boxes, &transform, w, h, keep_policy),
        )
    } else {
        (image.clone(), boxes.to_vec())
    };
    for op in ordered.iter().filter(|op| op.is_photometric()) {
        img = apply_photometric(&img, op, rng)?;
    }
    Ok((img, mapped))
}

/// Applies any sampled op to an image and its boxes.
pub fn apply_op(
    image: &RgbImage,
    boxes: &[GroundTruthObject],
    op: &AugmentOp,
    rng: &mut impl Rng,
    keep_policy: &KeepPolicy,
) -> Result<(RgbImage, Vec<GroundTruthObject>)> {
    if op.is_geometric() {
        apply_geometric(image, boxes, op, keep_policy)
    } else if op.is_photometric() {
        Ok((apply_photometric(image, op, rng)?, boxes.to_vec()))
    } else if let AugmentOp::Combination3 { ops } = op {
        apply_combination3(image, boxes, ops, rng, keep_policy)
    } else {
        unreachable!()
    }
}

/// Per-item seed derivation: identical (global seed, dataset ordering)
/// yields identical output regardless of parallelism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPolicy {
    pub global_seed: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeedPolicy {
    pub fn new(global_seed: u64) -> SeedPolicy {
        SeedPolicy { global_seed }
    }

    pub fn item_seed(&self, ordinal: u64) -> u64 {
        splitmix64(self.global_seed.wrapping_add(splitmix64(ordinal)))
    }

    pub fn rng_for_item(&self, ordinal: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.item_seed(ordinal))
    }
}

/// One row of the augmentation manifest CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AugManifestRow {
    pub aug_id: String,
    pub source_id: String,
    pub variant: String,
    pub params_json: String,
}

#[derive(Debug, Clone)]
pub struct AugmentOptions {
    /// Extra transformed copies emitted per source tile.
    pub multiplicity: u32,
    pub seed: u64,
    pub keep_policy: KeepPolicy,
}

impl Default for AugmentOptions {
    fn default() -> Self {
        AugmentOptions {
            multiplicity: 3,
            seed: 0,
            keep_policy: KeepPolicy::default(),
        }
    }
}

/// Augments a tiled dataset: every source tile is copied through and
/// `multiplicity` transformed variants are emitted next to it, with ids
/// `<tile_id>_aug<k>_<variant>`. Writes an `augmented.csv` manifest sorted
/// by id. Fully deterministic for a fixed (input, seed).
pub fn augment_dataset(
    tiles_dir: &Path,
    out_dir: &Path,
    opts: &AugmentOptions,
) -> Result<Vec<AugManifestRow>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut stems: Vec<String> = std::fs::read_dir(tiles_dir)
        .map_err(|e| Error::io(tiles_dir, e))?
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

    let policy = SeedPolicy::new(opts.seed);
    let mut rows: Vec<AugManifestRow> = stems
        .par_iter()
        .enumerate()
        .map(|(index, stem)| {
            augment_one_tile(stem, index as u64, tiles_dir, out_dir, opts, &policy)
        })
        .collect::<Result<Vec<Vec<AugManifestRow>>>>()?
        .into_iter()
        .flatten()
        .collect();
    rows.sort_by(|a, b| a.aug_id.cmp(&b.aug_id));

    let manifest_path = out_dir.join("augmented.csv");
    let mut writer = csv::Writer::from_path(&manifest_path)
        .map_err(|e| Error::io(&manifest_path, std::io::Error::other(e.to_string())))?;
    for row in &rows {
        writer
            .serialize(row)
            .map_err(|e| Error::io(&manifest_path, std::io::Error::other(e.to_string())))?;
    }
    writer.flush().map_err(|e| Error::io(&manifest_path, e))?;
    Ok(rows)
}

fn augment_one_tile(
    stem: &str,
    index: u64,
    tiles_dir: &Path,
    out_dir: &Path,
    opts: &AugmentOptions,
    policy: &SeedPolicy,
) -> Result<Vec<AugManifestRow>> {
    let xml_path = tiles_dir.join(format!("{stem}.xml"));
    let xml = std::fs::read_to_string(&xml_path).map_err(|e| Error::io(&xml_path, e))?;
    let ann = parse_annotation(&xml)?;
    let img_path = tiles_dir.join(format!("{stem}.png"));
    let image = load_image(&img_path)?;

    let mut rows = Vec::with_capacity(1 + opts.multiplicity as usize);

    // Pass the original through untouched.
    std::fs::copy(&img_path, out_dir.join(format!("{stem}.png")))
        .map_err(|e| Error::io(&img_path, e))?;
    std::fs::copy(&xml_path, out_dir.join(format!("{stem}.xml")))
        .map_err(|e| Error::io(&xml_path, e))?;
    rows.push(AugManifestRow {
        aug_id: stem.to_string(),
        source_id: stem.to_string(),
        variant: "original".into(),
        params_json: "{}".into(),
    });

    for k in 1..=opts.multiplicity {
        let ordinal = index * opts.multiplicity as u64 + (k as u64 - 1);
        let mut rng = policy.rng_for_item(ordinal);
        let variant = ALL_VARIANTS[rng.random_range(0..ALL_VARIANTS.len())];
        let op = sample_op(variant, &mut rng);
        let (aug_img, aug_boxes) =
            apply_op(&image, &ann.objects, &op, &mut rng, &opts.keep_policy)?;

        let aug_id = format!("{stem}_aug{k}_{}", variant.slug());
        let aug_ann = ImageAnnotation {
            image_id: aug_id.clone(),
            width: ann.width,
            height: ann.height,
            depth: ann.depth,
            objects: aug_boxes,
        };
        save_png(&aug_img, &out_dir.join(format!("{aug_id}.png")))?;
        let out_xml = out_dir.join(format!("{aug_id}.xml"));
        std::fs::write(&out_xml, write_annotation(&aug_ann)?)
            .map_err(|e| Error::io(&out_xml, e))?;
        rows.push(AugManifestRow {
            aug_id,
            source_id: stem.to_string(),
            variant: variant.slug().to_string(),
            params_json: serde_json::to_string(&op).expect("op serializes"),
        });
    }
    Ok(rows)
}
