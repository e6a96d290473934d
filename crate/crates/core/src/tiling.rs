//! Fixed-size square tiling with a guaranteed minimum overlap ratio.
//!
//! The planner distributes the overlap surplus evenly across each axis
//! (uniform stride via rounding) instead of clamping the last tile, so both
//! image edges get the same context.

use std::path::{Path, PathBuf};

use image::RgbImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bbox::BBox;
use crate::error::{Error, Result};
use crate::voc::{write_annotation, GroundTruthObject, ImageAnnotation};

/// Placement of one tile within its parent image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileSpec {
    pub parent_id: String,
    pub col: u32,
    pub row: u32,
    pub x0: u32,
    pub y0: u32,
    pub size: u32,
}

impl TileSpec {
    /// Stable, sortable, collision-free tile id.
    pub fn id(&self) -> String {
        format!("{}_r{}_c{}", self.parent_id, self.row, self.col)
    }

    pub fn window(&self) -> BBox {
        BBox {
            xmin: self.x0 as f64,
            ymin: self.y0 as f64,
            xmax: (self.x0 + self.size) as f64,
            ymax: (self.y0 + self.size) as f64,
        }
    }
}

/// Complete tiling of one parent image size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TilePlan {
    pub parent_width: u32,
    pub parent_height: u32,
    pub tile_size: u32,
    /// Nominal stride per axis; actual offsets may differ by 1 px from a
    /// uniform grid because of rounding.
    pub stride_x: u32,
    pub stride_y: u32,
    pub col_offsets: Vec<u32>,
    pub row_offsets: Vec<u32>,
    pub tiles: Vec<TileSpec>,
}

impl TilePlan {
    pub fn n_cols(&self) -> usize {
        self.col_offsets.len()
    }

    pub fn n_rows(&self) -> usize {
        self.row_offsets.len()
    }

    /// Tiles bound to a concrete parent id, row-major.
    pub fn tiles_for(&self, parent_id: &str) -> Vec<TileSpec> {
        self.tiles
            .iter()
            .map(|t| TileSpec {
                parent_id: parent_id.to_string(),
                ..t.clone()
            })
            .collect()
    }
}

/// Rule deciding whether a clipped ground-truth box survives remapping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeepPolicy {
    /// Minimum visible fraction of the original box area.
    pub min_visible_fraction: f64,
    /// Minimum side length of the clipped box, in pixels.
    pub min_side_px: f64,
}

impl Default for KeepPolicy {
    fn default() -> Self {
        KeepPolicy {
            min_visible_fraction: 0.30,
            min_side_px: 10.0,
        }
    }
}

const OVERLAP_EPS: f64 = 1e-9;

/// Required overlap in whole pixels: `ceil(min_overlap * size)`, guarded
/// against float dust in the product.
fn required_overlap_px(size: u32, min_overlap: f64) -> u32 {
    (min_overlap * size as f64 - OVERLAP_EPS).ceil().max(0.0) as u32
}

/// Tile offsets along one axis: the minimal tile count whose maximum
/// allowed stride still covers the axis, with offsets evenly distributed.
fn plan_axis(length: u32, size: u32, min_overlap: f64) -> Result<Vec<u32>> {
    if size > length {
        return Err(Error::Size(format!(
            "tile size {size} exceeds axis length {length}"
        )));
    }
    if length == size {
        return Ok(vec![0]);
    }
    let max_stride = size - required_overlap_px(size, min_overlap);
    if max_stride == 0 {
        return Err(Error::Size(format!(
            "min_overlap {min_overlap} leaves no room to advance a {size} px tile"
        )));
    }
    let span = (length - size) as u64;
    let n = 1 + span.div_ceil(max_stride as u64); // minimal count
    let offsets = (0..n)
        .map(|i| ((i * span) as f64 / (n - 1) as f64).round() as u32)
        .collect();
    Ok(offsets)
}

fn nominal_stride(offsets: &[u32]) -> u32 {
    if offsets.len() < 2 {
        0
    } else {
        let span = *offsets.last().unwrap() as f64;
        (span / (offsets.len() - 1) as f64).round() as u32
    }
}

/// Plans the tiling of a `width x height` image into `size x size` tiles
/// with at least `min_overlap * size` pixels of overlap between adjacent
/// tiles on each axis that holds two or more tiles.
pub fn plan_tiles(width: u32, height: u32, size: u32, min_overlap: f64) -> Result<TilePlan> {
    if size == 0 {
        return Err(Error::Size("tile size must be positive".into()));
    }
    if !(0.0..1.0).contains(&min_overlap) {
        return Err(Error::Range(format!(
            "min_overlap {min_overlap} outside [0, 1)"
        )));
    }
    let col_offsets = plan_axis(width, size, min_overlap)?;
    let row_offsets = plan_axis(height, size, min_overlap)?;

    let mut tiles = Vec::with_capacity(col_offsets.len() * row_offsets.len());
    for (row, &y0) in row_offsets.iter().enumerate() {
        for (col, &x0) in col_offsets.iter().enumerate() {
            tiles.push(TileSpec {
                parent_id: String::new(),
                col: col as u32,
                row: row as u32,
                x0,
                y0,
                size,
            });
        }
    }

    let plan = TilePlan {
        parent_width: width,
        parent_height: height,
        tile_size: size,
        stride_x: nominal_stride(&col_offsets),
        stride_y: nominal_stride(&row_offsets),
        col_offsets,
        row_offsets,
        tiles,
    };
    debug_assert!(plan_is_sound(&plan, min_overlap));
    Ok(plan)
}

fn plan_is_sound(plan: &TilePlan, min_overlap: f64) -> bool {
    let req = required_overlap_px(plan.tile_size, min_overlap);
    for (offsets, length) in [
        (&plan.col_offsets, plan.parent_width),
        (&plan.row_offsets, plan.parent_height),
    ] {
        if offsets[0] != 0 || offsets.last().unwrap() + plan.tile_size != length {
            return false;
        }
        for pair in offsets.windows(2) {
            let stride = pair[1] - pair[0];
            if stride == 0 || plan.tile_size - stride < req {
                return false;
            }
        }
    }
    true
}

/// Copies the `size x size` pixel window of `spec` out of `image`.
pub fn crop_tile(image: &RgbImage, spec: &TileSpec) -> Result<RgbImage> {
    let (w, h) = image.dimensions();
    if spec.x0 + spec.size > w || spec.y0 + spec.size > h {
        return Err(Error::Geometry(format!(
            "tile at ({}, {}) size {} exceeds image bounds {}x{}",
            spec.x0, spec.y0, spec.size, w, h
        )));
    }
    Ok(image::imageops::crop_imm(image, spec.x0, spec.y0, spec.size, spec.size).to_image())
}

/// Intersects parent-coordinate boxes with the tile window, translates the
/// survivors into tile-local coordinates, and applies the keep policy.
pub fn remap_boxes(
    objects: &[GroundTruthObject],
    spec: &TileSpec,
    keep_policy: &KeepPolicy,
) -> Vec<GroundTruthObject> {
    let window = spec.window();
    objects
        .iter()
        .filter_map(|obj| {
            let inter = obj.bbox.intersection(&window)?;
            let fraction = inter.area() / obj.bbox.area();
            if fraction < keep_policy.min_visible_fraction
                || inter.width() < keep_policy.min_side_px
                || inter.height() < keep_policy.min_side_px
            {
                return None;
            }
            Some(GroundTruthObject {
                label: obj.label.clone(),
                bbox: inter.translate(-(spec.x0 as f64), -(spec.y0 as f64)),
            })
        })
        .collect()
}

/// One row of the tiling manifest CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TileManifestRow {
    pub tile_id: String,
    pub parent_id: String,
    pub x0: u32,
    pub y0: u32,
    pub size: u32,
    pub n_boxes: usize,
}

#[derive(Debug, Clone)]
pub struct TileDatasetOptions {
    pub tile_size: u32,
    pub min_overlap: f64,
    pub keep_policy: KeepPolicy,
    /// Omit tiles whose remapped annotation list is empty.
    pub drop_empty: bool,
}

impl Default for TileDatasetOptions {
    fn default() -> Self {
        TileDatasetOptions {
            tile_size: 300,
            min_overlap: 0.20,
            keep_policy: KeepPolicy::default(),
            drop_empty: false,
        }
    }
}

fn find_image_file(images_dir: &Path, image_id: &str) -> Result<PathBuf> {
    for ext in ["png", "jpg", "jpeg", "PNG", "JPG", "JPEG"] {
        let candidate = images_dir.join(format!("{image_id}.{ext}"));
        if candidate.is_file() {
            return Ok(candidate);
        }
    }
    Err(Error::io(
        images_dir.join(format!("{image_id}.png")),
        std::io::Error::new(std::io::ErrorKind::NotFound, "image file not found"),
    ))
}

pub fn load_image(path: &Path) -> Result<RgbImage> {
    let img = image::open(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(img.to_rgb8())
}

pub fn save_png(image: &RgbImage, path: &Path) -> Result<()> {
    image
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

/// Tiles every annotated parent image into `out_dir`, writing one PNG and
/// one VOC XML per retained tile plus a `tiles.csv` manifest. Parents are
/// processed in parallel; emitted records are sorted by tile id before the
/// manifest is written.
pub fn tile_dataset(
    annotations: &[ImageAnnotation],
    images_dir: &Path,
    out_dir: &Path,
    opts: &TileDatasetOptions,
) -> Result<Vec<TileManifestRow>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut rows: Vec<TileManifestRow> = annotations
        .par_iter()
        .map(|ann| tile_one_parent(ann, images_dir, out_dir, opts))
        .collect::<Result<Vec<Vec<TileManifestRow>>>>()?
        .into_iter()
        .flatten()
        .collect();
    rows.sort_by(|a, b| a.tile_id.cmp(&b.tile_id));

    write_tile_manifest(&rows, &out_dir.join("tiles.csv"))?;
    Ok(rows)
}

fn tile_one_parent(
    ann: &ImageAnnotation,
    images_dir: &Path,
    out_dir: &Path,
    opts: &TileDatasetOptions,
) -> Result<Vec<TileManifestRow>> {
    let image_path = find_image_file(images_dir, &ann.image_id)?;
    let image = load_image(&image_path)?;
    if image.dimensions() != (ann.width, ann.height) {
        return Err(Error::Consistency(format!(
            "'{}': annotation says {}x{} but raster is {}x{}",
            ann.image_id,
            ann.width,
            ann.height,
            image.width(),
            image.height()
        )));
    }
    let plan = plan_tiles(ann.width, ann.height, opts.tile_size, opts.min_overlap)?;

    let mut rows = Vec::new();
    for spec in plan.tiles_for(&ann.image_id) {
        let boxes = remap_boxes(&ann.objects, &spec, &opts.keep_policy);
        if opts.drop_empty && boxes.is_empty() {
            continue;
        }
        let tile_id = spec.id();
        let tile_ann = ImageAnnotation {
            image_id: tile_id.clone(),
            width: opts.tile_size,
            height: opts.tile_size,
            depth: ann.depth,
            objects: boxes,
        };
        let raster = crop_tile(&image, &spec)?;
        save_png(&raster, &out_dir.join(format!("{tile_id}.png")))?;
        let xml = write_annotation(&tile_ann)?;
        let xml_path = out_dir.join(format!("{tile_id}.xml"));
        std::fs::write(&xml_path, xml).map_err(|e| Error::io(&xml_path, e))?;
        rows.push(TileManifestRow {
            tile_id,
            parent_id: ann.image_id.clone(),
            x0: spec.x0,
            y0: spec.y0,
            size: spec.size,
            n_boxes: tile_ann.objects.len(),
        });
    }
    Ok(rows)
}

pub fn write_tile_manifest(rows: &[TileManifestRow], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| {
        Error::io(path, std::io::Error::other(e.to_string()))
    })?;
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    }
    writer
        .flush()
        .map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(x0: u32, y0: u32, size: u32) -> TileSpec {
        TileSpec {
            parent_id: "p".into(),
            col: 0,
            row: 0,
            x0,
            y0,
            size,
        }
    }

    #[test]
    fn full_frame_plan() {
        let plan = plan_tiles(1280, 720, 300, 0.20).unwrap();
        assert_eq!(plan.col_offsets, vec![0, 196, 392, 588, 784, 980]);
        assert_eq!(plan.row_offsets, vec![0, 210, 420]);
        assert_eq!(plan.tiles.len(), 18);
        assert_eq!((plan.stride_x, plan.stride_y), (196, 210));
    }

    #[test]
    fn single_tile_when_image_equals_tile() {
        let plan = plan_tiles(300, 300, 300, 0.20).unwrap();
        assert_eq!(plan.tiles.len(), 1);
        assert_eq!((plan.tiles[0].x0, plan.tiles[0].y0), (0, 0));
    }

    #[test]
    fn three_columns_for_600_wide() {
        // n=2 would need stride 300 > floor(0.8*300)=240, so n=3 with
        // even stride 150.
        let plan = plan_tiles(600, 300, 300, 0.20).unwrap();
        assert_eq!(plan.col_offsets, vec![0, 150, 300]);
        assert_eq!(plan.row_offsets, vec![0]);
    }

    #[test]
    fn oversized_tile_is_a_size_error() {
        assert!(matches!(
            plan_tiles(200, 720, 300, 0.20).unwrap_err(),
            Error::Size(_)
        ));
        assert!(matches!(
            plan_tiles(1280, 200, 300, 0.20).unwrap_err(),
            Error::Size(_)
        ));
    }

    #[test]
    fn crop_preserves_coordinates() {
        let img = RgbImage::from_fn(1280, 720, |x, y| {
            image::Rgb([(x % 256) as u8, (y % 256) as u8, ((x + y) % 256) as u8])
        });
        let tile = crop_tile(&img, &spec(196, 0, 300)).unwrap();
        assert_eq!(tile.dimensions(), (300, 300));
        assert_eq!(tile.get_pixel(0, 0), img.get_pixel(196, 0));
        assert_eq!(tile.get_pixel(299, 299), img.get_pixel(495, 299));
    }

    #[test]
    fn crop_rejects_out_of_bounds() {
        let img = RgbImage::new(1280, 720);
        assert!(matches!(
            crop_tile(&img, &spec(1000, 0, 300)).unwrap_err(),
            Error::Geometry(_)
        ));
    }

    fn gt(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> GroundTruthObject {
        GroundTruthObject {
            label: "tomato".into(),
            bbox: BBox::new(xmin, ymin, xmax, ymax).unwrap(),
        }
    }

    #[test]
    fn remap_pure_translation() {
        let kept = remap_boxes(&[gt(250.0, 50.0, 280.0, 100.0)], &spec(196, 0, 300), &KeepPolicy::default());
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].bbox, BBox::new(54.0, 50.0, 84.0, 100.0).unwrap());
    }

    #[test]
    fn remap_keep_policy_thresholds() {
        let boxes = [gt(100.0, 50.0, 250.0, 150.0)];
        let keep30 = KeepPolicy {
            min_visible_fraction: 0.30,
            min_side_px: 10.0,
        };
        let kept = remap_boxes(&boxes, &spec(196, 0, 300), &keep30);
        assert_eq!(kept.len(), 1);
        // Visible fraction (54*100)/(150*100) = 0.36 >= 0.30.
        assert_eq!(kept[0].bbox, BBox::new(0.0, 50.0, 54.0, 150.0).unwrap());

        let keep50 = KeepPolicy {
            min_visible_fraction: 0.50,
            min_side_px: 10.0,
        };
        assert!(remap_boxes(&boxes, &spec(196, 0, 300), &keep50).is_empty());
    }

    #[test]
    fn remap_sliver_dropped_by_min_side() {
        // 40 px tall but only 6 px survive horizontally.
        let boxes = [gt(190.0, 10.0, 202.0, 50.0)];
        let policy = KeepPolicy {
            min_visible_fraction: 0.0,
            min_side_px: 10.0,
        };
        assert!(remap_boxes(&boxes, &spec(196, 0, 300), &policy).is_empty());
    }

    #[test]
    fn drop_empty_keeps_exactly_the_windows_passing_keep_policy() {
        let dir = tempfile::tempdir().unwrap();
        let images = dir.path().join("images");
        let out = dir.path().join("tiles");
        std::fs::create_dir_all(&images).unwrap();

        // One centred box on a 1280x720 frame.
        let bbox = BBox::new(610.0, 330.0, 670.0, 390.0).unwrap();
        let ann = ImageAnnotation {
            image_id: "frame".into(),
            width: 1280,
            height: 720,
            depth: 3,
            objects: vec![GroundTruthObject {
                label: "tomato".into(),
                bbox,
            }],
        };
        RgbImage::new(1280, 720)
            .save(images.join("frame.png"))
            .unwrap();

        let opts = TileDatasetOptions {
            drop_empty: true,
            ..TileDatasetOptions::default()
        };
        let rows = tile_dataset(&[ann.clone()], &images, &out, &opts).unwrap();

        // Independent enumeration of the 18 windows.
        let plan = plan_tiles(1280, 720, 300, 0.20).unwrap();
        let mut expected: Vec<String> = plan
            .tiles_for("frame")
            .into_iter()
            .filter(|spec| !remap_boxes(&ann.objects, spec, &opts.keep_policy).is_empty())
            .map(|spec| spec.id())
            .collect();
        expected.sort();
        let got: Vec<String> = rows.iter().map(|r| r.tile_id.clone()).collect();
        assert_eq!(got, expected);
        assert!(!expected.is_empty() && expected.len() < 18);
        assert!(rows.iter().all(|r| r.n_boxes == 1));
    }

    #[test]
    fn empty_input_is_an_empty_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let rows = tile_dataset(
            &[],
            &dir.path().join("images"),
            &dir.path().join("out"),
            &TileDatasetOptions::default(),
        )
        .unwrap();
        assert!(rows.is_empty());
        assert!(dir.path().join("out/tiles.csv").is_file());
    }

    #[test]
    fn missing_image_is_io_error_naming_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let ann = ImageAnnotation {
            image_id: "ghost".into(),
            width: 1280,
            height: 720,
            depth: 3,
            objects: vec![],
        };
        let err = tile_dataset(
            &[ann],
            &dir.path().join("images"),
            &dir.path().join("out"),
            &TileDatasetOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("ghost"));
    }

    #[test]
    fn raster_annotation_mismatch_is_consistency_error() {
        let dir = tempfile::tempdir().unwrap();
        let images = dir.path().join("images");
        std::fs::create_dir_all(&images).unwrap();
        RgbImage::new(640, 480).save(images.join("frame.png")).unwrap();
        let ann = ImageAnnotation {
            image_id: "frame".into(),
            width: 1280,
            height: 720,
            depth: 3,
            objects: vec![],
        };
        let err = tile_dataset(
            &[ann],
            &images,
            &dir.path().join("out"),
            &TileDatasetOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Consistency(_)));
    }

    proptest! {
        #[test]
        fn coverage_overlap_minimality(
            length in 300u32..2000,
            size in 128u32..=512,
            overlap_pct in 0u32..80,
        ) {
            prop_assume!(size <= length);
            let min_overlap = overlap_pct as f64 / 100.0;
            let plan = plan_tiles(length, 1000.max(size), size, min_overlap).unwrap();
            let offsets = &plan.col_offsets;
            let req = required_overlap_px(size, min_overlap);

            // Coverage: every pixel of the axis belongs to >= 1 tile.
            prop_assert_eq!(offsets[0], 0);
            prop_assert_eq!(offsets.last().unwrap() + size, length);
            for pair in offsets.windows(2) {
                prop_assert!(pair[1] > pair[0]);
                prop_assert!(pair[1] <= pair[0] + size, "gap between tiles");
                // Overlap within 1 px of the requirement, asserted exactly.
                let ov = size - (pair[1] - pair[0]);
                prop_assert!(ov + 1 >= req, "overlap {} below {}", ov, req);
            }

            // Minimality: one tile fewer cannot satisfy both constraints.
            let n = offsets.len() as u64;
            if n > 1 {
                let max_stride = (size - req) as u64;
                let shorter = (n - 2) * max_stride + size as u64;
                prop_assert!(shorter < length as u64);
            }
        }

        #[test]
        fn remap_consistency(
            bx in 0.0f64..1200.0,
            by in 0.0f64..650.0,
            w in 1.0f64..400.0,
            h in 1.0f64..400.0,
            x0 in 0u32..980,
            y0 in 0u32..420,
        ) {
            let b = BBox::new(bx, by, (bx + w).min(1280.0), (by + h).min(720.0));
            prop_assume!(b.is_ok());
            let b = b.unwrap();
            let window_spec = spec(x0, y0, 300);
            let policy = KeepPolicy { min_visible_fraction: 0.0, min_side_px: 0.0 };
            let kept = remap_boxes(&[GroundTruthObject { label: "t".into(), bbox: b }], &window_spec, &policy);
            let inter = b.intersection(&window_spec.window());
            match (kept.first(), inter) {
                (Some(obj), Some(i)) => {
                    // Translating back recovers the geometric intersection.
                    let back = obj.bbox.translate(x0 as f64, y0 as f64);
                    prop_assert!((back.xmin - i.xmin).abs() < 1e-12);
                    prop_assert!((back.ymin - i.ymin).abs() < 1e-12);
                    prop_assert!((back.xmax - i.xmax).abs() < 1e-12);
                    prop_assert!((back.ymax - i.ymax).abs() < 1e-12);
                }
                (None, None) => {}
                (a, b) => prop_assert!(false, "mismatch: kept={:?} inter={:?}", a.is_some(), b.is_some()),
            }
        }
    }
}
