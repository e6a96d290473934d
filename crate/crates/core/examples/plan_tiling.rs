//! Tiling plans: minimum-overlap coverage of a full frame and box
//! remapping into tile-local coordinates.

use vocdet::bbox::BBox;
use vocdet::tiling::{plan_tiles, remap_boxes, KeepPolicy};
use vocdet::voc::GroundTruthObject;

fn main() -> vocdet::Result<()> {
    // A 1280x720 frame cut into 300 px tiles with at least 20% overlap
    // needs a 6x3 grid; the surplus is spread evenly over the strides.
    let plan = plan_tiles(1280, 720, 300, 0.20)?;
    println!(
        "{} cols x {} rows = {} tiles, strides {} / {}",
        plan.n_cols(),
        plan.n_rows(),
        plan.tiles.len(),
        plan.stride_x,
        plan.stride_y
    );
    println!("column offsets: {:?}", plan.col_offsets);
    println!("row offsets   : {:?}", plan.row_offsets);
    println!(
        "overlaps      : {} px horizontal, {} px vertical",
        300 - plan.stride_x,
        300 - plan.stride_y
    );

    // Remapping a parent-coordinate box into one tile clips it to the tile
    // window and drops slivers the keep policy rejects.
    let objects = vec![GroundTruthObject {
        label: "tomato".into(),
        bbox: BBox::new(100.0, 50.0, 250.0, 150.0)?,
    }];
    let tile = plan.tiles_for("frame_0001")[1].clone();
    println!("\ntile {} covers x in [{}, {})", tile.id(), tile.x0, tile.x0 + tile.size);

    for min_visible in [0.30, 0.50] {
        let policy = KeepPolicy {
            min_visible_fraction: min_visible,
            min_side_px: 10.0,
        };
        let kept = remap_boxes(&objects, &tile, &policy);
        match kept.first() {
            Some(obj) => println!("min_visible {min_visible}: kept as {:?}", obj.bbox),
            None => println!("min_visible {min_visible}: dropped"),
        }
    }

    // A tile larger than the image is refused outright.
    println!("\n600x300 frame: {:?}", plan_tiles(600, 300, 300, 0.2)?.col_offsets);
    println!("200-wide frame: {}", plan_tiles(200, 720, 300, 0.2).unwrap_err());
    Ok(())
}
