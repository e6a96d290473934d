//! Frame-sequence subsampling and deterministic train/val splitting.

use std::path::PathBuf;

use vocdet::manifest::{split_train_val, subsample_frames, FrameRecord};

fn main() -> vocdet::Result<()> {
    // 30 seconds of 30 fps video, one frame kept every 3 seconds.
    let frames: Vec<FrameRecord> = (0..900)
        .map(|i| FrameRecord {
            path: PathBuf::from(format!("frames/frame_{i:04}.png")),
            timestamp: i as f64 / 30.0,
        })
        .collect();
    let selected = subsample_frames(&frames, 3.0)?;
    println!(
        "kept {} of {} frames at t = {:?}",
        selected.len(),
        frames.len(),
        selected.iter().map(|f| f.timestamp).collect::<Vec<_>>()
    );

    // Irregular timestamps follow the same greedy rule: next frame at
    // least `interval` seconds after the last selected one.
    let irregular: Vec<FrameRecord> = [0.0, 2.9, 3.0, 5.9, 6.1]
        .iter()
        .enumerate()
        .map(|(i, &t)| FrameRecord {
            path: PathBuf::from(format!("f{i}.png")),
            timestamp: t,
        })
        .collect();
    let picked = subsample_frames(&irregular, 3.0)?;
    println!(
        "irregular {:?} -> {:?}",
        irregular.iter().map(|f| f.timestamp).collect::<Vec<_>>(),
        picked.iter().map(|f| f.timestamp).collect::<Vec<_>>()
    );

    // A seeded shuffle splits 23,021 tiles into 18,417 train / 4,604 val
    // at the 80% fraction; the same seed always yields the same split.
    let ids: Vec<String> = (0..23_021).map(|i| format!("tile_{i:05}")).collect();
    let (train, val) = split_train_val(&ids, 0.8, 7)?;
    println!("split {} items -> {} train / {} val", ids.len(), train.len(), val.len());
    let (train_again, _) = split_train_val(&ids, 0.8, 7)?;
    println!("same seed reproduces split: {}", train == train_again);
    Ok(())
}
