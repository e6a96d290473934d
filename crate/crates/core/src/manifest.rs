//! Frame-sequence subsampling, train/validation splitting, and manifest
//! bookkeeping.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::voc::parse_annotation;

/// One frame of an image sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub path: PathBuf,
    /// Seconds; non-decreasing within a sequence.
    pub timestamp: f64,
}

/// Greedy time-based subsampling: the first frame is always selected, then
/// every next frame whose timestamp is at least `interval` past the last
/// selected one. Idempotent for a fixed interval.
pub fn subsample_frames(frames: &[FrameRecord], interval: f64) -> Result<Vec<FrameRecord>> {
    if interval <= 0.0 || !interval.is_finite() {
        return Err(Error::Usage(format!("interval must be positive, got {interval}")));
    }
    for pair in frames.windows(2) {
        if pair[1].timestamp < pair[0].timestamp {
            return Err(Error::Ordering(format!(
                "timestamps out of order: {} after {}",
                pair[1].timestamp, pair[0].timestamp
            )));
        }
    }
    let mut selected: Vec<FrameRecord> = Vec::new();
    for frame in frames {
        match selected.last() {
            None => selected.push(frame.clone()),
            Some(last) if frame.timestamp >= last.timestamp + interval => {
                selected.push(frame.clone())
            }
            _ => {}
        }
    }
    Ok(selected)
}

/// Reads a frames CSV with header `path,timestamp`.
pub fn read_frames_csv(path: &Path) -> Result<Vec<FrameRecord>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    let mut frames = Vec::new();
    for record in reader.deserialize::<FrameRecord>() {
        frames.push(record.map_err(|e| Error::Consistency(format!("{}: {e}", path.display())))?);
    }
    Ok(frames)
}

pub fn write_frames_csv(frames: &[FrameRecord], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    for frame in frames {
        writer
            .serialize(frame)
            .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Unbiased draw of an index in `0..=upper` from the top 64 bits of a
/// widening multiply; keeps the shuffle independent of `rand` internals.
fn draw_index(rng: &mut ChaCha8Rng, upper: u64) -> u64 {
    use rand::RngCore;
    (((rng.next_u64() as u128) * ((upper + 1) as u128)) >> 64) as u64
}

/// Deterministic Fisher-Yates shuffle keyed by the seed; stable across
/// platforms and releases.
fn shuffle<T>(items: &mut [T], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..items.len()).rev() {
        let j = draw_index(&mut rng, i as u64) as usize;
        items.swap(i, j);
    }
}

/// Splits item ids into disjoint, covering train/val sets with
/// `|train| = round(train_fraction * N)` after a seeded shuffle.
pub fn split_train_val(
    item_ids: &[String],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<String>, Vec<String>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Usage(format!(
            "train_fraction must lie strictly between 0 and 1, got {train_fraction}"
        )));
    }
    let mut ids = item_ids.to_vec();
    shuffle(&mut ids, seed);
    let n_train = (train_fraction * ids.len() as f64).round() as usize;
    let val = ids.split_off(n_train.min(ids.len()));
    Ok((ids, val))
}

/// One item of a split manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub image_path: String,
    pub xml_path: String,
    pub n_annotations: usize,
}

/// A named dataset split and its items.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitManifest {
    pub name: String,
    pub entries: Vec<ManifestEntry>,
}

impl SplitManifest {
    pub fn n_images(&self) -> usize {
        self.entries.len()
    }

    pub fn n_annotations(&self) -> usize {
        self.entries.iter().map(|e| e.n_annotations).sum()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.id.as_str()).collect()
    }
}

/// Writes a split manifest as CSV `id,image_path,xml_path,n_annotations`.
pub fn write_manifest(manifest: &SplitManifest, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    for entry in &manifest.entries {
        writer
            .serialize(entry)
            .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads a split manifest back, recomputing every annotation count from the
/// referenced XML file and failing on any mismatch or missing file.
/// Relative paths are resolved against the manifest's directory.
pub fn read_manifest(path: &Path) -> Result<SplitManifest> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let base = path.parent().unwrap_or(Path::new("."));
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    let mut entries = Vec::new();
    for record in reader.deserialize::<ManifestEntry>() {
        let entry =
            record.map_err(|e| Error::Consistency(format!("{}: {e}", path.display())))?;
        let xml_path = resolve(base, &entry.xml_path);
        let xml = std::fs::read_to_string(&xml_path).map_err(|_| {
            Error::Consistency(format!(
                "manifest item '{}' references missing annotation {}",
                entry.id,
                xml_path.display()
            ))
        })?;
        let ann = parse_annotation(&xml)?;
        if ann.objects.len() != entry.n_annotations {
            return Err(Error::Consistency(format!(
                "manifest item '{}' claims {} annotations but {} contains {}",
                entry.id,
                entry.n_annotations,
                xml_path.display(),
                ann.objects.len()
            )));
        }
        entries.push(entry);
    }
    Ok(SplitManifest { name, entries })
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let path = Path::new(p);
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}
