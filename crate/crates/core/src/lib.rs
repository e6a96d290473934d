//! Dataset preparation and Pascal-VOC-style evaluation toolkit for
//! greenhouse tomato detection pipelines.
//!
//! The crate covers the non-model half of a detection experiment:
//!
//! - [`voc`]: Pascal VOC XML annotations and plain-text detection files
//! - [`tiling`]: overlapping fixed-size tiles with box remapping
//! - [`augment`]: seeded, bbox-aware image augmentation
//! - [`manifest`]: frame subsampling, train/val splits, manifest CSVs
//! - [`eval`]: IoU matching, precision/recall/F1, PR curves, AP/mAP
//! - [`calibrate`]: F1-maximising confidence-threshold selection
//! - [`report`]: summary tables and SVG plots
//!
//! The `vocdet` binary exposes the same operations as subcommands; see the
//! `examples/` directory for library-level walkthroughs.

pub mod augment;
pub mod bbox;
pub mod calibrate;
pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod manifest;
pub mod report;
pub mod tiling;
pub mod voc;

pub use bbox::BBox;
pub use error::{Error, Result};
