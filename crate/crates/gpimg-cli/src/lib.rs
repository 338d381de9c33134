//! IO, dataset ingestion, and rendering for the `gpimg` command-line tool.
//!
//! The algorithmic pieces live in `gpimg-core`; this crate adds grayscale
//! PGM/PNG codecs mapped onto `[0, 1]` luminance, a face-dataset directory
//! scanner, and diagnostic visualizations of images and their
//! gradient-direction maps.

pub mod io;
pub mod manifest;
pub mod render;

pub use io::{load_image, save_image, IoError};
pub use manifest::{load_dataset, scan_dataset, DatasetManifest, ManifestEntry};
pub use render::{render_panels, ssim};
