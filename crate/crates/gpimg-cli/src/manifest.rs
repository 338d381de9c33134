//! Face-dataset directory ingestion.
//!
//! Layout convention: one subdirectory per identity under the root,
//! `root/<identity>/<image>.pgm` (or `.png`). Identities sorted
//! lexicographically become contiguous class ids from 0. Files that fail to
//! decode are skipped with a warning and listed in the manifest; some public
//! face datasets ship a handful of corrupted captures.

use std::fs;
use std::path::{Path, PathBuf};

use gpimg_core::GrayImage;

use crate::io::{load_image, IoError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    /// Path relative to the dataset root.
    pub rel_path: PathBuf,
    pub class: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetManifest {
    pub root: PathBuf,
    /// Identity directory names, index = class id.
    pub classes: Vec<String>,
    pub entries: Vec<ManifestEntry>,
    /// Files that failed to decode, with the reason.
    pub skipped: Vec<(PathBuf, String)>,
}

fn is_image_file(path: &Path) -> bool {
    matches!(
        path.extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref(),
        Some("pgm") | Some("png")
    )
}

/// Lists identities and image files under `root` without decoding them.
pub fn scan_dataset(root: &Path) -> Result<DatasetManifest, IoError> {
    let read_dir = |p: &Path| {
        fs::read_dir(p).map_err(|e| IoError::Io {
            path: p.display().to_string(),
            source: e,
        })
    };
    let mut class_dirs: Vec<PathBuf> = read_dir(root)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    class_dirs.sort();
    if class_dirs.is_empty() {
        return Err(IoError::Decode {
            path: root.display().to_string(),
            message: "no identity subdirectories found".into(),
        });
    }

    let mut manifest = DatasetManifest {
        root: root.to_path_buf(),
        ..DatasetManifest::default()
    };
    for (class, dir) in class_dirs.iter().enumerate() {
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        manifest.classes.push(name);
        let mut files: Vec<PathBuf> = read_dir(dir)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.is_file() && is_image_file(p))
            .collect();
        files.sort();
        for file in files {
            let rel = file.strip_prefix(root).unwrap_or(&file).to_path_buf();
            manifest.entries.push(ManifestEntry {
                rel_path: rel,
                class,
            });
        }
    }
    if manifest.entries.is_empty() {
        return Err(IoError::Decode {
            path: root.display().to_string(),
            message: "no .pgm or .png files found in identity subdirectories".into(),
        });
    }
    Ok(manifest)
}

/// Scans and decodes a dataset. Corrupt images are skipped with a warning on
/// standard error and recorded in the manifest; a class left with no valid
/// images is an error.
pub fn load_dataset(root: &Path) -> Result<(DatasetManifest, Vec<GrayImage>, Vec<usize>), IoError> {
    let mut manifest = scan_dataset(root)?;
    let mut images = Vec::new();
    let mut labels = Vec::new();
    let mut kept = Vec::new();
    for entry in &manifest.entries {
        let path = manifest.root.join(&entry.rel_path);
        match load_image(&path) {
            Ok(img) => {
                images.push(img);
                labels.push(entry.class);
                kept.push(entry.clone());
            }
            Err(e) => {
                eprintln!("warning: skipping {}: {e}", path.display());
                manifest.skipped.push((entry.rel_path.clone(), e.to_string()));
            }
        }
    }
    for class in 0..manifest.classes.len() {
        if !labels.contains(&class) {
            return Err(IoError::Decode {
                path: root.display().to_string(),
                message: format!(
                    "class '{}' has no decodable images",
                    manifest.classes[class]
                ),
            });
        }
    }
    manifest.entries = kept;
    Ok((manifest, images, labels))
}
