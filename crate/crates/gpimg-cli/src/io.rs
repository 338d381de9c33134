//! Grayscale image files: binary PGM (P5) and 8-bit grayscale PNG.
//!
//! Loading maps 8-bit samples to `[0, 1]` by `v / 255`; saving rounds
//! `v * 255` and clamps, so a save/load round trip moves no pixel by more
//! than `1/255`. Color inputs are converted with the 0.299/0.587/0.114
//! luma weights and a warning on standard error. Writes go through a
//! temporary file in the target directory followed by a rename.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use gpimg_core::GrayImage;
use image::{DynamicImage, ImageFormat};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Decode { path: String, message: String },
    #[error(transparent)]
    Core(#[from] gpimg_core::Error),
}

fn io_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn decode_err(path: &Path, message: impl Into<String>) -> IoError {
    IoError::Decode {
        path: path.display().to_string(),
        message: message.into(),
    }
}

/// Rounds a unit-interval luminance to an 8-bit sample.
pub fn quantize(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Loads a PGM or PNG file as a grayscale image on `[0, 1]`.
///
/// Truncated or corrupt files fail without producing a partial image.
pub fn load_image(path: &Path) -> Result<GrayImage, IoError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    let decoded = image::load_from_memory(&bytes).map_err(|e| decode_err(path, e.to_string()))?;
    let (gray, warned) = to_unit_gray(decoded);
    if let Some(reason) = warned {
        eprintln!("warning: {}: {reason}", path.display());
    }
    let (width, height) = (gray.width() as usize, gray.height() as usize);
    let pixels = gray.into_raw().into_iter().map(|v| v as f64 / 255.0).collect();
    GrayImage::from_pixels(height, width, pixels).map_err(IoError::from)
}

/// Flattens any decoded image to 8-bit grayscale, reporting whether a lossy
/// conversion happened.
fn to_unit_gray(img: DynamicImage) -> (image::GrayImage, Option<&'static str>) {
    match img {
        DynamicImage::ImageLuma8(buf) => (buf, None),
        DynamicImage::ImageLumaA8(buf) => {
            let (w, h) = (buf.width(), buf.height());
            let gray = image::GrayImage::from_fn(w, h, |x, y| image::Luma([buf.get_pixel(x, y)[0]]));
            (gray, Some("alpha channel discarded"))
        }
        other => {
            let rgb = other.to_rgb8();
            let (w, h) = (rgb.width(), rgb.height());
            let gray = image::GrayImage::from_fn(w, h, |x, y| {
                let p = rgb.get_pixel(x, y);
                let luma =
                    0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64;
                image::Luma([luma.round().clamp(0.0, 255.0) as u8])
            });
            (gray, Some("color input converted to luma (0.299 R + 0.587 G + 0.114 B)"))
        }
    }
}

/// Binary PGM (P5, maxval 255) bytes for an image.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width(), img.height());
    let mut out = Vec::with_capacity(header.len() + img.pixels().len());
    out.extend_from_slice(header.as_bytes());
    out.extend(img.pixels().iter().map(|&v| quantize(v)));
    out
}

/// Writes bytes atomically: a temporary file in the same directory is
/// persisted over the target path.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(dir) => tempfile::NamedTempFile::new_in(dir),
        None => tempfile::NamedTempFile::new_in("."),
    }
    .map_err(|e| io_err(path, e))?;
    tmp.write_all(bytes).map_err(|e| io_err(path, e))?;
    tmp.persist(path)
        .map_err(|e| io_err(path, e.error))?;
    Ok(())
}

/// Saves an image as binary PGM or 8-bit grayscale PNG, chosen by the file
/// extension (`.pgm` or `.png`).
pub fn save_image(img: &GrayImage, path: &Path) -> Result<(), IoError> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "pgm" => write_atomic(path, &encode_pgm(img)),
        "png" => {
            let buf = to_luma_buffer(img);
            let mut bytes = Vec::new();
            image::write_buffer_with_format(
                &mut std::io::Cursor::new(&mut bytes),
                &buf,
                img.width() as u32,
                img.height() as u32,
                image::ExtendedColorType::L8,
                ImageFormat::Png,
            )
            .map_err(|e| decode_err(path, e.to_string()))?;
            write_atomic(path, &bytes)
        }
        other => Err(decode_err(
            path,
            format!("unsupported output extension '{other}' (use .pgm or .png)"),
        )),
    }
}

/// Quantized 8-bit buffer of an image.
pub fn to_luma_buffer(img: &GrayImage) -> Vec<u8> {
    img.pixels().iter().map(|&v| quantize(v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use gpimg_core::GrayImage;
    use tempfile::tempdir;

    fn checker(n: usize) -> GrayImage {
        GrayImage::from_fn(n, n, |h, w| ((h + w) % 2) as f64 * 0.8 + 0.1).unwrap()
    }

    #[test]
    fn pgm_round_trip_is_8bit_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let img = checker(8);
        save_image(&img, &path).unwrap();
        let back = load_image(&path).unwrap();
        assert_eq!(back.dimensions(), img.dimensions());
        for (a, b) in img.pixels().iter().zip(back.pixels()) {
            assert!((a - b).abs() <= 1.0 / 255.0, "{a} vs {b}");
        }
        // A second round trip through the quantized file is lossless.
        let path2 = dir.path().join("img2.pgm");
        save_image(&back, &path2).unwrap();
        let back2 = load_image(&path2).unwrap();
        assert_eq!(back.pixels(), back2.pixels());
    }

    #[test]
    fn png_round_trip_is_8bit_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("img.png");
        let img = checker(9);
        save_image(&img, &path).unwrap();
        let back = load_image(&path).unwrap();
        for (a, b) in img.pixels().iter().zip(back.pixels()) {
            assert!((a - b).abs() <= 1.0 / 255.0);
        }
    }

    #[test]
    fn all_black_pgm_loads_as_zero() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("black.pgm");
        std::fs::write(&path, [b"P5\n4 3\n255\n".as_slice(), &[0u8; 12]].concat()).unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!(img.dimensions(), (3, 4));
        assert!(img.pixels().iter().all(|&p| p == 0.0));
    }

    #[test]
    fn truncated_file_is_an_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("broken.pgm");
        // Header promises 16 pixels but only 4 follow.
        std::fs::write(&path, [b"P5\n4 4\n255\n".as_slice(), &[7u8; 4]].concat()).unwrap();
        assert!(load_image(&path).is_err());

        let missing = dir.path().join("nope.png");
        assert!(load_image(&missing).is_err());
    }

    #[test]
    fn color_png_converts_with_pinned_luma_weights() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("color.png");
        let rgb = image::RgbImage::from_fn(4, 4, |_, _| image::Rgb([200, 100, 50]));
        rgb.save(&path).unwrap();
        let img = load_image(&path).unwrap();
        let expected = (0.299 * 200.0 + 0.587 * 100.0 + 0.114 * 50.0_f64).round() / 255.0;
        for &p in img.pixels() {
            assert!((p - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn unsupported_extension_is_rejected() {
        let dir = tempdir().unwrap();
        assert!(save_image(&checker(4), &dir.path().join("x.bmp")).is_err());
    }
}
