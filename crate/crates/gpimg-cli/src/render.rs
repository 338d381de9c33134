//! Diagnostic rendering: gradient-direction maps as grayscale PNGs and
//! side-by-side panels of an image, its protected version, and the
//! protected version's direction map.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

use gpimg_core::{gdm, GdmConfig, GradientDirectionMap, GrayImage};

use crate::io::{quantize, to_luma_buffer, write_atomic, IoError};

/// Maps angles affinely from `(-pi/2, pi/2)` onto `[0, 255]`; an all-zero
/// map renders as uniform mid-gray 128.
pub fn gdm_to_bytes(map: &GradientDirectionMap) -> Vec<u8> {
    map.angles()
        .iter()
        .map(|&a| quantize((a + FRAC_PI_2) / PI))
        .collect()
}

fn encode_png(bytes: &[u8], width: usize, height: usize, path: &Path) -> Result<(), IoError> {
    let mut out = Vec::new();
    image::write_buffer_with_format(
        &mut std::io::Cursor::new(&mut out),
        bytes,
        width as u32,
        height as u32,
        image::ExtendedColorType::L8,
        image::ImageFormat::Png,
    )
    .map_err(|e| IoError::Decode {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    write_atomic(path, &out)
}

/// Renders a direction map to an 8-bit grayscale PNG.
pub fn render_gdm(map: &GradientDirectionMap, path: &Path) -> Result<(), IoError> {
    encode_png(&gdm_to_bytes(map), map.width(), map.height(), path)
}

/// Renders an image to an 8-bit grayscale PNG.
pub fn render_image(img: &GrayImage, path: &Path) -> Result<(), IoError> {
    encode_png(&to_luma_buffer(img), img.width(), img.height(), path)
}

const PANEL_GAP: usize = 4;

/// Concatenates equal-height grayscale panels horizontally with a thin white
/// gap and writes a PNG. With `x` alone it is a plain render; with the
/// protected image present the panels are `x`, `x'`, and the direction map
/// of `x'`.
pub fn render_panels(
    x: &GrayImage,
    protected: Option<&GrayImage>,
    cfg: &GdmConfig,
    path: &Path,
) -> Result<(), IoError> {
    let mut panels: Vec<(Vec<u8>, usize)> = vec![(to_luma_buffer(x), x.width())];
    if let Some(xp) = protected {
        panels.push((to_luma_buffer(xp), xp.width()));
        let map = gdm(xp, cfg);
        panels.push((gdm_to_bytes(&map), map.width()));
    }
    let height = x.height();
    for (buf, w) in &panels {
        debug_assert_eq!(buf.len(), w * height);
    }
    let total_width: usize =
        panels.iter().map(|(_, w)| w).sum::<usize>() + PANEL_GAP * (panels.len() - 1);
    let mut canvas = vec![255u8; total_width * height];
    let mut x_off = 0;
    for (buf, w) in &panels {
        for row in 0..height {
            let src = &buf[row * w..(row + 1) * w];
            let dst = &mut canvas[row * total_width + x_off..row * total_width + x_off + w];
            dst.copy_from_slice(src);
        }
        x_off += w + PANEL_GAP;
    }
    encode_png(&canvas, total_width, height, path)
}

const SSIM_WINDOW: usize = 8;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

/// Mean structural similarity over non-overlapping 8x8 windows with the
/// standard constants and dynamic range 1. Returns an error on shape
/// mismatch. A diagnostic, not an acceptance metric.
pub fn ssim(a: &GrayImage, b: &GrayImage) -> Result<f64, IoError> {
    if a.dimensions() != b.dimensions() {
        return Err(IoError::Core(gpimg_core::Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            a.height(),
            a.width(),
            b.height(),
            b.width()
        ))));
    }
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let (height, width) = a.dimensions();
    let rows = height / SSIM_WINDOW;
    let cols = width / SSIM_WINDOW;
    if rows == 0 || cols == 0 {
        return Err(IoError::Core(gpimg_core::Error::ShapeMismatch(
            "image smaller than one SSIM window".into(),
        )));
    }
    let mut total = 0.0;
    for bi in 0..rows {
        for bj in 0..cols {
            let mut sum_a = 0.0;
            let mut sum_b = 0.0;
            let mut sum_aa = 0.0;
            let mut sum_bb = 0.0;
            let mut sum_ab = 0.0;
            for dh in 0..SSIM_WINDOW {
                for dw in 0..SSIM_WINDOW {
                    let va = a.pixel(bi * SSIM_WINDOW + dh, bj * SSIM_WINDOW + dw);
                    let vb = b.pixel(bi * SSIM_WINDOW + dh, bj * SSIM_WINDOW + dw);
                    sum_a += va;
                    sum_b += vb;
                    sum_aa += va * va;
                    sum_bb += vb * vb;
                    sum_ab += va * vb;
                }
            }
            let n = (SSIM_WINDOW * SSIM_WINDOW) as f64;
            let mu_a = sum_a / n;
            let mu_b = sum_b / n;
            let var_a = sum_aa / n - mu_a * mu_a;
            let var_b = sum_bb / n - mu_b * mu_b;
            let cov = sum_ab / n - mu_a * mu_b;
            total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2))
                / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
        }
    }
    Ok(total / (rows * cols) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use gpimg_core::GradientDirectionMap;
    use tempfile::tempdir;

    #[test]
    fn zero_map_renders_mid_gray() {
        let map = GradientDirectionMap::from_angles(4, 4, vec![0.0; 16], 1e-8).unwrap();
        assert!(gdm_to_bytes(&map).iter().all(|&b| b == 128));
    }

    #[test]
    fn angle_extremes_render_black_and_white() {
        let low = -FRAC_PI_2 + 1e-9;
        let high = FRAC_PI_2 - 1e-9;
        let map = GradientDirectionMap::from_angles(3, 3, vec![low, high, 0.0, low, high, 0.0, low, high, 0.0], 1e-8).unwrap();
        let bytes = gdm_to_bytes(&map);
        assert_eq!(bytes[0], 0);
        assert_eq!(bytes[1], 255);
    }

    #[test]
    fn panels_have_expected_width() {
        let dir = tempdir().unwrap();
        let x = GrayImage::constant(16, 12, 0.3).unwrap();
        let xp = GrayImage::constant(16, 12, 0.6).unwrap();
        let path = dir.path().join("panels.png");
        render_panels(&x, Some(&xp), &GdmConfig::default(), &path).unwrap();
        let img = image::open(&path).unwrap();
        assert_eq!(img.width() as usize, 12 * 3 + PANEL_GAP * 2);
        assert_eq!(img.height() as usize, 16);
    }

    #[test]
    fn ssim_identity_is_one() {
        let x = GrayImage::from_fn(16, 16, |h, w| ((h * w) % 13) as f64 / 13.0).unwrap();
        assert_abs_diff_eq!(ssim(&x, &x).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn ssim_differs_for_unrelated_images() {
        let x = GrayImage::from_fn(16, 16, |h, _| (h % 4) as f64 / 4.0).unwrap();
        let y = GrayImage::from_fn(16, 16, |_, w| ((w + 2) % 5) as f64 / 5.0).unwrap();
        let s = ssim(&x, &y).unwrap();
        assert!(s < 0.9, "ssim {s}");
        assert!(ssim(&x, &GrayImage::constant(8, 8, 0.5).unwrap()).is_err());
    }
}
