//! Luminance gradient-direction maps.
//!
//! The direction at pixel `(h, w)` is
//! `arctan((x[h+1,w] - x[h-1,w]) / (x[h,w+1] - x[h,w-1] + epsilon))`
//! using the single-argument arctangent, so every angle lies in
//! `(-pi/2, pi/2)` and direction is taken modulo pi. `epsilon` guards the
//! division; border handling is selected by [`BorderPolicy`].

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::math;

/// How central differences treat pixels whose `h +/- 1` or `w +/- 1`
/// neighbor falls outside the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BorderPolicy {
    /// Clamp out-of-range indices to the nearest valid row/column, keeping
    /// the map full-size and smooth.
    #[default]
    ReplicateEdge,
    /// Set border differences to zero (border angles become `arctan(0) = 0`).
    SkipBorder,
}

/// Parameters for gradient-direction computation.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GdmConfig {
    /// Division guard added to the horizontal difference. Must be positive.
    pub epsilon: f64,
    pub border_policy: BorderPolicy,
}

impl Default for GdmConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-8,
            border_policy: BorderPolicy::ReplicateEdge,
        }
    }
}

impl GdmConfig {
    pub fn new(epsilon: f64, border_policy: BorderPolicy) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be a positive finite real, got {epsilon}"
            )));
        }
        Ok(Self {
            epsilon,
            border_policy,
        })
    }
}

/// Per-pixel gradient directions of an image, all strictly inside
/// `(-pi/2, pi/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientDirectionMap {
    height: usize,
    width: usize,
    angles: Vec<f64>,
    epsilon: f64,
}

impl GradientDirectionMap {
    /// Builds a map from precomputed angles, validating the open codomain.
    pub fn from_angles(height: usize, width: usize, angles: Vec<f64>, epsilon: f64) -> Result<Self> {
        if height == 0 || width == 0 || angles.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "angle count {} does not equal {height}x{width}",
                angles.len()
            )));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be a positive finite real, got {epsilon}"
            )));
        }
        if let Some(a) = angles
            .iter()
            .find(|a| !(**a > -FRAC_PI_2 && **a < FRAC_PI_2))
        {
            return Err(Error::InvalidData(format!(
                "angle {a} outside (-pi/2, pi/2)"
            )));
        }
        Ok(Self {
            height,
            width,
            angles,
            epsilon,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Row-major angle buffer, radians.
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    #[inline]
    pub fn angle(&self, h: usize, w: usize) -> f64 {
        self.angles[h * self.width + w]
    }

    /// The division guard this map was computed with.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Slice-level central differences, writing into caller-owned buffers so the
/// optimizer can reuse scratch space across iterations.
pub(crate) fn central_differences_into(
    pixels: &[f64],
    height: usize,
    width: usize,
    policy: BorderPolicy,
    vertical: &mut [f64],
    horizontal: &mut [f64],
) {
    debug_assert_eq!(pixels.len(), height * width);
    for h in 0..height {
        for w in 0..width {
            let idx = h * width + w;
            match policy {
                BorderPolicy::ReplicateEdge => {
                    let hp = if h + 1 < height { h + 1 } else { height - 1 };
                    let hm = h.saturating_sub(1);
                    let wp = if w + 1 < width { w + 1 } else { width - 1 };
                    let wm = w.saturating_sub(1);
                    vertical[idx] = pixels[hp * width + w] - pixels[hm * width + w];
                    horizontal[idx] = pixels[h * width + wp] - pixels[h * width + wm];
                }
                BorderPolicy::SkipBorder => {
                    if h > 0 && h + 1 < height && w > 0 && w + 1 < width {
                        vertical[idx] = pixels[(h + 1) * width + w] - pixels[(h - 1) * width + w];
                        horizontal[idx] = pixels[idx + 1] - pixels[idx - 1];
                    } else {
                        vertical[idx] = 0.0;
                        horizontal[idx] = 0.0;
                    }
                }
            }
        }
    }
}

/// Central differences of an image: `(vertical, horizontal)` row-major grids
/// the same size as the image.
///
/// Interior entries are `x[h+1,w] - x[h-1,w]` and `x[h,w+1] - x[h,w-1]`;
/// border entries follow `policy`. Every difference lies in `[-1, 1]`.
/// Images below 3x3 are unrepresentable, so the degenerate case cannot occur.
pub fn central_differences(img: &GrayImage, policy: BorderPolicy) -> (Vec<f64>, Vec<f64>) {
    let (height, width) = img.dimensions();
    let mut vertical = vec![0.0; height * width];
    let mut horizontal = vec![0.0; height * width];
    central_differences_into(
        img.pixels(),
        height,
        width,
        policy,
        &mut vertical,
        &mut horizontal,
    );
    (vertical, horizontal)
}

/// Direction angle of one pixel from its central differences.
///
/// Two guards keep the documented open codomain total in floating point: a
/// horizontal difference that cancels `epsilon` exactly falls back to the
/// bare guard, and a quotient so large that `atan` rounds onto `+/-pi/2` is
/// pulled inward by one ulp.
#[inline]
pub(crate) fn direction_angle(vertical: f64, horizontal: f64, epsilon: f64) -> f64 {
    let mut denom = horizontal + epsilon;
    if denom == 0.0 {
        denom = epsilon;
    }
    let angle = math::atan(vertical / denom);
    if angle >= FRAC_PI_2 {
        FRAC_PI_2.next_down()
    } else if angle <= -FRAC_PI_2 {
        (-FRAC_PI_2).next_up()
    } else {
        angle
    }
}

/// Computes the gradient-direction map of an image.
pub fn gdm(img: &GrayImage, cfg: &GdmConfig) -> GradientDirectionMap {
    let (height, width) = img.dimensions();
    let (vertical, horizontal) = central_differences(img, cfg.border_policy);
    let angles = vertical
        .iter()
        .zip(&horizontal)
        .map(|(&v, &h)| direction_angle(v, h, cfg.epsilon))
        .collect();
    GradientDirectionMap {
        height,
        width,
        angles,
        epsilon: cfg.epsilon,
    }
}

fn check_same_shape(a: &GradientDirectionMap, b: &GradientDirectionMap) -> Result<()> {
    if a.dimensions() != b.dimensions() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            a.height, a.width, b.height, b.width
        )));
    }
    Ok(())
}

/// Euclidean (Frobenius) norm of the elementwise angle difference.
///
/// Differences are raw subtraction, not wrap-aware.
pub fn gdm_residual(a: &GradientDirectionMap, b: &GradientDirectionMap) -> Result<f64> {
    check_same_shape(a, b)?;
    let sum_sq: f64 = a
        .angles
        .iter()
        .zip(&b.angles)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum();
    Ok(math::sqrt(sum_sq))
}

/// Mean absolute angle difference, a secondary diagnostic alongside
/// [`gdm_residual`].
pub fn mean_abs_residual(a: &GradientDirectionMap, b: &GradientDirectionMap) -> Result<f64> {
    check_same_shape(a, b)?;
    let sum_abs: f64 = a
        .angles
        .iter()
        .zip(&b.angles)
        .map(|(&x, &y)| math::abs(x - y))
        .sum();
    Ok(sum_abs / a.angles.len() as f64)
}
