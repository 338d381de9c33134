//! Grayscale images on the unit interval.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A grayscale image with luminance values in `[0, 1]`, stored row-major.
///
/// Dimensions are at least 3x3 so that every image has interior pixels for
/// central differences. Values are immutable after construction; images are
/// safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    /// Builds an image from a row-major pixel buffer, validating the
    /// invariants: dimensions at least 3x3, pixel count `height * width`,
    /// and every value in `[0, 1]`.
    pub fn from_pixels(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        if height < 3 || width < 3 {
            return Err(Error::InvalidImage(format!(
                "dimensions {height}x{width} are below the 3x3 minimum"
            )));
        }
        if pixels.len() != height * width {
            return Err(Error::InvalidImage(format!(
                "pixel count {} does not equal {height}x{width}",
                pixels.len()
            )));
        }
        // NaN fails both comparisons, so this also rejects non-finite input.
        if let Some(v) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidImage(format!(
                "pixel value {v} outside [0, 1]"
            )));
        }
        Ok(Self {
            height,
            width,
            pixels,
        })
    }

    /// Builds an image by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(height * width);
        for h in 0..height {
            for w in 0..width {
                pixels.push(f(h, w));
            }
        }
        Self::from_pixels(height, width, pixels)
    }

    /// An image with every pixel set to `value`.
    pub fn constant(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::from_pixels(height, width, alloc::vec![value; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `(height, width)` in pixels.
    pub fn dimensions(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Row-major pixel buffer.
    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    /// Luminance at `(row, col)`.
    #[inline]
    pub fn pixel(&self, h: usize, w: usize) -> f64 {
        self.pixels[h * self.width + w]
    }

    /// Copies the top-left `height x width` region.
    pub fn crop(&self, height: usize, width: usize) -> Result<Self> {
        if height > self.height || width > self.width {
            return Err(Error::ShapeMismatch(format!(
                "crop {height}x{width} exceeds image {}x{}",
                self.height, self.width
            )));
        }
        let mut pixels = Vec::with_capacity(height * width);
        for h in 0..height {
            let row = &self.pixels[h * self.width..h * self.width + width];
            pixels.extend_from_slice(row);
        }
        Self::from_pixels(height, width, pixels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_dimensions() {
        assert!(matches!(
            GrayImage::constant(2, 5, 0.5),
            Err(Error::InvalidImage(_))
        ));
        assert!(matches!(
            GrayImage::constant(5, 2, 0.5),
            Err(Error::InvalidImage(_))
        ));
    }

    #[test]
    fn rejects_out_of_range_pixels() {
        assert!(GrayImage::constant(4, 4, 1.5).is_err());
        assert!(GrayImage::constant(4, 4, -0.1).is_err());
        assert!(GrayImage::constant(4, 4, f64::NAN).is_err());
    }

    #[test]
    fn rejects_wrong_pixel_count() {
        assert!(GrayImage::from_pixels(3, 3, alloc::vec![0.0; 8]).is_err());
    }

    #[test]
    fn from_fn_indexes_row_major() {
        let img = GrayImage::from_fn(3, 4, |h, w| (h * 4 + w) as f64 / 11.0).unwrap();
        assert_eq!(img.pixel(0, 0), 0.0);
        assert_eq!(img.pixel(2, 3), 1.0);
        assert_eq!(img.pixel(1, 2), 6.0 / 11.0);
    }

    #[test]
    fn crop_keeps_top_left() {
        let img = GrayImage::from_fn(5, 5, |h, w| ((h * 5 + w) % 10) as f64 / 10.0).unwrap();
        let cropped = img.crop(3, 4).unwrap();
        assert_eq!(cropped.dimensions(), (3, 4));
        for h in 0..3 {
            for w in 0..4 {
                assert_eq!(cropped.pixel(h, w), img.pixel(h, w));
            }
        }
        assert!(img.crop(6, 3).is_err());
    }
}
