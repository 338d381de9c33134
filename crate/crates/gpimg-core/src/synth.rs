//! Deterministic synthetic dataset of oriented gratings, a desk-scale
//! stand-in for a face dataset: class `k` is a sinusoidal grating oriented
//! at `k * pi / K` with random phase and Gaussian pixel noise.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::math;

/// Wave count across the image; chosen so cells see several stripe periods.
const CYCLES: f64 = 6.0;
const AMPLITUDE: f64 = 0.35;

/// Parameters of [`synth_dataset`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SynthConfig {
    /// Number of orientation classes, at most 16.
    pub classes: usize,
    pub per_class: usize,
    /// Square image side, at least 32.
    pub size: usize,
    /// Standard deviation of additive Gaussian pixel noise.
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            classes: 8,
            per_class: 40,
            size: 64,
            noise_std: 0.05,
            seed: 0,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.classes > 16 {
            return Err(Error::InvalidConfig(format!(
                "classes must be in 1..=16, got {}",
                self.classes
            )));
        }
        if self.per_class == 0 {
            return Err(Error::InvalidConfig("per_class must be positive".into()));
        }
        if self.size < 32 {
            return Err(Error::InvalidConfig(format!(
                "size must be at least 32, got {}",
                self.size
            )));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise_std must be nonnegative, got {}",
                self.noise_std
            )));
        }
        Ok(())
    }
}

/// A noiseless sinusoidal grating: `0.5 + 0.35 sin(2 pi cycles t / size + phase)`
/// where `t` projects the pixel onto the wave direction `angle`.
pub fn grating(size: usize, angle: f64, cycles: f64, phase: f64) -> Result<GrayImage> {
    let (sin_a, cos_a) = (math::sin(angle), math::cos(angle));
    let freq = 2.0 * PI * cycles / size as f64;
    GrayImage::from_fn(size, size, |h, w| {
        let t = h as f64 * cos_a + w as f64 * sin_a;
        0.5 + AMPLITUDE * math::sin(freq * t + phase)
    })
}

/// One standard normal draw via Box-Muller.
fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    math::sqrt(-2.0 * math::ln(u1)) * math::cos(2.0 * PI * u2)
}

/// Generates `classes * per_class` labeled grating images, class-major and
/// deterministic per seed. Labels are balanced by construction.
pub fn synth_dataset(cfg: &SynthConfig) -> Result<(Vec<GrayImage>, Vec<usize>)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut images = Vec::with_capacity(cfg.classes * cfg.per_class);
    let mut labels = Vec::with_capacity(cfg.classes * cfg.per_class);
    for k in 0..cfg.classes {
        let angle = k as f64 * PI / cfg.classes as f64;
        for _ in 0..cfg.per_class {
            let phase = rng.random::<f64>() * 2.0 * PI;
            let base = grating(cfg.size, angle, CYCLES, phase)?;
            let pixels: Vec<f64> = base
                .pixels()
                .iter()
                .map(|&p| (p + cfg.noise_std * standard_normal(&mut rng)).clamp(0.0, 1.0))
                .collect();
            images.push(GrayImage::from_pixels(cfg.size, cfg.size, pixels)?);
            labels.push(k);
        }
    }
    Ok((images, labels))
}
