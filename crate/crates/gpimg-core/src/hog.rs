//! HOG descriptors over gradient-direction maps.
//!
//! The image is partitioned into non-overlapping `N_c x N_c` cells; each cell
//! accumulates a `b`-bin orientation histogram of its angles. Blocks of 2x2
//! adjacent histograms (overlapping with stride one cell) are concatenated as
//! `h[i,j] ++ h[i+1,j] ++ h[i,j+1] ++ h[i+1,j+1]`, unit-normalized, and
//! concatenated into the final descriptor.
//!
//! In the default [`Weighting::Unweighted`] mode every pixel votes with
//! weight 1, since protected images carry no usable gradient magnitude.
//! [`Weighting::MagnitudeWeighted`] votes with `sqrt(V^2 + H^2)` instead and
//! is otherwise identical, giving a controlled baseline close to (though
//! deliberately simpler than) classic magnitude-weighted HOG.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::gdm::{central_differences, gdm, GdmConfig, GradientDirectionMap};
use crate::image::GrayImage;
use crate::math;

/// Cells per block along each axis; blocks are always 2x2 histograms.
pub const BLOCK_SPAN: usize = 2;

/// Per-pixel vote weight for cell histograms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Weighting {
    /// Each pixel adds 1 to its orientation bin.
    #[default]
    Unweighted,
    /// Each pixel adds its gradient magnitude `sqrt(V^2 + H^2)`.
    MagnitudeWeighted,
}

/// HOG hyperparameters. Defaults are cell size 8 and 9 bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HogConfig {
    /// Cell side length in pixels; must divide the (cropped) image dimensions.
    pub cell_size: usize,
    /// Orientation bins per histogram, at least 2.
    pub bins: usize,
    pub weighting: Weighting,
}

impl Default for HogConfig {
    fn default() -> Self {
        Self {
            cell_size: 8,
            bins: 9,
            weighting: Weighting::Unweighted,
        }
    }
}

impl HogConfig {
    fn validate(&self) -> Result<()> {
        if self.cell_size == 0 {
            return Err(Error::InvalidConfig("cell_size must be positive".into()));
        }
        if self.bins < 2 {
            return Err(Error::InvalidConfig(format!(
                "bins must be at least 2, got {}",
                self.bins
            )));
        }
        Ok(())
    }
}

/// Grid of per-cell orientation histograms.
#[derive(Debug, Clone, PartialEq)]
pub struct CellHistogramGrid {
    rows: usize,
    cols: usize,
    bins: usize,
    data: Vec<f64>,
}

impl CellHistogramGrid {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    /// Histogram of cell `(i, j)` as a `bins`-length slice.
    pub fn histogram(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.cols + j) * self.bins;
        &self.data[start..start + self.bins]
    }
}

/// Flattened block-normalized HOG descriptor.
///
/// Blocks are laid out row-major over their top-left cell index; within a
/// block the four histograms keep the concatenation order of the block
/// definition. Total length is `(rows - 1) * (cols - 1) * 4 * bins`.
#[derive(Debug, Clone, PartialEq)]
pub struct HogVector {
    values: Vec<f64>,
    block_rows: usize,
    block_cols: usize,
    bins: usize,
}

impl HogVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn block_rows(&self) -> usize {
        self.block_rows
    }

    pub fn block_cols(&self) -> usize {
        self.block_cols
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Bin index of an angle among `bins` equal-width bins over `(-pi/2, pi/2]`
/// with edges at `-pi/2 + k * pi / bins`.
///
/// An angle exactly on an edge goes to the higher bin; `-pi/2` itself (never
/// produced by [`gdm`]) would land in bin 0. The floor-based index is checked
/// against the computed edges so the edge rule holds exactly in floating
/// point.
pub fn bin_index(angle: f64, bins: usize) -> usize {
    let width = PI / bins as f64;
    let edge = |k: isize| -FRAC_PI_2 + k as f64 * width;
    let mut k = math::floor((angle + FRAC_PI_2) / width) as isize;
    k = k.clamp(0, bins as isize - 1);
    while k > 0 && angle < edge(k) {
        k -= 1;
    }
    while k + 1 < bins as isize && angle >= edge(k + 1) {
        k += 1;
    }
    k as usize
}

/// Accumulates per-cell orientation histograms over `map`.
///
/// `magnitude` must be present exactly when `cfg.weighting` is
/// [`Weighting::MagnitudeWeighted`], as a row-major grid matching `map`.
pub fn cell_histograms(
    map: &GradientDirectionMap,
    cfg: &HogConfig,
    magnitude: Option<&[f64]>,
) -> Result<CellHistogramGrid> {
    cfg.validate()?;
    let (height, width) = map.dimensions();
    if height % cfg.cell_size != 0 || width % cfg.cell_size != 0 {
        return Err(Error::ShapeMismatch(format!(
            "map {height}x{width} is not divisible into {0}x{0} cells",
            cfg.cell_size
        )));
    }
    match (cfg.weighting, magnitude) {
        (Weighting::Unweighted, None) => {}
        (Weighting::MagnitudeWeighted, Some(m)) if m.len() == height * width => {}
        (Weighting::MagnitudeWeighted, Some(m)) => {
            return Err(Error::ShapeMismatch(format!(
                "magnitude grid has {} entries, expected {}",
                m.len(),
                height * width
            )));
        }
        (Weighting::Unweighted, Some(_)) => {
            return Err(Error::InvalidConfig(
                "magnitude grid supplied for unweighted voting".into(),
            ));
        }
        (Weighting::MagnitudeWeighted, None) => {
            return Err(Error::InvalidConfig(
                "magnitude weighting requires a magnitude grid".into(),
            ));
        }
    }

    let rows = height / cfg.cell_size;
    let cols = width / cfg.cell_size;
    let mut data = vec![0.0; rows * cols * cfg.bins];
    for h in 0..height {
        for w in 0..width {
            let idx = h * width + w;
            let bin = bin_index(map.angles()[idx], cfg.bins);
            let weight = match magnitude {
                Some(m) => m[idx],
                None => 1.0,
            };
            let cell = (h / cfg.cell_size) * cols + w / cfg.cell_size;
            data[cell * cfg.bins + bin] += weight;
        }
    }
    Ok(CellHistogramGrid {
        rows,
        cols,
        bins: cfg.bins,
        data,
    })
}

/// Concatenates each 2x2 group of adjacent histograms into a raw block, in
/// the order `h[i,j] ++ h[i+1,j] ++ h[i,j+1] ++ h[i+1,j+1]`, overlapping with
/// stride one cell. Blocks are emitted row-major over `(i, j)`.
pub fn assemble_blocks(grid: &CellHistogramGrid) -> Result<Vec<Vec<f64>>> {
    if grid.rows < BLOCK_SPAN || grid.cols < BLOCK_SPAN {
        return Err(Error::ShapeMismatch(format!(
            "grid {}x{} is too small for 2x2 blocks",
            grid.rows, grid.cols
        )));
    }
    let mut blocks = Vec::with_capacity((grid.rows - 1) * (grid.cols - 1));
    for i in 0..grid.rows - 1 {
        for j in 0..grid.cols - 1 {
            let mut block = Vec::with_capacity(4 * grid.bins);
            block.extend_from_slice(grid.histogram(i, j));
            block.extend_from_slice(grid.histogram(i + 1, j));
            block.extend_from_slice(grid.histogram(i, j + 1));
            block.extend_from_slice(grid.histogram(i + 1, j + 1));
            blocks.push(block);
        }
    }
    Ok(blocks)
}

/// Divides every entry by the block's Euclidean norm, out of place. An
/// all-zero block is returned unchanged rather than producing NaN.
pub fn normalize_block(block: &[f64]) -> Vec<f64> {
    let norm = math::sqrt(block.iter().map(|&v| v * v).sum());
    if norm == 0.0 {
        return block.to_vec();
    }
    block.iter().map(|&v| v / norm).collect()
}

/// Extracts the full HOG descriptor of an image: crop to cell multiples
/// (bottom/right), gradient-direction map, cell histograms, 2x2 blocks,
/// per-block normalization, concatenation.
pub fn extract_hog(
    img: &GrayImage,
    hog_cfg: &HogConfig,
    gdm_cfg: &GdmConfig,
) -> Result<HogVector> {
    hog_cfg.validate()?;
    let (height, width) = img.dimensions();
    let cropped_h = height - height % hog_cfg.cell_size;
    let cropped_w = width - width % hog_cfg.cell_size;
    if cropped_h < 2 * hog_cfg.cell_size || cropped_w < 2 * hog_cfg.cell_size {
        return Err(Error::ShapeMismatch(format!(
            "image {height}x{width} is smaller than 2x2 cells of size {}",
            hog_cfg.cell_size
        )));
    }
    let working = if (cropped_h, cropped_w) == (height, width) {
        img.clone()
    } else {
        img.crop(cropped_h, cropped_w)?
    };
    let map = gdm(&working, gdm_cfg);
    let magnitude = match hog_cfg.weighting {
        Weighting::Unweighted => None,
        Weighting::MagnitudeWeighted => {
            let (dv, dh) = central_differences(&working, gdm_cfg.border_policy);
            Some(
                dv.iter()
                    .zip(&dh)
                    .map(|(&v, &h)| math::sqrt(v * v + h * h))
                    .collect::<Vec<f64>>(),
            )
        }
    };
    let grid = cell_histograms(&map, hog_cfg, magnitude.as_deref())?;
    let blocks = assemble_blocks(&grid)?;
    let mut values = Vec::with_capacity(blocks.len() * 4 * hog_cfg.bins);
    for block in &blocks {
        values.extend_from_slice(&normalize_block(block));
    }
    Ok(HogVector {
        values,
        block_rows: grid.rows - 1,
        block_cols: grid.cols - 1,
        bins: hog_cfg.bins,
    })
}

/// Cosine similarity between two equal-length feature vectors. Zero vectors
/// yield similarity 0.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!(
            "vector lengths {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let dot: f64 = a.iter().zip(b).map(|(&x, &y)| x * y).sum();
    let na = math::sqrt(a.iter().map(|&x| x * x).sum());
    let nb = math::sqrt(b.iter().map(|&x| x * x).sum());
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok(dot / (na * nb))
}
