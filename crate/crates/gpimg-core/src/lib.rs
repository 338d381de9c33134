//! # gpimg-core
//!
//! Generation of visually protected, gradient-preserving images and
//! magnitude-free HOG feature extraction from them.
//!
//! A gradient-preserving image `x'` is a visually unrecognizable image whose
//! luminance gradient-direction map (GDM) approximates the GDM of an original
//! image `x`. Because obtaining `x'` starts from random noise and only the
//! gradient *directions* are matched, the result carries no usable visual
//! information and no key material, yet orientation histograms extracted from
//! it behave like those of the original.
//!
//! The crate provides:
//!
//! - [`gdm`]: gradient-direction maps from central luminance differences,
//!   `angle = arctan(vertical / (horizontal + epsilon))`;
//! - [`generator`]: steepest-descent synthesis of `x' = sigmoid(s)` whose GDM
//!   matches a target GDM, with the box constraint enforced by the sigmoid
//!   reparameterization rather than clipping;
//! - [`hog`]: cell/block HOG descriptors over the GDM, both the magnitude-free
//!   variant (each pixel votes with weight 1) and the conventional
//!   magnitude-weighted variant;
//! - [`eval`]: a stratified 50/50 split, a one-vs-rest linear SVM trained by
//!   stochastic subgradient descent, and accuracy/confusion reporting;
//! - [`synth`]: a deterministic oriented-grating dataset generator for
//!   dataset-free experiments;
//! - [`parity`]: an end-to-end harness comparing recognition accuracy of
//!   protected and plain pipelines.
//!
//! The crate is `no_std`-compatible (with `alloc`); disable the default `std`
//! feature for embedded use. All operations are deterministic given their
//! seeds and are pure functions of their inputs.
//!
//! ## Quick start
//!
//! ```
//! use gpimg_core::{generate_protected, gdm, gdm_residual, GdmConfig, GrayImage, OptimizerConfig};
//!
//! let x = GrayImage::from_fn(16, 16, |h, w| 0.5 + 0.4 * (0.5 * (h as f64 + w as f64)).sin())
//!     .unwrap();
//! let cfg = GdmConfig::default();
//! let (x_prime, report) = generate_protected(&x, &OptimizerConfig::default(), &cfg).unwrap();
//! let residual = gdm_residual(&gdm(&x, &cfg), &gdm(&x_prime, &cfg)).unwrap();
//! assert!(residual <= report.final_objective + 1e-12);
//! ```

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod codec;
pub mod error;
pub mod eval;
pub mod gdm;
pub mod generator;
pub mod hog;
pub mod image;
mod math;
pub mod parity;
pub mod synth;

pub use codec::{hog_from_csv, hog_from_le_bytes, hog_to_csv, hog_to_le_bytes};
pub use error::{Error, Result};
pub use eval::{
    evaluate, split_half, train_svm, EvalOutcome, LabeledFeatureSet, SvmModel, TrainConfig,
};
pub use gdm::{
    central_differences, gdm, gdm_residual, mean_abs_residual, BorderPolicy, GdmConfig,
    GradientDirectionMap,
};
pub use generator::{
    generate_protected, init_latent, objective, objective_gradient, sigmoid_map,
    ConvergenceReport, LatentField, LineSearch, OptimizerConfig,
};
pub use hog::{
    assemble_blocks, cell_histograms, cosine_similarity, extract_hog, normalize_block,
    CellHistogramGrid, HogConfig, HogVector, Weighting,
};
pub use image::GrayImage;
pub use parity::{parity_report, pipeline_features, ParityOptions, ParityReport, Pipeline};
pub use synth::{grating, synth_dataset, SynthConfig};
