//! End-to-end recognition-parity harness: build features per pipeline,
//! split, train, evaluate, and tabulate accuracies across seeds.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::{evaluate, mean_std, split_half, train_svm, LabeledFeatureSet, TrainConfig};
use crate::gdm::GdmConfig;
use crate::generator::{generate_protected, OptimizerConfig};
use crate::hog::{extract_hog, HogConfig, Weighting};
use crate::image::GrayImage;

/// Feature-extraction pipelines compared by [`parity_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Pipeline {
    /// Protect each image, then magnitude-free HOG on the protected image.
    Proposed,
    /// Magnitude-free HOG directly on the plain image.
    Plain,
    /// Magnitude-weighted HOG on the plain image.
    Weighted,
}

impl Pipeline {
    pub fn name(&self) -> &'static str {
        match self {
            Pipeline::Proposed => "proposed",
            Pipeline::Plain => "plain",
            Pipeline::Weighted => "weighted",
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Shared configuration for a parity run. The HOG weighting field is
/// overridden per pipeline; optimizer and SVM seeds are derived per run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParityOptions {
    pub hog: HogConfig,
    pub gdm: GdmConfig,
    pub optimizer: OptimizerConfig,
    pub svm: TrainConfig,
}

/// One split/train/evaluate run of one pipeline.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PipelineRun {
    pub pipeline: String,
    pub seed: u64,
    pub accuracy: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub confusion: Vec<Vec<usize>>,
}

/// Accuracy summary of one pipeline across seeds.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PipelineSummary {
    pub pipeline: String,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub runs: Vec<PipelineRun>,
}

/// Machine-readable parity table; `Display` renders the human-readable form.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParityReport {
    pub rows: Vec<PipelineSummary>,
}

impl fmt::Display for ParityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<12} {:>8} {:>8}  per-seed", "pipeline", "mean", "std")?;
        for row in &self.rows {
            let per_seed: Vec<String> = row
                .runs
                .iter()
                .map(|r| format!("{}:{:.4}", r.seed, r.accuracy))
                .collect();
            writeln!(
                f,
                "{:<12} {:>8.4} {:>8.4}  {}",
                row.pipeline,
                row.mean_accuracy,
                row.std_accuracy,
                per_seed.join(" ")
            )?;
        }
        Ok(())
    }
}

fn map_images<T, F>(images: &[GrayImage], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &GrayImage) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        images
            .par_iter()
            .enumerate()
            .map(|(i, img)| f(i, img))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        images
            .iter()
            .enumerate()
            .map(|(i, img)| f(i, img))
            .collect()
    }
}

/// Extracts per-image feature vectors for one pipeline.
///
/// For [`Pipeline::Proposed`] each image gets its own protection seed drawn
/// from a PRNG seeded with `seed`, so a run is reproducible end to end.
pub fn pipeline_features(
    images: &[GrayImage],
    pipeline: Pipeline,
    opts: &ParityOptions,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let unweighted = HogConfig {
        weighting: Weighting::Unweighted,
        ..opts.hog
    };
    match pipeline {
        Pipeline::Plain => map_images(images, |_, img| {
            Ok(extract_hog(img, &unweighted, &opts.gdm)?.into_values())
        }),
        Pipeline::Weighted => {
            let weighted = HogConfig {
                weighting: Weighting::MagnitudeWeighted,
                ..opts.hog
            };
            map_images(images, |_, img| {
                Ok(extract_hog(img, &weighted, &opts.gdm)?.into_values())
            })
        }
        Pipeline::Proposed => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let image_seeds: Vec<u64> = (0..images.len()).map(|_| rng.random()).collect();
            map_images(images, |i, img| {
                let opt = OptimizerConfig {
                    seed: image_seeds[i],
                    ..opts.optimizer
                };
                let (protected, _) = generate_protected(img, &opt, &opts.gdm)?;
                Ok(extract_hog(&protected, &unweighted, &opts.gdm)?.into_values())
            })
        }
    }
}

/// Runs every pipeline over every seed: features, stratified split, SVM
/// training, evaluation. Plain and weighted features are seed-independent
/// and computed once.
pub fn parity_report(
    images: &[GrayImage],
    labels: &[usize],
    pipelines: &[Pipeline],
    opts: &ParityOptions,
    seeds: &[u64],
) -> Result<ParityReport> {
    if images.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} images vs {} labels",
            images.len(),
            labels.len()
        )));
    }
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("at least one seed is required".into()));
    }
    let mut rows = Vec::with_capacity(pipelines.len());
    for &pipeline in pipelines {
        let mut cached: Option<Vec<Vec<f64>>> = None;
        let mut runs = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let features = match pipeline {
                Pipeline::Proposed => pipeline_features(images, pipeline, opts, seed)?,
                _ => match &cached {
                    Some(f) => f.clone(),
                    None => {
                        let f = pipeline_features(images, pipeline, opts, seed)?;
                        cached = Some(f.clone());
                        f
                    }
                },
            };
            let set = LabeledFeatureSet::new(features, labels.to_vec())?;
            let (train, test) = split_half(&set, seed)?;
            let model = train_svm(
                &train,
                &TrainConfig {
                    seed,
                    ..opts.svm
                },
            )?;
            let outcome = evaluate(&model, &test)?;
            runs.push(PipelineRun {
                pipeline: pipeline.name().to_string(),
                seed,
                accuracy: outcome.accuracy,
                n_train: train.len(),
                n_test: test.len(),
                confusion: outcome.confusion,
            });
        }
        let accuracies: Vec<f64> = runs.iter().map(|r| r.accuracy).collect();
        let (mean, std) = mean_std(&accuracies);
        rows.push(PipelineSummary {
            pipeline: pipeline.name().to_string(),
            mean_accuracy: mean,
            std_accuracy: std,
            runs,
        });
    }
    Ok(ParityReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synth_dataset, SynthConfig};

    fn small_dataset() -> (Vec<GrayImage>, Vec<usize>) {
        synth_dataset(&SynthConfig {
            classes: 3,
            per_class: 6,
            size: 32,
            noise_std: 0.02,
            seed: 5,
        })
        .unwrap()
    }

    #[test]
    fn identical_pipeline_rows_match_for_same_seed() {
        let (images, labels) = small_dataset();
        let opts = ParityOptions::default();
        let report = parity_report(
            &images,
            &labels,
            &[Pipeline::Plain, Pipeline::Plain],
            &opts,
            &[9],
        )
        .unwrap();
        assert_eq!(report.rows[0].runs, report.rows[1].runs);
    }

    #[test]
    fn plain_pipeline_learns_orientations() {
        let (images, labels) = small_dataset();
        let opts = ParityOptions::default();
        let report =
            parity_report(&images, &labels, &[Pipeline::Plain], &opts, &[1, 2]).unwrap();
        assert!(report.rows[0].mean_accuracy >= 0.8, "{report}");
        for run in &report.rows[0].runs {
            assert_eq!(run.n_train, 9);
            assert_eq!(run.n_test, 9);
        }
    }

    #[test]
    fn weighted_differs_from_plain_features() {
        let (images, _) = small_dataset();
        let opts = ParityOptions::default();
        let plain = pipeline_features(&images, Pipeline::Plain, &opts, 0).unwrap();
        let weighted = pipeline_features(&images, Pipeline::Weighted, &opts, 0).unwrap();
        assert_eq!(plain.len(), weighted.len());
        assert_ne!(plain, weighted);
    }

    #[test]
    fn proposed_features_are_seeded_per_image() {
        let (images, _) = small_dataset();
        let opts = ParityOptions {
            optimizer: OptimizerConfig {
                max_iters: 20,
                ..OptimizerConfig::default()
            },
            ..ParityOptions::default()
        };
        let a = pipeline_features(&images[..2], Pipeline::Proposed, &opts, 3).unwrap();
        let b = pipeline_features(&images[..2], Pipeline::Proposed, &opts, 3).unwrap();
        assert_eq!(a, b);
        let c = pipeline_features(&images[..2], Pipeline::Proposed, &opts, 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn report_validates_inputs() {
        let (images, labels) = small_dataset();
        let opts = ParityOptions::default();
        assert!(parity_report(&images, &labels[..3], &[Pipeline::Plain], &opts, &[1]).is_err());
        assert!(parity_report(&images, &labels, &[Pipeline::Plain], &opts, &[]).is_err());
    }
}
