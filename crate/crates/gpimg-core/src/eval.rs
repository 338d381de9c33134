//! Recognition protocol: stratified 50/50 split, one-vs-rest linear SVM
//! trained by stochastic subgradient descent on the L2-regularized hinge
//! loss (step size `1/(lambda * t)`), and accuracy/confusion evaluation.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math;

/// Equal-length feature vectors with class labels in `[0, classes)`.
///
/// Every class has at least one sample and labels are contiguous from 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeatureSet {
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
    classes: usize,
}

impl LabeledFeatureSet {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InsufficientData("empty feature set".into()));
        }
        if features.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} features vs {} labels",
                features.len(),
                labels.len()
            )));
        }
        let dim = features[0].len();
        if dim == 0 {
            return Err(Error::InsufficientData("zero-dimensional features".into()));
        }
        if let Some(f) = features.iter().find(|f| f.len() != dim) {
            return Err(Error::ShapeMismatch(format!(
                "feature dimension {} differs from {dim}",
                f.len()
            )));
        }
        let classes = labels.iter().max().copied().unwrap_or(0) + 1;
        let mut counts = vec![0usize; classes];
        for &label in &labels {
            counts[label] += 1;
        }
        if let Some(k) = counts.iter().position(|&c| c == 0) {
            return Err(Error::InsufficientData(format!(
                "class {k} has no samples; class ids must be contiguous from 0"
            )));
        }
        Ok(Self {
            features,
            labels,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.features[0].len()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Samples per class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.classes];
        for &label in &self.labels {
            counts[label] += 1;
        }
        counts
    }
}

/// Training hyperparameters for [`train_svm`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainConfig {
    /// L2 regularization strength.
    pub lambda: f64,
    /// Passes over the training set.
    pub epochs: usize,
    /// Seed for per-epoch shuffling; training is deterministic given it.
    pub seed: u64,
    /// Record the regularized objective after every epoch (costs one full
    /// pass per epoch; off by default).
    pub track_epochs: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            epochs: 50,
            seed: 0,
            track_epochs: false,
        }
    }
}

/// One-vs-rest linear classifier: `classes x dim` weights plus biases.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
    dim: usize,
    /// Final regularized training objective per class.
    pub train_objectives: Vec<f64>,
    /// Mean objective across classes after each epoch when tracking was
    /// requested; empty otherwise.
    pub epoch_objectives: Vec<f64>,
}

impl SvmModel {
    pub fn classes(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    /// Per-class decision scores `w_k . x + b_k`.
    pub fn scores(&self, feature: &[f64]) -> Result<Vec<f64>> {
        if feature.len() != self.dim {
            return Err(Error::ShapeMismatch(format!(
                "feature dimension {} vs model dimension {}",
                feature.len(),
                self.dim
            )));
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, &b)| dot(w, feature) + b)
            .collect())
    }

    /// Arg-max prediction; ties break toward the lowest class id.
    pub fn predict(&self, feature: &[f64]) -> Result<usize> {
        let scores = self.scores(feature)?;
        let mut best = 0;
        for (k, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = k;
            }
        }
        Ok(best)
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Per-class stratified 50/50 split; odd class counts send the extra sample
/// to the training side. Deterministic given `seed`.
pub fn split_half(set: &LabeledFeatureSet, seed: u64) -> Result<(LabeledFeatureSet, LabeledFeatureSet)> {
    let counts = set.class_counts();
    if let Some(k) = counts.iter().position(|&c| c < 2) {
        return Err(Error::InsufficientData(format!(
            "class {k} has {} sample(s); at least 2 are required to split",
            counts[k]
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for k in 0..set.classes {
        let mut members: Vec<usize> = (0..set.len()).filter(|&i| set.labels[i] == k).collect();
        members.shuffle(&mut rng);
        let n_train = members.len().div_ceil(2);
        train_idx.extend_from_slice(&members[..n_train]);
        test_idx.extend_from_slice(&members[n_train..]);
    }
    let gather = |idx: &[usize]| {
        LabeledFeatureSet::new(
            idx.iter().map(|&i| set.features[i].clone()).collect(),
            idx.iter().map(|&i| set.labels[i]).collect(),
        )
    };
    Ok((gather(&train_idx)?, gather(&test_idx)?))
}

/// Regularized objective of one binary classifier on its training labels.
fn binary_objective(
    features: &[Vec<f64>],
    signs: &[f64],
    w: &[f64],
    b: f64,
    lambda: f64,
) -> f64 {
    let hinge: f64 = features
        .iter()
        .zip(signs)
        .map(|(x, &y)| (1.0 - y * (dot(w, x) + b)).max(0.0))
        .sum();
    0.5 * lambda * dot(w, w) + hinge / features.len() as f64
}

struct BinaryOutcome {
    w: Vec<f64>,
    b: f64,
    objective: f64,
    epoch_objectives: Vec<f64>,
}

/// Pegasos-style subgradient descent for one one-vs-rest classifier. The
/// weight vector is kept as `scale * v` so the per-step shrink is O(1).
fn train_binary(
    features: &[Vec<f64>],
    signs: &[f64],
    cfg: &TrainConfig,
    class_seed: u64,
) -> BinaryOutcome {
    let n = features.len();
    let dim = features[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(class_seed);
    let mut v = vec![0.0; dim];
    let mut scale = 1.0_f64;
    let mut b = 0.0;
    let mut t = 0u64;
    let mut order: Vec<usize> = (0..n).collect();
    let mut epoch_objectives = Vec::new();

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (cfg.lambda * t as f64);
            let margin = signs[i] * (scale * dot(&v, &features[i]) + b);
            scale *= 1.0 - 1.0 / t as f64;
            if margin < 1.0 {
                if scale < 1e-100 {
                    for value in v.iter_mut() {
                        *value *= scale;
                    }
                    scale = 1.0;
                }
                let coef = eta * signs[i] / scale;
                for (vj, xj) in v.iter_mut().zip(&features[i]) {
                    *vj += coef * xj;
                }
                b += eta * signs[i];
            }
        }
        if cfg.track_epochs {
            let w: Vec<f64> = v.iter().map(|&vj| scale * vj).collect();
            epoch_objectives.push(binary_objective(features, signs, &w, b, cfg.lambda));
        }
    }

    let w: Vec<f64> = v.iter().map(|&vj| scale * vj).collect();
    let objective = binary_objective(features, signs, &w, b, cfg.lambda);
    BinaryOutcome {
        w,
        b,
        objective,
        epoch_objectives,
    }
}

fn class_seed(base: u64, class: usize) -> u64 {
    base.wrapping_add((class as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Trains a one-vs-rest linear SVM. Per-class trainers are independent and
/// deterministic given the seed, so they may run in parallel.
pub fn train_svm(train: &LabeledFeatureSet, cfg: &TrainConfig) -> Result<SvmModel> {
    if train.classes < 2 {
        return Err(Error::InsufficientData(
            "training requires at least two classes".into(),
        ));
    }
    if !(cfg.lambda > 0.0 && cfg.lambda.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "lambda must be positive, got {}",
            cfg.lambda
        )));
    }
    if cfg.epochs == 0 {
        return Err(Error::InvalidConfig("epochs must be at least 1".into()));
    }

    let run_class = |k: usize| -> BinaryOutcome {
        let signs: Vec<f64> = train
            .labels
            .iter()
            .map(|&label| if label == k { 1.0 } else { -1.0 })
            .collect();
        train_binary(&train.features, &signs, cfg, class_seed(cfg.seed, k))
    };

    #[cfg(feature = "parallel")]
    let outcomes: Vec<BinaryOutcome> = {
        use rayon::prelude::*;
        (0..train.classes).into_par_iter().map(run_class).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<BinaryOutcome> = (0..train.classes).map(run_class).collect();

    let epoch_objectives = if cfg.track_epochs {
        (0..cfg.epochs)
            .map(|e| {
                outcomes.iter().map(|o| o.epoch_objectives[e]).sum::<f64>()
                    / outcomes.len() as f64
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(SvmModel {
        dim: train.feature_dim(),
        train_objectives: outcomes.iter().map(|o| o.objective).collect(),
        biases: outcomes.iter().map(|o| o.b).collect(),
        weights: outcomes.into_iter().map(|o| o.w).collect(),
        epoch_objectives,
    })
}

/// Accuracy and per-class confusion counts on a test set.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalOutcome {
    pub accuracy: f64,
    /// `confusion[true_class][predicted_class]` counts.
    pub confusion: Vec<Vec<usize>>,
    pub n_test: usize,
}

/// Evaluates a model on a labeled test set.
pub fn evaluate(model: &SvmModel, test: &LabeledFeatureSet) -> Result<EvalOutcome> {
    if test.feature_dim() != model.dim {
        return Err(Error::ShapeMismatch(format!(
            "test dimension {} vs model dimension {}",
            test.feature_dim(),
            model.dim
        )));
    }
    let classes = model.classes().max(test.classes);
    let mut confusion = vec![vec![0usize; classes]; classes];
    let mut correct = 0usize;
    for (feature, &label) in test.features.iter().zip(&test.labels) {
        let predicted = model.predict(feature)?;
        confusion[label][predicted] += 1;
        if predicted == label {
            correct += 1;
        }
    }
    Ok(EvalOutcome {
        accuracy: correct as f64 / test.len() as f64,
        confusion,
        n_test: test.len(),
    })
}

/// Mean and population standard deviation of a value sequence.
pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, math::sqrt(var))
}
