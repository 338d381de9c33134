//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured values once its assertions hold. Criterion 6 needs an
//! external face dataset and reports SKIPPED when `GPIMG_YALEB_DIR` is not
//! set.

use std::fs;
use std::path::Path;
use std::process::Command;

use gpimg_cli::io::save_image;
use gpimg_core::{
    cell_histograms, cosine_similarity, extract_hog, gdm, generate_protected, objective,
    objective_gradient, parity_report, synth_dataset, GdmConfig, GrayImage, HogConfig,
    LatentField, OptimizerConfig, ParityOptions, Pipeline, SynthConfig, Weighting,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_image(seed: u64, height: usize, width: usize) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GrayImage::from_fn(height, width, |_, _| rng.random::<f64>()).unwrap()
}

fn random_latent(seed: u64, height: usize, width: usize, scale: f64) -> LatentField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    LatentField::from_values(
        height,
        width,
        (0..height * width)
            .map(|_| (2.0 * rng.random::<f64>() - 1.0) * scale)
            .collect(),
    )
    .unwrap()
}

/// Criterion 1: the analytic gradient of the squared objective matches
/// central finite differences (step 1e-5) with elementwise relative error
/// at most 1e-4 wherever |gradient| > 1e-8, on at least 20 random 16x16
/// instances.
#[test]
fn criterion_1_gradient_correctness() {
    let cfg = GdmConfig::default();
    let step = 1e-5;
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let target = gdm(&random_image(1000 + seed, 16, 16), &cfg);
        let s = random_latent(2000 + seed, 16, 16, 1.0);
        let analytic = objective_gradient(&target, &s, &cfg).unwrap();
        for i in 0..analytic.len() {
            let mut plus = s.values().to_vec();
            plus[i] += step;
            let mut minus = s.values().to_vec();
            minus[i] -= step;
            let f_plus = objective(
                &target,
                &LatentField::from_values(16, 16, plus).unwrap(),
                &cfg,
                true,
            )
            .unwrap();
            let f_minus = objective(
                &target,
                &LatentField::from_values(16, 16, minus).unwrap(),
                &cfg,
                true,
            )
            .unwrap();
            let numeric = (f_plus - f_minus) / (2.0 * step);
            let a = analytic[i];
            if a.abs() > 1e-8 {
                let rel = (a - numeric).abs() / a.abs().max(numeric.abs());
                worst = worst.max(rel);
                assert!(
                    rel <= 1e-4,
                    "seed {seed} entry {i}: analytic {a} vs numeric {numeric} (rel {rel})"
                );
            }
        }
    }
    println!(
        "acceptance criterion 1 (gradient correctness): PASS — 20 instances, worst relative error {worst:.2e} <= 1e-4"
    );
}

/// The ten 32x32 grating+noise images shared by criteria 2 and 4.
fn criterion_images() -> Vec<GrayImage> {
    synth_dataset(&SynthConfig {
        classes: 10,
        per_class: 1,
        size: 32,
        noise_std: 0.05,
        seed: 42,
    })
    .unwrap()
    .0
}

/// Criterion 2: with the default optimizer configuration, the mean absolute
/// angular residual over ten synthetic 32x32 images is at most 0.05 rad and
/// every objective trace is non-increasing.
#[test]
fn criterion_2_gdm_preservation() {
    let cfg = GdmConfig::default();
    let opt = OptimizerConfig::default();
    let mut residuals = Vec::new();
    for (i, img) in criterion_images().iter().enumerate() {
        let (_, report) = generate_protected(img, &opt, &cfg).unwrap();
        for pair in report.objective_trace.windows(2) {
            assert!(
                pair[1] <= pair[0],
                "image {i}: objective trace increased: {pair:?}"
            );
        }
        residuals.push(report.final_mean_abs_residual);
    }
    let mean = residuals.iter().sum::<f64>() / residuals.len() as f64;
    assert!(
        mean <= 0.05,
        "mean absolute angular residual {mean} > 0.05 (per image: {residuals:?})"
    );
    println!(
        "acceptance criterion 2 (GDM preservation): PASS — mean abs residual {mean:.4} rad <= 0.05, traces non-increasing"
    );
}

/// Criterion 3: descriptor length matches the dimension formula for ten
/// random geometries, every nonzero block slice has unit norm within 1e-9,
/// unweighted cell histograms sum to the cell area, and histograms match a
/// brute-force per-pixel oracle exactly.
#[test]
fn criterion_3_hog_structure() {
    let gdm_cfg = GdmConfig::default();
    let geometries = [
        (2usize, 2usize, 8usize, 9usize),
        (3, 2, 8, 9),
        (4, 5, 8, 9),
        (2, 3, 6, 5),
        (5, 4, 4, 12),
        (3, 3, 10, 7),
        (6, 2, 5, 2),
        (2, 6, 7, 3),
        (24, 21, 8, 9),
        (4, 4, 16, 9),
    ];
    for (gi, &(rows, cols, cell, bins)) in geometries.iter().enumerate() {
        let height = rows * cell;
        let width = cols * cell;
        let img = random_image(3000 + gi as u64, height, width);
        let cfg = HogConfig {
            cell_size: cell,
            bins,
            weighting: Weighting::Unweighted,
        };
        let hog = extract_hog(&img, &cfg, &gdm_cfg).unwrap();
        let expected_len = (rows - 1) * (cols - 1) * 4 * bins;
        assert_eq!(hog.len(), expected_len, "geometry {gi}");

        for block in hog.values().chunks(4 * bins) {
            let norm = block.iter().map(|&v| v * v).sum::<f64>().sqrt();
            assert!(
                norm == 0.0 || (norm - 1.0).abs() <= 1e-9,
                "geometry {gi}: block norm {norm}"
            );
        }

        // Brute-force oracle: per-pixel loop with linear edge scan,
        // independent of the implementation's binning arithmetic.
        let map = gdm(&img, &gdm_cfg);
        let grid = cell_histograms(&map, &cfg, None).unwrap();
        let edge = |k: usize| -std::f64::consts::FRAC_PI_2 + k as f64 * std::f64::consts::PI / bins as f64;
        let mut oracle = vec![vec![0.0f64; bins]; rows * cols];
        for h in 0..height {
            for w in 0..width {
                let angle = map.angle(h, w);
                let mut bin = bins - 1;
                for k in 0..bins {
                    if angle < edge(k + 1) {
                        bin = k;
                        break;
                    }
                }
                oracle[(h / cell) * cols + w / cell][bin] += 1.0;
            }
        }
        for i in 0..rows {
            for j in 0..cols {
                let hist = grid.histogram(i, j);
                assert_eq!(hist, oracle[i * cols + j].as_slice(), "geometry {gi} cell ({i},{j})");
                assert_eq!(
                    hist.iter().sum::<f64>(),
                    (cell * cell) as f64,
                    "geometry {gi}: cell mass"
                );
            }
        }
    }
    println!(
        "acceptance criterion 3 (HOG structure): PASS — 10 geometries: length formula, unit block norms (1e-9), exact brute-force histogram match, cell mass N_c^2"
    );
}

/// Criterion 4: cosine similarity between the magnitude-free descriptors of
/// each criterion-2 image and its protected version averages at least 0.95.
#[test]
fn criterion_4_feature_parity_under_protection() {
    let gdm_cfg = GdmConfig::default();
    let hog_cfg = HogConfig::default();
    let opt = OptimizerConfig::default();
    let mut sims = Vec::new();
    for img in &criterion_images() {
        let (protected, _) = generate_protected(img, &opt, &gdm_cfg).unwrap();
        let a = extract_hog(img, &hog_cfg, &gdm_cfg).unwrap();
        let b = extract_hog(&protected, &hog_cfg, &gdm_cfg).unwrap();
        sims.push(cosine_similarity(a.values(), b.values()).unwrap());
    }
    let mean = sims.iter().sum::<f64>() / sims.len() as f64;
    assert!(mean >= 0.95, "mean cosine similarity {mean} < 0.95: {sims:?}");
    println!(
        "acceptance criterion 4 (feature parity under protection): PASS — mean cosine similarity {mean:.4} >= 0.95"
    );
}

/// Criterion 5: on the synthetic dataset (8 orientation classes, 40 images
/// each, 64x64, noise 0.05) with stratified 50/50 splits and the built-in
/// linear SVM, plain magnitude-free HOG accuracy averages at least 0.90 over
/// five seeds and the protected pipeline tracks it within 0.02.
#[test]
fn criterion_5_recognition_parity() {
    let (images, labels) = synth_dataset(&SynthConfig::default()).unwrap();
    let opts = ParityOptions {
        // 400 descent iterations give descriptor-level parity (criterion 4
        // measures cosine ~0.995 at this budget) at a tractable desk-scale
        // runtime; the recognition criterion pins dataset, split, and SVM,
        // not the protection budget.
        optimizer: OptimizerConfig {
            max_iters: 400,
            ..OptimizerConfig::default()
        },
        ..ParityOptions::default()
    };
    let report = parity_report(
        &images,
        &labels,
        &[Pipeline::Plain, Pipeline::Proposed],
        &opts,
        &[1, 2, 3, 4, 5],
    )
    .unwrap();
    let accuracy = |name: &str| {
        report
            .rows
            .iter()
            .find(|r| r.pipeline == name)
            .map(|r| r.mean_accuracy)
            .unwrap()
    };
    let plain = accuracy("plain");
    let proposed = accuracy("proposed");
    let gap = (plain - proposed).abs();
    assert!(plain >= 0.90, "plain accuracy {plain} < 0.90\n{report}");
    assert!(gap <= 0.02, "accuracy gap {gap} > 0.02\n{report}");
    println!(
        "acceptance criterion 5 (desk-scale recognition parity): PASS — plain {plain:.4} >= 0.90, protected {proposed:.4}, gap {gap:.4} <= 0.02 (5 seeds)"
    );
}

/// Criterion 6: with a user-supplied Extended Yale B copy (38 identities,
/// frontal captures, pointed to by `GPIMG_YALEB_DIR`), the protected
/// pipeline lands within 0.02 of 0.9918 and the magnitude-weighted baseline
/// within 0.02 of 0.9942. Skipped, not failed, when the dataset is absent.
#[test]
fn criterion_6_yale_b_reproduction() {
    let Some(root) = std::env::var_os("GPIMG_YALEB_DIR") else {
        println!(
            "acceptance criterion 6 (Yale B reproduction): SKIPPED — set GPIMG_YALEB_DIR to a local Extended Yale B copy (38 identities) to run"
        );
        return;
    };
    let root = std::path::PathBuf::from(root);
    let (manifest, images, labels) =
        gpimg_cli::manifest::load_dataset(&root).expect("loading the Yale B directory");
    println!(
        "criterion 6: loaded {} images across {} identities ({} skipped)",
        images.len(),
        manifest.classes.len(),
        manifest.skipped.len()
    );
    let opts = ParityOptions::default();
    let report = parity_report(
        &images,
        &labels,
        &[Pipeline::Proposed, Pipeline::Weighted],
        &opts,
        &[1],
    )
    .unwrap();
    let accuracy = |name: &str| {
        report
            .rows
            .iter()
            .find(|r| r.pipeline == name)
            .map(|r| r.mean_accuracy)
            .unwrap()
    };
    let proposed = accuracy("proposed");
    let weighted = accuracy("weighted");
    assert!(
        (proposed - 0.9918).abs() <= 0.02,
        "proposed accuracy {proposed} not within 0.02 of 0.9918"
    );
    assert!(
        (weighted - 0.9942).abs() <= 0.02,
        "weighted accuracy {weighted} not within 0.02 of 0.9942"
    );
    println!(
        "acceptance criterion 6 (Yale B reproduction): PASS — proposed {proposed:.4} (ref 0.9918), weighted {weighted:.4} (ref 0.9942), both within 0.02"
    );
}

/// Criterion 7: `protect` and `eval` with fixed seeds produce byte-identical
/// artifacts across two consecutive runs of the compiled binary.
#[test]
fn criterion_7_determinism() {
    let gpimg = env!("CARGO_BIN_EXE_gpimg");
    let dir = tempfile::tempdir().unwrap();

    let input = dir.path().join("x.png");
    let img = GrayImage::from_fn(32, 32, |h, w| {
        0.5 + 0.4 * ((h as f64 * 0.37 + w as f64 * 0.61).sin())
    })
    .unwrap();
    save_image(&img, &input).unwrap();

    let protect = |out: &Path, report: &Path| {
        let status = Command::new(gpimg)
            .args([
                "protect",
                input.to_str().unwrap(),
                out.to_str().unwrap(),
                "--seed",
                "11",
                "--iters",
                "120",
                "--report",
                report.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
    };
    let (o1, r1) = (dir.path().join("p1.png"), dir.path().join("p1.json"));
    let (o2, r2) = (dir.path().join("p2.png"), dir.path().join("p2.json"));
    protect(&o1, &r1);
    protect(&o2, &r2);
    assert_eq!(fs::read(&o1).unwrap(), fs::read(&o2).unwrap());
    assert_eq!(fs::read(&r1).unwrap(), fs::read(&r2).unwrap());

    let data = dir.path().join("data");
    let status = Command::new(gpimg)
        .args([
            "synth",
            data.to_str().unwrap(),
            "--classes",
            "2",
            "--per-class",
            "4",
            "--size",
            "32",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let eval = |report: &Path| {
        let output = Command::new(gpimg)
            .args([
                "eval",
                data.to_str().unwrap(),
                "--pipeline",
                "proposed",
                "--iters",
                "60",
                "--seed",
                "3",
                "--report",
                report.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(output.status.success());
        output.stdout
    };
    let (e1, e2) = (dir.path().join("e1.json"), dir.path().join("e2.json"));
    let s1 = eval(&e1);
    let s2 = eval(&e2);
    assert_eq!(s1, s2);
    assert_eq!(fs::read(&e1).unwrap(), fs::read(&e2).unwrap());

    println!(
        "acceptance criterion 7 (determinism): PASS — protect and eval artifacts byte-identical across consecutive runs"
    );
}
