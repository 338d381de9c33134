//! `gpimg`: generate gradient-preserving images, extract magnitude-free HOG
//! features, and evaluate recognition parity.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use gpimg_cli::io::{load_image, save_image, write_atomic};
use gpimg_cli::manifest::load_dataset;
use gpimg_cli::render::{render_gdm, render_panels, ssim};
use gpimg_core::{
    extract_hog, gdm, gdm_residual, generate_protected, hog_to_csv, hog_to_le_bytes,
    mean_abs_residual, parity_report, synth_dataset, BorderPolicy, GdmConfig, HogConfig,
    LineSearch, OptimizerConfig, ParityOptions, Pipeline, SynthConfig, TrainConfig, Weighting,
};

#[derive(Parser)]
#[command(
    name = "gpimg",
    version,
    about = "Gradient-preserving image toolkit: protect images, extract magnitude-free HOG features, evaluate recognition parity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for batch stages (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PipelineArg {
    Proposed,
    Plain,
    Weighted,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Png,
    Pgm,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a gradient-preserving image by latent-field descent.
    Protect {
        input: PathBuf,
        /// Output image (.pgm or .png).
        output: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Upper bound on the line-search trial step.
        #[arg(long, default_value_t = 1.0)]
        lr: f64,
        #[arg(long, default_value_t = 2000)]
        iters: usize,
        /// Stop when the residual norm reaches this value.
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
        #[arg(long, default_value_t = 0.1)]
        init_scale: f64,
        /// Fixed-step descent instead of backtracking.
        #[arg(long)]
        fixed_step: bool,
        /// Write the convergence report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Render the gradient-direction map of an image.
    Gdm {
        input: PathBuf,
        /// Output PNG; angles map affinely onto [0, 255].
        output: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
    },
    /// Extract the HOG descriptor of an image.
    Hog {
        input: PathBuf,
        /// Output file: .csv (one value per line) or .bin (length-prefixed
        /// little-endian f64).
        output: PathBuf,
        #[arg(long, default_value_t = 8)]
        cell: usize,
        #[arg(long, default_value_t = 9)]
        bins: usize,
        /// Magnitude-weighted votes instead of the magnitude-free default.
        #[arg(long)]
        weighted: bool,
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
    },
    /// Write a synthetic oriented-grating dataset as a directory tree.
    Synth {
        outdir: PathBuf,
        #[arg(long, default_value_t = 8)]
        classes: usize,
        #[arg(long, default_value_t = 40)]
        per_class: usize,
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = FormatArg::Png)]
        format: FormatArg,
    },
    /// Run the recognition protocol over a dataset directory.
    Eval {
        /// Dataset root: one subdirectory per identity.
        dataset_root: PathBuf,
        #[arg(long, value_enum, default_value_t = PipelineArg::Proposed)]
        pipeline: PipelineArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated seeds; overrides --seed for multi-seed runs.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Write the parity report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        cell: usize,
        #[arg(long, default_value_t = 9)]
        bins: usize,
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
        #[arg(long, default_value_t = 2000)]
        iters: usize,
        #[arg(long, default_value_t = 1.0)]
        lr: f64,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, default_value_t = 0.1)]
        init_scale: f64,
        /// SVM regularization strength.
        #[arg(long, default_value_t = 1e-4)]
        lambda: f64,
        #[arg(long, default_value_t = 50)]
        epochs: usize,
    },
    /// Print the direction residual between two images.
    Verify {
        x: PathBuf,
        xprime: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
    },
    /// Render an image, optionally side by side with its protected version
    /// and that version's direction map.
    Visualize {
        input: PathBuf,
        output: PathBuf,
        /// Protected counterpart; adds the x' and GDM(x') panels and prints
        /// a structural-similarity diagnostic.
        #[arg(long)]
        protected: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
    },
}

fn gdm_config(eps: f64) -> Result<GdmConfig> {
    GdmConfig::new(eps, BorderPolicy::ReplicateEdge).context("invalid --eps")
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .ok();
    }

    match cli.command {
        Command::Protect {
            input,
            output,
            seed,
            lr,
            iters,
            tol,
            eps,
            init_scale,
            fixed_step,
            report,
        } => {
            let img = load_image(&input)?;
            let cfg = gdm_config(eps)?;
            let opt = OptimizerConfig {
                seed,
                init_scale,
                learning_rate: lr,
                max_iters: iters,
                tolerance: tol,
                use_squared_objective: true,
                line_search: if fixed_step {
                    LineSearch::Fixed
                } else {
                    LineSearch::Backtracking
                },
            };
            let (protected, conv) = generate_protected(&img, &opt, &cfg)?;
            save_image(&protected, &output)?;
            if let Some(path) = report {
                let json = serde_json::to_vec_pretty(&conv)?;
                write_atomic(&path, &json)?;
            }
            eprintln!(
                "protected {} -> {} (iterations {}, residual norm {:.6}, mean abs residual {:.6} rad)",
                input.display(),
                output.display(),
                conv.iterations,
                conv.final_objective,
                conv.final_mean_abs_residual
            );
        }
        Command::Gdm { input, output, eps } => {
            let img = load_image(&input)?;
            let map = gdm(&img, &gdm_config(eps)?);
            render_gdm(&map, &output)?;
        }
        Command::Hog {
            input,
            output,
            cell,
            bins,
            weighted,
            eps,
        } => {
            let img = load_image(&input)?;
            let hog_cfg = HogConfig {
                cell_size: cell,
                bins,
                weighting: if weighted {
                    Weighting::MagnitudeWeighted
                } else {
                    Weighting::Unweighted
                },
            };
            let hog = extract_hog(&img, &hog_cfg, &gdm_config(eps)?)?;
            let ext = output
                .extension()
                .and_then(|e| e.to_str())
                .map(|e| e.to_ascii_lowercase())
                .unwrap_or_default();
            match ext.as_str() {
                "csv" => write_atomic(&output, hog_to_csv(&hog).as_bytes())?,
                "bin" => write_atomic(&output, &hog_to_le_bytes(&hog))?,
                other => bail!("unsupported feature extension '{other}' (use .csv or .bin)"),
            }
            eprintln!("wrote {} features to {}", hog.len(), output.display());
        }
        Command::Synth {
            outdir,
            classes,
            per_class,
            size,
            noise,
            seed,
            format,
        } => {
            let cfg = SynthConfig {
                classes,
                per_class,
                size,
                noise_std: noise,
                seed,
            };
            let (images, labels) = synth_dataset(&cfg)?;
            let ext = match format {
                FormatArg::Png => "png",
                FormatArg::Pgm => "pgm",
            };
            for (i, (img, &label)) in images.iter().zip(&labels).enumerate() {
                let dir = outdir.join(format!("class_{label:02}"));
                std::fs::create_dir_all(&dir)
                    .with_context(|| format!("creating {}", dir.display()))?;
                let index = i % per_class;
                save_image(img, &dir.join(format!("img_{index:03}.{ext}")))?;
            }
            eprintln!(
                "wrote {} images ({} classes x {}) under {}",
                images.len(),
                classes,
                per_class,
                outdir.display()
            );
        }
        Command::Eval {
            dataset_root,
            pipeline,
            seed,
            seeds,
            report,
            cell,
            bins,
            eps,
            iters,
            lr,
            tol,
            init_scale,
            lambda,
            epochs,
        } => {
            let (manifest, images, labels) = load_dataset(&dataset_root)?;
            eprintln!(
                "loaded {} images, {} classes ({} skipped)",
                images.len(),
                manifest.classes.len(),
                manifest.skipped.len()
            );
            let pipelines: Vec<Pipeline> = match pipeline {
                PipelineArg::Proposed => vec![Pipeline::Proposed],
                PipelineArg::Plain => vec![Pipeline::Plain],
                PipelineArg::Weighted => vec![Pipeline::Weighted],
                PipelineArg::All => {
                    vec![Pipeline::Proposed, Pipeline::Plain, Pipeline::Weighted]
                }
            };
            let opts = ParityOptions {
                hog: HogConfig {
                    cell_size: cell,
                    bins,
                    weighting: Weighting::Unweighted,
                },
                gdm: gdm_config(eps)?,
                optimizer: OptimizerConfig {
                    init_scale,
                    learning_rate: lr,
                    max_iters: iters,
                    tolerance: tol,
                    ..OptimizerConfig::default()
                },
                svm: TrainConfig {
                    lambda,
                    epochs,
                    ..TrainConfig::default()
                },
            };
            let seed_list = seeds.unwrap_or_else(|| vec![seed]);
            let result = parity_report(&images, &labels, &pipelines, &opts, &seed_list)?;
            print!("{result}");
            if let Some(path) = report {
                let json = serde_json::to_vec_pretty(&result)?;
                write_atomic(&path, &json)?;
            }
        }
        Command::Verify { x, xprime, eps } => {
            let a = load_image(&x)?;
            let b = load_image(&xprime)?;
            let cfg = gdm_config(eps)?;
            let map_a = gdm(&a, &cfg);
            let map_b = gdm(&b, &cfg);
            let residual = gdm_residual(&map_a, &map_b)?;
            let mean_abs = mean_abs_residual(&map_a, &map_b)?;
            println!("gdm_residual {residual}");
            println!("mean_abs_angular_error {mean_abs}");
        }
        Command::Visualize {
            input,
            output,
            protected,
            eps,
        } => {
            let img = load_image(&input)?;
            let cfg = gdm_config(eps)?;
            match protected {
                Some(path) => {
                    let xp = load_image(&path)?;
                    render_panels(&img, Some(&xp), &cfg, &output)?;
                    let score = ssim(&img, &xp)?;
                    println!("ssim {score}");
                }
                None => render_panels(&img, None, &cfg, &output)?,
            }
        }
    }
    Ok(())
}
