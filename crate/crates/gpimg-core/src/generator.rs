//! Descent synthesis of gradient-preserving images.
//!
//! The protected image is parameterized as `x' = sigmoid(s)` over an
//! unconstrained latent field `s`, which keeps every pixel inside `(0, 1)`
//! without any clipping. The reported objective is always the unsquared
//! Euclidean norm of the angle residual.
//!
//! Minimizing the angle residual directly by plain gradient descent is
//! numerically hostile: the angle of a difference vector near the origin has
//! unbounded curvature (`1/D` blows up as both central differences vanish),
//! so descent paths stall on needle-sharp walls far from any good solution.
//! The descent engine therefore works on an equivalent smooth formulation:
//! an angle matches its target exactly when the difference vector
//! `u = (H + eps, V)` lies on the target line through the origin, i.e. when
//! the cross product `sin(theta_t) * (H + eps) - cos(theta_t) * V`
//! vanishes. The engine runs a ladder of reweighted least-squares rounds on
//! that cross term (weights `1/(D + mu)` with decreasing `mu`, approximating
//! the angle error), plus a radial barrier that keeps difference vectors
//! from collapsing below a healthy magnitude, and finishes with backtracking
//! steepest descent on the true residual norm. Every round uses backtracking
//! line search with one parabolic refinement of the accepted step.
//!
//! Across all rounds the optimizer tracks the best iterate seen under the
//! true objective; that incumbent is what the function returns and what the
//! objective trace records, so the trace is non-increasing per iteration.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gdm::{
    central_differences_into, direction_angle, gdm, mean_abs_residual, BorderPolicy, GdmConfig,
    GradientDirectionMap,
};
use crate::image::GrayImage;
use crate::math;

/// Smallest step the backtracking line search will try before giving up.
const STEP_FLOOR: f64 = 1e-8;
/// Damping schedule for the reweighted alignment rounds.
const MU_LADDER: [f64; 7] = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5];
/// Difference vectors shorter than this are pushed outward so their angle
/// stays robust.
const RADIUS_FLOOR: f64 = 0.05;
/// Weight of the radial barrier relative to the alignment terms.
const BARRIER_WEIGHT: f64 = 1.0;

/// Unconstrained real grid whose elementwise sigmoid is a protected image.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentField {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl LatentField {
    /// Builds a field from row-major values, rejecting non-finite entries.
    pub fn from_values(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || values.len() != height * width {
            return Err(Error::InvalidLatent(format!(
                "value count {} does not equal {height}x{width}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidLatent(format!("non-finite value {v}")));
        }
        Ok(Self {
            height,
            width,
            values,
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

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Step-size control for the descent loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum LineSearch {
    /// Apply `learning_rate` unconditionally to the true-objective gradient;
    /// the objective may increase.
    Fixed,
    /// Halve the trial step until the round objective strictly decreases,
    /// down to a floor of 1e-8; failure to decrease ends the run.
    #[default]
    Backtracking,
}

/// Parameters of [`generate_protected`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OptimizerConfig {
    /// PRNG seed for the latent initialization.
    pub seed: u64,
    /// Half-width of the uniform initialization interval.
    pub init_scale: f64,
    /// Upper bound on the trial step (backtracking) or the fixed step.
    pub learning_rate: f64,
    /// Total accepted-iteration budget across all rounds.
    pub max_iters: usize,
    /// Stop once the unsquared residual norm falls to this value.
    pub tolerance: f64,
    /// Minimize the squared norm (default) or the norm itself. Backtracking
    /// accepts identical steps either way since the square root is monotone;
    /// the flag changes the effective step of fixed-step descent.
    pub use_squared_objective: bool,
    pub line_search: LineSearch,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            init_scale: 0.1,
            learning_rate: 1.0,
            max_iters: 2000,
            tolerance: 1e-3,
            use_squared_objective: true,
            line_search: LineSearch::Backtracking,
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "tolerance must be nonnegative, got {}",
                self.tolerance
            )));
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "init_scale must be nonnegative, got {}",
                self.init_scale
            )));
        }
        Ok(())
    }
}

/// Outcome of one optimization run.
///
/// Non-convergence is not an error; the caller inspects the residuals and
/// decides.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvergenceReport {
    /// Accepted descent iterations across all rounds.
    pub iterations: usize,
    /// Unsquared residual norm of the returned image.
    pub final_objective: f64,
    /// Mean absolute angle residual of the returned image, radians.
    pub final_mean_abs_residual: f64,
    /// Whether `final_objective <= tolerance`.
    pub converged: bool,
    /// Whether the run ended because no decreasing step existed.
    pub stalled: bool,
    /// Best unsquared objective after each iteration; entry 0 is the
    /// initial value. Non-increasing.
    pub objective_trace: Vec<f64>,
    pub seed: u64,
    pub optimizer: OptimizerConfig,
    pub gdm: GdmConfig,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + math::exp(-x))
    } else {
        let e = math::exp(x);
        e / (1.0 + e)
    }
}

fn sigmoid_into(values: &[f64], out: &mut [f64]) {
    for (o, &v) in out.iter_mut().zip(values) {
        *o = sigmoid(v);
    }
}

/// Elementwise logistic map of a latent field; output pixels are strictly
/// inside `(0, 1)`, so the box constraint holds by construction.
pub fn sigmoid_map(s: &LatentField) -> GrayImage {
    let mut pixels = vec![0.0; s.values.len()];
    sigmoid_into(&s.values, &mut pixels);
    GrayImage::from_pixels(s.height, s.width, pixels)
        .expect("sigmoid of finite values is a valid image")
}

/// Draws a latent field i.i.d. uniform on `[-init_scale, init_scale]` from a
/// deterministic PRNG. Identical arguments yield bit-identical fields.
pub fn init_latent(height: usize, width: usize, seed: u64, init_scale: f64) -> Result<LatentField> {
    if height < 3 || width < 3 {
        return Err(Error::InvalidLatent(format!(
            "dimensions {height}x{width} are below the 3x3 minimum"
        )));
    }
    if !(init_scale >= 0.0 && init_scale.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "init_scale must be nonnegative, got {init_scale}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..height * width)
        .map(|_| (2.0 * rng.random::<f64>() - 1.0) * init_scale)
        .collect();
    Ok(LatentField {
        height,
        width,
        values,
    })
}

fn check_shapes(target: &GradientDirectionMap, s: &LatentField) -> Result<()> {
    if target.dimensions() != s.dimensions() {
        return Err(Error::ShapeMismatch(format!(
            "target {}x{} vs latent {}x{}",
            target.height(),
            target.width(),
            s.height,
            s.width
        )));
    }
    Ok(())
}

/// Scratch buffers reused across line-search trials and iterations.
struct Buffers {
    sig: Vec<f64>,
    dv: Vec<f64>,
    dh: Vec<f64>,
    grad: Vec<f64>,
    cand_a: Vec<f64>,
    cand_a_sig: Vec<f64>,
    cand_b: Vec<f64>,
    cand_b_sig: Vec<f64>,
}

impl Buffers {
    fn new(n: usize) -> Self {
        Self {
            sig: vec![0.0; n],
            dv: vec![0.0; n],
            dh: vec![0.0; n],
            grad: vec![0.0; n],
            cand_a: vec![0.0; n],
            cand_a_sig: vec![0.0; n],
            cand_b: vec![0.0; n],
            cand_b_sig: vec![0.0; n],
        }
    }
}

/// Squared residual norm between `target` angles and the angles of the
/// image whose pixels are `sig`.
fn true_sq_objective(
    target: &[f64],
    sig: &[f64],
    height: usize,
    width: usize,
    cfg: &GdmConfig,
    dv: &mut [f64],
    dh: &mut [f64],
) -> f64 {
    central_differences_into(sig, height, width, cfg.border_policy, dv, dh);
    let mut sum = 0.0;
    for i in 0..sig.len() {
        let r = target[i] - direction_angle(dv[i], dh[i], cfg.epsilon);
        sum += r * r;
    }
    sum
}

/// Residual norm (squared when `squared` is set) between `target` and the
/// gradient-direction map of `sigmoid(s)`.
pub fn objective(
    target: &GradientDirectionMap,
    s: &LatentField,
    cfg: &GdmConfig,
    squared: bool,
) -> Result<f64> {
    check_shapes(target, s)?;
    let n = s.values.len();
    let mut sig = vec![0.0; n];
    let mut dv = vec![0.0; n];
    let mut dh = vec![0.0; n];
    sigmoid_into(&s.values, &mut sig);
    let sq = true_sq_objective(
        target.angles(),
        &sig,
        s.height,
        s.width,
        cfg,
        &mut dv,
        &mut dh,
    );
    Ok(if squared { sq } else { math::sqrt(sq) })
}

#[inline]
fn neighbor_indices(
    h: usize,
    w: usize,
    height: usize,
    width: usize,
    policy: BorderPolicy,
) -> (usize, usize, usize, usize) {
    match policy {
        BorderPolicy::ReplicateEdge => (
            if h + 1 < height { h + 1 } else { height - 1 },
            h.saturating_sub(1),
            if w + 1 < width { w + 1 } else { width - 1 },
            w.saturating_sub(1),
        ),
        // SkipBorder callers only reach interior pixels.
        BorderPolicy::SkipBorder => (h + 1, h - 1, w + 1, w - 1),
    }
}

/// Gradient of the squared objective with respect to the image pixels,
/// chained through the sigmoid into latent space.
///
/// Each pixel's angle `theta = arctan(V / (H + eps))` distributes
/// `-2 r / D`, with `D = (H + eps)^2 + V^2`, to its four neighbors:
/// `+/-(H + eps)/D` to the vertical pair and `-/+V/D` to the horizontal
/// pair. Border pixels follow the configured border policy; the result is
/// finally scaled by `sigmoid'(s) = sig * (1 - sig)`.
#[allow(clippy::too_many_arguments)]
fn true_gradient_raw(
    target: &[f64],
    sig: &[f64],
    height: usize,
    width: usize,
    cfg: &GdmConfig,
    dv: &mut [f64],
    dh: &mut [f64],
    grad: &mut [f64],
) {
    central_differences_into(sig, height, width, cfg.border_policy, dv, dh);
    grad.fill(0.0);
    for h in 0..height {
        for w in 0..width {
            let idx = h * width + w;
            if cfg.border_policy == BorderPolicy::SkipBorder
                && (h == 0 || h + 1 == height || w == 0 || w + 1 == width)
            {
                // Border angles are pinned to zero and carry no gradient.
                continue;
            }
            let v = dv[idx];
            let mut denom = dh[idx] + cfg.epsilon;
            if denom == 0.0 {
                denom = cfg.epsilon;
            }
            let theta = direction_angle(v, dh[idx], cfg.epsilon);
            let r = target[idx] - theta;
            let d = denom * denom + v * v;
            let a = -2.0 * r / d;
            let (hp, hm, wp, wm) = neighbor_indices(h, w, height, width, cfg.border_policy);
            grad[hp * width + w] += a * denom;
            grad[hm * width + w] -= a * denom;
            grad[h * width + wp] -= a * v;
            grad[h * width + wm] += a * v;
        }
    }
    for i in 0..grad.len() {
        grad[i] *= sig[i] * (1.0 - sig[i]);
    }
}

/// Exact analytic gradient of the squared objective with respect to the
/// latent field, as a row-major grid the same shape as `s`.
pub fn objective_gradient(
    target: &GradientDirectionMap,
    s: &LatentField,
    cfg: &GdmConfig,
) -> Result<Vec<f64>> {
    check_shapes(target, s)?;
    let n = s.values.len();
    let mut buf = Buffers::new(n);
    sigmoid_into(&s.values, &mut buf.sig);
    true_gradient_raw(
        target.angles(),
        &buf.sig,
        s.height,
        s.width,
        cfg,
        &mut buf.dv,
        &mut buf.dh,
        &mut buf.grad,
    );
    Ok(buf.grad)
}

/// One round of the descent engine: either a reweighted line-alignment
/// objective or the true residual norm.
enum RoundKind<'a> {
    /// Per pixel `w * (sin(theta_t) * (H + eps) - cos(theta_t) * V)^2` plus
    /// a radial barrier below [`RADIUS_FLOOR`].
    Alignment {
        t_sin: &'a [f64],
        t_cos: &'a [f64],
        weights: Vec<f64>,
    },
    TrueResidual,
}

impl RoundKind<'_> {
    #[allow(clippy::too_many_arguments)]
    fn value(
        &self,
        target: &[f64],
        sig: &[f64],
        height: usize,
        width: usize,
        cfg: &GdmConfig,
        dv: &mut [f64],
        dh: &mut [f64],
    ) -> f64 {
        match self {
            RoundKind::TrueResidual => {
                true_sq_objective(target, sig, height, width, cfg, dv, dh)
            }
            RoundKind::Alignment {
                t_sin,
                t_cos,
                weights,
            } => {
                central_differences_into(sig, height, width, cfg.border_policy, dv, dh);
                let mut f = 0.0;
                for i in 0..sig.len() {
                    let den = dh[i] + cfg.epsilon;
                    let c = t_sin[i] * den - t_cos[i] * dv[i];
                    f += weights[i] * c * c;
                    let radius = math::sqrt(den * den + dv[i] * dv[i]);
                    if radius < RADIUS_FLOOR {
                        let short = RADIUS_FLOOR - radius;
                        f += BARRIER_WEIGHT * short * short;
                    }
                }
                f
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn gradient(
        &self,
        target: &[f64],
        sig: &[f64],
        height: usize,
        width: usize,
        cfg: &GdmConfig,
        dv: &mut [f64],
        dh: &mut [f64],
        grad: &mut [f64],
    ) {
        match self {
            RoundKind::TrueResidual => {
                true_gradient_raw(target, sig, height, width, cfg, dv, dh, grad);
            }
            RoundKind::Alignment {
                t_sin,
                t_cos,
                weights,
            } => {
                central_differences_into(sig, height, width, cfg.border_policy, dv, dh);
                grad.fill(0.0);
                for h in 0..height {
                    for w in 0..width {
                        let idx = h * width + w;
                        if cfg.border_policy == BorderPolicy::SkipBorder
                            && (h == 0 || h + 1 == height || w == 0 || w + 1 == width)
                        {
                            continue;
                        }
                        let v = dv[idx];
                        let den = dh[idx] + cfg.epsilon;
                        let c = t_sin[idx] * den - t_cos[idx] * v;
                        let a = 2.0 * weights[idx] * c;
                        let mut g_den = a * t_sin[idx];
                        let mut g_v = -a * t_cos[idx];
                        let radius = math::sqrt(den * den + v * v);
                        if radius < RADIUS_FLOOR {
                            let short = RADIUS_FLOOR - radius;
                            if radius > 1e-12 {
                                g_den -= 2.0 * BARRIER_WEIGHT * short * den / radius;
                                g_v -= 2.0 * BARRIER_WEIGHT * short * v / radius;
                            } else {
                                // Undirected at the origin: push along the
                                // target line.
                                g_den -= 2.0 * BARRIER_WEIGHT * short * t_cos[idx];
                                g_v -= 2.0 * BARRIER_WEIGHT * short * t_sin[idx];
                            }
                        }
                        let (hp, hm, wp, wm) =
                            neighbor_indices(h, w, height, width, cfg.border_policy);
                        grad[h * width + wp] += g_den;
                        grad[h * width + wm] -= g_den;
                        grad[hp * width + w] += g_v;
                        grad[hm * width + w] -= g_v;
                    }
                }
                for i in 0..grad.len() {
                    grad[i] *= sig[i] * (1.0 - sig[i]);
                }
            }
        }
    }
}

/// Best iterate seen so far under the true (reported) objective.
struct Incumbent {
    values: Vec<f64>,
    sq_objective: f64,
}

struct RunState {
    iterations: usize,
    trace: Vec<f64>,
    stalled: bool,
}

/// Backtracking descent on one round objective, with a bounded first trial
/// and one parabolic refinement. Each accepted step updates the incumbent
/// under the true objective and appends to the trace. Returns early when the
/// budget, the tolerance, or a line-search failure is hit.
#[allow(clippy::too_many_arguments)]
fn run_round(
    s: &mut Vec<f64>,
    buf: &mut Buffers,
    round: &RoundKind<'_>,
    target: &[f64],
    height: usize,
    width: usize,
    cfg: &GdmConfig,
    opt: &OptimizerConfig,
    budget: usize,
    incumbent: &mut Incumbent,
    state: &mut RunState,
) {
    sigmoid_into(s, &mut buf.sig);
    let mut f = round.value(target, &buf.sig, height, width, cfg, &mut buf.dv, &mut buf.dh);
    let mut alpha_seed = opt.learning_rate;
    let mut used = 0;

    while used < budget && math::sqrt(incumbent.sq_objective) > opt.tolerance {
        round.gradient(
            target,
            &buf.sig,
            height,
            width,
            cfg,
            &mut buf.dv,
            &mut buf.dh,
            &mut buf.grad,
        );
        let grad_sq: f64 = buf.grad.iter().map(|g| g * g).sum();
        if grad_sq == 0.0 {
            break;
        }
        let grad_max = buf.grad.iter().fold(0.0f64, |a, &g| a.max(math::abs(g)));
        // Bound the first trial so one step cannot fling latents into
        // saturated sigmoid territory where the parameterization goes dead.
        let alpha_first = alpha_seed
            .min(opt.learning_rate)
            .min(2.0 / grad_max)
            .max(STEP_FLOOR);

        for ((c, &si), &gi) in buf.cand_a.iter_mut().zip(s.iter()).zip(buf.grad.iter()) {
            *c = si - alpha_first * gi;
        }
        sigmoid_into(&buf.cand_a, &mut buf.cand_a_sig);
        let f_first = round.value(
            target,
            &buf.cand_a_sig,
            height,
            width,
            cfg,
            &mut buf.dv,
            &mut buf.dh,
        );

        // Parabola through f(0), f'(0) = -grad_sq, f(alpha_first).
        let mut best_alpha = if f_first < f { Some(alpha_first) } else { None };
        let mut best_f = f_first;
        let mut best_in_a = true;
        let denom = f_first - f + grad_sq * alpha_first;
        if denom > 0.0 {
            let alpha_star =
                (0.5 * grad_sq * alpha_first * alpha_first / denom).min(8.0 * alpha_first);
            if alpha_star.is_finite() && alpha_star > 0.0 && alpha_star != alpha_first {
                for ((c, &si), &gi) in buf.cand_b.iter_mut().zip(s.iter()).zip(buf.grad.iter()) {
                    *c = si - alpha_star * gi;
                }
                sigmoid_into(&buf.cand_b, &mut buf.cand_b_sig);
                let f_star = round.value(
                    target,
                    &buf.cand_b_sig,
                    height,
                    width,
                    cfg,
                    &mut buf.dv,
                    &mut buf.dh,
                );
                if f_star < f && (best_alpha.is_none() || f_star < best_f) {
                    best_alpha = Some(alpha_star);
                    best_f = f_star;
                    best_in_a = false;
                }
            }
        }
        if best_alpha.is_none() {
            // Plain halving from the first trial.
            let mut alpha = alpha_first * 0.5;
            while alpha >= STEP_FLOOR {
                for ((c, &si), &gi) in buf.cand_a.iter_mut().zip(s.iter()).zip(buf.grad.iter()) {
                    *c = si - alpha * gi;
                }
                sigmoid_into(&buf.cand_a, &mut buf.cand_a_sig);
                let f_new = round.value(
                    target,
                    &buf.cand_a_sig,
                    height,
                    width,
                    cfg,
                    &mut buf.dv,
                    &mut buf.dh,
                );
                if f_new < f {
                    best_alpha = Some(alpha);
                    best_f = f_new;
                    best_in_a = true;
                    break;
                }
                alpha *= 0.5;
            }
        }

        match best_alpha {
            Some(alpha) => {
                if best_in_a {
                    core::mem::swap(s, &mut buf.cand_a);
                    core::mem::swap(&mut buf.sig, &mut buf.cand_a_sig);
                } else {
                    core::mem::swap(s, &mut buf.cand_b);
                    core::mem::swap(&mut buf.sig, &mut buf.cand_b_sig);
                }
                f = best_f;
                alpha_seed = 2.0 * alpha;
            }
            None => {
                state.stalled = true;
                break;
            }
        }

        let true_sq = match round {
            RoundKind::TrueResidual => f,
            RoundKind::Alignment { .. } => true_sq_objective(
                target,
                &buf.sig,
                height,
                width,
                cfg,
                &mut buf.dv,
                &mut buf.dh,
            ),
        };
        if true_sq < incumbent.sq_objective {
            incumbent.sq_objective = true_sq;
            incumbent.values.copy_from_slice(s);
        }
        state.trace.push(math::sqrt(incumbent.sq_objective));
        used += 1;
        state.iterations += 1;
    }
}

/// Generates a gradient-preserving image for `x`, returning the protected
/// image and a convergence report.
///
/// With [`LineSearch::Backtracking`] the engine runs the reweighted
/// alignment ladder followed by backtracking steepest descent on the
/// residual norm; the reported objective trace is non-increasing per
/// iteration and the run stops when the norm reaches `opt.tolerance`, when
/// `opt.max_iters` iterations are spent, or when no decreasing step exists
/// above the step floor. [`LineSearch::Fixed`] applies plain fixed-step
/// descent on the residual norm instead.
pub fn generate_protected(
    x: &GrayImage,
    opt: &OptimizerConfig,
    cfg: &GdmConfig,
) -> Result<(GrayImage, ConvergenceReport)> {
    opt.validate()?;
    let (height, width) = x.dimensions();
    let n = height * width;
    let target = gdm(x, cfg);

    let init = init_latent(height, width, opt.seed, opt.init_scale)?;
    let mut s = init.values;
    let mut buf = Buffers::new(n);

    sigmoid_into(&s, &mut buf.sig);
    let initial_sq = true_sq_objective(
        target.angles(),
        &buf.sig,
        height,
        width,
        cfg,
        &mut buf.dv,
        &mut buf.dh,
    );
    let mut incumbent = Incumbent {
        values: s.clone(),
        sq_objective: initial_sq,
    };
    let mut state = RunState {
        iterations: 0,
        trace: vec![math::sqrt(initial_sq)],
        stalled: false,
    };

    match opt.line_search {
        LineSearch::Backtracking => {
            let t_sin: Vec<f64> = target.angles().iter().map(|&a| math::sin(a)).collect();
            let t_cos: Vec<f64> = target.angles().iter().map(|&a| math::cos(a)).collect();
            // An eighth of the budget is reserved for the final
            // true-residual descent; the alignment ladder splits the rest.
            let polish_budget = opt.max_iters / 8;
            let ladder_budget = opt.max_iters - polish_budget;
            let per_round = ladder_budget / MU_LADDER.len();
            let mut remainder = ladder_budget - per_round * MU_LADDER.len();

            for &mu in MU_LADDER.iter() {
                let mut budget = per_round;
                if remainder > 0 {
                    budget += 1;
                    remainder -= 1;
                }
                if budget == 0 || math::sqrt(incumbent.sq_objective) <= opt.tolerance {
                    continue;
                }
                sigmoid_into(&s, &mut buf.sig);
                central_differences_into(
                    &buf.sig,
                    height,
                    width,
                    cfg.border_policy,
                    &mut buf.dv,
                    &mut buf.dh,
                );
                let weights: Vec<f64> = (0..n)
                    .map(|i| {
                        let den = buf.dh[i] + cfg.epsilon;
                        1.0 / (den * den + buf.dv[i] * buf.dv[i] + mu)
                    })
                    .collect();
                let round = RoundKind::Alignment {
                    t_sin: &t_sin,
                    t_cos: &t_cos,
                    weights,
                };
                // Alignment rounds that run out of decreasing steps hand
                // over to the next round rather than ending the run.
                let mut round_state = RunState {
                    iterations: state.iterations,
                    trace: core::mem::take(&mut state.trace),
                    stalled: false,
                };
                run_round(
                    &mut s,
                    &mut buf,
                    &round,
                    target.angles(),
                    height,
                    width,
                    cfg,
                    opt,
                    budget,
                    &mut incumbent,
                    &mut round_state,
                );
                state.iterations = round_state.iterations;
                state.trace = round_state.trace;
            }

            if math::sqrt(incumbent.sq_objective) > opt.tolerance
                && state.iterations < opt.max_iters
            {
                // Polish from the incumbent, not from wherever the last
                // alignment round wandered.
                s.copy_from_slice(&incumbent.values);
                let budget = opt.max_iters - state.iterations;
                run_round(
                    &mut s,
                    &mut buf,
                    &RoundKind::TrueResidual,
                    target.angles(),
                    height,
                    width,
                    cfg,
                    opt,
                    budget,
                    &mut incumbent,
                    &mut state,
                );
            }
        }
        LineSearch::Fixed => {
            let mut f_sq = initial_sq;
            while math::sqrt(f_sq) > opt.tolerance && state.iterations < opt.max_iters {
                true_gradient_raw(
                    target.angles(),
                    &buf.sig,
                    height,
                    width,
                    cfg,
                    &mut buf.dv,
                    &mut buf.dh,
                    &mut buf.grad,
                );
                let step = if opt.use_squared_objective {
                    opt.learning_rate
                } else {
                    // Gradient of the unsquared norm is grad / (2 * norm).
                    opt.learning_rate / (2.0 * math::sqrt(f_sq))
                };
                for (si, &gi) in s.iter_mut().zip(buf.grad.iter()) {
                    *si -= step * gi;
                }
                sigmoid_into(&s, &mut buf.sig);
                f_sq = true_sq_objective(
                    target.angles(),
                    &buf.sig,
                    height,
                    width,
                    cfg,
                    &mut buf.dv,
                    &mut buf.dh,
                );
                if f_sq < incumbent.sq_objective {
                    incumbent.sq_objective = f_sq;
                    incumbent.values.copy_from_slice(&s);
                }
                state.trace.push(math::sqrt(incumbent.sq_objective));
                state.iterations += 1;
            }
        }
    }

    let final_objective = math::sqrt(incumbent.sq_objective);
    let mut final_sig = vec![0.0; n];
    sigmoid_into(&incumbent.values, &mut final_sig);
    let x_prime = GrayImage::from_pixels(height, width, final_sig)
        .expect("sigmoid output is a valid image");
    let final_mean_abs_residual = mean_abs_residual(&target, &gdm(&x_prime, cfg))
        .expect("shapes match by construction");
    let report = ConvergenceReport {
        iterations: state.iterations,
        final_objective,
        final_mean_abs_residual,
        converged: final_objective <= opt.tolerance,
        stalled: state.stalled,
        objective_trace: state.trace,
        seed: opt.seed,
        optimizer: *opt,
        gdm: *cfg,
    };
    Ok((x_prime, report))
}
