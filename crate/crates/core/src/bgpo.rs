//! Bayesian Gaussian process optimization.
//!
//! Zero-mean GP prior with the squared-exponential kernel
//! `k(a, b) = exp(-|a - b|^2 / (2 θ_h))`. The posterior at a test point is
//! `μ* = kᵀ K⁻¹ g`, `Σ* = k* - kᵀ K⁻¹ k`, evaluated through a jittered
//! Cholesky factor `L Lᵀ = K + jitter I` and two triangular solves.
//!
//! By default the kernel sees coordinates mapped onto the unit cube of the
//! search box and standardized targets, so that θ_h = 1 spans the box. With
//! [`InputScaling::Raw`] and `normalize_targets = false` the model is the
//! literal GP over frequencies in Hz.

use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::plant::{Bounds, OperatingPoint};
use crate::{rng, Error, Result};

/// Observations closer than this are treated as the same point.
pub const DUPLICATE_RADIUS: f64 = 1e-9;
const MAX_JITTER: f64 = 1e-2;
const SIGMA_FLOOR: f64 = 1e-12;

/// Squared-exponential covariance.
pub fn kernel(theta_h: f64, a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-d2 / (2.0 * theta_h)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputScaling {
    /// Kernel distances in Hz.
    Raw,
    /// Kernel distances on the unit cube of the search box.
    UnitBox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpSettings {
    pub theta_h: f64,
    pub jitter: f64,
    pub input_scaling: InputScaling,
    pub normalize_targets: bool,
    pub bounds: Bounds,
}

impl Default for GpSettings {
    fn default() -> Self {
        GpSettings {
            theta_h: 1.0,
            jitter: 1e-8,
            input_scaling: InputScaling::UnitBox,
            normalize_targets: true,
            bounds: Bounds::default(),
        }
    }
}

impl GpSettings {
    /// The literal model: Hz coordinates, raw targets.
    pub fn raw(theta_h: f64, jitter: f64) -> Self {
        GpSettings { theta_h, jitter, input_scaling: InputScaling::Raw, normalize_targets: false, bounds: Bounds::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.theta_h > 0.0) {
            return Err(Error::Config(format!("theta_h must be > 0, got {}", self.theta_h)));
        }
        if !(self.jitter > 0.0 && self.jitter <= MAX_JITTER) {
            return Err(Error::Config(format!("jitter must be in (0, {MAX_JITTER}], got {}", self.jitter)));
        }
        self.bounds.validate()
    }

    fn features(&self, w: &OperatingPoint) -> [f64; 3] {
        match self.input_scaling {
            InputScaling::Raw => *w.as_array(),
            InputScaling::UnitBox => {
                let b = &self.bounds;
                w.as_array().map(|v| (v - b.lower) / b.width())
            }
        }
    }
}

/// Lower-triangular Cholesky factor of a symmetric matrix, row-major.
/// Returns `None` when a pivot is not strictly positive.
fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum();
            if i == j {
                let d = a[i * n + i] - s;
                if !(d > 0.0) {
                    return None;
                }
                l[i * n + i] = d.sqrt();
            } else {
                l[i * n + j] = (a[i * n + j] - s) / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solves `L x = b` in place.
fn forward_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i * n + k] * b[k]).sum();
        b[i] = (b[i] - s) / l[i * n + i];
    }
}

/// Solves `Lᵀ x = b` in place.
fn backward_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k * n + i] * b[k]).sum();
        b[i] = (b[i] - s) / l[i * n + i];
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpModel {
    settings: GpSettings,
    obs_x: Vec<OperatingPoint>,
    obs_y: Vec<f64>,
    features: Vec<[f64; 3]>,
    /// `L` with `L Lᵀ = K + jitter I`, row-major `n x n`.
    chol: Vec<f64>,
    jitter: f64,
    /// `(K + jitter I)⁻¹ ỹ` for the standardized targets ỹ.
    alpha: Vec<f64>,
    y_mean: f64,
    y_scale: f64,
}

impl GpModel {
    /// The prior alone: `μ* = 0`, `Σ* = 1` everywhere.
    pub fn prior(settings: GpSettings) -> Result<Self> {
        settings.validate()?;
        Ok(GpModel {
            settings,
            obs_x: Vec::new(),
            obs_y: Vec::new(),
            features: Vec::new(),
            chol: Vec::new(),
            jitter: settings.jitter,
            alpha: Vec::new(),
            y_mean: 0.0,
            y_scale: 1.0,
        })
    }

    /// Conditions the prior on observations. Points within
    /// [`DUPLICATE_RADIUS`] of an earlier one are merged, averaging their
    /// values. The jitter is raised tenfold up to `1e-2` if factorization fails.
    pub fn fit(settings: GpSettings, obs_x: &[OperatingPoint], obs_y: &[f64]) -> Result<Self> {
        settings.validate()?;
        if obs_x.len() != obs_y.len() {
            return Err(Error::DimensionMismatch { expected: obs_x.len(), got: obs_y.len() });
        }
        if obs_x.is_empty() {
            return Err(Error::EmptyInput("GP needs at least one observation"));
        }
        if let Some(y) = obs_y.iter().find(|y| !y.is_finite()) {
            return Err(Error::Domain(format!("non-finite observation {y}")));
        }

        let mut xs: Vec<OperatingPoint> = Vec::with_capacity(obs_x.len());
        let mut sums: Vec<(f64, usize)> = Vec::with_capacity(obs_x.len());
        for (w, y) in obs_x.iter().zip(obs_y) {
            match xs.iter().position(|p| p.distance_sq(w).sqrt() < DUPLICATE_RADIUS) {
                Some(i) => {
                    sums[i].0 += y;
                    sums[i].1 += 1;
                }
                None => {
                    xs.push(*w);
                    sums.push((*y, 1));
                }
            }
        }
        let ys: Vec<f64> = sums.iter().map(|(s, c)| s / *c as f64).collect();

        let n = xs.len();
        let (y_mean, y_scale) = if settings.normalize_targets {
            let mean = ys.iter().sum::<f64>() / n as f64;
            let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n as f64;
            (mean, if var > 0.0 { var.sqrt() } else { 1.0 })
        } else {
            (0.0, 1.0)
        };

        let features: Vec<[f64; 3]> = xs.iter().map(|w| settings.features(w)).collect();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = kernel(settings.theta_h, &features[i], &features[j]);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }

        let mut jitter = settings.jitter;
        let chol = loop {
            let mut kj = k.clone();
            for i in 0..n {
                kj[i * n + i] += jitter;
            }
            if let Some(l) = cholesky(&kj, n) {
                break l;
            }
            jitter *= 10.0;
            if jitter > MAX_JITTER * (1.0 + 1e-12) {
                return Err(Error::Factorization { jitter: jitter / 10.0 });
            }
        };

        let mut alpha: Vec<f64> = ys.iter().map(|y| (y - y_mean) / y_scale).collect();
        forward_solve(&chol, n, &mut alpha);
        backward_solve(&chol, n, &mut alpha);

        Ok(GpModel { settings, obs_x: xs, obs_y: ys, features, chol, jitter, alpha, y_mean, y_scale })
    }

    pub fn len(&self) -> usize {
        self.obs_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs_x.is_empty()
    }

    pub fn observations(&self) -> (&[OperatingPoint], &[f64]) {
        (&self.obs_x, &self.obs_y)
    }

    pub fn settings(&self) -> &GpSettings {
        &self.settings
    }

    /// Jitter actually added to the diagonal.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Row-major lower Cholesky factor.
    pub fn cholesky_factor(&self) -> &[f64] {
        &self.chol
    }

    /// Kernel matrix over the (merged) observations, without jitter.
    pub fn kernel_matrix(&self) -> Vec<f64> {
        let n = self.len();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                k[i * n + j] = kernel(self.settings.theta_h, &self.features[i], &self.features[j]);
            }
        }
        k
    }

    /// Posterior mean and variance before the variance is clamped.
    pub fn posterior_unclamped(&self, w: &OperatingPoint) -> (f64, f64) {
        let mut buf = Vec::with_capacity(self.len());
        self.posterior_with(w, &mut buf)
    }

    fn posterior_with(&self, w: &OperatingPoint, v: &mut Vec<f64>) -> (f64, f64) {
        let n = self.len();
        let f = self.settings.features(w);
        let k_star = 1.0;
        v.clear();
        v.extend(self.features.iter().map(|p| kernel(self.settings.theta_h, p, &f)));
        let mean_std: f64 = v.iter().zip(&self.alpha).map(|(a, b)| a * b).sum();
        forward_solve(&self.chol, n, v);
        let var_std = k_star - v.iter().map(|x| x * x).sum::<f64>();
        (self.y_mean + self.y_scale * mean_std, self.y_scale * self.y_scale * var_std)
    }

    /// `(μ*, Σ*)` with `Σ*` clamped to `[0, k*]` in target units.
    pub fn posterior(&self, w: &OperatingPoint) -> (f64, f64) {
        let (mu, var) = self.posterior_unclamped(w);
        (mu, var.clamp(0.0, self.y_scale * self.y_scale))
    }
}

/// Standard normal density.
fn normal_pdf(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal distribution function.
fn normal_cdf(u: f64) -> f64 {
    0.5 * erfc(-u / std::f64::consts::SQRT_2)
}

/// Expected improvement below `best` for a Gaussian `N(mu, sigma²)`.
pub fn expected_improvement(mu: f64, sigma: f64, best: f64) -> f64 {
    if sigma < SIGMA_FLOOR {
        return (best - mu).max(0.0);
    }
    let u = (best - mu) / sigma;
    (best - mu) * normal_cdf(u) + sigma * normal_pdf(u)
}

/// Picks the candidate with maximal EI, or minimal posterior mean when every
/// posterior deviation is below 1e-12. Candidates that duplicate an
/// observation are skipped. Returns `None` if nothing is left.
pub fn select_candidate(model: &GpModel, candidates: &[OperatingPoint], best_y: f64) -> Option<OperatingPoint> {
    let mut buf = Vec::with_capacity(model.len());
    let mut scored: Vec<(OperatingPoint, f64, f64)> = Vec::with_capacity(candidates.len());
    for c in candidates {
        if model.obs_x.iter().any(|o| o.distance_sq(c).sqrt() < DUPLICATE_RADIUS) {
            continue;
        }
        let (mu, var) = model.posterior_with(c, &mut buf);
        let var = var.clamp(0.0, model.y_scale * model.y_scale);
        scored.push((*c, mu, var.sqrt()));
    }
    if scored.is_empty() {
        return None;
    }
    if scored.iter().all(|(_, _, s)| *s < SIGMA_FLOOR) {
        return scored.iter().min_by(|a, b| a.1.total_cmp(&b.1)).map(|s| s.0);
    }
    let mut best = scored[0].0;
    let mut best_ei = f64::NEG_INFINITY;
    for (c, mu, s) in &scored {
        let ei = expected_improvement(*mu, *s, best_y);
        if ei > best_ei {
            best_ei = ei;
            best = *c;
        }
    }
    Some(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BgpoConfig {
    /// Total objective evaluations, initial design included.
    pub sample_budget: usize,
    pub bounds: Bounds,
    pub theta_h: f64,
    /// Initial uniform design size; `max(3, budget / 5)` when unset.
    pub n_init: Option<usize>,
    pub candidate_pool: usize,
    pub jitter: f64,
    pub seed: u64,
    pub input_scaling: InputScaling,
    pub normalize_targets: bool,
}

impl Default for BgpoConfig {
    fn default() -> Self {
        BgpoConfig {
            sample_budget: 50,
            bounds: Bounds::default(),
            theta_h: 1.0,
            n_init: None,
            candidate_pool: 2048,
            jitter: 1e-8,
            seed: 0,
            input_scaling: InputScaling::UnitBox,
            normalize_targets: true,
        }
    }
}

impl BgpoConfig {
    pub fn initial_samples(&self) -> usize {
        self.n_init.unwrap_or_else(|| (self.sample_budget / 5).max(3)).min(self.sample_budget)
    }

    pub fn gp_settings(&self) -> GpSettings {
        GpSettings {
            theta_h: self.theta_h,
            jitter: self.jitter,
            input_scaling: self.input_scaling,
            normalize_targets: self.normalize_targets,
            bounds: self.bounds,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n_init = self.initial_samples();
        if n_init < 2 {
            return Err(Error::Config(format!("n_init must be >= 2, got {n_init}")));
        }
        if let Some(n) = self.n_init {
            if n > self.sample_budget {
                return Err(Error::Config(format!("n_init {n} exceeds sample budget {}", self.sample_budget)));
            }
        }
        if self.candidate_pool < 100 {
            return Err(Error::Config(format!("candidate_pool must be >= 100, got {}", self.candidate_pool)));
        }
        self.gp_settings().validate()
    }
}

/// Draws `candidate_pool` uniform candidates and returns the EI maximizer.
pub fn acquire_next(model: &GpModel, cfg: &BgpoConfig, best_y: f64, rng: &mut rng::Rng) -> OperatingPoint {
    loop {
        let candidates: Vec<OperatingPoint> = (0..cfg.candidate_pool).map(|_| cfg.bounds.sample(rng)).collect();
        if let Some(w) = select_candidate(model, &candidates, best_y) {
            return w;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BgpoStep {
    pub step: usize,
    pub w: OperatingPoint,
    pub g: f64,
    pub is_best_so_far: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BgpoRun {
    pub best: OperatingPoint,
    pub best_value: f64,
    pub history: Vec<BgpoStep>,
}

/// Sequential GP optimization: `n_init` uniform points, then one EI
/// acquisition per remaining budget unit with a refit after every
/// evaluation. Reports the best observed point.
pub fn bgpo_optimize<F>(mut objective: F, cfg: &BgpoConfig) -> Result<BgpoRun>
where
    F: FnMut(&OperatingPoint) -> Result<f64>,
{
    cfg.validate()?;
    let mut r = rng::seeded(cfg.seed);
    let mut xs: Vec<OperatingPoint> = Vec::with_capacity(cfg.sample_budget);
    let mut ys: Vec<f64> = Vec::with_capacity(cfg.sample_budget);
    let mut history = Vec::with_capacity(cfg.sample_budget);
    let mut best_idx = 0usize;

    let mut record = |w: OperatingPoint, g: f64, xs: &mut Vec<OperatingPoint>, ys: &mut Vec<f64>, best_idx: &mut usize| {
        let step = xs.len();
        let improved = step == 0 || g < ys[*best_idx];
        if improved {
            *best_idx = step;
        }
        xs.push(w);
        ys.push(g);
        history.push(BgpoStep { step, w, g, is_best_so_far: improved });
    };

    for _ in 0..cfg.initial_samples() {
        let w = cfg.bounds.sample(&mut r);
        let g = objective(&w)?;
        record(w, g, &mut xs, &mut ys, &mut best_idx);
    }
    let settings = cfg.gp_settings();
    while xs.len() < cfg.sample_budget {
        let model = GpModel::fit(settings, &xs, &ys)?;
        let w = acquire_next(&model, cfg, ys[best_idx], &mut r);
        let g = objective(&w)?;
        record(w, g, &mut xs, &mut ys, &mut best_idx);
    }
    Ok(BgpoRun { best: xs[best_idx], best_value: ys[best_idx], history })
}

pub fn write_history_csv<W: Write>(out: W, history: &[BgpoStep]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "w1", "w2", "w3", "g", "is_best_so_far"])?;
    for h in history {
        let [w1, w2, w3] = *h.w.as_array();
        w.write_record([
            h.step.to_string(),
            w1.to_string(),
            w2.to_string(),
            w3.to_string(),
            h.g.to_string(),
            h.is_best_so_far.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
