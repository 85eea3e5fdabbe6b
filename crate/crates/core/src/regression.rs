//! λ sweeps and cubic regression of the optima against λ.
//!
//! The cubic `ỹ = θ₁ + θ₂λ + θ₃λ² + θ₄λ³` is fitted by batch gradient descent
//! on `C(Θ) = (1/2n) Σ (y - ỹ)²`, whose gradient is
//! `∂C/∂θ_k = -(1/n) Σ (y - ỹ) λ^(k-1)`. Descent runs on standardized λ and
//! the coefficients are mapped back afterwards. A normal-equations solve is
//! provided as an independent reference.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::plant::OperatingPoint;
use crate::{rng, Error, Result};

/// `{0.0, 0.1, ..., 1.0}`.
pub fn lambda_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub lambda: f64,
    pub w_opt: OperatingPoint,
    pub e_opt: f64,
    pub pmv_opt: f64,
    pub esr_opt: f64,
}

/// Runs `run(λ, seed)` for every λ of the grid, with the seed derived from
/// the master seed and the λ index.
pub fn lambda_sweep<F>(grid: &[f64], master_seed: u64, mut run: F) -> Result<Vec<SweepResult>>
where
    F: FnMut(f64, u64) -> Result<SweepResult>,
{
    if grid.is_empty() {
        return Err(Error::EmptyInput("lambda grid"));
    }
    if let Some(l) = grid.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(Error::Config(format!("lambda {l} outside [0, 1]")));
    }
    grid.iter()
        .enumerate()
        .map(|(i, &lambda)| run(lambda, rng::derive_seed(master_seed, &[i as u64])))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyModel {
    pub theta: [f64; 4],
}

impl PolyModel {
    pub fn predict(&self, lambda: f64) -> f64 {
        let t = &self.theta;
        t[0] + lambda * (t[1] + lambda * (t[2] + lambda * t[3]))
    }
}

pub fn poly_predict(model: &PolyModel, lambda: f64) -> f64 {
    model.predict(lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub eta: f64,
    pub epochs: usize,
    pub tol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { eta: 0.1, epochs: 50_000, tol: 1e-10 }
    }
}

fn powers(x: f64) -> [f64; 4] {
    [1.0, x, x * x, x * x * x]
}

/// `(1/2n) Σ (y - ỹ)²`.
pub fn cost(theta: &[f64; 4], points: &[(f64, f64)]) -> f64 {
    let m = PolyModel { theta: *theta };
    points.iter().map(|(l, y)| (y - m.predict(*l)).powi(2)).sum::<f64>() / (2.0 * points.len() as f64)
}

/// `∂C/∂θ_k = -(1/n) Σ (y - ỹ) λ^(k-1)`.
pub fn cost_gradient(theta: &[f64; 4], points: &[(f64, f64)]) -> [f64; 4] {
    let m = PolyModel { theta: *theta };
    let n = points.len() as f64;
    let mut g = [0.0; 4];
    for (l, y) in points {
        let r = y - m.predict(*l);
        for (gk, p) in g.iter_mut().zip(powers(*l)) {
            *gk -= r * p / n;
        }
    }
    g
}

fn distinct_count(points: &[(f64, f64)]) -> usize {
    let mut ls: Vec<f64> = points.iter().map(|p| p.0).collect();
    ls.sort_by(f64::total_cmp);
    ls.dedup();
    ls.len()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Coefficients in λ for a cubic given in `u = (λ - shift) / scale`.
fn unstandardize(phi: &[f64; 4], shift: f64, scale: f64) -> [f64; 4] {
    let mut theta = [0.0; 4];
    for (k, p) in phi.iter().enumerate() {
        for (j, t) in theta.iter_mut().enumerate().take(k + 1) {
            *t += p * binomial(k, j) * (-shift).powi((k - j) as i32) / scale.powi(k as i32);
        }
    }
    theta
}

/// Gradient-descent fit; also returns the cost after every epoch.
pub fn poly_fit_gd_traced(points: &[(f64, f64)], cfg: &FitConfig) -> Result<(PolyModel, Vec<f64>)> {
    if !(cfg.eta > 0.0) || cfg.epochs == 0 || !(cfg.tol >= 0.0) {
        return Err(Error::Config(format!("invalid fit configuration {cfg:?}")));
    }
    let distinct = distinct_count(points);
    if points.len() < 4 || distinct < 4 {
        return Err(Error::RankDeficient { distinct, needed: 4 });
    }
    let n = points.len() as f64;
    let shift = points.iter().map(|p| p.0).sum::<f64>() / n;
    let scale = (points.iter().map(|p| (p.0 - shift).powi(2)).sum::<f64>() / n).sqrt();
    let std_points: Vec<(f64, f64)> = points.iter().map(|(l, y)| ((l - shift) / scale, *y)).collect();

    let mut phi = [0.0; 4];
    let mut trace = Vec::new();
    for epoch in 0..cfg.epochs {
        let g = cost_gradient(&phi, &std_points);
        let mut change: f64 = 0.0;
        for (p, gk) in phi.iter_mut().zip(g) {
            let step = cfg.eta * gk;
            *p -= step;
            change = change.max(step.abs());
        }
        let c = cost(&phi, &std_points);
        if !c.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        trace.push(c);
        if change < cfg.tol {
            break;
        }
    }
    Ok((PolyModel { theta: unstandardize(&phi, shift, scale) }, trace))
}

pub fn poly_fit_gd(points: &[(f64, f64)], cfg: &FitConfig) -> Result<PolyModel> {
    poly_fit_gd_traced(points, cfg).map(|(m, _)| m)
}

/// Least squares through the 4x4 normal equations.
pub fn poly_fit_closed_form(points: &[(f64, f64)]) -> Result<PolyModel> {
    if points.is_empty() {
        return Err(Error::EmptyInput("regression points"));
    }
    let mut a = [[0.0; 4]; 4];
    let mut b = [0.0; 4];
    for (l, y) in points {
        let p = powers(*l);
        for i in 0..4 {
            b[i] += p[i] * y;
            for j in 0..4 {
                a[i][j] += p[i] * p[j];
            }
        }
    }
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..4 {
        let piv = (col..4).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).expect("nonempty");
        if a[piv][col].abs() <= 1e-12 * scale {
            return Err(Error::Singular);
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut theta = [0.0; 4];
    for i in (0..4).rev() {
        let s: f64 = (i + 1..4).map(|k| a[i][k] * theta[k]).sum();
        theta[i] = (b[i] - s) / a[i][i];
    }
    Ok(PolyModel { theta })
}

/// One cubic per reported quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepFits {
    pub energy: PolyModel,
    pub pmv: PolyModel,
    pub esr: PolyModel,
}

pub fn fit_sweep(results: &[SweepResult], cfg: &FitConfig) -> Result<SweepFits> {
    let pts = |f: fn(&SweepResult) -> f64| results.iter().map(|r| (r.lambda, f(r))).collect::<Vec<_>>();
    Ok(SweepFits {
        energy: poly_fit_gd(&pts(|r| r.e_opt), cfg)?,
        pmv: poly_fit_gd(&pts(|r| r.pmv_opt), cfg)?,
        esr: poly_fit_gd(&pts(|r| r.esr_opt), cfg)?,
    })
}

/// Sweep rows, a blank line, then `quantity,theta1..theta4` rows if fits are given.
pub fn write_sweep_csv<W: Write>(mut out: W, results: &[SweepResult], fits: Option<&SweepFits>) -> Result<()> {
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["lambda", "w1", "w2", "w3", "energy", "pmv", "esr"])?;
        for r in results {
            let [w1, w2, w3] = *r.w_opt.as_array();
            w.write_record([r.lambda, w1, w2, w3, r.e_opt, r.pmv_opt, r.esr_opt].iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
    }
    if let Some(f) = fits {
        writeln!(out)?;
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["quantity", "theta1", "theta2", "theta3", "theta4"])?;
        for (name, m) in [("energy", f.energy), ("pmv", f.pmv), ("esr", f.esr)] {
            let mut rec = vec![name.to_string()];
            rec.extend(m.theta.iter().map(|t| t.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
    }
    Ok(())
}
