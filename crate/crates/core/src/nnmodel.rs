//! One-hidden-layer feedforward network with sigmoid hidden units.
//!
//! Weights are stored row-major with the bias as the last column of each
//! layer, i.e. `theta1` is `hidden_dim x (input_dim + 1)` and `theta2` is
//! `output_dim x (hidden_dim + 1)`. Inputs are expected to be standardized by
//! the caller (see [`NormStats`]).

use std::io::{Read, Write};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::{rng, Error, Result};

pub const DEFAULT_HIDDEN: usize = 8;

/// Output activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    /// Linear output layer.
    Regression,
    /// Sigmoid output layer.
    Classifier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub output_dim: usize,
    pub head: Head,
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
}

/// Gradient of the loss with respect to both weight matrices, same layout as
/// [`MlpParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { learning_rate: 0.5, epochs: 2000, seed: 0, init_scale: 0.5 }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate must be > 0, got {}", self.learning_rate)));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if !(self.init_scale > 0.0) {
            return Err(Error::Config(format!("init_scale must be > 0, got {}", self.init_scale)));
        }
        Ok(())
    }
}

/// Logistic function, evaluated without overflow for large |x|.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl MlpParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize, output_dim: usize, head: Head) -> Self {
        MlpParams {
            input_dim,
            hidden_dim,
            output_dim,
            head,
            theta1: vec![0.0; hidden_dim * (input_dim + 1)],
            theta2: vec![0.0; output_dim * (hidden_dim + 1)],
        }
    }

    /// Uniform initialization in `[-init_scale, init_scale]` from `seed`.
    pub fn random(
        input_dim: usize,
        hidden_dim: usize,
        output_dim: usize,
        head: Head,
        init_scale: f64,
        seed: u64,
    ) -> Self {
        let mut r = rng::seeded(seed);
        let mut p = Self::zeros(input_dim, hidden_dim, output_dim, head);
        for w in p.theta1.iter_mut().chain(p.theta2.iter_mut()) {
            *w = r.random_range(-init_scale..=init_scale);
        }
        p
    }

    /// Checks the shape and finiteness invariants.
    pub fn validate(&self) -> Result<()> {
        let n1 = self.hidden_dim * (self.input_dim + 1);
        if self.theta1.len() != n1 {
            return Err(Error::DimensionMismatch { expected: n1, got: self.theta1.len() });
        }
        let n2 = self.output_dim * (self.hidden_dim + 1);
        if self.theta2.len() != n2 {
            return Err(Error::DimensionMismatch { expected: n2, got: self.theta2.len() });
        }
        if self.theta1.iter().chain(&self.theta2).any(|w| !w.is_finite()) {
            return Err(Error::Domain("non-finite network weight".into()));
        }
        Ok(())
    }

    fn hidden(&self, x: &[f64], out: &mut [f64]) {
        let stride = self.input_dim + 1;
        for (j, h) in out.iter_mut().enumerate() {
            let row = &self.theta1[j * stride..(j + 1) * stride];
            let a = row[..self.input_dim].iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
                + row[self.input_dim];
            *h = sigmoid(a);
        }
    }

    fn output(&self, hidden: &[f64], out: &mut [f64]) {
        let stride = self.hidden_dim + 1;
        for (k, o) in out.iter_mut().enumerate() {
            let row = &self.theta2[k * stride..(k + 1) * stride];
            let a = row[..self.hidden_dim].iter().zip(hidden).map(|(w, v)| w * v).sum::<f64>()
                + row[self.hidden_dim];
            *o = match self.head {
                Head::Regression => a,
                Head::Classifier => sigmoid(a),
            };
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch { expected: self.input_dim, got: x.len() });
        }
        let mut h = vec![0.0; self.hidden_dim];
        let mut o = vec![0.0; self.output_dim];
        self.hidden(x, &mut h);
        self.output(&h, &mut o);
        Ok(o)
    }

    fn check_dataset(&self, data: &[(Vec<f64>, Vec<f64>)]) -> Result<()> {
        if data.is_empty() {
            return Err(Error::EmptyInput("training dataset"));
        }
        for (x, y) in data {
            if x.len() != self.input_dim {
                return Err(Error::DimensionMismatch { expected: self.input_dim, got: x.len() });
            }
            if y.len() != self.output_dim {
                return Err(Error::DimensionMismatch { expected: self.output_dim, got: y.len() });
            }
        }
        Ok(())
    }

    /// Mean over samples of `0.5 * |output - target|^2`.
    pub fn loss(&self, data: &[(Vec<f64>, Vec<f64>)]) -> Result<f64> {
        self.check_dataset(data)?;
        let mut total = 0.0;
        for (x, y) in data {
            let o = self.forward(x)?;
            total += 0.5 * o.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
        Ok(total / data.len() as f64)
    }

    /// Backpropagated gradient of [`MlpParams::loss`], together with the loss.
    pub fn gradient(&self, data: &[(Vec<f64>, Vec<f64>)]) -> Result<(Gradient, f64)> {
        self.check_dataset(data)?;
        let (ni, nh, no) = (self.input_dim, self.hidden_dim, self.output_dim);
        let inv_n = 1.0 / data.len() as f64;
        let mut g1 = vec![0.0; self.theta1.len()];
        let mut g2 = vec![0.0; self.theta2.len()];
        let mut h = vec![0.0; nh];
        let mut o = vec![0.0; no];
        let mut d2 = vec![0.0; no];
        let mut loss = 0.0;
        for (x, y) in data {
            self.hidden(x, &mut h);
            self.output(&h, &mut o);
            for k in 0..no {
                let r = o[k] - y[k];
                loss += 0.5 * r * r;
                d2[k] = match self.head {
                    Head::Regression => r,
                    Head::Classifier => r * o[k] * (1.0 - o[k]),
                } * inv_n;
                let row = &mut g2[k * (nh + 1)..(k + 1) * (nh + 1)];
                for j in 0..nh {
                    row[j] += d2[k] * h[j];
                }
                row[nh] += d2[k];
            }
            for j in 0..nh {
                let back: f64 = (0..no).map(|k| self.theta2[k * (nh + 1) + j] * d2[k]).sum();
                let d1 = back * h[j] * (1.0 - h[j]);
                let row = &mut g1[j * (ni + 1)..(j + 1) * (ni + 1)];
                for i in 0..ni {
                    row[i] += d1 * x[i];
                }
                row[ni] += d1;
            }
        }
        Ok((Gradient { theta1: g1, theta2: g2 }, loss * inv_n))
    }
}

/// Full-batch gradient descent on the mean squared error, starting from `params`.
pub fn train(
    params: &MlpParams,
    data: &[(Vec<f64>, Vec<f64>)],
    cfg: &TrainConfig,
) -> Result<MlpParams> {
    cfg.validate()?;
    params.validate()?;
    let mut p = params.clone();
    for epoch in 0..cfg.epochs {
        let (g, loss) = p.gradient(data)?;
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        for (w, d) in p.theta1.iter_mut().zip(&g.theta1) {
            *w -= cfg.learning_rate * d;
        }
        for (w, d) in p.theta2.iter_mut().zip(&g.theta2) {
            *w -= cfg.learning_rate * d;
        }
    }
    let final_loss = p.loss(data)?;
    if !final_loss.is_finite() || p.validate().is_err() {
        return Err(Error::Divergence { epoch: cfg.epochs });
    }
    Ok(p)
}

/// Seeded initialization followed by [`train`].
pub fn fit_network(
    input_dim: usize,
    hidden_dim: usize,
    output_dim: usize,
    head: Head,
    data: &[(Vec<f64>, Vec<f64>)],
    cfg: &TrainConfig,
) -> Result<MlpParams> {
    cfg.validate()?;
    let init = MlpParams::random(input_dim, hidden_dim, output_dim, head, cfg.init_scale, cfg.seed);
    train(&init, data, cfg)
}

/// Per-feature mean and sample standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn fit<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::EmptyInput("need at least two rows for normalization statistics"));
        }
        let dim = rows[0].as_ref().len();
        if dim == 0 {
            return Err(Error::EmptyInput("zero-width feature rows"));
        }
        let mut mean = vec![0.0; dim];
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: r.len() });
            }
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        let n = rows.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r.as_ref()).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std: Vec<f64> = var.iter().map(|s| (s / (n - 1.0)).sqrt()).collect();
        if let Some(index) = std.iter().position(|s| !(*s > 0.0)) {
            return Err(Error::DegenerateFeature { index });
        }
        Ok(NormStats { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn standardize(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(x.iter().zip(&self.mean).zip(&self.std).map(|((v, m), s)| (v - m) / s).collect())
    }

    pub fn destandardize(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: z.len() });
        }
        Ok(z.iter().zip(&self.mean).zip(&self.std).map(|((v, m), s)| v * s + m).collect())
    }
}

/// A network together with the statistics used to standardize its inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub params: MlpParams,
    pub input_stats: NormStats,
}

impl ModelDocument {
    pub fn save<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn load<R: Read>(r: R) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_reader(r)?;
        doc.params.validate()?;
        if doc.input_stats.dim() != doc.params.input_dim {
            return Err(Error::DimensionMismatch {
                expected: doc.params.input_dim,
                got: doc.input_stats.dim(),
            });
        }
        Ok(doc)
    }
}
