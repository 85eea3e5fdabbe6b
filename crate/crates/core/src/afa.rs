//! Augmented firefly algorithm.
//!
//! Brightness is the negated objective, `I = -g`, so the brightest firefly is
//! the incumbent minimizer. Each step, every firefly dimmer than the brightest
//! moves by
//!
//! ```text
//! ω ← ω + α γ (ω_max - ω) + β [(ΔB - 1) s + 1] ε
//! ```
//!
//! and the brightest one by the randomness term alone, with `ε ~ N(0, 1)` per
//! coordinate and `ΔB` the box width. Positions are clamped to the box.

use std::io::Write;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::plant::{Bounds, OperatingPoint};
use crate::{rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wandering {
    /// `s = 0`: random steps of scale β.
    Small,
    /// `s = 1`: random steps of scale β ΔB.
    Large,
}

impl Wandering {
    pub fn flag(self) -> f64 {
        match self {
            Wandering::Small => 0.0,
            Wandering::Large => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AfaConfig {
    /// Distance coefficient, (0, 1].
    pub alpha: f64,
    /// Randomness coefficient, [0, 1].
    pub beta: f64,
    /// Vortex coefficient, [0, 1].
    pub gamma: f64,
    pub wandering: Wandering,
    pub population: usize,
    pub bounds: Bounds,
    pub iterations: usize,
    pub seed: u64,
    /// Hard cap on objective evaluations, used for equal-budget comparisons.
    pub max_evaluations: Option<usize>,
}

impl Default for AfaConfig {
    fn default() -> Self {
        AfaConfig {
            alpha: 0.6,
            beta: 0.3,
            gamma: 0.6,
            wandering: Wandering::Small,
            population: 50,
            bounds: Bounds::default(),
            iterations: 50,
            seed: 0,
            max_evaluations: None,
        }
    }
}

impl AfaConfig {
    /// Maximum boundary difference ΔB.
    pub fn delta_b(&self) -> f64 {
        self.bounds.width()
    }

    /// `β [(ΔB - 1) s + 1]`.
    pub fn random_scale(&self) -> f64 {
        self.beta * ((self.delta_b() - 1.0) * self.wandering.flag() + 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!("alpha must be in (0, 1], got {}", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::Config(format!("beta must be in [0, 1], got {}", self.beta)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma must be in [0, 1], got {}", self.gamma)));
        }
        if self.population < 2 {
            return Err(Error::Config(format!("population must be >= 2, got {}", self.population)));
        }
        if let Some(cap) = self.max_evaluations {
            if cap < self.population {
                return Err(Error::Config(format!(
                    "evaluation cap {cap} is smaller than the population {}",
                    self.population
                )));
            }
        }
        self.bounds.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Firefly {
    pub position: OperatingPoint,
    /// Brightness, `-g(position)`.
    pub intensity: f64,
}

impl Firefly {
    pub fn objective(&self) -> f64 {
        -self.intensity
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Swarm {
    pub fireflies: Vec<Firefly>,
}

impl Swarm {
    /// Index of the brightest firefly; the first one wins ties.
    pub fn brightest(&self) -> usize {
        let mut best = 0;
        for (i, f) in self.fireflies.iter().enumerate() {
            if f.intensity > self.fireflies[best].intensity {
                best = i;
            }
        }
        best
    }
}

/// Unclamped position update for one firefly given its random draw `eps`.
pub fn move_firefly(cfg: &AfaConfig, pos: &[f64; 3], brightest: &[f64; 3], is_brightest: bool, eps: &[f64; 3]) -> [f64; 3] {
    let pull = if is_brightest { 0.0 } else { cfg.alpha * cfg.gamma };
    let scale = cfg.random_scale();
    std::array::from_fn(|k| pos[k] + pull * (brightest[k] - pos[k]) + scale * eps[k])
}

fn draw_eps(r: &mut rng::Rng) -> [f64; 3] {
    std::array::from_fn(|_| StandardNormal.sample(r))
}

/// Uniform initial population with evaluated intensities.
pub fn afa_init<F>(cfg: &AfaConfig, objective: &mut F, r: &mut rng::Rng) -> Result<Swarm>
where
    F: FnMut(&OperatingPoint) -> Result<f64>,
{
    cfg.validate()?;
    let fireflies = (0..cfg.population)
        .map(|_| {
            let position = cfg.bounds.sample(r);
            Ok(Firefly { position, intensity: -objective(&position)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Swarm { fireflies })
}

/// One synchronous step: all random draws are taken in firefly order against
/// the brightest position at the start of the step, then positions are
/// clamped and re-evaluated. At most `limit` fireflies move (the rest keep
/// their state), which lets the caller enforce an evaluation budget.
pub fn afa_step<F>(cfg: &AfaConfig, swarm: &Swarm, objective: &mut F, r: &mut rng::Rng) -> Result<Swarm>
where
    F: FnMut(&OperatingPoint) -> Result<f64>,
{
    afa_step_limited(cfg, swarm, objective, r, usize::MAX)
}

fn afa_step_limited<F>(cfg: &AfaConfig, swarm: &Swarm, objective: &mut F, r: &mut rng::Rng, limit: usize) -> Result<Swarm>
where
    F: FnMut(&OperatingPoint) -> Result<f64>,
{
    if swarm.fireflies.is_empty() {
        return Err(Error::EmptyInput("firefly swarm"));
    }
    let lead = swarm.brightest();
    let lead_pos = *swarm.fireflies[lead].position.as_array();
    let moved: Vec<Option<OperatingPoint>> = swarm
        .fireflies
        .iter()
        .enumerate()
        .map(|(i, f)| {
            (i < limit).then(|| {
                let eps = draw_eps(r);
                cfg.bounds.clamp(move_firefly(cfg, f.position.as_array(), &lead_pos, i == lead, &eps))
            })
        })
        .collect();
    let fireflies = swarm
        .fireflies
        .iter()
        .zip(moved)
        .map(|(f, m)| match m {
            Some(position) => Ok(Firefly { position, intensity: -objective(&position)? }),
            None => Ok(*f),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Swarm { fireflies })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AfaEvaluation {
    /// 0 for the initial population.
    pub iteration: usize,
    pub firefly_id: usize,
    pub w: OperatingPoint,
    pub g: f64,
    /// True when this evaluation improved the best value seen so far.
    pub is_global_best: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AfaRun {
    pub best: OperatingPoint,
    pub best_value: f64,
    pub history: Vec<AfaEvaluation>,
    pub swarm: Swarm,
}

impl AfaRun {
    /// Running minimum of the objective after each iteration.
    pub fn incumbents(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        let mut best = f64::INFINITY;
        for e in &self.history {
            best = best.min(e.g);
            match out.len().cmp(&(e.iteration + 1)) {
                std::cmp::Ordering::Less => out.push(best),
                _ => *out.last_mut().expect("nonempty") = best,
            }
        }
        out
    }
}

/// Initial population plus `iterations` steps (or fewer when the evaluation
/// cap is reached). Returns the best position ever evaluated.
pub fn afa_optimize<F>(mut objective: F, cfg: &AfaConfig) -> Result<AfaRun>
where
    F: FnMut(&OperatingPoint) -> Result<f64>,
{
    cfg.validate()?;
    let mut r = rng::seeded(cfg.seed);
    let mut history = Vec::with_capacity(cfg.population * (cfg.iterations + 1));
    let mut best: Option<(OperatingPoint, f64)> = None;
    let mut log = |iteration: usize, swarm: &Swarm, count: usize, history: &mut Vec<AfaEvaluation>| {
        for (id, f) in swarm.fireflies.iter().enumerate().take(count) {
            let g = f.objective();
            let improved = best.is_none_or(|(_, b)| g < b);
            if improved {
                best = Some((f.position, g));
            }
            history.push(AfaEvaluation { iteration, firefly_id: id, w: f.position, g, is_global_best: improved });
        }
    };

    let mut swarm = afa_init(cfg, &mut objective, &mut r)?;
    log(0, &swarm, cfg.population, &mut history);
    let cap = cfg.max_evaluations.unwrap_or(usize::MAX);
    for it in 1..=cfg.iterations {
        let remaining = cap.saturating_sub(history.len());
        if remaining == 0 {
            break;
        }
        let limit = remaining.min(cfg.population);
        swarm = afa_step_limited(cfg, &swarm, &mut objective, &mut r, limit)?;
        log(it, &swarm, limit, &mut history);
    }
    let (best, best_value) = best.expect("population is nonempty");
    Ok(AfaRun { best, best_value, history, swarm })
}

pub fn write_history_csv<W: Write>(out: W, history: &[AfaEvaluation]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "firefly_id", "w1", "w2", "w3", "g", "is_global_best"])?;
    for h in history {
        let [w1, w2, w3] = *h.w.as_array();
        w.write_record([
            h.iteration.to_string(),
            h.firefly_id.to_string(),
            w1.to_string(),
            w2.to_string(),
            w3.to_string(),
            h.g.to_string(),
            h.is_global_best.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sphere(w: &OperatingPoint) -> Result<f64> {
        Ok(w.distance_sq(&OperatingPoint::benchmark()))
    }

    #[test]
    fn init_is_seeded_and_counts_evaluations() {
        let cfg = AfaConfig { population: 10, ..Default::default() };
        let mut calls = 0;
        let mut f = |w: &OperatingPoint| {
            calls += 1;
            sphere(w)
        };
        let a = afa_init(&cfg, &mut f, &mut rng::seeded(3)).unwrap();
        assert_eq!(calls, 10);
        let b = afa_init(&cfg, &mut sphere, &mut rng::seeded(3)).unwrap();
        assert_eq!(a, b);
        assert!(a.fireflies.iter().all(|f| Bounds::default().contains(f.position.as_array())));
    }

    #[test]
    fn attraction_without_noise() {
        let cfg = AfaConfig { beta: 0.0, ..Default::default() };
        let w = [32.0, 45.0, 38.0];
        let lead = [40.0, 40.0, 40.0];
        let got = move_firefly(&cfg, &w, &lead, false, &[1.0, -2.0, 0.5]);
        for k in 0..3 {
            assert!((got[k] - (w[k] + 0.36 * (lead[k] - w[k]))).abs() < 1e-12);
        }
        assert_eq!(move_firefly(&cfg, &lead, &lead, true, &[1.0, 1.0, 1.0]), lead);
    }

    #[test]
    fn stationary_when_no_pull_and_no_noise() {
        let cfg = AfaConfig { beta: 0.0, gamma: 0.0, population: 6, ..Default::default() };
        let mut r = rng::seeded(1);
        let s0 = afa_init(&cfg, &mut sphere, &mut r).unwrap();
        let s1 = afa_step(&cfg, &s0, &mut sphere, &mut r).unwrap();
        assert_eq!(s0, s1);
    }

    #[test]
    fn large_wandering_scales_noise_by_box_width() {
        let small = AfaConfig::default();
        let large = AfaConfig { wandering: Wandering::Large, ..Default::default() };
        let mut ra = rng::seeded(77);
        let mut rb = rng::seeded(77);
        let p = [40.0; 3];
        for _ in 0..10 {
            let (ea, eb) = (draw_eps(&mut ra), draw_eps(&mut rb));
            let a = move_firefly(&small, &p, &p, true, &ea);
            let b = move_firefly(&large, &p, &p, true, &eb);
            for k in 0..3 {
                assert!(((b[k] - p[k]) - 20.0 * (a[k] - p[k])).abs() < 1e-12);
            }
        }
        assert_eq!(small.random_scale(), 0.3);
        assert!((large.random_scale() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn contraction_toward_stationary_leader() {
        let cfg = AfaConfig { beta: 0.0, population: 5, ..Default::default() };
        let mut r = rng::seeded(2);
        let s0 = afa_init(&cfg, &mut sphere, &mut r).unwrap();
        let lead = s0.brightest();
        let lp = s0.fireflies[lead].position;
        // constant objective keeps the leader the brightest (first wins ties)
        let mut flat = |_: &OperatingPoint| Ok(-s0.fireflies[lead].intensity);
        let mut s = s0.clone();
        s.fireflies.iter_mut().for_each(|f| f.intensity = s0.fireflies[lead].intensity);
        s.fireflies[lead].intensity += 1.0;
        let s1 = afa_step(&cfg, &s, &mut flat, &mut r).unwrap();
        for (i, (f0, f1)) in s.fireflies.iter().zip(&s1.fireflies).enumerate() {
            if i == lead {
                assert_eq!(f1.position, lp);
            } else {
                let d0 = f0.position.distance_sq(&lp).sqrt();
                let d1 = f1.position.distance_sq(&lp).sqrt();
                assert!((d1 - 0.64 * d0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn flat_objective_and_determinism() {
        let cfg = AfaConfig { population: 8, iterations: 5, seed: 4, ..Default::default() };
        let run = afa_optimize(|_| Ok(1.25), &cfg).unwrap();
        assert_eq!(run.best_value, 1.25);
        assert_eq!(run.history.len(), 8 * 6);
        let a = afa_optimize(sphere, &cfg).unwrap();
        let b = afa_optimize(sphere, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn evaluation_cap() {
        let cfg = AfaConfig { population: 10, iterations: 50, max_evaluations: Some(25), ..Default::default() };
        let run = afa_optimize(sphere, &cfg).unwrap();
        assert_eq!(run.history.len(), 25);
        assert!(AfaConfig { max_evaluations: Some(5), population: 10, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(AfaConfig { alpha: 0.0, ..Default::default() }.validate().is_err());
        assert!(AfaConfig { beta: 1.5, ..Default::default() }.validate().is_err());
        assert!(AfaConfig { gamma: -0.1, ..Default::default() }.validate().is_err());
        assert!(AfaConfig { population: 1, ..Default::default() }.validate().is_err());
        assert_eq!(AfaConfig::default().delta_b(), 20.0);
    }

    #[test]
    fn history_csv_header() {
        let cfg = AfaConfig { population: 3, iterations: 1, ..Default::default() };
        let run = afa_optimize(sphere, &cfg).unwrap();
        let mut buf = Vec::new();
        write_history_csv(&mut buf, &run.history).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("iteration,firefly_id,w1,w2,w3,g,is_global_best\n"));
        assert_eq!(text.lines().count(), 7);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn feasible_and_monotone_incumbents(seed in 0u64..10_000, large in any::<bool>()) {
            let cfg = AfaConfig {
                population: 6,
                iterations: 8,
                seed,
                wandering: if large { Wandering::Large } else { Wandering::Small },
                ..Default::default()
            };
            let run = afa_optimize(sphere, &cfg).unwrap();
            prop_assert!(run.history.iter().all(|e| cfg.bounds.contains(e.w.as_array())));
            let inc = run.incumbents();
            prop_assert_eq!(inc.len(), 9);
            prop_assert!(inc.windows(2).all(|p| p[1] <= p[0]));
            prop_assert_eq!(*inc.last().unwrap(), run.best_value);
        }
    }
}
