//! The λ-weighted minimization target over normalized energy and normalized
//! |PTS|, the energy saving rate, and the annual cost saving.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::comfort::{self, Occupant, PtsClassifier, PtsLabel, SkinResponse};
use crate::plant::{Bounds, OperatingPoint, PlantModel};
use crate::{rng, Error, Result};

/// Means and standard deviations of energy and |PTS| over the feasible box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub mu_e: f64,
    pub sigma_e: f64,
    pub mu_pts: f64,
    pub sigma_pts: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig {
    pub lambda: f64,
    pub mu_e: f64,
    pub sigma_e: f64,
    pub mu_pts: f64,
    pub sigma_pts: f64,
    /// Common scale applied to both z-scores.
    pub z: f64,
    /// Energy at the benchmark point `[40, 40, 40]`, kWh/day.
    pub e_bench: f64,
    pub bounds: Bounds,
}

impl ObjectiveConfig {
    pub fn new(lambda: f64, stats: NormalizationStats, z: f64, e_bench: f64) -> Result<Self> {
        let cfg = ObjectiveConfig {
            lambda,
            mu_e: stats.mu_e,
            sigma_e: stats.sigma_e,
            mu_pts: stats.mu_pts,
            sigma_pts: stats.sigma_pts,
            z,
            e_bench,
            bounds: Bounds::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config(format!("lambda {} outside [0, 1]", self.lambda)));
        }
        for (name, v) in [("sigma_e", self.sigma_e), ("sigma_pts", self.sigma_pts), ("z", self.z), ("e_bench", self.e_bench)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        self.bounds.validate()
    }

    pub fn stats(&self) -> NormalizationStats {
        NormalizationStats { mu_e: self.mu_e, sigma_e: self.sigma_e, mu_pts: self.mu_pts, sigma_pts: self.sigma_pts }
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        let cfg = ObjectiveConfig { lambda, ..*self };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn normalize_energy(&self, e: f64) -> f64 {
        (e - self.mu_e) / (self.z * self.sigma_e)
    }

    pub fn normalize_pts(&self, pts_abs: f64) -> f64 {
        (pts_abs - self.mu_pts) / (self.z * self.sigma_pts)
    }

    /// `g = λ E_norm + (1 - λ) |PTS|_norm`.
    pub fn g(&self, e: f64, pts_abs: f64) -> f64 {
        self.lambda * self.normalize_energy(e) + (1.0 - self.lambda) * self.normalize_pts(pts_abs)
    }

    /// Energy saving rate in percent; negative means saving.
    pub fn esr(&self, e: f64) -> f64 {
        esr(self.e_bench, e)
    }

    pub fn record(&self, w: OperatingPoint, energy: f64, pts_abs: f64, pmv: f64) -> EvaluationRecord {
        EvaluationRecord { w, energy, pts_abs, pmv, g: self.g(energy, pts_abs), esr: self.esr(energy) }
    }
}

/// `100 (e - e_bench) / e_bench`.
pub fn esr(e_bench: f64, e: f64) -> f64 {
    100.0 * (e - e_bench) / e_bench
}

/// Yearly cost saving for a given energy saving rate. Expects
/// `daily_kwh > 0` and `days >= 1`.
pub fn annual_saving(esr_pct: f64, daily_kwh: f64, tariff: f64, days: u32) -> f64 {
    esr_pct.abs() / 100.0 * daily_kwh * f64::from(days) * tariff
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub w: OperatingPoint,
    pub energy: f64,
    pub pts_abs: f64,
    pub pmv: f64,
    pub g: f64,
    pub esr: f64,
}

pub fn write_records_csv<W: Write>(out: W, rows: &[EvaluationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["w1", "w2", "w3", "energy", "pts_abs", "pmv", "g", "esr"])?;
    for r in rows {
        let [w1, w2, w3] = *r.w.as_array();
        w.write_record([w1, w2, w3, r.energy, r.pts_abs, r.pmv, r.g, r.esr].iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Sample mean and standard deviation (n - 1) of energy and |PTS| over
/// `n` uniform points of the box.
pub fn calibrate_stats<F>(bounds: &Bounds, n: usize, seed: u64, mut sample: F) -> Result<NormalizationStats>
where
    F: FnMut(&OperatingPoint) -> Result<(f64, f64)>,
{
    if n < 100 {
        return Err(Error::Config(format!("calibration needs n >= 100, got {n}")));
    }
    bounds.validate()?;
    let mut r = rng::seeded(seed);
    let mut es = Vec::with_capacity(n);
    let mut ps = Vec::with_capacity(n);
    for _ in 0..n {
        let w = bounds.sample(&mut r);
        let (e, p) = sample(&w)?;
        es.push(e);
        ps.push(p);
    }
    let (mu_e, sigma_e) = mean_std(&es);
    let (mu_pts, sigma_pts) = mean_std(&ps);
    if !(sigma_e > 0.0) {
        return Err(Error::DegenerateStatistic("sigma_e"));
    }
    if !(sigma_pts > 0.0) {
        return Err(Error::DegenerateStatistic("sigma_pts"));
    }
    Ok(NormalizationStats { mu_e, sigma_e, mu_pts, sigma_pts })
}

/// Mean and sample standard deviation; the deviation of a single value is 0.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Everything the plant and the occupant say about one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assessment {
    pub energy: f64,
    pub air_temp: f64,
    pub air_vel: f64,
    pub pts: PtsLabel,
    pub pmv: f64,
}

/// Plant model, occupant, skin response and trained PTS classifier bundled
/// into the map `ω -> (E, |PTS|, PMV)`.
#[derive(Clone)]
pub struct ComfortEnergyModel {
    pub plant: Arc<dyn PlantModel>,
    pub classifier: PtsClassifier,
    pub skin: SkinResponse,
    pub occupant: Occupant,
}

impl ComfortEnergyModel {
    pub fn pts(&self, w: &OperatingPoint) -> Result<PtsLabel> {
        let t_air = self.plant.air_temperature(w);
        let f = self.skin.steady_features(t_air, &self.occupant)?;
        self.classifier.predict(&f)
    }

    /// `(E, |PTS|)`, the two inputs of the objective.
    pub fn energy_and_pts(&self, w: &OperatingPoint) -> Result<(f64, f64)> {
        Ok((self.plant.energy(w), self.pts(w)?.magnitude()))
    }

    pub fn assess(&self, w: &OperatingPoint) -> Result<Assessment> {
        let air_temp = self.plant.air_temperature(w);
        let air_vel = self.plant.air_velocity(w);
        // mean radiant temperature taken equal to air temperature
        let pmv = comfort::pmv(air_temp, air_temp, air_vel, self.plant.humidity(), &self.occupant)?;
        Ok(Assessment { energy: self.plant.energy(w), air_temp, air_vel, pts: self.pts(w)?, pmv })
    }

    pub fn evaluate(&self, cfg: &ObjectiveConfig, w: &OperatingPoint) -> Result<EvaluationRecord> {
        let a = self.assess(w)?;
        Ok(cfg.record(*w, a.energy, a.pts.magnitude(), a.pmv))
    }
}
