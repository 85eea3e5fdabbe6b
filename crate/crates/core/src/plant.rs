//! Synthetic ACMV plant: energy, supply air temperature and air velocity as
//! declared analytic functions of the three motor frequencies, plus neural
//! surrogates trained on data sampled from it.

use std::io::Write;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::nnmodel::{self, Head, MlpParams, NormStats, TrainConfig};
use crate::{rng, Error, Result};

/// Equipment limits on every motor frequency, in Hz.
pub const FREQ_MIN: f64 = 30.0;
pub const FREQ_MAX: f64 = 50.0;
/// Median design frequency; the benchmark operating point is `[40, 40, 40]`.
pub const FREQ_BENCH: f64 = 40.0;

/// Axis-aligned search box shared by all three frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { lower: FREQ_MIN, upper: FREQ_MAX }
    }
}

impl Bounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::Config(format!("invalid bounds [{lower}, {upper}]")));
        }
        if lower < FREQ_MIN || upper > FREQ_MAX {
            return Err(Error::Config(format!(
                "bounds [{lower}, {upper}] exceed the equipment range [{FREQ_MIN}, {FREQ_MAX}]"
            )));
        }
        Ok(Bounds { lower, upper })
    }

    pub fn validate(&self) -> Result<()> {
        Bounds::new(self.lower, self.upper).map(|_| ())
    }

    /// Maximum boundary difference, `upper - lower`.
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, w: &[f64; 3]) -> bool {
        w.iter().all(|v| *v >= self.lower && *v <= self.upper)
    }

    pub fn clamp(&self, w: [f64; 3]) -> OperatingPoint {
        OperatingPoint(w.map(|v| v.clamp(self.lower, self.upper)))
    }

    pub fn sample(&self, rng: &mut rng::Rng) -> OperatingPoint {
        OperatingPoint(std::array::from_fn(|_| rng.random_range(self.lower..=self.upper)))
    }
}

/// Frequencies `[fan, compressor, pump]` in Hz, always within `[30, 50]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct OperatingPoint([f64; 3]);

impl OperatingPoint {
    pub fn new(fan: f64, compressor: f64, pump: f64) -> Result<Self> {
        Self::try_from([fan, compressor, pump])
    }

    pub const fn benchmark() -> Self {
        OperatingPoint([FREQ_BENCH; 3])
    }

    pub fn fan(&self) -> f64 {
        self.0[0]
    }

    pub fn compressor(&self) -> f64 {
        self.0[1]
    }

    pub fn pump(&self) -> f64 {
        self.0[2]
    }

    pub fn as_array(&self) -> &[f64; 3] {
        &self.0
    }

    pub fn distance_sq(&self, other: &OperatingPoint) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum()
    }
}

impl TryFrom<[f64; 3]> for OperatingPoint {
    type Error = Error;

    fn try_from(w: [f64; 3]) -> Result<Self> {
        if w.iter().all(|v| (FREQ_MIN..=FREQ_MAX).contains(v)) {
            Ok(OperatingPoint(w))
        } else {
            Err(Error::OutOfBox(w, FREQ_MIN, FREQ_MAX))
        }
    }
}

impl From<OperatingPoint> for [f64; 3] {
    fn from(w: OperatingPoint) -> Self {
        w.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantConfig {
    /// Daily energy at the benchmark point, kWh/day.
    pub e_bench: f64,
    /// Ambient relative humidity, %.
    pub humidity: f64,
    /// Dataset observation noise as a fraction of each output's range over the box.
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        PlantConfig { e_bench: 73.741, humidity: 60.0, noise_std: 0.0, seed: 0 }
    }
}

impl PlantConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.e_bench > 0.0) {
            return Err(Error::Config(format!("e_bench must be > 0, got {}", self.e_bench)));
        }
        if !(0.0..=100.0).contains(&self.humidity) {
            return Err(Error::Config(format!("humidity must be in [0, 100], got {}", self.humidity)));
        }
        if !(self.noise_std >= 0.0) {
            return Err(Error::Config(format!("noise_std must be >= 0, got {}", self.noise_std)));
        }
        Ok(())
    }
}

/// `E = e_bench * (0.2 + 0.8 * |w|^2 / 4800)`, equal to `e_bench` at `[40, 40, 40]`.
pub fn plant_energy(cfg: &PlantConfig, w: &OperatingPoint) -> f64 {
    let sq: f64 = w.0.iter().map(|v| v * v).sum();
    cfg.e_bench * (0.2 + 0.8 * sq / 4800.0)
}

/// Supply air temperature in °C.
pub fn plant_air_temperature(_cfg: &PlantConfig, w: &OperatingPoint) -> f64 {
    32.0 - 0.05 * w.fan() - 0.15 * w.compressor() - 0.05 * w.pump()
}

/// Air velocity in m/s; depends on the fan only.
pub fn plant_air_velocity(_cfg: &PlantConfig, w: &OperatingPoint) -> f64 {
    0.05 + 0.004 * w.fan()
}

/// Anything that maps an operating point to plant outputs.
pub trait PlantModel: Send + Sync {
    fn energy(&self, w: &OperatingPoint) -> f64;
    fn air_temperature(&self, w: &OperatingPoint) -> f64;
    fn air_velocity(&self, w: &OperatingPoint) -> f64;
    fn humidity(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AnalyticPlant {
    pub cfg: PlantConfig,
}

impl AnalyticPlant {
    pub fn new(cfg: PlantConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(AnalyticPlant { cfg })
    }
}

impl PlantModel for AnalyticPlant {
    fn energy(&self, w: &OperatingPoint) -> f64 {
        plant_energy(&self.cfg, w)
    }

    fn air_temperature(&self, w: &OperatingPoint) -> f64 {
        plant_air_temperature(&self.cfg, w)
    }

    fn air_velocity(&self, w: &OperatingPoint) -> f64 {
        plant_air_velocity(&self.cfg, w)
    }

    fn humidity(&self) -> f64 {
        self.cfg.humidity
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantSample {
    pub w: OperatingPoint,
    pub energy: f64,
    pub air_temp: f64,
    pub air_vel: f64,
}

/// Ranges of (energy, air temperature, air velocity) over the full box.
fn output_ranges(cfg: &PlantConfig) -> [f64; 3] {
    let lo = OperatingPoint([FREQ_MIN; 3]);
    let hi = OperatingPoint([FREQ_MAX; 3]);
    [
        plant_energy(cfg, &hi) - plant_energy(cfg, &lo),
        plant_air_temperature(cfg, &lo) - plant_air_temperature(cfg, &hi),
        plant_air_velocity(cfg, &hi) - plant_air_velocity(cfg, &lo),
    ]
}

/// Uniform samples of the box with optional Gaussian noise on every output.
pub fn generate_plant_dataset(cfg: &PlantConfig, n: usize) -> Result<Vec<PlantSample>> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::EmptyInput("dataset size must be >= 1"));
    }
    let mut r = rng::seeded(cfg.seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let ranges = output_ranges(cfg);
    let bounds = Bounds::default();
    let rows = (0..n)
        .map(|_| {
            let w = bounds.sample(&mut r);
            let noise: [f64; 3] =
                std::array::from_fn(|k| cfg.noise_std * ranges[k] * unit.sample(&mut r));
            PlantSample {
                w,
                energy: plant_energy(cfg, &w) + noise[0],
                air_temp: plant_air_temperature(cfg, &w) + noise[1],
                air_vel: plant_air_velocity(cfg, &w) + noise[2],
            }
        })
        .collect();
    Ok(rows)
}

pub fn write_plant_csv<W: Write>(out: W, rows: &[PlantSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["w1", "w2", "w3", "energy_kwh", "air_temp_c", "air_vel_ms"])?;
    for r in rows {
        let [w1, w2, w3] = r.w.0;
        w.write_record(
            [w1, w2, w3, r.energy, r.air_temp, r.air_vel].iter().map(|v| v.to_string()),
        )?;
    }
    w.flush()?;
    Ok(())
}

/// One standardized-input, standardized-output regression network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarSurrogate {
    pub net: MlpParams,
    pub input_stats: NormStats,
    pub output_stats: NormStats,
}

impl ScalarSurrogate {
    pub fn train(inputs: &[Vec<f64>], targets: &[f64], hidden: usize, cfg: &TrainConfig) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::DimensionMismatch { expected: inputs.len(), got: targets.len() });
        }
        let input_stats = NormStats::fit(inputs)?;
        let ys: Vec<[f64; 1]> = targets.iter().map(|y| [*y]).collect();
        let output_stats = NormStats::fit(&ys)?;
        let data = inputs
            .iter()
            .zip(&ys)
            .map(|(x, y)| Ok((input_stats.standardize(x)?, output_stats.standardize(y)?)))
            .collect::<Result<Vec<_>>>()?;
        let net = nnmodel::fit_network(input_stats.dim(), hidden, 1, Head::Regression, &data, cfg)?;
        Ok(ScalarSurrogate { net, input_stats, output_stats })
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let z = self.net.forward(&self.input_stats.standardize(x)?)?;
        Ok(self.output_stats.destandardize(&z)?[0])
    }
}

/// Neural stand-in for the plant, one network per output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogatePlant {
    pub energy: ScalarSurrogate,
    pub air_temp: ScalarSurrogate,
    pub air_vel: ScalarSurrogate,
    pub humidity: f64,
}

pub fn default_surrogate_train_config() -> TrainConfig {
    TrainConfig { learning_rate: 0.5, epochs: 4000, seed: 0x5EED, init_scale: 0.5 }
}

impl SurrogatePlant {
    pub fn train(rows: &[PlantSample], humidity: f64, cfg: &TrainConfig) -> Result<Self> {
        let xs: Vec<Vec<f64>> = rows.iter().map(|r| r.w.0.to_vec()).collect();
        let col = |f: fn(&PlantSample) -> f64| rows.iter().map(f).collect::<Vec<_>>();
        let h = nnmodel::DEFAULT_HIDDEN;
        Ok(SurrogatePlant {
            energy: ScalarSurrogate::train(&xs, &col(|r| r.energy), h, cfg)?,
            air_temp: ScalarSurrogate::train(&xs, &col(|r| r.air_temp), h, cfg)?,
            air_vel: ScalarSurrogate::train(&xs, &col(|r| r.air_vel), h, cfg)?,
            humidity,
        })
    }

    fn eval(s: &ScalarSurrogate, w: &OperatingPoint) -> f64 {
        s.predict(&w.0).expect("surrogate input dimension is fixed at 3")
    }
}

impl PlantModel for SurrogatePlant {
    fn energy(&self, w: &OperatingPoint) -> f64 {
        Self::eval(&self.energy, w)
    }

    fn air_temperature(&self, w: &OperatingPoint) -> f64 {
        Self::eval(&self.air_temp, w)
    }

    fn air_velocity(&self, w: &OperatingPoint) -> f64 {
        Self::eval(&self.air_vel, w)
    }

    fn humidity(&self) -> f64 {
        self.humidity
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn op(a: f64, b: f64, c: f64) -> OperatingPoint {
        OperatingPoint::new(a, b, c).unwrap()
    }

    #[test]
    fn energy_values() {
        let cfg = PlantConfig::default();
        assert_eq!(plant_energy(&cfg, &op(40.0, 40.0, 40.0)), 73.741);
        assert!((plant_energy(&cfg, &op(30.0, 30.0, 30.0)) - 47.93165).abs() < 1e-10);
        assert!((plant_energy(&cfg, &op(50.0, 50.0, 50.0)) - 106.92445).abs() < 1e-10);
    }

    #[test]
    fn temperature_and_velocity_values() {
        let cfg = PlantConfig::default();
        assert!((plant_air_temperature(&cfg, &op(40.0, 40.0, 40.0)) - 22.0).abs() < 1e-12);
        assert!((plant_air_temperature(&cfg, &op(30.0, 30.0, 30.0)) - 24.5).abs() < 1e-12);
        assert!((plant_air_temperature(&cfg, &op(50.0, 50.0, 50.0)) - 19.5).abs() < 1e-12);
        assert!((plant_air_velocity(&cfg, &op(40.0, 35.0, 31.0)) - 0.21).abs() < 1e-12);
        assert!((plant_air_velocity(&cfg, &op(30.0, 35.0, 31.0)) - 0.17).abs() < 1e-12);
        assert_eq!(
            plant_air_velocity(&cfg, &op(30.0, 50.0, 50.0)),
            plant_air_velocity(&cfg, &op(30.0, 30.0, 30.0))
        );
    }

    #[test]
    fn out_of_box_rejected() {
        assert!(matches!(OperatingPoint::new(29.9, 40.0, 40.0), Err(Error::OutOfBox(..))));
        assert!(matches!(OperatingPoint::new(40.0, 40.0, 50.1), Err(Error::OutOfBox(..))));
        assert!(OperatingPoint::new(f64::NAN, 40.0, 40.0).is_err());
        let bad: std::result::Result<OperatingPoint, _> = serde_json::from_str("[10.0, 40.0, 40.0]");
        assert!(bad.is_err());
    }

    #[test]
    fn zero_noise_dataset_is_exact_and_deterministic() {
        let cfg = PlantConfig { seed: 4, ..Default::default() };
        let a = generate_plant_dataset(&cfg, 50).unwrap();
        let b = generate_plant_dataset(&cfg, 50).unwrap();
        assert_eq!(a, b);
        for r in &a {
            assert_eq!(r.energy, plant_energy(&cfg, &r.w));
            assert_eq!(r.air_temp, plant_air_temperature(&cfg, &r.w));
            assert_eq!(r.air_vel, plant_air_velocity(&cfg, &r.w));
        }
        assert!(generate_plant_dataset(&cfg, 0).is_err());
    }

    fn correlation(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn noisy_dataset_correlates_with_plant() {
        let cfg = PlantConfig { noise_std: 0.01, seed: 8, ..Default::default() };
        let rows = generate_plant_dataset(&cfg, 1000).unwrap();
        let pairs: [(fn(&PlantSample) -> f64, fn(&PlantConfig, &OperatingPoint) -> f64); 3] = [
            (|r| r.energy, plant_energy),
            (|r| r.air_temp, plant_air_temperature),
            (|r| r.air_vel, plant_air_velocity),
        ];
        for (obs, truth) in pairs {
            let o: Vec<f64> = rows.iter().map(obs).collect();
            let t: Vec<f64> = rows.iter().map(|r| truth(&cfg, &r.w)).collect();
            assert!(correlation(&o, &t) > 0.99);
        }
    }

    #[test]
    fn csv_header() {
        let rows = generate_plant_dataset(&PlantConfig::default(), 2).unwrap();
        let mut buf = Vec::new();
        write_plant_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("w1,w2,w3,energy_kwh,air_temp_c,air_vel_ms\n"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn bounds_validation() {
        assert!(Bounds::new(35.0, 45.0).is_ok());
        assert!(Bounds::new(20.0, 45.0).is_err());
        assert!(Bounds::new(45.0, 35.0).is_err());
        assert_eq!(Bounds::default().width(), 20.0);
    }

    proptest! {
        #[test]
        fn monotone_in_each_coordinate(
            w in proptest::array::uniform3(30.0f64..49.0),
            k in 0usize..3,
            d in 0.01f64..1.0,
        ) {
            let cfg = PlantConfig::default();
            let a = OperatingPoint(w);
            let mut up = w;
            up[k] += d;
            let b = OperatingPoint(up);
            prop_assert!(plant_energy(&cfg, &b) > plant_energy(&cfg, &a));
            prop_assert!(plant_air_temperature(&cfg, &b) < plant_air_temperature(&cfg, &a));
        }
    }
}
