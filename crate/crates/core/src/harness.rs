//! Case-study scenarios, seeded experiment runs, TCP/EEP group statistics and
//! report generation.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::io::{Read, Write};
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::afa::{self, AfaConfig};
use crate::bgpo::{self, BgpoConfig};
use crate::comfort::{self, Gender, Occupant, SkinResponse};
use crate::objective::{self, ComfortEnergyModel, NormalizationStats, ObjectiveConfig};
use crate::plant::{self, AnalyticPlant, OperatingPoint, PlantConfig, PlantModel, SurrogatePlant};
use crate::regression::{self, FitConfig, PolyModel};
use crate::{rng, Error, Result};

pub const DEFAULT_TARIFF: f64 = 0.2156;
pub const DEFAULT_DAYS: u32 = 365;
pub const DEFAULT_REPETITIONS: usize = 30;
pub const SAMPLE_SIZES: [usize; 5] = [10, 20, 30, 40, 50];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Bgpo,
    Afa,
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Bgpo => "bgpo",
            OptimizerKind::Afa => "afa",
        })
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bgpo" => Ok(OptimizerKind::Bgpo),
            "afa" => Ok(OptimizerKind::Afa),
            other => Err(Error::Config(format!("unknown optimizer {other:?} (expected bgpo or afa)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlantModelKind {
    /// Evaluate the declared analytic plant directly.
    Analytic,
    /// Evaluate neural surrogates trained on plant samples.
    Surrogate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub occupant: Occupant,
    pub plant: PlantConfig,
    pub plant_model: PlantModelKind,
    pub skin: SkinResponse,
    pub z: f64,
    pub lambda_grid: Vec<f64>,
    pub calibration_samples: usize,
    pub calibration_seed: u64,
    pub pts_training_rows: usize,
    pub pts_seed: u64,
    pub notes: String,
}

/// `case1`: general office, `case2`: lecture theatre / conference room.
pub fn build_scenario(name: &str) -> Result<Scenario> {
    let (clo, met, notes) = match name {
        "case1" => (0.5, 1.0, "general office: seated quiet work, light clothing"),
        "case2" => (0.9, 1.4, "lecture theatre / conference room: higher activity and clothing"),
        other => return Err(Error::UnknownScenario(other.to_string())),
    };
    Ok(Scenario {
        name: name.to_string(),
        occupant: Occupant::new(1.70, 70.0, Gender::Male, clo, met)?,
        plant: PlantConfig::default(),
        plant_model: PlantModelKind::Analytic,
        skin: SkinResponse::default(),
        z: 1.0,
        lambda_grid: regression::lambda_grid(),
        calibration_samples: 1000,
        calibration_seed: 0xCA1B,
        pts_training_rows: 800,
        pts_seed: 0x5415,
        notes: notes.to_string(),
    })
}

/// Half-width in °C of the air-temperature range used for classifier training,
/// centered on the occupant's neutral air temperature.
const PTS_TRAINING_HALF_RANGE: f64 = 6.0;

/// A scenario with its trained models and calibrated normalization.
#[derive(Clone)]
pub struct PreparedScenario {
    pub scenario: Scenario,
    pub model: ComfortEnergyModel,
    pub stats: NormalizationStats,
}

impl Scenario {
    pub fn pts_training_range(&self) -> (f64, f64) {
        let c = self.skin.neutral_air_temperature(&self.occupant);
        (c - PTS_TRAINING_HALF_RANGE, c + PTS_TRAINING_HALF_RANGE)
    }

    /// Trains the PTS classifier (and plant surrogates if selected) and
    /// calibrates the normalization statistics. Deterministic.
    pub fn prepare(&self) -> Result<PreparedScenario> {
        let plant: Arc<dyn PlantModel> = match self.plant_model {
            PlantModelKind::Analytic => Arc::new(AnalyticPlant::new(self.plant)?),
            PlantModelKind::Surrogate => {
                let rows = plant::generate_plant_dataset(&self.plant, 500)?;
                Arc::new(SurrogatePlant::train(&rows, self.plant.humidity, &plant::default_surrogate_train_config())?)
            }
        };
        let skin_rows = comfort::synthetic_skin_dataset(
            self.pts_training_range(),
            &self.occupant,
            self.pts_training_rows,
            self.pts_seed,
            &self.skin,
        )?;
        let classifier = comfort::pts_train(&skin_rows, &comfort::default_pts_train_config())?;
        let model = ComfortEnergyModel { plant, classifier, skin: self.skin, occupant: self.occupant };
        let stats = objective::calibrate_stats(
            &plant::Bounds::default(),
            self.calibration_samples,
            self.calibration_seed,
            |w| model.energy_and_pts(w),
        )?;
        Ok(PreparedScenario { scenario: self.clone(), model, stats })
    }
}

/// Settings for a single optimizer run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub optimizer: OptimizerKind,
    pub samples: usize,
    pub seed: u64,
    pub fair_budget: bool,
    pub afa_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOutcome {
    pub best: OperatingPoint,
    pub best_value: f64,
    pub evaluations: usize,
}

pub fn bgpo_config(samples: usize, seed: u64) -> BgpoConfig {
    BgpoConfig { sample_budget: samples, seed, ..Default::default() }
}

/// AFA settings for a sample size. Without `fair_budget` the sample size is
/// the population; with it, total evaluations are capped at the sample size
/// and the population shrinks to `max(2, samples / 5)`.
pub fn afa_config(samples: usize, seed: u64, iterations: usize, fair_budget: bool) -> AfaConfig {
    if fair_budget {
        let population = (samples / 5).max(2);
        AfaConfig {
            population,
            iterations: samples.div_ceil(population),
            max_evaluations: Some(samples.max(population)),
            seed,
            ..Default::default()
        }
    } else {
        AfaConfig { population: samples, iterations, seed, ..Default::default() }
    }
}

/// Runs the chosen optimizer on an arbitrary objective.
pub fn run_optimizer<F>(objective: F, settings: &RunSettings) -> Result<OptimizerOutcome>
where
    F: FnMut(&OperatingPoint) -> Result<f64>,
{
    match settings.optimizer {
        OptimizerKind::Bgpo => {
            let run = bgpo::bgpo_optimize(objective, &bgpo_config(settings.samples, settings.seed))?;
            Ok(OptimizerOutcome { best: run.best, best_value: run.best_value, evaluations: run.history.len() })
        }
        OptimizerKind::Afa => {
            let cfg = afa_config(settings.samples, settings.seed, settings.afa_iterations, settings.fair_budget);
            let run = afa::afa_optimize(objective, &cfg)?;
            Ok(OptimizerOutcome { best: run.best, best_value: run.best_value, evaluations: run.history.len() })
        }
    }
}

/// One results-CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub optimizer: OptimizerKind,
    pub sample_size: usize,
    pub lambda: f64,
    pub repetition: usize,
    pub seed: u64,
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub energy: f64,
    pub pmv: f64,
    pub pts_abs: f64,
    pub esr: f64,
    pub g: f64,
}

impl PreparedScenario {
    pub fn objective_config(&self, lambda: f64) -> Result<ObjectiveConfig> {
        ObjectiveConfig::new(lambda, self.stats, self.scenario.z, self.scenario.plant.e_bench)
    }

    /// Optimizes g(λ, ·) once and evaluates the reported optimum.
    pub fn optimize(&self, lambda: f64, settings: &RunSettings) -> Result<(objective::EvaluationRecord, OptimizerOutcome)> {
        let cfg = self.objective_config(lambda)?;
        let outcome = run_optimizer(
            |w| {
                let (e, p) = self.model.energy_and_pts(w)?;
                Ok(cfg.g(e, p))
            },
            settings,
        )?;
        let record = self.model.evaluate(&cfg, &outcome.best)?;
        Ok((record, outcome))
    }
}

/// A full experiment: every (sample size, λ, repetition) triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub scenario: String,
    pub optimizer: OptimizerKind,
    pub sample_sizes: Vec<usize>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub fair_budget: bool,
    #[serde(default = "default_afa_iterations")]
    pub afa_iterations: usize,
    /// Defaults to the scenario grid `{0.0, 0.1, ..., 1.0}`.
    #[serde(default)]
    pub lambda_grid: Option<Vec<f64>>,
}

fn default_repetitions() -> usize {
    DEFAULT_REPETITIONS
}

fn default_afa_iterations() -> usize {
    AfaConfig::default().iterations
}

impl RunSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: RunSpec = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be >= 1".into()));
        }
        if self.sample_sizes.is_empty() {
            return Err(Error::Config("sample_sizes must not be empty".into()));
        }
        if let Some(grid) = &self.lambda_grid {
            if grid.is_empty() || grid.iter().any(|l| !(0.0..=1.0).contains(l)) {
                return Err(Error::Config("lambda_grid must be nonempty within [0, 1]".into()));
            }
        }
        Ok(())
    }
}

/// Seed of one run: `derive_seed(master, [sample_size, λ index, repetition])`.
pub fn run_seed(master_seed: u64, sample_size: usize, lambda_index: usize, repetition: usize) -> u64 {
    rng::derive_seed(master_seed, &[sample_size as u64, lambda_index as u64, repetition as u64])
}

/// Successful rows, sorted, plus the first failure if any run failed.
#[derive(Debug)]
pub struct ExperimentResults {
    pub rows: Vec<ResultRow>,
    pub failure: Option<Error>,
}

impl ExperimentResults {
    pub fn into_result(self) -> Result<Vec<ResultRow>> {
        match self.failure {
            Some(e) => Err(e),
            None => Ok(self.rows),
        }
    }
}

pub fn run_experiment(spec: &RunSpec) -> Result<ExperimentResults> {
    spec.validate()?;
    let prepared = build_scenario(&spec.scenario)?.prepare()?;
    Ok(run_prepared(&prepared, spec))
}

/// Runs every job of `spec` against an already prepared scenario. Runs are
/// independent and execute in parallel; rows are sorted by
/// (sample size, λ, repetition) before returning.
pub fn run_prepared(prepared: &PreparedScenario, spec: &RunSpec) -> ExperimentResults {
    let grid = spec.lambda_grid.clone().unwrap_or_else(|| prepared.scenario.lambda_grid.clone());
    let jobs: Vec<(usize, usize, f64, usize)> = spec
        .sample_sizes
        .iter()
        .flat_map(|&ss| {
            let grid = &grid;
            (0..grid.len()).flat_map(move |li| (0..spec.repetitions).map(move |rep| (ss, li, grid[li], rep)))
        })
        .collect();

    let outcomes: Vec<Result<ResultRow>> = jobs
        .par_iter()
        .map(|&(ss, li, lambda, rep)| {
            let seed = run_seed(spec.master_seed, ss, li, rep);
            let settings = RunSettings {
                optimizer: spec.optimizer,
                samples: ss,
                seed,
                fair_budget: spec.fair_budget,
                afa_iterations: spec.afa_iterations,
            };
            let (rec, _) = prepared.optimize(lambda, &settings)?;
            let [w1, w2, w3] = *rec.w.as_array();
            Ok(ResultRow {
                scenario: prepared.scenario.name.clone(),
                optimizer: spec.optimizer,
                sample_size: ss,
                lambda,
                repetition: rep,
                seed,
                w1,
                w2,
                w3,
                energy: rec.energy,
                pmv: rec.pmv,
                pts_abs: rec.pts_abs,
                esr: rec.esr,
                g: rec.g,
            })
        })
        .collect();

    let mut rows = Vec::with_capacity(outcomes.len());
    let mut failure = None;
    for o in outcomes {
        match o {
            Ok(r) => rows.push(r),
            Err(e) => {
                failure.get_or_insert(e);
            }
        }
    }
    sort_rows(&mut rows);
    ExperimentResults { rows, failure }
}

pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        (&a.scenario, a.optimizer, a.sample_size)
            .cmp(&(&b.scenario, b.optimizer, b.sample_size))
            .then(a.lambda.total_cmp(&b.lambda))
            .then(a.repetition.cmp(&b.repetition))
    });
}

pub fn write_results_csv<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record([
            "scenario", "optimizer", "sample_size", "lambda", "repetition", "seed", "w1", "w2", "w3", "energy", "pmv",
            "pts_abs", "esr", "g",
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Group {
    /// Thermal-comfort preferred, λ ≤ 0.3.
    #[serde(rename = "TCP")]
    Tcp,
    /// Energy-efficiency preferred, λ ≥ 0.7.
    #[serde(rename = "EEP")]
    Eep,
}

const GROUP_EPS: f64 = 1e-9;

impl Group {
    pub fn contains(self, lambda: f64) -> bool {
        match self {
            Group::Tcp => lambda <= 0.3 + GROUP_EPS,
            Group::Eep => lambda >= 0.7 - GROUP_EPS,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Group::Tcp => "TCP",
            Group::Eep => "EEP",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub group: Group,
    pub count: usize,
    pub mean_esr: f64,
    pub std_esr: f64,
    pub mean_pmv: f64,
    pub std_pmv: f64,
}

/// Mean and sample standard deviation of ESR and PMV over the group's rows.
pub fn group_stats(rows: &[ResultRow], group: Group) -> Result<GroupStats> {
    let members: Vec<&ResultRow> = rows.iter().filter(|r| group.contains(r.lambda)).collect();
    if members.is_empty() {
        return Err(Error::EmptyGroup(group.name()));
    }
    let esr: Vec<f64> = members.iter().map(|r| r.esr).collect();
    let pmv: Vec<f64> = members.iter().map(|r| r.pmv).collect();
    let (mean_esr, std_esr) = objective::mean_std(&esr);
    let (mean_pmv, std_pmv) = objective::mean_std(&pmv);
    Ok(GroupStats { group, count: members.len(), mean_esr, std_esr, mean_pmv, std_pmv })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionSummary {
    pub energy: PolyModel,
    pub pmv: PolyModel,
    pub esr: PolyModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSection {
    pub scenario: String,
    pub optimizer: OptimizerKind,
    pub sample_size: usize,
    pub runs: usize,
    pub tcp: Option<GroupStats>,
    pub eep: Option<GroupStats>,
    /// Cubic fits of the per-λ means; absent with fewer than four distinct λ.
    pub regression: Option<RegressionSummary>,
    /// Annual saving at the EEP mean ESR; absent when the EEP group is empty.
    pub annual_saving: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tariff: f64,
    pub days: u32,
    pub daily_kwh: f64,
    pub sections: Vec<ReportSection>,
}

/// Per-λ means of (energy, pmv, esr).
fn lambda_means(rows: &[&ResultRow]) -> Vec<(f64, f64, f64, f64)> {
    let mut by: BTreeMap<u64, (f64, Vec<&ResultRow>)> = BTreeMap::new();
    for r in rows {
        by.entry(r.lambda.to_bits()).or_insert_with(|| (r.lambda, Vec::new())).1.push(r);
    }
    let mut out: Vec<(f64, f64, f64, f64)> = by
        .values()
        .map(|(l, rs)| {
            let n = rs.len() as f64;
            (
                *l,
                rs.iter().map(|r| r.energy).sum::<f64>() / n,
                rs.iter().map(|r| r.pmv).sum::<f64>() / n,
                rs.iter().map(|r| r.esr).sum::<f64>() / n,
            )
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Summarizes results per (scenario, optimizer, sample size).
pub fn report(rows: &[ResultRow], daily_kwh: f64, tariff: f64, days: u32) -> Report {
    let mut keyed: BTreeMap<(String, OptimizerKind, usize), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        keyed.entry((r.scenario.clone(), r.optimizer, r.sample_size)).or_default().push(r);
    }
    let fit_cfg = FitConfig::default();
    let sections = keyed
        .into_iter()
        .map(|((scenario, optimizer, sample_size), rs)| {
            let owned: Vec<ResultRow> = rs.iter().map(|r| (*r).clone()).collect();
            let tcp = group_stats(&owned, Group::Tcp).ok();
            let eep = group_stats(&owned, Group::Eep).ok();
            let means = lambda_means(&rs);
            let pts = |k: usize| -> Vec<(f64, f64)> {
                means.iter().map(|m| (m.0, [m.1, m.2, m.3][k])).collect()
            };
            let regression = (|| -> Result<RegressionSummary> {
                Ok(RegressionSummary {
                    energy: regression::poly_fit_gd(&pts(0), &fit_cfg)?,
                    pmv: regression::poly_fit_gd(&pts(1), &fit_cfg)?,
                    esr: regression::poly_fit_gd(&pts(2), &fit_cfg)?,
                })
            })()
            .ok();
            let annual_saving = eep.map(|e| objective::annual_saving(e.mean_esr, daily_kwh, tariff, days));
            ReportSection { scenario, optimizer, sample_size, runs: rs.len(), tcp, eep, regression, annual_saving }
        })
        .collect();
    Report { tariff, days, daily_kwh, sections }
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "tariff {:.4} per kWh, {} days, benchmark {:.3} kWh/day",
            self.tariff, self.days, self.daily_kwh
        );
        for sec in &self.sections {
            let _ = writeln!(s, "\n[{} / {} / samples {}] runs {}", sec.scenario, sec.optimizer, sec.sample_size, sec.runs);
            for (name, g) in [("TCP", &sec.tcp), ("EEP", &sec.eep)] {
                match g {
                    Some(g) => {
                        let _ = writeln!(
                            s,
                            "  {name}: n={} ESR {:.3} ± {:.3} %  PMV {:.4} ± {:.4}",
                            g.count, g.mean_esr, g.std_esr, g.mean_pmv, g.std_pmv
                        );
                    }
                    None => {
                        let _ = writeln!(s, "  {name}: no rows");
                    }
                }
            }
            match &sec.regression {
                Some(r) => {
                    for (name, m) in [("E", r.energy), ("PMV", r.pmv), ("ESR", r.esr)] {
                        let t = m.theta;
                        let _ = writeln!(
                            s,
                            "  fit {name}(λ) = {:.6} + {:.6} λ + {:.6} λ² + {:.6} λ³",
                            t[0], t[1], t[2], t[3]
                        );
                    }
                }
                None => {
                    let _ = writeln!(s, "  fit: insufficient λ coverage");
                }
            }
            match sec.annual_saving {
                Some(v) => {
                    let _ = writeln!(s, "  annual saving at EEP mean ESR: {v:.2}");
                }
                None => {
                    let _ = writeln!(s, "  annual saving: n/a (no EEP rows)");
                }
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(lambda: f64, esr: f64, pmv: f64) -> ResultRow {
        ResultRow {
            scenario: "case1".into(),
            optimizer: OptimizerKind::Bgpo,
            sample_size: 10,
            lambda,
            repetition: 0,
            seed: 0,
            w1: 40.0,
            w2: 40.0,
            w3: 40.0,
            energy: 73.741 * (1.0 + esr / 100.0),
            pmv,
            pts_abs: 0.0,
            esr,
            g: 0.0,
        }
    }

    #[test]
    fn scenarios() {
        let c1 = build_scenario("case1").unwrap();
        assert_eq!((c1.occupant.met, c1.occupant.clo), (1.0, 0.5));
        let c2 = build_scenario("case2").unwrap();
        assert_eq!((c2.occupant.met, c2.occupant.clo), (1.4, 0.9));
        assert!(c1.occupant.met < c2.occupant.met && c1.occupant.clo < c2.occupant.clo);
        assert_eq!(c1.plant.e_bench, 73.741);
        assert!(matches!(build_scenario("case3"), Err(Error::UnknownScenario(_))));
    }

    #[test]
    fn group_membership() {
        for l in regression::lambda_grid() {
            let (t, e) = (Group::Tcp.contains(l), Group::Eep.contains(l));
            assert!(!(t && e));
            if l > 0.3 + 1e-9 && l < 0.7 - 1e-9 {
                assert!(!t && !e);
            }
        }
        assert!(Group::Tcp.contains(0.3));
        assert!(Group::Eep.contains(0.7));
        assert!(Group::Eep.contains(0.1 * 7.0));
    }

    #[test]
    fn group_stats_examples() {
        let s = group_stats(&[row(0.8, -20.0, 0.1)], Group::Eep).unwrap();
        assert_eq!((s.mean_esr, s.std_esr), (-20.0, 0.0));
        let mid = [row(0.5, -10.0, 0.0)];
        assert!(matches!(group_stats(&mid, Group::Tcp), Err(Error::EmptyGroup("TCP"))));
        assert!(matches!(group_stats(&mid, Group::Eep), Err(Error::EmptyGroup("EEP"))));

        let rows = [row(0.0, -5.0, 0.2), row(0.2, -7.0, 0.4), row(0.3, -9.0, 0.0), row(0.9, -30.0, -1.0)];
        let t = group_stats(&rows, Group::Tcp).unwrap();
        // mean -7, deviations (2, 0, -2): sample variance 8/2 = 4
        assert!((t.mean_esr + 7.0).abs() < 1e-12);
        assert!((t.std_esr - 2.0).abs() < 1e-12);
        assert!((t.mean_pmv - 0.2).abs() < 1e-12);
        assert!((t.std_pmv - 0.2).abs() < 1e-12);
        assert_eq!(t.count, 3);
    }

    #[test]
    fn report_saving_and_missing_eep() {
        let rows: Vec<ResultRow> = regression::lambda_grid().into_iter().map(|l| row(l, -21.0, 0.0)).collect();
        let r = report(&rows, 73.741, DEFAULT_TARIFF, DEFAULT_DAYS);
        assert_eq!(r.sections.len(), 1);
        let saving = r.sections[0].annual_saving.unwrap();
        assert!((saving - 1218.6).abs() < 0.1);
        assert!(r.sections[0].regression.is_some());

        let tcp_only: Vec<ResultRow> = [0.0, 0.1, 0.2].iter().map(|l| row(*l, -3.0, 0.0)).collect();
        let r = report(&tcp_only, 73.741, DEFAULT_TARIFF, DEFAULT_DAYS);
        assert!(r.sections[0].annual_saving.is_none());
        assert!(r.sections[0].regression.is_none());
        assert!(r.to_text().contains("annual saving: n/a (no EEP rows)"));
    }

    #[test]
    fn results_csv_roundtrip_and_header() {
        let rows = vec![row(0.0, -3.5, 0.25), row(0.7, -21.0, -0.5)];
        let mut buf = Vec::new();
        write_results_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "scenario,optimizer,sample_size,lambda,repetition,seed,w1,w2,w3,energy,pmv,pts_abs,esr,g\n"
        ));
        assert_eq!(read_results_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn run_spec_from_toml() {
        let spec = RunSpec::from_toml(
            "scenario = \"case1\"\noptimizer = \"afa\"\nsample_sizes = [10, 50]\nmaster_seed = 7\n",
        )
        .unwrap();
        assert_eq!(spec.repetitions, DEFAULT_REPETITIONS);
        assert_eq!(spec.optimizer, OptimizerKind::Afa);
        assert!(RunSpec::from_toml("scenario = \"case1\"\noptimizer = \"afa\"\nsample_sizes = [10]\nmaster_seed = 1\nrepetitions = 0\n").is_err());
        assert!(RunSpec::from_toml("scenario = \"case1\"\noptimizer = \"pso\"\nsample_sizes = [10]\nmaster_seed = 1\n").is_err());
    }

    #[test]
    fn fair_budget_caps_afa() {
        let cfg = afa_config(10, 1, 50, true);
        assert_eq!(cfg.population, 2);
        let run = afa::afa_optimize(|w| Ok(w.fan()), &cfg).unwrap();
        assert_eq!(run.history.len(), 10);
        let cfg = afa_config(50, 1, 50, true);
        let run = afa::afa_optimize(|w| Ok(w.fan()), &cfg).unwrap();
        assert_eq!(run.history.len(), 50);
    }
}
