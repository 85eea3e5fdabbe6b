use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use acmv_core::harness::{self, OptimizerKind, PreparedScenario, RunSpec};
use acmv_core::{afa, bgpo, comfort, plant, Error, Result};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "acmv", version, about = "Energy/comfort trade-off optimization for ACMV plants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Optimizer {
    Bgpo,
    Afa,
}

impl From<Optimizer> for OptimizerKind {
    fn from(o: Optimizer) -> Self {
        match o {
            Optimizer::Bgpo => OptimizerKind::Bgpo,
            Optimizer::Afa => OptimizerKind::Afa,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetKind {
    Plant,
    Skin,
}

#[derive(Subcommand)]
enum Command {
    /// Print the calibrated normalization statistics of a scenario as JSON.
    Calibrate {
        #[arg(long, default_value = "case1")]
        scenario: String,
    },
    /// Run one optimization at a fixed λ and print the optimum as JSON.
    Optimize {
        #[arg(long, default_value = "case1")]
        scenario: String,
        #[arg(long, value_enum)]
        optimizer: Optimizer,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cap AFA at `samples` objective evaluations.
        #[arg(long)]
        fair_budget: bool,
        /// Write the per-evaluation history CSV here.
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Run a λ / sample-size / repetition sweep described by a TOML file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Results CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize one or more results CSVs.
    Report {
        #[arg(long = "results", required = true)]
        results: Vec<PathBuf>,
        #[arg(long, default_value_t = harness::DEFAULT_TARIFF)]
        tariff: f64,
        #[arg(long, default_value_t = harness::DEFAULT_DAYS)]
        days: u32,
        /// Daily benchmark consumption in kWh; taken from the scenario when omitted.
        #[arg(long)]
        daily_kwh: Option<f64>,
        /// Also write the report as JSON here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Write a synthetic dataset as CSV.
    Dataset {
        #[arg(value_enum)]
        kind: DatasetKind,
        #[arg(long, default_value = "case1")]
        scenario: String,
        #[arg(long, default_value_t = 500)]
        rows: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn prepare(name: &str) -> Result<PreparedScenario> {
    harness::build_scenario(name)?.prepare()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Calibrate { scenario } => {
            let p = prepare(&scenario)?;
            println!("{}", serde_json::to_string_pretty(&p.stats)?);
        }
        Command::Optimize { scenario, optimizer, lambda, samples, seed, fair_budget, history } => {
            let p = prepare(&scenario)?;
            let cfg = p.objective_config(lambda)?;
            let objective = |w: &plant::OperatingPoint| {
                let (e, pts) = p.model.energy_and_pts(w)?;
                Ok(cfg.g(e, pts))
            };
            let best = match OptimizerKind::from(optimizer) {
                OptimizerKind::Bgpo => {
                    let run = bgpo::bgpo_optimize(objective, &harness::bgpo_config(samples, seed))?;
                    if let Some(path) = &history {
                        bgpo::write_history_csv(File::create(path)?, &run.history)?;
                    }
                    run.best
                }
                OptimizerKind::Afa => {
                    let afa_cfg = harness::afa_config(samples, seed, afa::AfaConfig::default().iterations, fair_budget);
                    let run = afa::afa_optimize(objective, &afa_cfg)?;
                    if let Some(path) = &history {
                        afa::write_history_csv(File::create(path)?, &run.history)?;
                    }
                    run.best
                }
            };
            let record = p.model.evaluate(&cfg, &best)?;
            println!("{}", serde_json::to_string_pretty(&record)?);
        }
        Command::Sweep { config, out } => {
            let spec = RunSpec::from_toml(&std::fs::read_to_string(&config)?)?;
            let results = harness::run_experiment(&spec)?;
            let mut w = output(out.as_deref())?;
            harness::write_results_csv(&mut w, &results.rows)?;
            w.flush()?;
            if let Some(e) = results.failure {
                eprintln!("partial results written: {} rows", results.rows.len());
                return Err(e);
            }
        }
        Command::Report { results, tariff, days, daily_kwh, json } => {
            let mut rows = Vec::new();
            for path in &results {
                rows.extend(harness::read_results_csv(File::open(path)?)?);
            }
            if rows.is_empty() {
                return Err(Error::EmptyInput("results"));
            }
            harness::sort_rows(&mut rows);
            let daily = match daily_kwh {
                Some(d) => d,
                None => harness::build_scenario(&rows[0].scenario)?.plant.e_bench,
            };
            let report = harness::report(&rows, daily, tariff, days);
            if let Some(path) = json {
                std::fs::write(path, report.to_json()?)?;
            }
            print!("{}", report.to_text());
        }
        Command::Dataset { kind, scenario, rows, seed, out } => {
            let sc = harness::build_scenario(&scenario)?;
            let mut w = output(out.as_deref())?;
            match kind {
                DatasetKind::Plant => {
                    let cfg = plant::PlantConfig { seed, ..sc.plant };
                    plant::write_plant_csv(&mut w, &plant::generate_plant_dataset(&cfg, rows)?)?;
                }
                DatasetKind::Skin => {
                    let data =
                        comfort::synthetic_skin_dataset(sc.pts_training_range(), &sc.occupant, rows, seed, &sc.skin)?;
                    comfort::write_skin_csv(&mut w, &data)?;
                }
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::FAILURE
        }
    }
}
