use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use firesafe_core::sim::{self, Simulation};
use firesafe_core::{Controller, Error, ScenarioConfig};

mod output;

#[derive(Parser, Debug)]
#[command(
    name = "firesafe",
    version,
    about = "Wildfire tracking and UAV coordination scenarios"
)]
struct Cli {
    /// Override the controller named in the config.
    #[arg(long, global = true, value_parser = parse_controller)]
    controller: Option<Controller>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario and write its per-step metrics.
    Simulate {
        /// Scenario file (TOML); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Minimum drones keeping every team's plan feasible, per case and team count.
    SweepSafety {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 8)]
        max_teams: usize,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cumulative uncertainty per case, controller and fleet size.
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        drones: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

fn parse_controller(s: &str) -> Result<Controller, String> {
    s.parse()
}

#[derive(Debug)]
enum Failure {
    Config(Error),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } => Failure::Config(e),
            other => Failure::Other(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

fn config_error(path: &str, message: impl Into<String>) -> Failure {
    Failure::Config(Error::Config {
        path: path.into(),
        message: message.into(),
    })
}

fn load(
    path: Option<&Path>,
    seed: Option<u64>,
    controller: Option<Controller>,
) -> Result<ScenarioConfig, Failure> {
    let mut cfg = match path {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(c) = controller {
        cfg.controller = c;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate {
            config,
            seed,
            out,
            format,
        } => {
            let cfg = load(config.as_deref(), seed, cli.controller)?;
            let mut sim = Simulation::new(&cfg)?;
            for _ in 0..cfg.duration {
                sim.step()?;
            }
            let metrics = sim.finish();
            std::fs::create_dir_all(&out)?;
            match format {
                Format::Csv => {
                    output::write_steps(&out.join("steps.csv"), &metrics)?;
                    output::write_safety_records(&out.join("safety.csv"), &metrics)?;
                    output::write_fire_traces(&out.join("fire_trace.csv"), &metrics)?;
                }
                Format::Json => output::write_json(&out.join("metrics.json"), &metrics)?,
            }
            println!(
                "{} steps, controller {}, case {}: cumulative uncertainty {}",
                cfg.duration,
                cfg.controller,
                cfg.case.number(),
                metrics.final_cumulative()
            );
        }
        Command::SweepSafety {
            config,
            seed,
            max_teams,
            trials,
            out,
        } => {
            if cli.controller == Some(Controller::Gradient) {
                return Err(config_error(
                    "controller",
                    "the safety sweep runs the proposed controller",
                ));
            }
            if max_teams < 1 {
                return Err(config_error("max-teams", "must be at least 1"));
            }
            if trials < 1 {
                return Err(config_error("trials", "must be at least 1"));
            }
            let cfg = load(config.as_deref(), seed, cli.controller)?;
            let rows = sim::sweep_safety(&cfg, max_teams, trials)?;
            std::fs::create_dir_all(&out)?;
            output::write_rows(&out.join("safety_sweep.csv"), &rows)?;
            let summary = sim::summarize_safety(&rows);
            output::write_safety_summary(&out.join("safety_summary.csv"), &summary)?;
            println!("case teams mean_drones se");
            for (case, teams, s) in &summary {
                println!("{case} {teams} {:.2} {:.2}", s.mean, s.se);
            }
        }
        Command::Compare {
            config,
            seed,
            drones,
            trials,
            out,
        } => {
            if drones.is_empty() || drones.contains(&0) {
                return Err(config_error("drones", "fleet sizes must be at least 1"));
            }
            if trials < 1 {
                return Err(config_error("trials", "must be at least 1"));
            }
            let cfg = load(config.as_deref(), seed, None)?;
            let controllers: Vec<Controller> = match cli.controller {
                Some(c) => vec![c],
                None => Controller::ALL.to_vec(),
            };
            let rows = sim::compare_controllers(&cfg, &drones, trials, &controllers)?;
            std::fs::create_dir_all(&out)?;
            output::write_rows(&out.join("compare.csv"), &rows)?;
            let summary = sim::summarize_compare(&rows);
            output::write_compare_summary(&out.join("compare_summary.csv"), &summary)?;
            println!("case controller drones mean_cum_uncertainty se");
            for (case, controller, n, s) in &summary {
                println!("{case} {controller} {n} {:.1} {:.1}", s.mean, s.se);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
