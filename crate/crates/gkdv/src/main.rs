use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use gkdv::app;
use gkdv::checks;
use gkdv::config::RunConfig;
use gkdv::output;
use gkdv_core::scenario::SCENARIO_NAMES;

#[derive(Parser)]
#[command(
    name = "gkdv",
    version,
    about = "Generalized KdV solver with IMEX time stepping"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Configuration file (`key = value` lines).
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Scenario defaults to start from when no file is given.
    #[arg(long, short)]
    scenario: Option<String>,
    /// Override one key; repeatable, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Extra Butcher tableaux merged into the bundled registry.
    #[arg(long)]
    registry: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = app::load_config(
            self.config.as_deref(),
            self.scenario.as_deref(),
            &self.overrides,
        )?;
        if let Some(r) = &self.registry {
            cfg.registry = Some(r.clone());
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write diagnostics and snapshot profiles.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Continue from a profile written by an earlier run.
        #[arg(long)]
        restart: Option<PathBuf>,
    },
    /// Dyadic convergence study against the exact solution.
    Converge {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 64)]
        start_cells: usize,
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// List scenarios, or print the full configuration of one.
    Scenarios { name: Option<String> },
    /// Run the invariant suite.
    Check {
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { cfg, restart } => {
            let cfg = cfg.load()?;
            let s = app::run(&cfg, restart.as_deref())?;
            println!("{}", output::summary(&s.state));
            println!("diagnostics: {}", s.diagnostics.display());
            for p in &s.profiles {
                println!("profile: {}", p.display());
            }
            println!(
                "mass drift: {:.3e} (per step {:.3e})",
                s.mass_drift, s.step_mass_drift
            );
            if let Some(e) = s.error {
                println!("relative sup error: {e:.6e}");
            }
            if let Some(f) = &s.failure {
                eprintln!("run failed: {f}");
            }
            if !s.monitors_pass() {
                eprintln!("invariant monitors failed");
            }
            Ok(s.monitors_pass())
        }
        Command::Converge {
            cfg,
            start_cells,
            levels,
        } => {
            let cfg = cfg.load()?;
            let report = app::converge(&cfg, start_cells, levels)?;
            print!("{}", output::convergence_table(&report));
            Ok(report.is_complete())
        }
        Command::Scenarios { name: None } => {
            for n in SCENARIO_NAMES {
                println!("{n}");
            }
            Ok(true)
        }
        Command::Scenarios { name: Some(n) } => {
            print!("{}", RunConfig::for_scenario(&n)?.emit());
            Ok(true)
        }
        Command::Check { seed } => {
            let outcomes = checks::run_all(seed)?;
            for o in &outcomes {
                println!("{o}");
            }
            Ok(outcomes.iter().all(|o| o.passed()))
        }
    }
}
