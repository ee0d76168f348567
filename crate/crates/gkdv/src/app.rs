//! Subcommand bodies, separated from argument parsing.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gkdv_core::driver::{mass_scale, RunState};
use gkdv_core::study::{convergence_study, dyadic_cells, ConvergenceReport};

use crate::config::RunConfig;
use crate::output;

/// Mass drift above this fails a run.
pub const MASS_DRIFT_LIMIT: f64 = 1e-12;

/// Loads a configuration from a file or a scenario name, then applies
/// `key=value` overrides in order.
pub fn load_config(
    file: Option<&Path>,
    scenario: Option<&str>,
    overrides: &[String],
) -> Result<RunConfig> {
    let mut cfg = match (file, scenario) {
        (Some(path), _) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let c = RunConfig::parse(&text)?;
            if let Some(name) = scenario {
                if name != c.scenario {
                    bail!(
                        "--scenario {name} conflicts with `scenario = {}` in {}",
                        c.scenario,
                        path.display()
                    );
                }
            }
            c
        }
        (None, Some(name)) => RunConfig::for_scenario(name)?,
        (None, None) => bail!("give --config or --scenario"),
    };
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .with_context(|| format!("override `{o}` is not key=value"))?;
        cfg.set(k.trim(), v.trim())
            .with_context(|| format!("override `{o}`"))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// What a finished `run` produced.
#[derive(Debug)]
pub struct RunSummary {
    pub state: RunState,
    pub profiles: Vec<PathBuf>,
    pub diagnostics: PathBuf,
    pub mass_drift: f64,
    pub step_mass_drift: f64,
    /// Relative sup-norm error at the final time, when an exact solution exists.
    pub error: Option<f64>,
    pub failure: Option<String>,
}

impl RunSummary {
    pub fn monitors_pass(&self) -> bool {
        self.failure.is_none()
            && self.mass_drift <= MASS_DRIFT_LIMIT
            && self.step_mass_drift <= MASS_DRIFT_LIMIT
    }
}

/// Runs one configuration, optionally starting from a saved profile, and
/// writes `diagnostics.csv` plus one profile per snapshot time.
pub fn run(cfg: &RunConfig, restart: Option<&Path>) -> Result<RunSummary> {
    let mut spec = cfg.run_spec()?;
    let restart = restart.map(output::read_profile).transpose()?;
    if let Some(snap) = &restart {
        spec.t0 = snap.t;
    }
    let (mut solver, mut state) = spec.prepare()?;
    if let Some(snap) = restart {
        if snap.u.len() != solver.ops().num_dofs() {
            bail!(
                "restart profile has {} values, mesh has {} DOFs",
                snap.u.len(),
                solver.ops().num_dofs()
            );
        }
        state = solver.initial_state(snap.t, snap.u)?;
    }
    output::ensure_dir(&cfg.output_dir)?;
    let diagnostics = cfg.output_dir.join("diagnostics.csv");
    let scale = mass_scale(&state.u, solver.ops());
    let (state, profiles, failure) = match solver.run_to_time(state, spec.t_final, &cfg.snapshots) {
        Ok((state, snaps)) => {
            let p = output::write_profiles(&cfg.output_dir, solver.mesh(), &snaps)?;
            (state, p, None)
        }
        Err(f) => (*f.last_good, Vec::new(), Some(f.error.to_string())),
    };
    output::write_diagnostics(&diagnostics, &state.diagnostics)?;
    let error = if failure.is_none() && spec.scenario.has_exact() {
        Some(spec.error_at(&state.u, solver.mesh(), state.t)?)
    } else {
        None
    };
    Ok(RunSummary {
        mass_drift: output::diagnostics_mass_drift(&state.diagnostics, scale),
        step_mass_drift: solver.max_step_mass_drift(),
        state,
        profiles,
        diagnostics,
        error,
        failure,
    })
}

/// Runs `levels` dyadic refinements from `start_cells` and writes
/// `convergence.csv` and `convergence.txt`.
pub fn converge(cfg: &RunConfig, start_cells: usize, levels: usize) -> Result<ConvergenceReport> {
    let spec = cfg.run_spec()?;
    let report = convergence_study(&spec, &dyadic_cells(start_cells, levels));
    output::ensure_dir(&cfg.output_dir)?;
    output::write_convergence_csv(&cfg.output_dir.join("convergence.csv"), &report)?;
    let table = output::convergence_table(&report);
    fs::write(cfg.output_dir.join("convergence.txt"), &table)?;
    Ok(report)
}
