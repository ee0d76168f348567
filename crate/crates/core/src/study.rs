//! Run specifications, convergence studies and profile diagnostics.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::driver::{RunFailure, RunState, Snapshot, Solver, SolverConfig};
use crate::error::{Error, Result};
use crate::fe::{interpolate, relative_linf_error, Mesh};
use crate::math::log2;
use crate::scenario::Scenario;
use crate::tableau::ButcherPair;

/// Everything needed to reproduce one run.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub scenario: Scenario,
    pub domain: (f64, f64),
    pub num_cells: usize,
    pub degree: usize,
    pub config: SolverConfig,
    pub pair: ButcherPair,
    pub t0: f64,
    pub t_final: f64,
}

/// A completed run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub solver: Solver,
    pub state: RunState,
    pub snapshots: Vec<Snapshot>,
}

impl RunSpec {
    /// The scenario's defaults with the given pair.
    pub fn from_scenario(scenario: Scenario, pair: ButcherPair) -> Self {
        let (a, b) = scenario.domain;
        let mut config = SolverConfig::new(scenario.flux, scenario.epsilon, b - a);
        config.cfl = scenario.cfl;
        Self {
            scenario,
            domain: scenario.domain,
            num_cells: scenario.num_cells,
            degree: scenario.degree,
            config,
            pair,
            t0: scenario.t0,
            t_final: scenario.t_final,
        }
    }

    pub fn with_cells(&self, num_cells: usize) -> Self {
        Self {
            num_cells,
            ..self.clone()
        }
    }

    pub fn mesh(&self) -> Result<Mesh> {
        Mesh::new(self.domain.0, self.domain.1, self.num_cells, self.degree)
    }

    /// Builds the solver and interpolates the initial data at `t0`.
    pub fn prepare(&self) -> Result<(Solver, RunState)> {
        if !(self.t0.is_finite() && self.t_final.is_finite() && self.t_final > self.t0) {
            return Err(Error::InvalidInput(alloc::format!(
                "need t0 < T, got {} and {}",
                self.t0,
                self.t_final
            )));
        }
        let mesh = self.mesh()?;
        let solver = Solver::new(&mesh, self.config.clone(), self.pair.clone())?;
        let u0 = interpolate(|x| self.scenario.initial_value(self.t0, x), &mesh)?;
        let state = solver.initial_state(self.t0, u0)?;
        Ok((solver, state))
    }

    /// Runs from `t0` to `T`, recording the requested snapshots.
    pub fn run(&self, snapshot_times: &[f64]) -> core::result::Result<RunOutcome, RunFailure> {
        let (mut solver, state) = self.prepare().map_err(|error| {
            let empty = RunState {
                t: self.t0,
                u: Default::default(),
                step_index: 0,
                diagnostics: Vec::new(),
            };
            RunFailure {
                error,
                last_good: alloc::boxed::Box::new(empty),
            }
        })?;
        let (state, snapshots) = solver.run_to_time(state, self.t_final, snapshot_times)?;
        Ok(RunOutcome {
            solver,
            state,
            snapshots,
        })
    }

    /// Relative sup-norm error of `u` against the exact solution at `t`.
    pub fn error_at(&self, u: &[f64], mesh: &Mesh, t: f64) -> Result<f64> {
        if !self.scenario.has_exact() {
            return Err(Error::InvalidInput(alloc::format!(
                "scenario `{}` has no exact solution",
                self.scenario.name
            )));
        }
        relative_linf_error(u, mesh, |x| self.scenario.exact(t, x).unwrap_or(f64::NAN))
    }
}

/// One refinement level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub num_cells: usize,
    /// Periodic DOFs plus the duplicated endpoint.
    pub reported_dofs: usize,
    pub error: f64,
    pub rate: Option<f64>,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub scenario: String,
    pub scheme: String,
    pub degree: usize,
    pub cfl: f64,
    pub t_final: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Set when a refinement failed; `rows` holds the levels before it.
    pub failure: Option<String>,
}

impl ConvergenceReport {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    pub fn final_rate(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.rate)
    }

    pub fn row_with_dofs(&self, reported: usize) -> Option<&ConvergenceRow> {
        self.rows.iter().find(|r| r.reported_dofs == reported)
    }
}

/// `rate_r = log2(e_{r−1}/e_r) / log2(n_r/n_{r−1})` for cell counts `n`.
pub fn observed_rates(cells: &[usize], errors: &[f64]) -> Vec<Option<f64>> {
    (0..errors.len())
        .map(|r| {
            (r > 0).then(|| {
                log2(errors[r - 1] / errors[r]) / log2(cells[r] as f64 / cells[r - 1] as f64)
            })
        })
        .collect()
}

/// `count` dyadic refinements starting at `start` cells.
pub fn dyadic_cells(start: usize, count: usize) -> Vec<usize> {
    (0..count).map(|k| start << k).collect()
}

/// Runs `base` on each cell count and measures the error at `T`.
/// Stops at the first failure and flags the report incomplete.
pub fn convergence_study(base: &RunSpec, cells: &[usize]) -> ConvergenceReport {
    let mut report = ConvergenceReport {
        scenario: base.scenario.name.to_string(),
        scheme: base.pair.name().to_string(),
        degree: base.degree,
        cfl: base.config.cfl,
        t_final: base.t_final,
        rows: Vec::new(),
        failure: None,
    };
    let mut errors = Vec::new();
    let mut done = Vec::new();
    for &n in cells {
        let spec = base.with_cells(n);
        let result = spec.run(&[]).map_err(|f| f.error).and_then(|out| {
            spec.error_at(&out.state.u, out.solver.mesh(), out.state.t)
                .map(|e| (e, out))
        });
        match result {
            Ok((err, out)) => {
                errors.push(err);
                done.push(n);
                report.rows.push(ConvergenceRow {
                    num_cells: n,
                    reported_dofs: out.solver.mesh().reported_dofs(),
                    error: err,
                    rate: None,
                    steps: out.state.step_index,
                });
            }
            Err(e) => {
                report.failure = Some(alloc::format!("{n} cells: {e}"));
                break;
            }
        }
    }
    for (row, rate) in report.rows.iter_mut().zip(observed_rates(&done, &errors)) {
        row.rate = rate;
    }
    report
}

/// Strict local maxima above `threshold` in a periodic nodal profile.
pub fn count_local_maxima(profile: &[f64], threshold: f64) -> usize {
    let n = profile.len();
    if n < 3 {
        return 0;
    }
    (0..n)
        .filter(|&i| {
            let v = profile[i];
            v > threshold && v > profile[(i + n - 1) % n] && v > profile[(i + 1) % n]
        })
        .count()
}
