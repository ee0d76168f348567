//! Time stepping: Euler-IMEX, staged ERK/EDIRK IMEX in incremental form,
//! CFL-driven step selection and the run loop.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::dispersive::{stage_dispersive_solve, DispersiveSystem, GOperator, MassMode};
use crate::error::{check_len, Error, Result};
use crate::fe::{weighted_l2_norm, FeOperators, Mesh, StateVector};
use crate::flux::FluxModel;
use crate::hyperbolic::{
    compute_graph_viscosity, flux_map, flux_map_low, high_order_increment, lumped_update, tau_star,
    EdgeFlux, GraphViscosity, HighOrderViscosityPolicy,
};
use crate::limiter::{
    apply_unlimited, limit, limit_with_bounds, relaxed_bounds, AntidiffusiveFluxes,
};
use crate::math::{exp2, floor, log2};
use crate::sparse::SparseLu;
use crate::tableau::ButcherPair;

/// Which hyperbolic prediction feeds the dispersive solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HyperbolicMode {
    /// Graph-viscosity update only.
    LowOrder,
    /// Low-order update corrected by Zalesak-limited antidiffusive fluxes.
    #[default]
    Limited,
    /// Full antidiffusive correction (the consistent-mass Galerkin update).
    HighOrder,
}

impl HyperbolicMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::LowOrder => "low_order",
            Self::Limited => "limited",
            Self::HighOrder => "high_order",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "low_order" => Ok(Self::LowOrder),
            "limited" => Ok(Self::Limited),
            "high_order" => Ok(Self::HighOrder),
            other => Err(Error::UnknownName(other.into())),
        }
    }
}

/// Physical and numerical parameters shared by every step of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub flux: FluxModel,
    /// Dispersion coefficient `ε`.
    pub epsilon: f64,
    /// Stabilization constant `c` of the auxiliary-variable formulation.
    pub c_stab: f64,
    pub mass_mode: MassMode,
    pub hyperbolic: HyperbolicMode,
    pub viscosity: HighOrderViscosityPolicy,
    /// `τ = cfl · τ* / Δc^max`.
    pub cfl: f64,
    /// Cap on `τ`; required when `τ*` can be unbounded.
    pub tau_max: Option<f64>,
    /// Step equi-distributed pairs in units of `τ/s` with coefficients scaled by `s`.
    pub efficient: bool,
    /// Round the CFL step down to `2^(k/r)` for `r` rungs per octave, so
    /// the dispersive factorizations are reused across steps.
    pub tau_rungs: Option<u32>,
    /// Widen the limiter bounds at smooth extrema (see `relaxed_bounds`).
    pub relax_bounds: bool,
}

impl SolverConfig {
    /// Defaults for a domain of length `length`: `c = 1/length`, consistent
    /// mass, limited hyperbolic update, `cfl = 0.5`.
    pub fn new(flux: FluxModel, epsilon: f64, length: f64) -> Self {
        Self {
            flux,
            epsilon,
            c_stab: 1.0 / length,
            mass_mode: MassMode::Consistent,
            hyperbolic: HyperbolicMode::Limited,
            viscosity: HighOrderViscosityPolicy::Zero,
            cfl: 0.5,
            tau_max: None,
            efficient: false,
            tau_rungs: Some(DEFAULT_TAU_RUNGS),
            relax_bounds: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidInput(alloc::format!(
                "cfl {} not in (0, 1]",
                self.cfl
            )));
        }
        if let Some(t) = self.tau_max {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::InvalidInput(alloc::format!(
                    "tau_max {t} must be positive"
                )));
            }
        }
        if self.tau_rungs == Some(0) {
            return Err(Error::InvalidInput("tau_rungs must be positive".into()));
        }
        if !self.epsilon.is_finite()
            || self.epsilon == 0.0
            || !(self.c_stab.is_finite() && self.c_stab > 0.0)
        {
            return Err(Error::InvalidInput(
                "epsilon must be nonzero and c_stab positive".into(),
            ));
        }
        Ok(())
    }
}

/// Default step ladder resolution; steps shrink by at most 1 − 2^(−1/16) ≈ 4.2%.
pub const DEFAULT_TAU_RUNGS: u32 = 16;

/// Largest `2^(k/rungs) ≤ tau`; identity when `rungs` is `None`.
pub fn quantize_tau(tau: f64, rungs: Option<u32>) -> f64 {
    match rungs {
        Some(r) if tau.is_finite() && tau > 0.0 => {
            let r = r as f64;
            // The nudge keeps rungs fixed points; the check undoes overshoot.
            let k = floor(r * log2(tau) + 1e-9);
            let q = exp2(k / r);
            if q > tau {
                exp2((k - 1.0) / r)
            } else {
                q
            }
        }
        _ => tau,
    }
}

/// One row of the per-step diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    /// `Σ m_i U_i`.
    pub mass: f64,
    /// Weighted norm `(Σ m_i U_i²)^{1/2}`.
    pub l2: f64,
    /// Step that produced this state (0 for the initial record).
    pub tau: f64,
}

/// Current time, solution and diagnostics history.
#[derive(Debug, Clone, PartialEq)]
pub struct RunState {
    pub t: f64,
    pub u: StateVector,
    pub step_index: usize,
    pub diagnostics: Vec<StepRecord>,
}

impl RunState {
    pub fn new(t0: f64, u: StateVector, ops: &FeOperators) -> Result<Self> {
        check_len(ops.num_dofs(), u.len())?;
        let rec = StepRecord {
            t: t0,
            mass: ops.total_mass(&u),
            l2: weighted_l2_norm(&u, ops)?,
            tau: 0.0,
        };
        Ok(Self {
            t: t0,
            u,
            step_index: 0,
            diagnostics: vec![rec],
        })
    }

    /// `max_n |mass_n − mass_0| / Σ m_i |U^0_i|`.
    pub fn max_relative_mass_drift(&self, ops: &FeOperators) -> f64 {
        let m0 = self.diagnostics[0].mass;
        let scale = mass_scale(&self.u, ops).max(m0.abs());
        self.diagnostics
            .iter()
            .map(|r| (r.mass - m0).abs())
            .fold(0.0, f64::max)
            / scale
    }
}

/// `Σ m_i |U_i|`, the scale against which mass drift is measured.
pub fn mass_scale(u: &[f64], ops: &FeOperators) -> f64 {
    u.iter()
        .zip(&ops.lumped_mass)
        .map(|(v, m)| m * v.abs())
        .sum()
}

/// State at a requested output time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub u: StateVector,
}

/// A failed run: the cause and the last state that passed all checks.
#[derive(Debug, Clone)]
pub struct RunFailure {
    pub error: Error,
    pub last_good: Box<RunState>,
}

impl fmt::Display for RunFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (last good state at t = {})",
            self.error, self.last_good.t
        )
    }
}

impl core::error::Error for RunFailure {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Cached dispersive systems; one per distinct `τ a_ll`.
const SYSTEM_CACHE: usize = 8;

/// Stage-state data kept for later explicit and implicit increments.
struct StageHistory {
    flux_high: Vec<Vec<f64>>,
    edges_high: Vec<EdgeFlux>,
    g: Vec<Option<Vec<f64>>>,
}

enum StepOutcome {
    Done(Vec<f64>),
    /// A stage violated its CFL bound; retry with this step.
    Retry(f64),
}

/// Owns the mesh operators, a Butcher pair and every cached factorization.
#[derive(Debug, Clone)]
pub struct Solver {
    mesh: Mesh,
    ops: FeOperators,
    config: SolverConfig,
    pair: ButcherPair,
    g_op: GOperator,
    mass_lu: SparseLu,
    systems: Vec<DispersiveSystem>,
    /// Largest per-step relative mass change seen so far.
    max_step_drift: f64,
    restarts: usize,
}

impl Solver {
    pub fn new(mesh: &Mesh, config: SolverConfig, pair: ButcherPair) -> Result<Self> {
        config.validate()?;
        if config.efficient && !pair.is_equidistributed() {
            return Err(Error::InvalidInput(alloc::format!(
                "efficient stepping needs equi-distributed abscissae; `{}` has none",
                pair.name()
            )));
        }
        let ops = FeOperators::assemble(mesh)?;
        if let HighOrderViscosityPolicy::Scaled(psi) = &config.viscosity {
            check_len(ops.num_dofs(), psi.len())?;
        }
        let g_op = GOperator::new(&ops, config.epsilon, config.c_stab)?;
        let mass_lu = SparseLu::factor(&ops.mass)?;
        Ok(Self {
            mesh: mesh.clone(),
            ops,
            config,
            pair,
            g_op,
            mass_lu,
            systems: Vec::new(),
            max_step_drift: 0.0,
            restarts: 0,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn ops(&self) -> &FeOperators {
        &self.ops
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn pair(&self) -> &ButcherPair {
        &self.pair
    }

    /// Largest relative mass change over a single step so far.
    pub fn max_step_mass_drift(&self) -> f64 {
        self.max_step_drift
    }

    /// Number of steps retried because a stage exceeded its CFL bound.
    pub fn restarts(&self) -> usize {
        self.restarts
    }

    pub fn initial_state(&self, t0: f64, u0: StateVector) -> Result<RunState> {
        RunState::new(t0, u0, &self.ops)
    }

    /// Step proposed for state `u`, before clipping to output times.
    pub fn proposed_tau(&self, u: &[f64]) -> Result<f64> {
        let d = compute_graph_viscosity(u, &self.config.flux, &self.ops)?;
        self.cfl_tau(tau_star(&d, &self.ops))
    }

    fn cfl_tau(&self, ts: f64) -> Result<f64> {
        let mut tau = quantize_tau(
            self.config.cfl * ts / self.pair.dc_max(),
            self.config.tau_rungs,
        );
        if let Some(cap) = self.config.tau_max {
            tau = tau.min(cap);
        }
        if tau.is_finite() {
            Ok(tau)
        } else {
            Err(Error::UnboundedTimeStep)
        }
    }

    fn system(&mut self, tau_d: f64) -> Result<usize> {
        let c = &self.config;
        if let Some(k) = self
            .systems
            .iter()
            .position(|s| s.matches(tau_d, c.epsilon, c.c_stab, c.mass_mode))
        {
            return Ok(k);
        }
        let sys = DispersiveSystem::assemble(&self.ops, tau_d, c.epsilon, c.c_stab, c.mass_mode)?;
        if self.systems.len() == SYSTEM_CACHE {
            self.systems.remove(0);
        }
        self.systems.push(sys);
        Ok(self.systems.len() - 1)
    }

    /// Hyperbolic part of a stage: returns `W`, the limited (or low/high
    /// order) prediction from `u_prev`.
    #[allow(clippy::too_many_arguments)]
    fn hyperbolic_stage(
        &self,
        u_prev: &[f64],
        d: GraphViscosity,
        tau_low: f64,
        tau: f64,
        deltas: &[f64],
        hist: &StageHistory,
        delta_h: &mut Vec<f64>,
    ) -> Result<Vec<f64>> {
        let ops = &self.ops;
        let flux = &self.config.flux;
        let f_low = flux_map_low(u_prev, flux, &d, ops)?;
        let w_low = lumped_update(u_prev, &f_low, tau_low, ops);
        if self.config.hyperbolic == HyperbolicMode::LowOrder {
            return Ok(w_low);
        }
        let refs: Vec<&[f64]> = hist.flux_high.iter().map(|v| v.as_slice()).collect();
        high_order_increment(&refs, deltas, tau, ops, delta_h)?;
        let diff: Vec<f64> = u_prev
            .iter()
            .zip(delta_h.iter())
            .zip(&w_low)
            .map(|((u, dh), wl)| u + dh - wl)
            .collect();
        let low_edges = EdgeFlux::new(u_prev, flux, Some(d));
        let high: Vec<(&EdgeFlux, f64)> = hist
            .edges_high
            .iter()
            .zip(deltas)
            .map(|(e, &a)| (e, tau * a))
            .collect();
        let a = AntidiffusiveFluxes::compute(ops, delta_h, (&low_edges, tau_low), &high, &diff)?;
        Ok(match self.config.hyperbolic {
            HyperbolicMode::Limited => self.limited(u_prev, &w_low, &a)?,
            _ => apply_unlimited(&w_low, &a, ops),
        })
    }

    fn limited(&self, u: &[f64], w_low: &[f64], a: &AntidiffusiveFluxes) -> Result<Vec<f64>> {
        if self.config.relax_bounds {
            let (lo, hi) = relaxed_bounds(u, &self.ops);
            limit_with_bounds(w_low, a, &lo, &hi, &self.ops)
        } else {
            limit(u, w_low, a, &self.ops)
        }
    }

    fn try_step(
        &mut self,
        u_n: &[f64],
        tau: f64,
        d_n: &GraphViscosity,
        ts_n: f64,
    ) -> Result<StepOutcome> {
        let s = self.pair.stages();
        let (tau_c, scale) = if self.config.efficient {
            (tau / s as f64, s as f64)
        } else {
            (tau, 1.0)
        };
        let flux = self.config.flux;
        let needs_high = self.config.hyperbolic != HyperbolicMode::LowOrder;
        let mut hist = StageHistory {
            flux_high: Vec::new(),
            edges_high: Vec::new(),
            g: Vec::new(),
        };
        let mut stages: Vec<Vec<f64>> = vec![u_n.to_vec()];
        let mut delta_h = vec![0.0; u_n.len()];

        // G(U^n) only enters through the first column of the implicit increments.
        let g0_needed = (1..=s).any(|l| self.pair.implicit(l, 0) != self.pair.implicit(l - 1, 0));
        hist.g.push(if g0_needed {
            Some(self.g_op.apply(&self.ops, u_n)?)
        } else {
            None
        });

        for l in 1..=s {
            let u_prev = stages[l - 1].clone();
            let c = self.pair.c();
            let tau_low = tau_c * (scale * (c[l] - c[l - 1]));
            let (d, ts) = if l == 1 {
                (d_n.clone(), ts_n)
            } else {
                let d = compute_graph_viscosity(&u_prev, &flux, &self.ops)?;
                let ts = tau_star(&d, &self.ops);
                (d, ts)
            };
            if tau_low > ts {
                let shrink = (self.config.cfl * ts / tau_low).min(0.9);
                return Ok(StepOutcome::Retry(tau * shrink));
            }
            if needs_high {
                let dh = self.config.viscosity.high_order_viscosity(&d, &self.ops)?;
                hist.flux_high
                    .push(flux_map(&u_prev, &flux, dh.as_ref(), &self.ops)?);
                hist.edges_high.push(EdgeFlux::new(&u_prev, &flux, dh));
            }
            let de: Vec<f64> = self
                .pair
                .explicit_deltas(l)
                .iter()
                .map(|v| v * scale)
                .collect();
            let w = self
                .hyperbolic_stage(&u_prev, d, tau_low, tau_c, &de, &hist, &mut delta_h)
                .map_err(|e| stage_error(l, e))?;

            let di: Vec<f64> = self
                .pair
                .implicit_deltas(l)
                .iter()
                .map(|v| v * scale)
                .collect();
            let a_ll = self.pair.implicit(l, l);
            let sys_index = if a_ll != 0.0 {
                Some(
                    self.system(tau_c * (scale * a_ll))
                        .map_err(|e| stage_error(l, e))?,
                )
            } else {
                None
            };
            let g_refs: Vec<&[f64]> = hist.g.iter().map(|g| g.as_deref().unwrap_or(&[])).collect();
            let mut g_used = Vec::with_capacity(l);
            let mut d_used = Vec::with_capacity(l);
            for (g, &dv) in g_refs.iter().zip(&di) {
                if dv != 0.0 {
                    if g.is_empty() {
                        return Err(stage_error(
                            l,
                            Error::InvalidInput("missing dispersive history".into()),
                        ));
                    }
                    g_used.push(*g);
                    d_used.push(dv);
                }
            }
            let system = sys_index.map(|k| (&self.systems[k], &self.g_op));
            let (u_l, g_l) = stage_dispersive_solve(
                &self.ops,
                &w,
                &g_used,
                &d_used,
                tau_c,
                system,
                self.config.mass_mode,
                &self.mass_lu,
            )
            .map_err(|e| stage_error(l, e))?;
            hist.g.push(g_l);
            stages.push(u_l);
        }
        Ok(StepOutcome::Done(stages.pop().unwrap()))
    }

    /// Advances by one step of at most `tau_limit`; returns the step taken.
    pub fn step(&mut self, state: &mut RunState, tau_limit: f64) -> Result<f64> {
        let d_n = compute_graph_viscosity(&state.u, &self.config.flux, &self.ops)?;
        let ts_n = tau_star(&d_n, &self.ops);
        let mut tau = self.cfl_tau(ts_n)?.min(tau_limit);
        if !(tau > 0.0) {
            return Err(Error::InvalidInput(alloc::format!(
                "non-positive step {tau}"
            )));
        }
        let u_next = loop {
            match self.try_step(&state.u, tau, &d_n, ts_n)? {
                StepOutcome::Done(u) => break u,
                StepOutcome::Retry(t) => {
                    self.restarts += 1;
                    tau = t;
                }
            }
        };
        self.finish_step(state, u_next, tau)
    }

    fn finish_step(&mut self, state: &mut RunState, u_next: Vec<f64>, tau: f64) -> Result<f64> {
        let t_next = state.t + tau;
        if u_next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { time: t_next });
        }
        let prev_mass = state.diagnostics.last().map_or(0.0, |r| r.mass);
        let mass = self.ops.total_mass(&u_next);
        let scale = mass_scale(&state.u, &self.ops).max(f64::MIN_POSITIVE);
        self.max_step_drift = self.max_step_drift.max((mass - prev_mass).abs() / scale);
        let l2 = weighted_l2_norm(&u_next, &self.ops)?;
        state.u = StateVector::new(u_next);
        state.t = t_next;
        state.step_index += 1;
        state.diagnostics.push(StepRecord {
            t: t_next,
            mass,
            l2,
            tau,
        });
        Ok(tau)
    }

    /// One Euler-IMEX step: hyperbolic prediction (low order, or corrected
    /// against the consistent-mass Galerkin update) followed by one
    /// dispersive update with the configured mass.
    pub fn euler_imex_step(&mut self, state: &mut RunState, tau_limit: f64) -> Result<f64> {
        let ops = &self.ops;
        let flux = self.config.flux;
        let u = state.u.as_slice();
        let d = compute_graph_viscosity(u, &flux, ops)?;
        let ts = tau_star(&d, ops);
        let mut tau = quantize_tau(self.config.cfl * ts, self.config.tau_rungs);
        if let Some(cap) = self.config.tau_max {
            tau = tau.min(cap);
        }
        if !tau.is_finite() {
            return Err(Error::UnboundedTimeStep);
        }
        tau = tau.min(tau_limit);
        let f_low = flux_map_low(u, &flux, &d, ops)?;
        let w_low = lumped_update(u, &f_low, tau, ops);
        let w = if self.config.hyperbolic == HyperbolicMode::LowOrder {
            w_low
        } else {
            let dh = self.config.viscosity.high_order_viscosity(&d, ops)?;
            let f_high = flux_map(u, &flux, dh.as_ref(), ops)?;
            let mut delta = vec![0.0; u.len()];
            high_order_increment(&[&f_high], &[1.0], tau, ops, &mut delta)?;
            let diff: Vec<f64> = u
                .iter()
                .zip(&delta)
                .zip(&w_low)
                .map(|((a, b), c)| a + b - c)
                .collect();
            let high = EdgeFlux::new(u, &flux, dh);
            let low = EdgeFlux::new(u, &flux, Some(d));
            let a = AntidiffusiveFluxes::compute(ops, &delta, (&low, tau), &[(&high, tau)], &diff)?;
            if self.config.hyperbolic == HyperbolicMode::Limited {
                self.limited(u, &w_low, &a)?
            } else {
                apply_unlimited(&w_low, &a, ops)
            }
        };
        let k = self.system(tau)?;
        let (u_next, _) = self.systems[k].update(&self.ops, &w)?;
        self.finish_step(state, u_next, tau)
    }

    /// Steps to `t_end`, landing exactly on every snapshot time in
    /// `(state.t, t_end]`. On failure, returns the last good state.
    pub fn run_to_time(
        &mut self,
        mut state: RunState,
        t_end: f64,
        snapshot_times: &[f64],
    ) -> core::result::Result<(RunState, Vec<Snapshot>), RunFailure> {
        let fail = |error: Error, st: &RunState| RunFailure {
            error,
            last_good: Box::new(st.clone()),
        };
        if !(t_end >= state.t) {
            return Err(fail(
                Error::InvalidInput(alloc::format!("end time {t_end} precedes t = {}", state.t)),
                &state,
            ));
        }
        let mut targets: Vec<f64> = snapshot_times
            .iter()
            .copied()
            .filter(|&t| t > state.t && t <= t_end)
            .collect();
        targets.sort_by(f64::total_cmp);
        targets.dedup();
        let mut snaps = Vec::with_capacity(targets.len());
        if snapshot_times.contains(&state.t) {
            snaps.push(Snapshot {
                t: state.t,
                u: state.u.clone(),
            });
        }
        let mut next = 0;
        while state.t < t_end {
            let target = targets.get(next).copied().unwrap_or(t_end);
            let remaining = target - state.t;
            let before = state.clone();
            match self.step(&mut state, remaining) {
                Ok(tau) => {
                    if tau >= remaining {
                        state.t = target;
                        if let Some(r) = state.diagnostics.last_mut() {
                            r.t = target;
                        }
                    }
                }
                Err(e) => return Err(fail(e, &before)),
            }
            if state.t >= target && next < targets.len() {
                snaps.push(Snapshot {
                    t: state.t,
                    u: state.u.clone(),
                });
                next += 1;
            }
        }
        Ok((state, snaps))
    }
}

fn stage_error(stage: usize, e: Error) -> Error {
    match e {
        Error::StageFailure { .. } => e,
        other => Error::StageFailure {
            stage: stage + 1,
            source: Box::new(other),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fe::interpolate;
    use crate::math::{cos, sech};
    use crate::tableau::bundled;

    fn soliton_setup(cells: usize, k: usize) -> (Mesh, StateVector) {
        let mesh = Mesh::new(-10.0, 10.0, cells, k).unwrap();
        let u0 = interpolate(|x| 2.0 * sech(x) * sech(x), &mesh).unwrap();
        (mesh, u0)
    }

    fn kdv_config(mode: HyperbolicMode, mass: MassMode) -> SolverConfig {
        let mut c = SolverConfig::new(FluxModel::kdv6(), 1.0, 20.0);
        c.hyperbolic = mode;
        c.mass_mode = mass;
        c
    }

    #[test]
    fn constant_state_is_a_fixed_point() {
        let mesh = Mesh::new(0.0, 2.0, 16, 2).unwrap();
        for name in ["euler", "imex22", "imex33"] {
            let mut cfg = kdv_config(HyperbolicMode::Limited, MassMode::Consistent);
            cfg.flux = FluxModel::linear(0.0).unwrap();
            cfg.tau_max = Some(0.01);
            let mut solver = Solver::new(&mesh, cfg, bundled(name).unwrap()).unwrap();
            let mut st = solver
                .initial_state(0.0, StateVector::constant(32, 0.7))
                .unwrap();
            let tau = solver.step(&mut st, f64::INFINITY).unwrap();
            assert_eq!(tau, 0.01);
            let dev = st.u.iter().map(|v| (v - 0.7).abs()).fold(0.0, f64::max);
            assert!(dev < 1e-12, "{name}: {dev}");
        }
    }

    #[test]
    fn step_ladder_rounds_down_by_at_most_one_rung() {
        assert_eq!(quantize_tau(0.3, None), 0.3);
        assert_eq!(quantize_tau(0.25, Some(16)), 0.25);
        for k in 1..200 {
            let tau = 1e-5 * (1.0 + 0.173 * k as f64);
            let q = quantize_tau(tau, Some(16));
            assert!(q <= tau && q > tau * exp2(-1.0 / 16.0) * (1.0 - 1e-15));
            assert_eq!(quantize_tau(q, Some(16)), q);
        }
    }

    #[test]
    fn unbounded_step_needs_a_cap() {
        let mesh = Mesh::new(0.0, 2.0, 8, 1).unwrap();
        let mut cfg = kdv_config(HyperbolicMode::LowOrder, MassMode::Lumped);
        cfg.flux = FluxModel::linear(0.0).unwrap();
        let mut solver = Solver::new(&mesh, cfg, bundled("euler").unwrap()).unwrap();
        let mut st = solver
            .initial_state(0.0, StateVector::constant(8, 1.0))
            .unwrap();
        assert_eq!(solver.step(&mut st, 1.0), Err(Error::UnboundedTimeStep));
        assert_eq!(
            solver.euler_imex_step(&mut st, 1.0),
            Err(Error::UnboundedTimeStep)
        );
    }

    #[test]
    fn lumped_euler_imex_is_stable_and_conservative() {
        let (mesh, u0) = soliton_setup(128, 1);
        let cfg = kdv_config(HyperbolicMode::LowOrder, MassMode::Lumped);
        let mut solver = Solver::new(&mesh, cfg, bundled("euler").unwrap()).unwrap();
        let mut st = solver.initial_state(0.0, u0).unwrap();
        for _ in 0..100 {
            let before = st.diagnostics.last().unwrap().l2;
            solver.euler_imex_step(&mut st, f64::INFINITY).unwrap();
            assert!(st.diagnostics.last().unwrap().l2 <= before * (1.0 + 1e-12));
        }
        assert!(st.max_relative_mass_drift(solver.ops()) <= 1e-12);
    }

    #[test]
    fn single_stage_pair_matches_euler_imex() {
        let (mesh, u0) = soliton_setup(64, 2);
        for mode in [
            HyperbolicMode::LowOrder,
            HyperbolicMode::Limited,
            HyperbolicMode::HighOrder,
        ] {
            let cfg = kdv_config(mode, MassMode::Consistent);
            let mut a = Solver::new(&mesh, cfg.clone(), bundled("euler").unwrap()).unwrap();
            let mut b = Solver::new(&mesh, cfg, bundled("euler").unwrap()).unwrap();
            let mut sa = a.initial_state(0.0, u0.clone()).unwrap();
            let mut sb = b.initial_state(0.0, u0.clone()).unwrap();
            for _ in 0..20 {
                a.step(&mut sa, f64::INFINITY).unwrap();
                b.euler_imex_step(&mut sb, f64::INFINITY).unwrap();
            }
            for (x, y) in sa.u.iter().zip(sb.u.iter()) {
                assert!((x - y).abs() < 1e-12, "{mode:?}");
            }
        }
    }

    #[test]
    fn staged_schemes_conserve_mass() {
        let (mesh, u0) = soliton_setup(64, 2);
        for name in ["imex22", "imex33"] {
            let cfg = kdv_config(HyperbolicMode::Limited, MassMode::Consistent);
            let mut solver = Solver::new(&mesh, cfg, bundled(name).unwrap()).unwrap();
            let mut st = solver.initial_state(0.0, u0.clone()).unwrap();
            for _ in 0..50 {
                solver.step(&mut st, f64::INFINITY).unwrap();
            }
            assert!(st.max_relative_mass_drift(solver.ops()) <= 1e-12, "{name}");
            assert!(solver.max_step_mass_drift() <= 1e-12);
        }
    }

    #[test]
    fn efficient_mode_matches_standard_mode() {
        let (mesh, u0) = soliton_setup(64, 1);
        let cfg = kdv_config(HyperbolicMode::Limited, MassMode::Consistent);
        let mut eff = cfg.clone();
        eff.efficient = true;
        let mut a = Solver::new(&mesh, cfg, bundled("imex33").unwrap()).unwrap();
        let mut b = Solver::new(&mesh, eff, bundled("imex33").unwrap()).unwrap();
        let mut sa = a.initial_state(0.0, u0.clone()).unwrap();
        let mut sb = b.initial_state(0.0, u0).unwrap();
        for _ in 0..10 {
            let tau = a.step(&mut sa, f64::INFINITY).unwrap();
            b.step(&mut sb, tau).unwrap();
        }
        for (x, y) in sa.u.iter().zip(sb.u.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn run_lands_on_snapshots_and_restarts_identically() {
        let (mesh, u0) = soliton_setup(64, 1);
        let cfg = kdv_config(HyperbolicMode::Limited, MassMode::Consistent);
        let pair = bundled("imex22").unwrap();
        let mut solver = Solver::new(&mesh, cfg.clone(), pair.clone()).unwrap();
        let st = solver.initial_state(0.0, u0.clone()).unwrap();
        let (same, snaps) = solver.run_to_time(st.clone(), 0.0, &[]).unwrap();
        assert_eq!((same.step_index, snaps.len()), (0, 0));

        let (full, snaps) = solver
            .run_to_time(st.clone(), 0.02, &[0.005, 0.01, 0.015, 0.02, 0.5])
            .unwrap();
        assert_eq!(
            snaps.iter().map(|s| s.t).collect::<Vec<_>>(),
            vec![0.005, 0.01, 0.015, 0.02]
        );
        assert_eq!(full.t, 0.02);
        assert!(full.diagnostics.windows(2).all(|w| w[1].t > w[0].t));

        let mut fresh = Solver::new(&mesh, cfg, pair).unwrap();
        let (half, _) = fresh.run_to_time(st, 0.01, &[0.005]).unwrap();
        let (rest, _) = fresh.run_to_time(half, 0.02, &[0.015]).unwrap();
        for (x, y) in full.u.iter().zip(rest.u.iter()) {
            assert!((x - y).abs() <= 1e-13);
        }
    }

    #[test]
    fn blow_up_is_reported_with_last_good_state() {
        let mesh = Mesh::new(0.0, 2.0, 16, 1).unwrap();
        let mut cfg = kdv_config(HyperbolicMode::LowOrder, MassMode::Consistent);
        cfg.flux = FluxModel::poly(9).unwrap();
        cfg.epsilon = 1e-3;
        let mut solver = Solver::new(&mesh, cfg, bundled("euler").unwrap()).unwrap();
        let u0 = interpolate(|x| 1e36 * cos(core::f64::consts::PI * x), &mesh).unwrap();
        let st = solver.initial_state(0.0, u0).unwrap();
        let err = solver.run_to_time(st, 1.0, &[]).unwrap_err();
        assert!(err.last_good.t < 1.0);
    }
}
