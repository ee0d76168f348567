//! Invariant suite over random states and short scenario runs.
//!
//! Each check reports its worst observed value against a fixed threshold.

use std::fmt;

use anyhow::Result;
use gkdv_core::dispersive::{dispersive_update, energy_balance, MassMode};
use gkdv_core::driver::{mass_scale, HyperbolicMode, Solver, SolverConfig};
use gkdv_core::fe::interpolate;
use gkdv_core::hyperbolic::{
    compute_graph_viscosity, entropy_residuals, flux_map, flux_map_low, high_order_increment,
    low_order_predict, lumped_update, tau_star, EdgeFlux, HighOrderViscosityPolicy,
};
use gkdv_core::limiter::{limit, AntidiffusiveFluxes};
use gkdv_core::scenario::{Scenario, SCENARIO_NAMES};
use gkdv_core::study::RunSpec;
use gkdv_core::tableau::bundled;
use gkdv_core::{FeOperators, FluxModel, Mesh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Result of one invariant check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub worst: f64,
    pub threshold: f64,
    pub detail: String,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.worst <= self.threshold
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: worst {:.3e} (limit {:.0e}); {}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.threshold,
            self.detail
        )
    }
}

pub const SCHEMES: [&str; 3] = ["euler", "imex22", "imex33"];

fn random_mesh(rng: &mut ChaCha8Rng, degrees: &[usize]) -> Result<(Mesh, FeOperators)> {
    let a = rng.gen_range(-5.0..0.0);
    let b = a + rng.gen_range(1.0..10.0);
    let k = degrees[rng.gen_range(0..degrees.len())];
    let mesh = Mesh::new(a, b, rng.gen_range(6..40), k)?;
    let ops = FeOperators::assemble(&mesh)?;
    Ok((mesh, ops))
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let amp = rng.gen_range(0.1..3.0);
    let shift = rng.gen_range(-1.0..1.0);
    (0..n)
        .map(|_| shift + amp * rng.gen_range(-1.0..1.0))
        .collect()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Per-step and end-to-end mass drift for every scenario and bundled scheme.
pub fn conservation(steps: usize) -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for name in SCENARIO_NAMES {
        let s = Scenario::get(name)?;
        for scheme in SCHEMES {
            for mode in [HyperbolicMode::LowOrder, HyperbolicMode::Limited] {
                let mut spec = RunSpec::from_scenario(s, bundled(scheme)?);
                spec.num_cells = 96;
                spec.config.hyperbolic = mode;
                let (mut solver, mut state) = spec.prepare()?;
                for _ in 0..steps {
                    solver.step(&mut state, f64::INFINITY)?;
                }
                worst = worst.max(solver.max_step_mass_drift());
                worst = worst.max(state.max_relative_mass_drift(solver.ops()));
                runs += 1;
            }
        }
    }
    Ok(CheckOutcome {
        name: "conservation",
        worst,
        threshold: 1e-12,
        detail: format!("{runs} runs of {steps} steps, drift relative to Σ m|U|"),
    })
}

/// Lumped Euler-IMEX with the low-order update: the weighted norm never grows.
pub fn stability(steps: usize) -> Result<CheckOutcome> {
    let mut worst = f64::NEG_INFINITY;
    for (name, cells) in [("single_soliton", 256), ("zabusky", 256)] {
        let s = Scenario::get(name)?;
        let mesh = Mesh::new(s.domain.0, s.domain.1, cells, 1)?;
        let mut cfg = SolverConfig::new(s.flux, s.epsilon, s.domain.1 - s.domain.0);
        cfg.mass_mode = MassMode::Lumped;
        cfg.hyperbolic = HyperbolicMode::LowOrder;
        cfg.cfl = 1.0;
        let mut solver = Solver::new(&mesh, cfg, bundled("euler")?)?;
        let u0 = interpolate(|x| s.initial_value(0.0, x), &mesh)?;
        let mut state = solver.initial_state(0.0, u0)?;
        for _ in 0..steps {
            let before = state.diagnostics.last().map_or(0.0, |r| r.l2);
            solver.euler_imex_step(&mut state, f64::INFINITY)?;
            let after = state.diagnostics.last().map_or(0.0, |r| r.l2);
            worst = worst.max((after - before) / before);
        }
    }
    Ok(CheckOutcome {
        name: "stability",
        worst: worst.max(0.0),
        threshold: 1e-12,
        detail: format!("largest relative growth of the weighted norm over {steps} steps"),
    })
}

/// Energy identity of the dispersive update on random data.
pub fn energy_identity(states: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..states {
        let (mesh, ops) = random_mesh(&mut rng, &[1, 2])?;
        let w = random_state(&mut rng, ops.num_dofs());
        let eps = rng.gen_range(0.05..2.0);
        let c = 1.0 / mesh.length();
        for tau in [1e-4, 1e-2, 1.0] {
            for mode in [MassMode::Consistent, MassMode::Lumped] {
                let (u, z) = dispersive_update(&ops, &w, tau, eps, c, mode)?;
                let b = energy_balance(&mesh, &ops, &w, &u, &z, tau, eps, c, mode)?;
                worst = worst.max(b.relative_residual());
            }
        }
    }
    Ok(CheckOutcome {
        name: "energy identity",
        worst,
        threshold: 1e-10,
        detail: format!("{states} states, P1/P2, τ ∈ {{1e-4, 1e-2, 1}}, both mass modes"),
    })
}

/// Local bounds and the entropy inequality for the low-order update at `τ = τ*`.
pub fn maximum_principle(states: usize, seed: u64) -> Result<(CheckOutcome, CheckOutcome)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut bounds, mut entropy): (f64, f64) = (0.0, f64::NEG_INFINITY);
    for k in 0..states {
        let flux = if k % 2 == 0 {
            FluxModel::kdv6()
        } else {
            FluxModel::burgers()
        };
        let (_, ops) = random_mesh(&mut rng, &[1, 2, 3])?;
        let u = random_state(&mut rng, ops.num_dofs());
        let d = compute_graph_viscosity(&u, &flux, &ops)?;
        let tau = tau_star(&d, &ops);
        let w = low_order_predict(&u, tau, &flux, &ops, false)?;
        let (lo, hi) = ops.local_bounds(&u);
        for i in 0..w.len() {
            bounds = bounds.max(lo[i] - w[i]).max(w[i] - hi[i]);
        }
        let scale = 1.0
            + ops.lumped_mass.iter().fold(0.0f64, |m, v| m.max(*v)) / tau * 0.5 * sup(&u).powi(2);
        for r in entropy_residuals(&u, &w, tau, &flux, &d, &ops)? {
            entropy = entropy.max(r / scale);
        }
    }
    let detail = format!("{states} states, kdv6 and burgers, τ = τ*");
    Ok((
        CheckOutcome {
            name: "maximum principle",
            worst: bounds.max(0.0),
            threshold: 1e-12,
            detail: detail.clone(),
        },
        CheckOutcome {
            name: "entropy inequality",
            worst: entropy.max(0.0),
            threshold: 1e-10,
            detail,
        },
    ))
}

/// Bounds, conservation and reconstruction of the limiter, and the `ψ ≡ 1` collapse.
pub fn limiter_contract(states: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut bounds, mut mass, mut recon, mut collapse): (f64, f64, f64, f64) =
        (0.0, 0.0, 0.0, 0.0);
    for k in 0..states {
        let flux = if k % 2 == 0 {
            FluxModel::kdv6()
        } else {
            FluxModel::burgers()
        };
        let (_, ops) = random_mesh(&mut rng, &[1, 2, 3])?;
        let n = ops.num_dofs();
        let u = random_state(&mut rng, n);
        let d = compute_graph_viscosity(&u, &flux, &ops)?;
        let tau = tau_star(&d, &ops);
        let f_low = flux_map_low(&u, &flux, &d, &ops)?;
        let w_low = lumped_update(&u, &f_low, tau, &ops);
        let f_high = flux_map(&u, &flux, None, &ops)?;
        let mut delta = vec![0.0; n];
        high_order_increment(&[&f_high], &[1.0], tau, &ops, &mut delta)?;
        let diff: Vec<f64> = (0..n).map(|i| u[i] + delta[i] - w_low[i]).collect();
        let low = EdgeFlux::new(&u, &flux, Some(d.clone()));
        let high = EdgeFlux::new(&u, &flux, None);
        let a = AntidiffusiveFluxes::compute(&ops, &delta, (&low, tau), &[(&high, tau)], &diff)?;
        recon = recon.max(a.reconstruction_residual());
        let w = limit(&u, &w_low, &a, &ops)?;
        let (lo, hi) = ops.local_bounds(&u);
        for i in 0..n {
            bounds = bounds.max(lo[i] - w[i]).max(w[i] - hi[i]);
        }
        let m0 = ops.total_mass(&u);
        mass = mass.max((ops.total_mass(&w) - m0).abs() / mass_scale(&u, &ops));

        let ones = HighOrderViscosityPolicy::scaled(vec![1.0; n])?;
        let dh = ones.high_order_viscosity(&d, &ops)?;
        let f1 = flux_map(&u, &flux, dh.as_ref(), &ops)?;
        let fs = sup(&f_low).max(1.0);
        for (x, y) in f1.iter().zip(&f_low) {
            collapse = collapse.max((x - y).abs() / fs);
        }
    }
    let detail = format!("{states} states, P1-P3, kdv6 and burgers");
    Ok(vec![
        CheckOutcome {
            name: "limiter bounds",
            worst: bounds.max(0.0),
            threshold: 1e-12,
            detail: detail.clone(),
        },
        CheckOutcome {
            name: "limiter conservation",
            worst: mass,
            threshold: 1e-12,
            detail: detail.clone(),
        },
        CheckOutcome {
            name: "limiter reconstruction",
            worst: recon,
            threshold: 1e-11,
            detail: detail.clone(),
        },
        CheckOutcome {
            name: "psi collapse",
            worst: collapse,
            threshold: 1e-14,
            detail,
        },
    ])
}

/// Every check at the default sizes.
pub fn run_all(seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut out = vec![
        conservation(40)?,
        stability(1000)?,
        energy_identity(100, seed)?,
    ];
    let (b, e) = maximum_principle(100, seed + 1)?;
    out.push(b);
    out.push(e);
    out.extend(limiter_contract(100, seed + 2)?);
    Ok(out)
}
