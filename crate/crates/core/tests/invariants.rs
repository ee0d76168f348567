use gkdv_core::dispersive::{dispersive_update, energy_balance, MassMode};
use gkdv_core::driver::{mass_scale, quantize_tau, HyperbolicMode, Solver, SolverConfig};
use gkdv_core::hyperbolic::{compute_graph_viscosity, low_order_predict, tau_star};
use gkdv_core::study::{count_local_maxima, observed_rates};
use gkdv_core::tableau::bundled;
use gkdv_core::{FeOperators, FluxModel, Mesh, StateVector};
use proptest::prelude::*;

fn setup(cells: usize, degree: usize, len: f64) -> (Mesh, FeOperators) {
    let mesh = Mesh::new(0.0, len, cells, degree).unwrap();
    let ops = FeOperators::assemble(&mesh).unwrap();
    (mesh, ops)
}

fn state(seed: &[f64], n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| seed[i % seed.len()] * (1.0 + 0.1 * (i as f64).sin()))
        .collect()
}

fn flux(burgers: bool) -> FluxModel {
    if burgers {
        FluxModel::burgers()
    } else {
        FluxModel::kdv6()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_scheme_conserves_mass(
        seed in prop::collection::vec(-2.0f64..2.0, 3..12),
        cells in 8usize..24,
        degree in 1usize..=3,
        scheme in prop::sample::select(vec!["euler", "imex22", "imex33"]),
        mode in prop::sample::select(vec![HyperbolicMode::LowOrder, HyperbolicMode::Limited, HyperbolicMode::HighOrder]),
        burgers in any::<bool>(),
    ) {
        let (mesh, ops) = setup(cells, degree, 3.0);
        let mut cfg = SolverConfig::new(flux(burgers), 0.05, 3.0);
        cfg.hyperbolic = mode;
        let mut solver = Solver::new(&mesh, cfg, bundled(scheme).unwrap()).unwrap();
        let u0 = state(&seed, ops.num_dofs());
        let scale = mass_scale(&u0, &ops);
        let mut st = solver.initial_state(0.0, StateVector::new(u0)).unwrap();
        let m0 = ops.total_mass(&st.u);
        for _ in 0..5 {
            solver.step(&mut st, f64::INFINITY).unwrap();
        }
        prop_assert!((ops.total_mass(&st.u) - m0).abs() <= 1e-12 * scale);
        prop_assert!(solver.max_step_mass_drift() <= 1e-12);
    }

    #[test]
    fn low_order_step_is_bounded(
        seed in prop::collection::vec(-3.0f64..3.0, 2..10),
        cells in 4usize..30,
        degree in 1usize..=3,
        frac in 0.0f64..=1.0,
        burgers in any::<bool>(),
    ) {
        let (_, ops) = setup(cells, degree, 2.0);
        let u = state(&seed, ops.num_dofs());
        let f = flux(burgers);
        let d = compute_graph_viscosity(&u, &f, &ops).unwrap();
        let ts = tau_star(&d, &ops);
        prop_assume!(ts.is_finite());
        let w = low_order_predict(&u, frac.max(1e-3) * ts, &f, &ops, false).unwrap();
        let (lo, hi) = ops.local_bounds(&u);
        for i in 0..w.len() {
            prop_assert!(w[i] >= lo[i] - 1e-12 && w[i] <= hi[i] + 1e-12);
        }
    }

    #[test]
    fn dispersive_update_balances_energy_and_mass(
        seed in prop::collection::vec(-1.0f64..1.0, 2..10),
        cells in 6usize..30,
        degree in 1usize..=2,
        log_tau in -4.0f64..0.0,
        eps in prop::sample::select(vec![-1.0, 4.84e-4, 1.0]),
        lumped in any::<bool>(),
    ) {
        let (mesh, ops) = setup(cells, degree, 5.0);
        let mode = if lumped { MassMode::Lumped } else { MassMode::Consistent };
        let w = state(&seed, ops.num_dofs());
        let tau = 10f64.powf(log_tau);
        let (u, z) = dispersive_update(&ops, &w, tau, eps, 0.2, mode).unwrap();
        let b = energy_balance(&mesh, &ops, &w, &u, &z, tau, eps, 0.2, mode).unwrap();
        prop_assert!(b.relative_residual() <= 1e-10);
        if eps > 0.0 {
            prop_assert!(b.new <= b.old * (1.0 + 1e-12));
        }
        let m = |v: &[f64]| -> f64 {
            match mode {
                MassMode::Lumped => ops.total_mass(v),
                MassMode::Consistent => ops.mass.matvec(v).unwrap().iter().sum(),
            }
        };
        prop_assert!((m(&u) - m(&w)).abs() <= 1e-12 * mass_scale(&w, &ops));
    }

    #[test]
    fn tau_ladder_rounds_down_within_one_rung(tau in 1e-9f64..10.0, rungs in 1u32..64) {
        let q = quantize_tau(tau, Some(rungs));
        prop_assert!(q <= tau);
        prop_assert!(q > tau * 2f64.powf(-1.0 / rungs as f64) * (1.0 - 1e-12));
        prop_assert_eq!(quantize_tau(q, Some(rungs)), q);
        prop_assert_eq!(quantize_tau(tau, None), tau);
    }

    #[test]
    fn rates_are_definitional(errs in prop::collection::vec(1e-12f64..1.0, 2..6)) {
        let cells: Vec<usize> = (0..errs.len()).map(|k| 16 << k).collect();
        let r = observed_rates(&cells, &errs);
        prop_assert!(r[0].is_none());
        for k in 1..errs.len() {
            let want = (errs[k - 1] / errs[k]).log2();
            prop_assert!((r[k].unwrap() - want).abs() <= 1e-14 * want.abs().max(1.0));
        }
    }

    #[test]
    fn local_maxima_are_rotation_invariant(
        profile in prop::collection::vec(-1.0f64..1.0, 3..40),
        shift in 0usize..40,
    ) {
        let n = profile.len();
        let rotated: Vec<f64> = (0..n).map(|i| profile[(i + shift) % n]).collect();
        prop_assert_eq!(count_local_maxima(&profile, 0.0), count_local_maxima(&rotated, 0.0));
    }
}
