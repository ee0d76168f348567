//! Flux-corrected transport between the low- and high-order hyperbolic
//! predictions.
//!
//! For a stage with low-order step `τ_L` and explicit increments
//! `τ δ_k`, the antidiffusive flux on edge `(i, j)` is
//!
//! ```text
//! A_ij = M_ij (ΔH_i − ΔH_j) + τ_L F^L_ij(U) − τ Σ_k δ_k F^H_ij(U^k),
//! ```
//!
//! where `M ΔH = −τ Σ_k δ_k F^H(U^k)`. Then `Σ_j A_ij = m_i (W^H_i − W^L_i)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::fe::FeOperators;
use crate::hyperbolic::EdgeFlux;
use crate::math::pow;

/// Reconstruction residuals above this (relative) are treated as assembly bugs.
pub const RECONSTRUCTION_TOLERANCE: f64 = 1e-9;

/// Skew-symmetric edge fluxes `A_ij = −A_ji` stored on the operator stencil.
#[derive(Debug, Clone)]
pub struct AntidiffusiveFluxes {
    values: Vec<f64>,
    reconstruction_residual: f64,
}

impl AntidiffusiveFluxes {
    /// Builds `A` from the high-order increment `ΔH`, the low-order edge flux
    /// with its step `τ_L`, and the high-order edge fluxes with their steps
    /// `τ δ_k`. Verifies `Σ_j A_ij = m_i (W^H_i − W^L_i)`, where
    /// `W^H = U + ΔH` and `W^L = U − (τ_L/m) F^L`.
    pub fn compute(
        ops: &FeOperators,
        delta_h: &[f64],
        low: (&EdgeFlux, f64),
        high: &[(&EdgeFlux, f64)],
        w_high_minus_low: &[f64],
    ) -> Result<Self> {
        let n = ops.num_dofs();
        check_len(n, delta_h.len())?;
        check_len(n, w_high_minus_low.len())?;
        let cols = ops.mass.col_indices();
        let mass = ops.mass.values();
        let tpos = &ops.transpose_pos;
        let mut values = vec![0.0; mass.len()];
        for i in 0..n {
            for p in ops.mass.row_range(i) {
                let j = cols[p];
                if j <= i {
                    continue;
                }
                let mut a = mass[p] * (delta_h[i] - delta_h[j]) + low.1 * low.0.at(ops, p, i, j);
                for (e, coef) in high {
                    if *coef != 0.0 {
                        a -= coef * e.at(ops, p, i, j);
                    }
                }
                values[p] = a;
                values[tpos[p]] = -a;
            }
        }
        let mut out = Self {
            values,
            reconstruction_residual: 0.0,
        };
        out.reconstruction_residual = out.reconstruction_error(ops, w_high_minus_low)?;
        if out.reconstruction_residual > RECONSTRUCTION_TOLERANCE {
            return Err(Error::InconsistentFluxes {
                residual: out.reconstruction_residual,
            });
        }
        Ok(out)
    }

    /// Wraps precomputed values, enforcing skew symmetry.
    pub fn from_values(ops: &FeOperators, mut values: Vec<f64>) -> Result<Self> {
        check_len(ops.mass.nnz(), values.len())?;
        let cols = ops.mass.col_indices();
        for i in 0..ops.num_dofs() {
            for p in ops.mass.row_range(i) {
                let j = cols[p];
                if j == i {
                    values[p] = 0.0;
                } else if j > i {
                    values[ops.transpose_pos[p]] = -values[p];
                }
            }
        }
        Ok(Self {
            values,
            reconstruction_residual: 0.0,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Residual recorded by [`AntidiffusiveFluxes::compute`].
    pub fn reconstruction_residual(&self) -> f64 {
        self.reconstruction_residual
    }

    /// `max_i |Σ_j A_ij − m_i d_i|`, relative to the largest of `m_i |d_i|` and `|A_ij|`.
    pub fn reconstruction_error(&self, ops: &FeOperators, w_high_minus_low: &[f64]) -> Result<f64> {
        check_len(ops.num_dofs(), w_high_minus_low.len())?;
        let mut err: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for (i, d) in w_high_minus_low.iter().enumerate() {
            let sum: f64 = self.values[ops.mass.row_range(i)].iter().sum();
            let target = ops.lumped_mass[i] * d;
            err = err.max((sum - target).abs());
            scale = scale.max(target.abs());
            for &a in &self.values[ops.mass.row_range(i)] {
                scale = scale.max(a.abs());
            }
        }
        Ok(if scale == 0.0 { err } else { err / scale })
    }

    /// Row sums `Σ_j A_ij`.
    pub fn row_sums(&self, ops: &FeOperators) -> Vec<f64> {
        (0..ops.num_dofs())
            .map(|i| self.values[ops.mass.row_range(i)].iter().sum())
            .collect()
    }
}

/// Zalesak limiting of `W^L + (1/m) Σ_j A_ij` against the local bounds of `u`.
pub fn limit(
    u: &[f64],
    w_low: &[f64],
    a: &AntidiffusiveFluxes,
    ops: &FeOperators,
) -> Result<Vec<f64>> {
    let (lo, hi) = ops.local_bounds(u);
    limit_with_bounds(w_low, a, &lo, &hi, ops)
}

/// Scale `κ` of the cap on bound relaxation, `κ (m_i / |D|)^p ‖U‖_∞`.
pub const RELAXATION_SCALE: f64 = 5.5e-3;
/// Exponent `p` of the same cap.
pub const RELAXATION_EXPONENT: f64 = 1.0;

/// Stencil bounds of `u` widened at smooth extrema.
///
/// The widening is the graph-Laplacian curvature
/// `|Σ_{j∈I(i)} (U_i − U_j)| / (|I(i)| − 1)`, which is `O(h²)` where `u` is
/// smooth, capped at `κ (m_i / |D|)^p ‖U‖_∞`.
pub fn relaxed_bounds(u: &[f64], ops: &FeOperators) -> (Vec<f64>, Vec<f64>) {
    let (mut lo, mut hi) = ops.local_bounds(u);
    let length: f64 = ops.lumped_mass.iter().sum();
    let sup = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..u.len() {
        let st = ops.stencil(i);
        if st.len() < 2 {
            continue;
        }
        let lap: f64 = st.iter().map(|&j| u[i] - u[j]).sum::<f64>().abs() / (st.len() - 1) as f64;
        let cap = RELAXATION_SCALE * pow(ops.lumped_mass[i] / length, RELAXATION_EXPONENT) * sup;
        let widen = lap.min(cap);
        lo[i] -= widen;
        hi[i] += widen;
    }
    (lo, hi)
}

/// Slack allowed on bounds, relative to `1 + max|U|`.
pub const BOUNDS_SLACK: f64 = 1e-12;

/// Zalesak limiting against explicit per-DOF bounds.
pub fn limit_with_bounds(
    w_low: &[f64],
    a: &AntidiffusiveFluxes,
    lo: &[f64],
    hi: &[f64],
    ops: &FeOperators,
) -> Result<Vec<f64>> {
    let n = ops.num_dofs();
    check_len(n, w_low.len())?;
    check_len(n, lo.len())?;
    check_len(n, hi.len())?;
    let scale = 1.0 + lo.iter().chain(hi).fold(0.0f64, |m, v| m.max(v.abs()));
    let slack = BOUNDS_SLACK * scale;
    for i in 0..n {
        if w_low[i] < lo[i] - slack || w_low[i] > hi[i] + slack {
            return Err(Error::BoundsViolation {
                index: i,
                value: w_low[i],
                lower: lo[i],
                upper: hi[i],
            });
        }
    }
    if a.is_zero() {
        return Ok(w_low.to_vec());
    }
    let vals = &a.values;
    let cols = ops.mass.col_indices();
    let mut r_plus = vec![1.0; n];
    let mut r_minus = vec![1.0; n];
    for i in 0..n {
        let (mut p_plus, mut p_minus) = (0.0, 0.0);
        for p in ops.mass.row_range(i) {
            let v = vals[p];
            if v > 0.0 {
                p_plus += v;
            } else {
                p_minus += v;
            }
        }
        let m = ops.lumped_mass[i];
        // Clamp at zero so rounding in W^L never flips the admissible direction.
        let q_plus = (m * (hi[i] - w_low[i])).max(0.0);
        let q_minus = (m * (lo[i] - w_low[i])).min(0.0);
        if p_plus > 0.0 {
            r_plus[i] = (q_plus / p_plus).min(1.0);
        }
        if p_minus < 0.0 {
            r_minus[i] = (q_minus / p_minus).min(1.0);
        }
    }
    let mut w = w_low.to_vec();
    for i in 0..n {
        let mut acc = 0.0;
        for p in ops.mass.row_range(i) {
            let j = cols[p];
            let v = vals[p];
            let l = if v > 0.0 {
                r_plus[i].min(r_minus[j])
            } else {
                r_minus[i].min(r_plus[j])
            };
            acc += l * v;
        }
        w[i] += acc / ops.lumped_mass[i];
    }
    Ok(w)
}

/// Unlimited correction `W^L + (1/m) Σ_j A_ij`.
pub fn apply_unlimited(w_low: &[f64], a: &AntidiffusiveFluxes, ops: &FeOperators) -> Vec<f64> {
    let sums = a.row_sums(ops);
    w_low
        .iter()
        .zip(&sums)
        .zip(&ops.lumped_mass)
        .map(|((w, s), m)| w + s / m)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fe::{interpolate, Mesh};
    use crate::flux::FluxModel;
    use crate::hyperbolic::{
        compute_graph_viscosity, flux_map_high, flux_map_low, high_order_increment, lumped_update,
        tau_star, HighOrderViscosityPolicy,
    };
    use crate::math::sech;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    struct Stage {
        u: Vec<f64>,
        w_low: Vec<f64>,
        w_high: Vec<f64>,
        a: AntidiffusiveFluxes,
    }

    fn euler_stage(u: &[f64], flux: &FluxModel, ops: &FeOperators, cfl: f64) -> Stage {
        let d = compute_graph_viscosity(u, flux, ops).unwrap();
        let tau = cfl * tau_star(&d, ops);
        let fl = flux_map_low(u, flux, &d, ops).unwrap();
        let fh = flux_map_high(u, flux, &d, &HighOrderViscosityPolicy::Zero, ops).unwrap();
        let w_low = lumped_update(u, &fl, tau, ops);
        let mut dh = vec![0.0; u.len()];
        high_order_increment(&[&fh], &[1.0], tau, ops, &mut dh).unwrap();
        let w_high: Vec<f64> = u.iter().zip(&dh).map(|(a, b)| a + b).collect();
        let diff: Vec<f64> = w_high.iter().zip(&w_low).map(|(a, b)| a - b).collect();
        let el = EdgeFlux::new(u, flux, Some(d));
        let eh = EdgeFlux::new(u, flux, None);
        let a = AntidiffusiveFluxes::compute(ops, &dh, (&el, tau), &[(&eh, tau)], &diff).unwrap();
        Stage {
            u: u.to_vec(),
            w_low,
            w_high,
            a,
        }
    }

    fn ops(cells: usize, k: usize) -> (Mesh, FeOperators) {
        let mesh = Mesh::new(-10.0, 10.0, cells, k).unwrap();
        let o = FeOperators::assemble(&mesh).unwrap();
        (mesh, o)
    }

    #[test]
    fn reconstruction_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (_, o) = ops(24, 1);
        let u: Vec<f64> = (0..o.num_dofs())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let s = euler_stage(&u, &FluxModel::kdv6(), &o, 1.0);
        let dense = s.a.values();
        for i in 0..u.len() {
            let row: f64 = o.mass.row_range(i).map(|p| dense[p]).sum();
            let target = o.lumped_mass[i] * (s.w_high[i] - s.w_low[i]);
            assert!((row - target).abs() <= 1e-11 * (1.0 + target.abs()));
        }
        assert!(s.a.reconstruction_residual() <= 1e-11);
    }

    #[test]
    fn relaxation_contains_strict_bounds_and_respects_cap() {
        let (mesh, o) = ops(64, 2);
        let u: Vec<f64> = mesh
            .dof_coords()
            .iter()
            .map(|&x| 2.0 / x.cosh().powi(2))
            .collect();
        let (lo, hi) = o.local_bounds(&u);
        let (rlo, rhi) = relaxed_bounds(&u, &o);
        let len: f64 = o.lumped_mass.iter().sum();
        let mut widened = 0;
        for i in 0..u.len() {
            let cap = RELAXATION_SCALE * (o.lumped_mass[i] / len).powf(RELAXATION_EXPONENT) * 2.0;
            assert!(rlo[i] <= lo[i] && rhi[i] >= hi[i]);
            assert!(lo[i] - rlo[i] <= cap * (1.0 + 1e-12));
            assert!((lo[i] - rlo[i] - (rhi[i] - hi[i])).abs() < 1e-15);
            widened += usize::from(rhi[i] > hi[i]);
        }
        assert!(widened > 0);
        // Constant data has no curvature, so nothing widens.
        let lin = vec![0.3; o.num_dofs()];
        assert_eq!(relaxed_bounds(&lin, &o), o.local_bounds(&lin));
    }

    #[test]
    fn constant_state_gives_no_correction() {
        let (_, o) = ops(12, 1);
        let c = vec![0.5; o.num_dofs()];
        let s = euler_stage(&c, &FluxModel::kdv6(), &o, 1.0);
        assert!(s.a.values().iter().all(|v| v.abs() < 1e-14));
        let a = AntidiffusiveFluxes::from_values(&o, vec![0.0; o.mass.nnz()]).unwrap();
        assert_eq!(limit(&c, &c, &a, &o).unwrap(), c);
    }

    #[test]
    fn smooth_in_bounds_correction_is_accepted() {
        // Corrections with P± within Q± are applied in full.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (_, o) = ops(16, 1);
        let n = o.num_dofs();
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let w_low = u.clone();
        let mut vals = vec![0.0; o.mass.nnz()];
        for v in vals.iter_mut() {
            *v = rng.gen_range(-1.0..1.0) * 1e-6;
        }
        let a = AntidiffusiveFluxes::from_values(&o, vals).unwrap();
        let (lo, hi) = o.local_bounds(&u);
        let mut safe = true;
        for i in 0..n {
            let r = o.mass.row_range(i);
            let pp: f64 = a.values()[r.clone()].iter().filter(|v| **v > 0.0).sum();
            let pm: f64 = a.values()[r].iter().filter(|v| **v < 0.0).sum();
            safe &= pp <= o.lumped_mass[i] * (hi[i] - w_low[i])
                && pm >= o.lumped_mass[i] * (lo[i] - w_low[i]);
        }
        let w = limit(&u, &w_low, &a, &o).unwrap();
        if safe {
            let full = apply_unlimited(&w_low, &a, &o);
            for i in 0..n {
                assert!((w[i] - full[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn step_profile_with_burgers() {
        let (mesh, o) = ops(64, 2);
        let u = interpolate(|x| if x.abs() < 3.0 { 1.0 } else { -0.5 }, &mesh)
            .unwrap()
            .into_inner();
        let flux = FluxModel::burgers();
        let s = euler_stage(&u, &flux, &o, 1.0);
        let w = limit(&s.u, &s.w_low, &s.a, &o).unwrap();
        let (lo, hi) = o.local_bounds(&u);
        for i in 0..u.len() {
            assert!(w[i] >= lo[i] - 2e-12 && w[i] <= hi[i] + 2e-12);
        }
        let (m0, m1) = (o.total_mass(&u), o.total_mass(&w));
        assert!(
            (m0 - m1).abs()
                <= 1e-12
                    * o.lumped_mass
                        .iter()
                        .zip(&u)
                        .map(|(m, v)| m * v.abs())
                        .sum::<f64>()
        );
    }

    #[test]
    fn soliton_limiting_is_close_to_high_order() {
        let (mesh, o) = ops(256, 1);
        let u = interpolate(|x| 2.0 * sech(x) * sech(x), &mesh)
            .unwrap()
            .into_inner();
        let s = euler_stage(&u, &FluxModel::kdv6(), &o, 0.5);
        let w = limit(&s.u, &s.w_low, &s.a, &o).unwrap();
        let dist_h: f64 = w
            .iter()
            .zip(&s.w_high)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let dist_l: f64 = s
            .w_high
            .iter()
            .zip(&s.w_low)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(dist_h <= dist_l);
    }

    #[test]
    fn low_order_state_outside_bounds_is_rejected() {
        let (_, o) = ops(8, 1);
        let u = vec![0.0; 8];
        let mut wl = u.clone();
        wl[2] = 1.0;
        let a = AntidiffusiveFluxes::from_values(&o, vec![0.0; o.mass.nnz()]).unwrap();
        assert!(matches!(
            limit(&u, &wl, &a, &o),
            Err(Error::BoundsViolation { index: 2, .. })
        ));
    }

    #[test]
    fn inconsistent_fluxes_are_fatal() {
        let (_, o) = ops(8, 1);
        let u: Vec<f64> = (0..8).map(|i| i as f64 * 0.1).collect();
        let flux = FluxModel::burgers();
        let el = EdgeFlux::new(&u, &flux, None);
        let wrong = vec![1.0; 8];
        let err = AntidiffusiveFluxes::compute(&o, &[0.0; 8], (&el, 0.1), &[], &wrong).unwrap_err();
        assert!(matches!(err, Error::InconsistentFluxes { .. }));
    }
}
