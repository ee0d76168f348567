//! Explicit hyperbolic prediction: graph viscosity, the flux maps `F^L` and
//! `F^H`, the stable step `τ*`, and the low- and high-order updates.
//!
//! Sign convention: every update has the form `m_i W_i = m_i U_i − τ F_i(U)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::fe::FeOperators;
use crate::flux::FluxModel;
use crate::sparse::{cg_solve, CgOptions, CgStats};

/// Graph viscosity `d_ij` stored on the operator stencil (same positions as
/// [`FeOperators::mass`]). The diagonal holds `−Σ_{j≠i} d_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphViscosity {
    values: Vec<f64>,
}

impl GraphViscosity {
    /// Zero viscosity on the given stencil.
    pub fn zero(ops: &FeOperators) -> Self {
        Self {
            values: vec![0.0; ops.mass.nnz()],
        }
    }

    /// Entries aligned with `ops.mass.values()`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, ops: &FeOperators, i: usize, j: usize) -> f64 {
        ops.mass.position(i, j).map_or(0.0, |p| self.values[p])
    }

    /// `Σ_{j≠i} d_ij`.
    pub fn off_diagonal_sum(&self, ops: &FeOperators, i: usize) -> f64 {
        -self.get(ops, i, i)
    }
}

/// How the high-order flux `F^H` is stabilized.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum HighOrderViscosityPolicy {
    /// `d^H = 0`: plain Galerkin flux.
    #[default]
    Zero,
    /// `d^H_ij = d_ij max(ψ_i, ψ_j)` with `ψ_i ∈ [0, 1]`.
    Scaled(Vec<f64>),
}

impl HighOrderViscosityPolicy {
    pub fn scaled(psi: Vec<f64>) -> Result<Self> {
        if let Some(bad) = psi.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidInput(alloc::format!(
                "ψ value {bad} outside [0, 1]"
            )));
        }
        Ok(Self::Scaled(psi))
    }

    /// `d^H` for the given low-order viscosity, or `None` when it vanishes.
    pub fn high_order_viscosity(
        &self,
        d: &GraphViscosity,
        ops: &FeOperators,
    ) -> Result<Option<GraphViscosity>> {
        match self {
            Self::Zero => Ok(None),
            Self::Scaled(psi) => {
                check_len(ops.num_dofs(), psi.len())?;
                let mut values = vec![0.0; d.values.len()];
                let (cols, n) = (ops.mass.col_indices(), ops.num_dofs());
                for i in 0..n {
                    let mut diag_pos = usize::MAX;
                    let mut sum = 0.0;
                    for p in ops.mass.row_range(i) {
                        let j = cols[p];
                        if j == i {
                            diag_pos = p;
                        } else {
                            values[p] = d.values[p] * psi[i].max(psi[j]);
                            sum += values[p];
                        }
                    }
                    values[diag_pos] = -sum;
                }
                Ok(Some(GraphViscosity { values }))
            }
        }
    }
}

/// `d_ij = max(λ(U_i, U_j)|c_ij|, λ(U_j, U_i)|c_ji|)` on every stencil edge.
pub fn compute_graph_viscosity(
    u: &[f64],
    flux: &FluxModel,
    ops: &FeOperators,
) -> Result<GraphViscosity> {
    check_len(ops.num_dofs(), u.len())?;
    let n = u.len();
    let cols = ops.deriv.col_indices();
    let c = ops.deriv.values();
    let tpos = &ops.transpose_pos;
    let mut values = vec![0.0; c.len()];
    for i in 0..n {
        for p in ops.deriv.row_range(i) {
            let j = cols[p];
            if j <= i {
                continue;
            }
            let lij = flux.lambda_max(u[i], u[j])?;
            let lji = flux.lambda_max(u[j], u[i])?;
            let d = (lij * c[p].abs()).max(lji * c[tpos[p]].abs());
            values[p] = d;
            values[tpos[p]] = d;
        }
    }
    for i in 0..n {
        let mut diag_pos = usize::MAX;
        let mut sum = 0.0;
        for p in ops.deriv.row_range(i) {
            if cols[p] == i {
                diag_pos = p;
            } else {
                sum += values[p];
            }
        }
        values[diag_pos] = -sum;
    }
    Ok(GraphViscosity { values })
}

/// `τ* = min_i m_i / (4 Σ_{j≠i} d_ij)`; `+∞` when the viscosity vanishes.
pub fn tau_star(d: &GraphViscosity, ops: &FeOperators) -> f64 {
    let mut tau = f64::INFINITY;
    for (i, m) in ops.lumped_mass.iter().enumerate() {
        let s = d.off_diagonal_sum(ops, i);
        if s > 0.0 {
            tau = tau.min(m / (4.0 * s));
        }
    }
    tau
}

/// `(F(U))_i = Σ_j f(U_j) c_ij − d_ij (U_j − U_i)`; `d = None` gives the
/// Galerkin flux.
pub fn flux_map(
    u: &[f64],
    flux: &FluxModel,
    d: Option<&GraphViscosity>,
    ops: &FeOperators,
) -> Result<Vec<f64>> {
    check_len(ops.num_dofs(), u.len())?;
    let fu: Vec<f64> = u.iter().map(|&v| flux.eval(v)).collect();
    let cols = ops.deriv.col_indices();
    let c = ops.deriv.values();
    let mut out = vec![0.0; u.len()];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        let range = ops.deriv.row_range(i);
        match d {
            None => {
                for p in range {
                    acc += fu[cols[p]] * c[p];
                }
            }
            Some(d) => {
                for p in range {
                    let j = cols[p];
                    acc += fu[j] * c[p] - d.values[p] * (u[j] - u[i]);
                }
            }
        }
        *o = acc;
    }
    Ok(out)
}

/// Low-order flux `F^L`.
pub fn flux_map_low(
    u: &[f64],
    flux: &FluxModel,
    d: &GraphViscosity,
    ops: &FeOperators,
) -> Result<Vec<f64>> {
    flux_map(u, flux, Some(d), ops)
}

/// High-order flux `F^H` under the given viscosity policy.
pub fn flux_map_high(
    u: &[f64],
    flux: &FluxModel,
    d: &GraphViscosity,
    policy: &HighOrderViscosityPolicy,
    ops: &FeOperators,
) -> Result<Vec<f64>> {
    let dh = policy.high_order_viscosity(d, ops)?;
    flux_map(u, flux, dh.as_ref(), ops)
}

/// Edge decomposition of a flux map: `F_ij = c_ij f(U_j) − c_ji f(U_i) − d_ij (U_j − U_i)`
/// for `j ≠ i`. `F_ij = −F_ji` and `Σ_{j≠i} F_ij = (F(U))_i`.
#[derive(Debug, Clone)]
pub struct EdgeFlux {
    u: Vec<f64>,
    fu: Vec<f64>,
    d: Option<GraphViscosity>,
}

impl EdgeFlux {
    pub fn new(u: &[f64], flux: &FluxModel, d: Option<GraphViscosity>) -> Self {
        Self {
            u: u.to_vec(),
            fu: u.iter().map(|&v| flux.eval(v)).collect(),
            d,
        }
    }

    /// `F_ij` for the stored entry at position `p = (i, j)`.
    #[inline]
    pub fn at(&self, ops: &FeOperators, p: usize, i: usize, j: usize) -> f64 {
        let c = ops.deriv.values();
        let mut v = c[p] * self.fu[j] - c[ops.transpose_pos[p]] * self.fu[i];
        if let Some(d) = &self.d {
            v -= d.values[p] * (self.u[j] - self.u[i]);
        }
        v
    }
}

/// `W = U − (τ/m) F^L(U)`. Rejects `τ > τ*(U)` unless `allow_unstable`.
pub fn low_order_predict(
    u: &[f64],
    tau: f64,
    flux: &FluxModel,
    ops: &FeOperators,
    allow_unstable: bool,
) -> Result<Vec<f64>> {
    let d = compute_graph_viscosity(u, flux, ops)?;
    let ts = tau_star(&d, ops);
    if tau > ts && !allow_unstable {
        return Err(Error::CflViolation { tau, tau_star: ts });
    }
    let f = flux_map_low(u, flux, &d, ops)?;
    Ok(lumped_update(u, &f, tau, ops))
}

/// `U − (τ/m) F`.
pub fn lumped_update(u: &[f64], f: &[f64], tau: f64, ops: &FeOperators) -> Vec<f64> {
    u.iter()
        .zip(f)
        .zip(&ops.lumped_mass)
        .map(|((u, f), m)| u - tau * f / m)
        .collect()
}

/// Consistent-mass increment `ΔH` solving `M ΔH = −τ Σ_k δ_k F^H(U^k)`.
/// `delta` is warm-started and overwritten.
pub fn high_order_increment(
    fluxes: &[&[f64]],
    deltas: &[f64],
    tau: f64,
    ops: &FeOperators,
    delta: &mut [f64],
) -> Result<CgStats> {
    let n = ops.num_dofs();
    check_len(n, delta.len())?;
    check_len(fluxes.len(), deltas.len())?;
    let mut rhs = vec![0.0; n];
    for (f, &a) in fluxes.iter().zip(deltas) {
        check_len(n, f.len())?;
        if a != 0.0 {
            for (r, fv) in rhs.iter_mut().zip(f.iter()) {
                *r -= tau * a * fv;
            }
        }
    }
    cg_solve(&ops.mass, &rhs, delta, CgOptions::default())
}

/// `M W^H = M U − τ Σ_k δ_k F^H(U^k)`.
pub fn high_order_predict(
    u: &[f64],
    fluxes: &[&[f64]],
    deltas: &[f64],
    tau: f64,
    ops: &FeOperators,
) -> Result<Vec<f64>> {
    check_len(ops.num_dofs(), u.len())?;
    let mut delta = vec![0.0; u.len()];
    high_order_increment(fluxes, deltas, tau, ops, &mut delta)?;
    Ok(u.iter().zip(&delta).map(|(a, b)| a + b).collect())
}

/// Row residuals of the discrete entropy inequality for `η(u) = u²/2`:
///
/// `m_i/τ (η(W_i) − η(U_i)) + Σ_j q(U_j) c_ij − Σ_j d_ij (η(U_j) − η(U_i))`,
///
/// which are `≤ 0` for the low-order update under the CFL condition.
pub fn entropy_residuals(
    u: &[f64],
    w: &[f64],
    tau: f64,
    flux: &FluxModel,
    d: &GraphViscosity,
    ops: &FeOperators,
) -> Result<Vec<f64>> {
    check_len(ops.num_dofs(), u.len())?;
    check_len(u.len(), w.len())?;
    let eta = |v: f64| 0.5 * v * v;
    let cols = ops.deriv.col_indices();
    let c = ops.deriv.values();
    Ok((0..u.len())
        .map(|i| {
            let mut r = ops.lumped_mass[i] / tau * (eta(w[i]) - eta(u[i]));
            for p in ops.deriv.row_range(i) {
                let j = cols[p];
                r += flux.entropy_flux(u[j]) * c[p] - d.values[p] * (eta(u[j]) - eta(u[i]));
            }
            r
        })
        .collect())
}
