//! Implicit dispersive update with the auxiliary variable `z ≈ ∂x u`.
//!
//! For a step `τ`, find `(u, z)` with, for all test functions `v`, `r`,
//!
//! ```text
//! ((u − w)/τ, v) − ε(∂x z, ∂x v) − εc(z − ∂x u, ∂x v) = 0,
//! (z − ∂x u, c r − ∂x r)                               = 0.
//! ```
//!
//! In matrix form, with unknowns ordered `U` then `Z`:
//!
//! ```text
//! [ M + τεcK    −τε(K + cCᵀ) ] [U]   [M W]
//! [ K − cC       cM − Cᵀ     ] [Z] = [ 0 ]
//! ```
//!
//! The lumped variant replaces the `M` of the first row (both sides) by
//! `diag(m)`. The operator `G` is `G(U) = εcKU − εKZ − εcCᵀZ` with `Z`
//! from the second row.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::fe::basis::GaussRule;
use crate::fe::{l2_norm, weighted_l2_norm, FeOperators, Mesh};
use crate::sparse::{norm_inf, SparseLu, SparseMatrix};

/// Mass used for the time derivative of the dispersive update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MassMode {
    Lumped,
    #[default]
    Consistent,
}

impl MassMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Lumped => "lumped",
            Self::Consistent => "consistent",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "lumped" => Ok(Self::Lumped),
            "consistent" => Ok(Self::Consistent),
            other => Err(Error::UnknownName(other.into())),
        }
    }
}

/// Normwise backward error accepted from a direct solve.
const SOLVE_TOLERANCE: f64 = 1e-10;

/// `‖Ax − b‖∞ / (‖A‖∞ ‖x‖∞ + ‖b‖∞)` against [`SOLVE_TOLERANCE`].
fn check_residual(a: &SparseMatrix, a_norm: f64, x: &[f64], b: &[f64]) -> Result<()> {
    let ax = a.matvec(x)?;
    let res = ax
        .iter()
        .zip(b)
        .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
    let scale = a_norm * norm_inf(x) + norm_inf(b);
    if scale > 0.0 && res > SOLVE_TOLERANCE * scale {
        return Err(Error::ResidualTooLarge {
            relative_residual: res / scale,
            tolerance: SOLVE_TOLERANCE,
        });
    }
    Ok(())
}

fn check_params(epsilon: f64, c_stab: f64) -> Result<()> {
    if !epsilon.is_finite() || epsilon == 0.0 {
        return Err(Error::InvalidInput(alloc::format!(
            "dispersion coefficient {epsilon} must be finite and nonzero"
        )));
    }
    if !(c_stab.is_finite() && c_stab > 0.0) {
        return Err(Error::InvalidInput(alloc::format!(
            "stabilization constant {c_stab} must be positive"
        )));
    }
    Ok(())
}

/// Column order interleaving `U_i` and `Z_i`, which keeps the factors banded.
fn interleaved(n: usize) -> Vec<usize> {
    (0..n).flat_map(|i| [i, n + i]).collect()
}

/// `M x` or `diag(m) x`.
pub fn apply_mass(ops: &FeOperators, mode: MassMode, x: &[f64]) -> Result<Vec<f64>> {
    match mode {
        MassMode::Consistent => ops.mass.matvec(x),
        MassMode::Lumped => {
            check_len(ops.num_dofs(), x.len())?;
            Ok(x.iter().zip(&ops.lumped_mass).map(|(a, m)| a * m).collect())
        }
    }
}

/// Assembled and factored coupled `(u, z)` system for one `(τ, ε, c, mode)`.
#[derive(Debug, Clone)]
pub struct DispersiveSystem {
    tau: f64,
    epsilon: f64,
    c_stab: f64,
    mass_mode: MassMode,
    matrix: SparseMatrix,
    matrix_norm: f64,
    lu: SparseLu,
}

impl DispersiveSystem {
    pub fn assemble(
        ops: &FeOperators,
        tau: f64,
        epsilon: f64,
        c_stab: f64,
        mass_mode: MassMode,
    ) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidInput(alloc::format!(
                "time step {tau} must be positive"
            )));
        }
        check_params(epsilon, c_stab)?;
        let n = ops.num_dofs();
        let cols = ops.mass.col_indices();
        let (mv, cv, kv) = (
            ops.mass.values(),
            ops.deriv.values(),
            ops.stiffness.values(),
        );
        let tpos = &ops.transpose_pos;
        let te = tau * epsilon;
        let mut trip = Vec::with_capacity(4 * mv.len() + n);
        for i in 0..n {
            if mass_mode == MassMode::Lumped {
                trip.push((i, i, ops.lumped_mass[i]));
            }
            for p in ops.mass.row_range(i) {
                let j = cols[p];
                let ct = cv[tpos[p]];
                let uu = te * c_stab * kv[p]
                    + if mass_mode == MassMode::Consistent {
                        mv[p]
                    } else {
                        0.0
                    };
                trip.push((i, j, uu));
                trip.push((i, n + j, -te * (kv[p] + c_stab * ct)));
                trip.push((n + i, j, kv[p] - c_stab * cv[p]));
                trip.push((n + i, n + j, c_stab * mv[p] - ct));
            }
        }
        let matrix = SparseMatrix::from_triplets(2 * n, 2 * n, &trip)?;
        let lu = SparseLu::factor_ordered(&matrix, &interleaved(n))?;
        Ok(Self {
            tau,
            epsilon,
            c_stab,
            mass_mode,
            matrix_norm: matrix.norm_inf(),
            matrix,
            lu,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn c_stab(&self) -> f64 {
        self.c_stab
    }

    pub fn mass_mode(&self) -> MassMode {
        self.mass_mode
    }

    /// The `2I × 2I` block matrix (rows scaled by `τ` in the first block).
    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    /// Whether this system was built for the given parameters.
    pub fn matches(&self, tau: f64, epsilon: f64, c_stab: f64, mass_mode: MassMode) -> bool {
        self.tau == tau
            && self.epsilon == epsilon
            && self.c_stab == c_stab
            && self.mass_mode == mass_mode
    }

    /// Solves with right-hand side `(rhs_u, 0)`; returns `(U, Z)`.
    pub fn solve(&self, rhs_u: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.matrix.rows() / 2;
        check_len(n, rhs_u.len())?;
        let mut rhs = vec![0.0; 2 * n];
        rhs[..n].copy_from_slice(rhs_u);
        let mut x = self.lu.solve(&rhs)?;
        // One step of refinement keeps the mass error per solve near roundoff.
        let ax = self.matrix.matvec(&x)?;
        let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        for (xi, di) in x.iter_mut().zip(self.lu.solve(&r)?) {
            *xi += di;
        }
        check_residual(&self.matrix, self.matrix_norm, &x, &rhs)?;
        let z = x.split_off(n);
        Ok((x, z))
    }

    /// One dispersive update `w ↦ (u, z)`.
    pub fn update(&self, ops: &FeOperators, w: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let rhs = apply_mass(ops, self.mass_mode, w)?;
        self.solve(&rhs)
    }
}

/// Convenience wrapper: assemble for `(τ, ε, c, mode)` and update `w`.
pub fn dispersive_update(
    ops: &FeOperators,
    w: &[f64],
    tau: f64,
    epsilon: f64,
    c_stab: f64,
    mass_mode: MassMode,
) -> Result<(Vec<f64>, Vec<f64>)> {
    DispersiveSystem::assemble(ops, tau, epsilon, c_stab, mass_mode)?.update(ops, w)
}

/// The operator `G`, with the `z`-subsystem `(cM − Cᵀ) Z = (cC − K) U` factored once.
#[derive(Debug, Clone)]
pub struct GOperator {
    epsilon: f64,
    c_stab: f64,
    z_lu: SparseLu,
    z_rhs: SparseMatrix,
    z_matrix: SparseMatrix,
    z_norm: f64,
}

impl GOperator {
    pub fn new(ops: &FeOperators, epsilon: f64, c_stab: f64) -> Result<Self> {
        check_params(epsilon, c_stab)?;
        let (mv, cv, kv) = (
            ops.mass.values(),
            ops.deriv.values(),
            ops.stiffness.values(),
        );
        let z_vals: Vec<f64> = (0..mv.len())
            .map(|p| c_stab * mv[p] - cv[ops.transpose_pos[p]])
            .collect();
        let rhs_vals: Vec<f64> = (0..mv.len()).map(|p| c_stab * cv[p] - kv[p]).collect();
        let z_matrix = ops.mass.with_values(z_vals)?;
        let z_rhs = ops.mass.with_values(rhs_vals)?;
        let z_lu = SparseLu::factor(&z_matrix)?;
        Ok(Self {
            epsilon,
            c_stab,
            z_lu,
            z_rhs,
            z_norm: z_matrix.norm_inf(),
            z_matrix,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn c_stab(&self) -> f64 {
        self.c_stab
    }

    /// The auxiliary variable `z_h(u_h)`.
    pub fn solve_z(&self, u: &[f64]) -> Result<Vec<f64>> {
        let rhs = self.z_rhs.matvec(u)?;
        let z = self.z_lu.solve(&rhs)?;
        check_residual(&self.z_matrix, self.z_norm, &z, &rhs)?;
        Ok(z)
    }

    /// `G(U)` from a given `Z`: `εcKU − εKZ − εcCᵀZ`.
    pub fn apply_with_z(&self, ops: &FeOperators, u: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        let n = ops.num_dofs();
        check_len(n, u.len())?;
        check_len(n, z.len())?;
        let (e, c) = (self.epsilon, self.c_stab);
        let cols = ops.mass.col_indices();
        let (cv, kv) = (ops.deriv.values(), ops.stiffness.values());
        let mut g = vec![0.0; n];
        for (i, gi) in g.iter_mut().enumerate() {
            let mut acc = 0.0;
            for p in ops.mass.row_range(i) {
                let j = cols[p];
                acc += kv[p] * (c * u[j] - z[j]) - c * cv[ops.transpose_pos[p]] * z[j];
            }
            *gi = e * acc;
        }
        Ok(g)
    }

    /// `G(U)`; solves for `z` first.
    pub fn apply(&self, ops: &FeOperators, u: &[f64]) -> Result<Vec<f64>> {
        let z = self.solve_z(u)?;
        self.apply_with_z(ops, u, &z)
    }
}

/// `(G(U), φ_i)` for every `i`.
pub fn apply_g(ops: &FeOperators, u: &[f64], epsilon: f64, c_stab: f64) -> Result<Vec<f64>> {
    GOperator::new(ops, epsilon, c_stab)?.apply(ops, u)
}

/// Solves `M U + τ_d G(U) = M W − τ Σ_k δ_k G(U^k)` for one IMEX stage,
/// where `τ_d = τ a_ll` is the step the system was assembled with. With
/// `system = None` (`a_ll = 0`) this is a mass solve.
///
/// Returns `(U, G(U))`; `G(U)` is `None` when no coupled system was solved.
pub fn stage_dispersive_solve(
    ops: &FeOperators,
    w: &[f64],
    g_history: &[&[f64]],
    deltas: &[f64],
    tau: f64,
    system: Option<(&DispersiveSystem, &GOperator)>,
    mass_mode: MassMode,
    mass_lu: &SparseLu,
) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let n = ops.num_dofs();
    check_len(n, w.len())?;
    check_len(g_history.len(), deltas.len())?;
    let mut rhs = apply_mass(ops, mass_mode, w)?;
    for (g, &d) in g_history.iter().zip(deltas) {
        check_len(n, g.len())?;
        if d != 0.0 {
            for (r, gv) in rhs.iter_mut().zip(g.iter()) {
                *r -= tau * d * gv;
            }
        }
    }
    match system {
        Some((sys, gop)) => {
            if sys.mass_mode() != mass_mode {
                return Err(Error::InvalidInput(
                    "stage system assembled with a different mass mode".into(),
                ));
            }
            let (u, z) = sys.solve(&rhs)?;
            let g = gop.apply_with_z(ops, &u, &z)?;
            Ok((u, Some(g)))
        }
        None => {
            let u = match mass_mode {
                MassMode::Consistent => mass_lu.solve(&rhs)?,
                MassMode::Lumped => rhs
                    .iter()
                    .zip(&ops.lumped_mass)
                    .map(|(r, m)| r / m)
                    .collect(),
            };
            Ok((u, None))
        }
    }
}

/// Terms of the energy identity of one update `W → (U, Z)`:
/// `‖U‖² + ‖U − W‖² + 2τεc‖Z − ∂x U‖²_{L²} = ‖W‖²`, where `‖·‖` is the
/// `L²` norm for consistent mass and the weighted `ℓ²` norm for lumped mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBalance {
    pub new: f64,
    pub increment: f64,
    pub dissipation: f64,
    pub old: f64,
}

impl EnergyBalance {
    /// `|new + increment + dissipation − old| / old`; absolute when `old = 0`.
    pub fn relative_residual(&self) -> f64 {
        let r = (self.new + self.increment + self.dissipation - self.old).abs();
        if self.old > 0.0 {
            r / self.old
        } else {
            r
        }
    }
}

/// Evaluates every term of the energy identity, the last one by exact
/// Gauss quadrature.
#[allow(clippy::too_many_arguments)]
pub fn energy_balance(
    mesh: &Mesh,
    ops: &FeOperators,
    w: &[f64],
    u: &[f64],
    z: &[f64],
    tau: f64,
    epsilon: f64,
    c_stab: f64,
    mode: MassMode,
) -> Result<EnergyBalance> {
    let n = ops.num_dofs();
    check_len(n, w.len())?;
    check_len(n, u.len())?;
    check_len(n, z.len())?;
    let norm = |x: &[f64]| match mode {
        MassMode::Consistent => l2_norm(x, ops),
        MassMode::Lumped => weighted_l2_norm(x, ops),
    };
    let diff: Vec<f64> = u.iter().zip(w).map(|(a, b)| a - b).collect();
    let rule = GaussRule::new(mesh.degree() + 1);
    let mut zz = 0.0;
    for cell in 0..mesh.num_cells() {
        for (&xi, &wt) in rule.points.iter().zip(&rule.weights) {
            let r = mesh.evaluate_in_cell(z, cell, xi) - mesh.derivative_in_cell(u, cell, xi);
            zz += wt * mesh.h() * r * r;
        }
    }
    let sq = |v: f64| v * v;
    Ok(EnergyBalance {
        new: sq(norm(u)?),
        increment: sq(norm(&diff)?),
        dissipation: 2.0 * tau * epsilon * c_stab * zz,
        old: sq(norm(w)?),
    })
}
