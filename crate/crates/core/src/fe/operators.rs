use alloc::vec;
use alloc::vec::Vec;

use super::basis::GaussRule;
use super::mesh::Mesh;
use crate::error::Result;
use crate::sparse::SparseMatrix;

/// Mesh-dependent operators shared by every stage of the solver.
///
/// `mass`, `deriv` and `stiffness` share one sparsity pattern, the stencil
/// `I(i) = { j : φ_i φ_j ≢ 0 }`.
#[derive(Debug, Clone)]
pub struct FeOperators {
    /// `m_i = ∫ φ_i`.
    pub lumped_mass: Vec<f64>,
    /// `M_ij = ∫ φ_i φ_j`.
    pub mass: SparseMatrix,
    /// `C_ij = ∫ φ_i ∂x φ_j`.
    pub deriv: SparseMatrix,
    /// `K_ij = ∫ ∂x φ_i ∂x φ_j`.
    pub stiffness: SparseMatrix,
    /// Storage position of `(j, i)` for every stored `(i, j)`.
    pub transpose_pos: Vec<usize>,
}

impl FeOperators {
    /// Assembles all operators with a `(k + 1)`-point Gauss rule, exact for
    /// every integrand involved.
    pub fn assemble(mesh: &Mesh) -> Result<Self> {
        let k = mesh.degree();
        let nsh = k + 1;
        let h = mesh.h();
        let basis = mesh.basis();
        let rule = GaussRule::new(k + 1);

        let mut m_loc = vec![0.0; nsh];
        let mut mass_loc = vec![vec![0.0; nsh]; nsh];
        let mut deriv_loc = vec![vec![0.0; nsh]; nsh];
        let mut stiff_loc = vec![vec![0.0; nsh]; nsh];
        for (&xi, &w) in rule.points.iter().zip(&rule.weights) {
            let phi: Vec<f64> = (0..nsh).map(|a| basis.value(a, xi)).collect();
            let dphi: Vec<f64> = (0..nsh).map(|a| basis.derivative(a, xi)).collect();
            for a in 0..nsh {
                m_loc[a] += w * h * phi[a];
                for b in 0..nsh {
                    deriv_loc[a][b] += w * phi[a] * dphi[b];
                }
                for b in a..nsh {
                    mass_loc[a][b] += w * h * (phi[a] * phi[b]);
                    stiff_loc[a][b] += w * (dphi[a] * dphi[b]) / h;
                }
            }
        }

        for a in 0..nsh {
            for b in 0..a {
                mass_loc[a][b] = mass_loc[b][a];
                stiff_loc[a][b] = stiff_loc[b][a];
            }
        }

        let n = mesh.num_dofs();
        let mut lumped_mass = vec![0.0; n];
        let cap = mesh.num_cells() * nsh * nsh;
        let (mut tm, mut tc, mut tk) = (
            Vec::with_capacity(cap),
            Vec::with_capacity(cap),
            Vec::with_capacity(cap),
        );
        for cell in 0..mesh.num_cells() {
            let dofs = mesh.cell_dofs(cell);
            for a in 0..nsh {
                lumped_mass[dofs[a]] += m_loc[a];
                for b in 0..nsh {
                    tm.push((dofs[a], dofs[b], mass_loc[a][b]));
                    tc.push((dofs[a], dofs[b], deriv_loc[a][b]));
                    tk.push((dofs[a], dofs[b], stiff_loc[a][b]));
                }
            }
        }
        let mass = SparseMatrix::from_triplets(n, n, &tm)?;
        let deriv = SparseMatrix::from_triplets(n, n, &tc)?;
        let stiffness = SparseMatrix::from_triplets(n, n, &tk)?;
        let transpose_pos = mass.transpose_positions()?;
        Ok(Self {
            lumped_mass,
            mass,
            deriv,
            stiffness,
            transpose_pos,
        })
    }

    pub fn num_dofs(&self) -> usize {
        self.lumped_mass.len()
    }

    /// Stencil `I(i)`, including `i` itself.
    pub fn stencil(&self, i: usize) -> &[usize] {
        &self.mass.col_indices()[self.mass.row_range(i)]
    }

    /// `Σ_i m_i U_i = ∫ u_h`.
    pub fn total_mass(&self, u: &[f64]) -> f64 {
        self.lumped_mass.iter().zip(u).map(|(m, v)| m * v).sum()
    }

    /// Local bounds `(min_{j∈I(i)} U_j, max_{j∈I(i)} U_j)` for every `i`.
    pub fn local_bounds(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.num_dofs();
        let mut lo = vec![0.0; n];
        let mut hi = vec![0.0; n];
        for i in 0..n {
            let (mut a, mut b) = (f64::INFINITY, f64::NEG_INFINITY);
            for &j in self.stencil(i) {
                a = a.min(u[j]);
                b = b.max(u[j]);
            }
            lo[i] = a;
            hi[i] = b;
        }
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ops(a: f64, b: f64, cells: usize, k: usize) -> (Mesh, FeOperators) {
        let mesh = Mesh::new(a, b, cells, k).unwrap();
        let ops = FeOperators::assemble(&mesh).unwrap();
        (mesh, ops)
    }

    #[test]
    fn p1_hat_function_integrals() {
        // h = 0.5: m_i = h, C_{i,i±1} = ±1/2, M_ii = 2h/3, M_{i,i±1} = h/6
        let (_, o) = ops(0.0, 2.0, 4, 1);
        let h = 0.5;
        for i in 0..4 {
            let (l, r) = ((i + 3) % 4, (i + 1) % 4);
            assert!((o.lumped_mass[i] - h).abs() < 1e-15);
            assert!((o.deriv.get(i, r) - 0.5).abs() < 1e-15);
            assert!((o.deriv.get(i, l) + 0.5).abs() < 1e-15);
            assert!(o.deriv.get(i, i).abs() < 1e-15);
            assert!((o.mass.get(i, i) - 2.0 * h / 3.0).abs() < 1e-15);
            assert!((o.mass.get(i, r) - h / 6.0).abs() < 1e-15);
            assert!((o.mass.get(i, l) - h / 6.0).abs() < 1e-15);
            assert!((o.stiffness.get(i, i) - 2.0 / h).abs() < 1e-14);
            assert!((o.stiffness.get(i, r) + 1.0 / h).abs() < 1e-14);
        }
    }

    #[test]
    fn p2_lumped_masses_are_positive() {
        let (m, o) = ops(0.0, 3.0, 6, 2);
        let h = m.h();
        assert!((o.lumped_mass[0] - h / 3.0).abs() < 1e-14); // two vertex halves of h/6
        assert!((o.lumped_mass[1] - 2.0 * h / 3.0).abs() < 1e-14);
    }

    #[test]
    fn partition_of_unity_and_skew_symmetry() {
        for k in 1..=3 {
            let (m, o) = ops(-1.0, 2.5, 9, k);
            let cmax = o.deriv.max_abs();
            for (i, s) in o.deriv.row_sums().iter().enumerate() {
                assert!(s.abs() <= 1e-14 * cmax, "k={k} row {i}: {s}");
            }
            for (i, s) in o.mass.row_sums().iter().enumerate() {
                assert!((s - o.lumped_mass[i]).abs() <= 1e-14 * o.lumped_mass[i]);
            }
            let total: f64 = o.lumped_mass.iter().sum();
            assert!((total - m.length()).abs() <= 1e-13 * m.length());
            for i in 0..m.num_dofs() {
                for &j in o.stencil(i) {
                    assert!((o.deriv.get(i, j) + o.deriv.get(j, i)).abs() <= 1e-14 * cmax);
                    assert_eq!(o.mass.get(i, j), o.mass.get(j, i));
                    assert!(o.stencil(j).contains(&i));
                }
            }
            let k1 = o.stiffness.matvec(&vec![1.0; m.num_dofs()]).unwrap();
            assert!(k1.iter().all(|v| v.abs() <= 1e-13 * o.stiffness.max_abs()));
        }
    }

    #[test]
    fn stencil_sizes() {
        let (_, o) = ops(0.0, 1.0, 5, 3);
        assert_eq!(o.stencil(0).len(), 7); // vertex: two cells
        assert_eq!(o.stencil(1).len(), 4); // interior node: one cell
    }
}
