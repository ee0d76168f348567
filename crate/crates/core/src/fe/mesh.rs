use alloc::vec::Vec;
use core::ops::{Deref, DerefMut};

use super::basis::LagrangeBasis;
use crate::error::{Error, Result};

/// Uniform periodic mesh of `[a, b)` carrying continuous Lagrange elements.
///
/// Global DOFs are numbered left to right; the right endpoint `b` is
/// identified with DOF 0, so there are `degree · num_cells` unknowns.
#[derive(Debug, Clone)]
pub struct Mesh {
    left: f64,
    right: f64,
    num_cells: usize,
    degree: usize,
    dof_coords: Vec<f64>,
    cell_dofs: Vec<usize>,
    basis: LagrangeBasis,
}

impl Mesh {
    /// Periodic mesh of `[a, b)` with `num_cells` equal cells of the given degree.
    pub fn new(a: f64, b: f64, num_cells: usize, degree: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidInput(alloc::format!(
                "domain [{a}, {b}] is empty or not finite"
            )));
        }
        if !(1..=3).contains(&degree) {
            return Err(Error::InvalidInput(alloc::format!(
                "degree {degree} not in 1..=3"
            )));
        }
        if num_cells < 3 {
            return Err(Error::InvalidInput(alloc::format!(
                "{num_cells} cells: periodic stencils need at least 3"
            )));
        }
        let n_dofs = degree * num_cells;
        let step = (b - a) / n_dofs as f64;
        let dof_coords = (0..n_dofs).map(|g| a + g as f64 * step).collect();
        let mut cell_dofs = Vec::with_capacity(num_cells * (degree + 1));
        for cell in 0..num_cells {
            for local in 0..=degree {
                cell_dofs.push((cell * degree + local) % n_dofs);
            }
        }
        Ok(Self {
            left: a,
            right: b,
            num_cells,
            degree,
            dof_coords,
            cell_dofs,
            basis: LagrangeBasis::new(degree),
        })
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn right(&self) -> f64 {
        self.right
    }

    /// `b − a`.
    pub fn length(&self) -> f64 {
        self.right - self.left
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Cell width.
    pub fn h(&self) -> f64 {
        self.length() / self.num_cells as f64
    }

    /// Number of unknowns after periodic identification.
    pub fn num_dofs(&self) -> usize {
        self.dof_coords.len()
    }

    /// DOF count in the convention that lists the periodic endpoint twice.
    pub fn reported_dofs(&self) -> usize {
        self.num_dofs() + 1
    }

    pub fn dof_coords(&self) -> &[f64] {
        &self.dof_coords
    }

    /// Global DOFs of `cell`, left to right.
    pub fn cell_dofs(&self, cell: usize) -> &[usize] {
        let n = self.degree + 1;
        &self.cell_dofs[cell * n..(cell + 1) * n]
    }

    pub fn basis(&self) -> &LagrangeBasis {
        &self.basis
    }

    /// Left endpoint of `cell`.
    pub fn cell_left(&self, cell: usize) -> f64 {
        self.left + cell as f64 * self.h()
    }

    /// Value of the finite-element function with coefficients `u` at `x`;
    /// `x` is wrapped into the periodic domain.
    pub fn evaluate(&self, u: &[f64], x: f64) -> f64 {
        let len = self.length();
        let mut s = (x - self.left) / len;
        s -= libm::floor(s);
        let pos = s * self.num_cells as f64;
        let cell = (pos as usize).min(self.num_cells - 1);
        self.evaluate_in_cell(u, cell, pos - cell as f64)
    }

    /// Value at reference coordinate `xi ∈ [0, 1]` of `cell`.
    pub fn evaluate_in_cell(&self, u: &[f64], cell: usize, xi: f64) -> f64 {
        self.cell_dofs(cell)
            .iter()
            .enumerate()
            .map(|(a, &g)| u[g] * self.basis.value(a, xi))
            .sum()
    }

    /// Physical derivative at reference coordinate `xi` of `cell`.
    pub fn derivative_in_cell(&self, u: &[f64], cell: usize, xi: f64) -> f64 {
        let inv_h = 1.0 / self.h();
        self.cell_dofs(cell)
            .iter()
            .enumerate()
            .map(|(a, &g)| u[g] * self.basis.derivative(a, xi) * inv_h)
            .sum()
    }
}

/// Nodal coefficients `U` of a finite-element function `u_h = Σ U_i φ_i`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StateVector(Vec<f64>);

impl StateVector {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self(coeffs)
    }

    pub fn zeros(n: usize) -> Self {
        Self(alloc::vec![0.0; n])
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self(alloc::vec![value; n])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Deref for StateVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for StateVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for StateVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Nodal interpolant `U_i = f(x_i)`.
pub fn interpolate(f: impl Fn(f64) -> f64, mesh: &Mesh) -> Result<StateVector> {
    let mut out = Vec::with_capacity(mesh.num_dofs());
    for (i, &x) in mesh.dof_coords().iter().enumerate() {
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::InvalidInput(alloc::format!(
                "initial data is {v} at dof {i} (x = {x})"
            )));
        }
        out.push(v);
    }
    Ok(StateVector(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p1_four_cells_on_zero_two() {
        let m = Mesh::new(0.0, 2.0, 4, 1).unwrap();
        assert_eq!(m.num_dofs(), 4);
        assert_eq!(m.h(), 0.5);
        assert_eq!(m.dof_coords(), &[0.0, 0.5, 1.0, 1.5]);
        assert_eq!(m.cell_dofs(3), &[3, 0]);
    }

    #[test]
    fn reported_dofs_follow_table_convention() {
        let m = Mesh::new(-10.0, 10.0, 512, 1).unwrap();
        assert_eq!(m.num_dofs(), 512);
        assert_eq!(m.reported_dofs(), 513);
    }

    #[test]
    fn p2_counting() {
        let m = Mesh::new(-10.0, 10.0, 16, 2).unwrap();
        assert_eq!(m.num_dofs(), 32);
        assert_eq!(m.h(), 1.25);
        assert_eq!(m.cell_dofs(0).len(), 3);
        assert_eq!(m.cell_dofs(15), &[30, 31, 0]);
    }

    #[test]
    fn every_dof_is_covered_and_coords_increase() {
        for k in 1..=3 {
            let m = Mesh::new(-1.0, 3.0, 7, k).unwrap();
            let mut seen = alloc::vec![false; m.num_dofs()];
            for c in 0..m.num_cells() {
                for &g in m.cell_dofs(c) {
                    seen[g] = true;
                }
            }
            assert!(seen.iter().all(|&s| s));
            assert!(m.dof_coords().windows(2).all(|w| w[0] < w[1]));
            assert!(*m.dof_coords().last().unwrap() < m.right());
        }
    }

    #[test]
    fn invalid_meshes_are_rejected() {
        assert!(Mesh::new(0.0, 1.0, 8, 0).is_err());
        assert!(Mesh::new(0.0, 1.0, 8, 4).is_err());
        assert!(Mesh::new(0.0, 1.0, 2, 1).is_err());
        assert!(Mesh::new(1.0, 1.0, 8, 1).is_err());
    }

    #[test]
    fn interpolation_of_constant_and_cosine() {
        let m = Mesh::new(0.0, 2.0, 8, 1).unwrap();
        let one = interpolate(|_| 1.0, &m).unwrap();
        assert!(one.iter().all(|&v| v == 1.0));
        let c = interpolate(|x| libm::cos(core::f64::consts::PI * x), &m).unwrap();
        for (u, x) in c.iter().zip(m.dof_coords()) {
            assert_eq!(*u, libm::cos(core::f64::consts::PI * x));
        }
    }

    #[test]
    fn non_finite_data_is_rejected() {
        let m = Mesh::new(0.0, 2.0, 8, 1).unwrap();
        assert!(interpolate(|x| 1.0 / (x - 0.5), &m).is_err());
    }

    #[test]
    fn evaluation_reproduces_nodal_values_and_wraps() {
        let m = Mesh::new(0.0, 2.0, 5, 3).unwrap();
        let u = interpolate(|x| x * x, &m).unwrap();
        for (i, &x) in m.dof_coords().iter().enumerate() {
            assert!((m.evaluate(&u, x) - u[i]).abs() < 1e-13);
        }
        assert!((m.evaluate(&u, 2.0) - u[0]).abs() < 1e-13);
        // cubic reproduces x² inside a cell
        assert!((m.evaluate(&u, 0.3) - 0.09).abs() < 1e-13);
    }
}
