use super::mesh::Mesh;
use super::operators::FeOperators;
use crate::error::{check_len, Error, Result};
use crate::math;

/// Weighted discrete norm `(Σ_i U_i² m_i)^{1/2}`.
pub fn weighted_l2_norm(u: &[f64], ops: &FeOperators) -> Result<f64> {
    check_len(ops.num_dofs(), u.len())?;
    Ok(math::sqrt(
        u.iter().zip(&ops.lumped_mass).map(|(v, m)| v * v * m).sum(),
    ))
}

/// `‖u_h‖_{L²} = (Uᵀ M U)^{1/2}` with the consistent mass matrix.
pub fn l2_norm(u: &[f64], ops: &FeOperators) -> Result<f64> {
    let mu = ops.mass.matvec(u)?;
    Ok(math::sqrt(
        u.iter().zip(&mu).map(|(a, b)| a * b).sum::<f64>().max(0.0),
    ))
}

/// Points where discrete maximum norms are sampled: every DOF node, every
/// cell midpoint, and the right endpoint `b` (where `u_h(b) = U_0`).
pub fn error_sample_points(mesh: &Mesh) -> alloc::vec::Vec<f64> {
    let h = mesh.h();
    let mut pts = alloc::vec::Vec::with_capacity(mesh.num_dofs() + mesh.num_cells() + 1);
    pts.extend_from_slice(mesh.dof_coords());
    pts.extend((0..mesh.num_cells()).map(|c| mesh.cell_left(c) + 0.5 * h));
    pts.push(mesh.right());
    pts
}

/// `max |u_h − u| / max |u|` over [`error_sample_points`].
pub fn relative_linf_error(u: &[f64], mesh: &Mesh, exact: impl Fn(f64) -> f64) -> Result<f64> {
    check_len(mesh.num_dofs(), u.len())?;
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for x in error_sample_points(mesh) {
        let e = exact(x);
        if !e.is_finite() {
            return Err(Error::InvalidInput(alloc::format!(
                "exact solution is {e} at x = {x}"
            )));
        }
        num = num.max((mesh.evaluate(u, x) - e).abs());
        den = den.max(e.abs());
    }
    if den == 0.0 {
        return Err(Error::InvalidInput(
            "exact solution vanishes on every sample point".into(),
        ));
    }
    Ok(num / den)
}
