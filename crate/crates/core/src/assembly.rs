//! Mass operators, the Galerkin convective residual and weak inflow
//! boundary terms.
//!
//! The semi-discrete system is M du/dt = R(u) with
//! R_i = -sum_e int_{K_e} phi_i div f(x, u_h) - (stabilization terms)
//!       + int_Gamma phi_i (u_h - u_in) min(0, f'(u_h) . n).

use std::fmt;

use crate::element::{side_index, ElementSpace};
use crate::exec::ExecMode;
use crate::flux::Flux;
use crate::mesh::BoundaryFace;
use crate::sparse::{pcg, CsrMatrix, PcgFailure, PcgStats};

pub const MASS_SOLVE_TOLERANCE: f64 = 1e-12;
const MASS_SOLVE_MAX_ITER: usize = 5000;

/// Which operator `solve` inverts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MassKind {
    Consistent,
    Lumped,
}

/// Global residual vector of length N_h.
#[derive(Clone, Debug)]
pub struct Residual {
    pub values: Vec<f64>,
}

impl Residual {
    pub fn zeroed(n: usize) -> Residual {
        Residual { values: vec![0.0; n] }
    }
}

#[derive(Debug)]
pub struct MassSolveError(pub PcgFailure);

impl fmt::Display for MassSolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "mass solve failed: {}", self.0)
    }
}

impl std::error::Error for MassSolveError {}

/// Consistent mass matrix with its lumped (row-sum) diagonal.
#[derive(Clone, Debug)]
pub struct MassOperator {
    pub kind: MassKind,
    pub matrix: CsrMatrix,
    pub lumped: Vec<f64>,
    pub tolerance: f64,
    diag_inv: Vec<f64>,
}

impl MassOperator {
    pub fn assemble(space: &ElementSpace, kind: MassKind) -> MassOperator {
        let r = &space.reference;
        let n_loc = r.n_loc;
        // The local block is identical for every cell of a uniform mesh.
        let mut local = vec![0.0; n_loc * n_loc];
        for i in 0..n_loc {
            for j in 0..n_loc {
                let (ri, rj) = (r.center.row(0, i), r.center.row(0, j));
                local[i * n_loc + j] = space
                    .quad_weights
                    .iter()
                    .enumerate()
                    .map(|(q, w)| w * ri[q] * rj[q])
                    .sum();
            }
        }
        let mut triplets = Vec::with_capacity(space.mesh.n_cells * n_loc * n_loc);
        for cell in 0..space.mesh.n_cells {
            let dofs = space.dofs(cell);
            for i in 0..n_loc {
                for j in 0..n_loc {
                    triplets.push((dofs[i], dofs[j], local[i * n_loc + j]));
                }
            }
        }
        let matrix = CsrMatrix::from_triplets(space.n_dofs, space.n_dofs, &mut triplets);
        let lumped = matrix.row_sums();
        let diag_inv = matrix.diagonal().iter().map(|d| 1.0 / d).collect();
        MassOperator { kind, matrix, lumped, tolerance: MASS_SOLVE_TOLERANCE, diag_inv }
    }

    /// Identity operator (used by ODE-level tests of the time integrator).
    pub fn identity(n: usize) -> MassOperator {
        MassOperator {
            kind: MassKind::Lumped,
            matrix: CsrMatrix::identity(n),
            lumped: vec![1.0; n],
            tolerance: MASS_SOLVE_TOLERANCE,
            diag_inv: vec![1.0; n],
        }
    }

    /// y = M x for the selected mass kind.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        match self.kind {
            MassKind::Consistent => self.matrix.mul_vec(x, y),
            MassKind::Lumped => {
                for ((yi, xi), m) in y.iter_mut().zip(x).zip(&self.lumped) {
                    *yi = m * xi;
                }
            }
        }
    }

    /// Solve M x = rhs; `x` doubles as the warm start for the iteration.
    pub fn solve_into(&self, rhs: &[f64], x: &mut [f64]) -> Result<PcgStats, MassSolveError> {
        match self.kind {
            MassKind::Lumped => {
                for ((xi, ri), m) in x.iter_mut().zip(rhs).zip(&self.lumped) {
                    *xi = ri / m;
                }
                Ok(PcgStats { iterations: 0, relative_residual: 0.0 })
            }
            MassKind::Consistent => {
                pcg(&self.matrix, rhs, x, &self.diag_inv, self.tolerance, MASS_SOLVE_MAX_ITER)
                    .map_err(MassSolveError)
            }
        }
    }
}

/// Accumulate r_i -= sum_e int_{K_e} phi_i div f(x, u_h) dx.
pub fn convective_residual(
    space: &ElementSpace,
    flux: &Flux,
    coeffs: &[f64],
    out: &mut [f64],
    exec: &ExecMode,
) {
    let r = &space.reference;
    let n_loc = r.n_loc;
    let n_q = r.n_q;
    let grad_k: [usize; 2] = [1, 2];
    let dim = space.mesh.dim;
    exec.accumulate(space.mesh.n_cells, out, |cell, acc| {
        let mut local = [0.0; 25];
        let local = &mut local[..n_loc];
        space.gather(coeffs, cell, local);
        let origin = space.mesh.cell_origin(cell);
        let mut div = [0.0; 36];
        for q in 0..n_q {
            let mut u = 0.0;
            let mut grad = [0.0; 2];
            for (dof, &c) in local.iter().enumerate() {
                u += c * r.center.row(0, dof)[q];
                grad[0] += c * r.center.row(grad_k[0], dof)[q];
                if dim == 2 {
                    grad[1] += c * r.center.row(grad_k[1], dof)[q];
                }
            }
            grad[0] *= space.deriv_scale[grad_k[0]];
            if dim == 2 {
                grad[1] *= space.deriv_scale[grad_k[1]];
            }
            let x = [origin[0] + space.quad_offsets[q][0], origin[1] + space.quad_offsets[q][1]];
            div[q] = space.quad_weights[q] * flux.divergence(x, u, grad);
        }
        let dofs = space.dofs(cell);
        for (dof, &g) in dofs.iter().enumerate() {
            let row = r.center.row(0, dof);
            let mut acc_i = 0.0;
            for q in 0..n_q {
                acc_i += div[q] * row[q];
            }
            acc[g as usize] -= acc_i;
        }
    });
}

/// Accumulate the weak inflow penalty
/// r_i += int_Gamma phi_i (u_h - u_in) min(0, f'(u_h) . n) ds
/// over the given boundary faces. No-op for an empty face list.
pub fn inflow_boundary_residual(
    space: &ElementSpace,
    flux: &Flux,
    inflow_value: f64,
    faces: &[BoundaryFace],
    coeffs: &[f64],
    out: &mut [f64],
) {
    let r = &space.reference;
    let n_loc = r.n_loc;
    let dim = space.mesh.dim;
    let nq_face = if dim == 1 { 1 } else { r.q_points_1d.len() };
    for face in faces {
        let vals = &r.face_values[2 * face.axis + side_index(face.side)];
        let mut local = [0.0; 25];
        let local = &mut local[..n_loc];
        space.gather(coeffs, face.cell, local);
        let origin = space.mesh.cell_origin(face.cell);
        let mut normal = [0.0; 2];
        normal[face.axis] = face.side as f64;
        let transverse = 1 - face.axis;
        // Face measure: transverse edge length in 2D, a point in 1D.
        let measure = if dim == 2 { space.mesh.edge_lengths[transverse] } else { 1.0 };
        for q in 0..nq_face {
            let mut u = 0.0;
            for (dof, &c) in local.iter().enumerate() {
                u += c * vals[dof * nq_face + q];
            }
            let mut x = origin;
            x[face.axis] += if face.side > 0 { space.mesh.edge_lengths[face.axis] } else { 0.0 };
            if dim == 2 {
                x[transverse] += r.q_points_1d[q] * space.mesh.edge_lengths[transverse];
            }
            let vn = flux.normal_speed(x, u, normal);
            let w = if dim == 2 { r.q_weights_1d[q] } else { 1.0 };
            let factor = w * measure * (u - inflow_value) * vn.min(0.0);
            if factor == 0.0 {
                continue;
            }
            for (dof, &g) in space.dofs(face.cell).iter().enumerate() {
                out[g as usize] += factor * vals[dof * nq_face + q];
            }
        }
    }
}
