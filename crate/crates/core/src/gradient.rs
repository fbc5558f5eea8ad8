//! Continuous gradient recovery: global consistent-mass L2 projection of
//! grad(u_h) onto (V_h)^d, and the lumped convex-combination variant that
//! averages one-sided cell gradients at each node.

use crate::assembly::{MassOperator, MassSolveError};
use crate::element::ElementSpace;
use crate::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecoveryMethod {
    Consistent,
    Lumped,
}

/// Nodal coefficients of the recovered gradient, one vector per axis.
#[derive(Clone, Debug)]
pub struct RecoveredGradient {
    pub method: RecoveryMethod,
    pub components: Vec<Vec<f64>>,
}

impl RecoveredGradient {
    pub fn zeros(space: &ElementSpace) -> RecoveredGradient {
        RecoveredGradient {
            method: RecoveryMethod::Consistent,
            components: vec![vec![0.0; space.n_dofs]; space.mesh.dim],
        }
    }
}

/// Discrete gradient matrices c_ij = sum_e int_{K_e} phi_i d_a phi_j,
/// one per axis.
#[derive(Clone, Debug)]
pub struct GradientMatrices {
    pub c: Vec<CsrMatrix>,
}

pub fn assemble_gradient_matrices(space: &ElementSpace) -> GradientMatrices {
    let r = &space.reference;
    let n_loc = r.n_loc;
    let dim = space.mesh.dim;
    let grad_k = [1usize, 2];
    let mut c = Vec::with_capacity(dim);
    for axis in 0..dim {
        let k = grad_k[axis];
        let scale = space.deriv_scale[k];
        let mut local = vec![0.0; n_loc * n_loc];
        for i in 0..n_loc {
            for j in 0..n_loc {
                let (vi, dj) = (r.center.row(0, i), r.center.row(k, j));
                local[i * n_loc + j] = scale
                    * space
                        .quad_weights
                        .iter()
                        .enumerate()
                        .map(|(q, w)| w * vi[q] * dj[q])
                        .sum::<f64>();
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
        c.push(CsrMatrix::from_triplets(space.n_dofs, space.n_dofs, &mut triplets));
    }
    GradientMatrices { c }
}

/// Consistent-mass L2 projection: solves M g_a = C_a u per component.
/// `out` provides warm starts and receives the result.
pub fn project_consistent(
    space: &ElementSpace,
    mass: &MassOperator,
    cmats: &GradientMatrices,
    coeffs: &[f64],
    out: &mut RecoveredGradient,
) -> Result<(), MassSolveError> {
    out.method = RecoveryMethod::Consistent;
    let mut rhs = vec![0.0; space.n_dofs];
    for axis in 0..space.mesh.dim {
        cmats.c[axis].mul_vec(coeffs, &mut rhs);
        mass.solve_into(&rhs, &mut out.components[axis])?;
    }
    Ok(())
}

/// Lumped recovery: g_i = (1/m_i) sum_{e in E_i} m_i^e grad(u_h)|_{K_e}(x_i)
/// with m_i^e = int_{K_e} phi_i dx.
pub fn project_lumped(space: &ElementSpace, coeffs: &[f64], out: &mut RecoveredGradient) {
    out.method = RecoveryMethod::Lumped;
    let dim = space.mesh.dim;
    let r = &space.reference;
    let n_loc = r.n_loc;
    let vol = space.mesh.cell_volume();
    for comp in out.components.iter_mut() {
        comp.fill(0.0);
    }
    let mut wsum = vec![0.0; space.n_dofs];
    let inv_h = [1.0 / space.mesh.edge_lengths[0], 1.0 / space.mesh.edge_lengths[1]];
    let mut local = [0.0; 25];
    for cell in 0..space.mesh.n_cells {
        let local = &mut local[..n_loc];
        space.gather(coeffs, cell, local);
        let dofs = space.dofs(cell);
        for (node, &g) in dofs.iter().enumerate() {
            let w = vol * r.node_integrals[node];
            let mut grad = [0.0; 2];
            for (dof, &cv) in local.iter().enumerate() {
                let idx = (dof * n_loc + node) * 2;
                grad[0] += cv * r.node_gradients[idx];
                if dim == 2 {
                    grad[1] += cv * r.node_gradients[idx + 1];
                }
            }
            for axis in 0..dim {
                out.components[axis][g as usize] += w * grad[axis] * inv_h[axis];
            }
            wsum[g as usize] += w;
        }
    }
    for axis in 0..dim {
        for (gi, wi) in out.components[axis].iter_mut().zip(&wsum) {
            *gi /= wi;
        }
    }
}

/// Pointwise fluctuation grad(v_h) - g_h at the quadrature points of a cell.
pub fn fluctuation(
    space: &ElementSpace,
    coeffs: &[f64],
    grad: &RecoveredGradient,
    cell: usize,
) -> Vec<[f64; 2]> {
    let r = &space.reference;
    let n_loc = r.n_loc;
    let dim = space.mesh.dim;
    let grad_k = [1usize, 2];
    let mut local = [0.0; 25];
    let local = &mut local[..n_loc];
    let mut local_g = [[0.0; 25]; 2];
    space.gather(coeffs, cell, local);
    for axis in 0..dim {
        space.gather(&grad.components[axis], cell, &mut local_g[axis][..n_loc]);
    }
    (0..r.n_q)
        .map(|q| {
            let mut f = [0.0; 2];
            for axis in 0..dim {
                let k = grad_k[axis];
                let mut du = 0.0;
                let mut gv = 0.0;
                for dof in 0..n_loc {
                    du += local[dof] * r.center.row(k, dof)[q];
                    gv += local_g[axis][dof] * r.center.row(0, dof)[q];
                }
                f[axis] = du * space.deriv_scale[k] - gv;
            }
            f
        })
        .collect()
}
