//! Dissipation-based stabilization operators.
//!
//! Low-order: nu_e int grad(w) . grad(u). Nonsymmetric VMS:
//! nu_e int grad(w) . (grad(u) - g_h). Symmetric high-order:
//! nu_e int (grad(w) - pi grad(w)) . (grad(u) - pi grad(u)), with pi the
//! consistent-mass L2 projection. The blended WENO operator applies
//! omega * gamma_e * nu_ho to the symmetric term and (1 - gamma_e) * nu_lo
//! to the low-order term, gamma_e coming from the smoothness sensor.
//!
//! The projected test function is never formed row by row. Writing the
//! fluctuation operator as A = G - Phi M^{-1} C (pointwise gradient minus
//! interpolated projection), the residual of the symmetric form is
//! A^T W_c A u: one element loop for G^T W_c A u and the weighted moments
//! Phi^T W_c A u, then d mass solves and C^T applications. Per-cell
//! weights make the cross term nonzero, so it cannot be dropped by global
//! orthogonality; this route keeps the discrete operator exactly
//! symmetric at the cost of d extra mass solves per evaluation.

use crate::assembly::{MassOperator, MassSolveError};
use crate::element::ElementSpace;
use crate::exec::ExecMode;
use crate::flux::Flux;
use crate::gradient::{GradientMatrices, RecoveredGradient};

/// Per-cell wave speed bound and the viscosities nu_e = lambda_e h_e / (2p)
/// for the high- and low-order operator components.
#[derive(Clone, Debug)]
pub struct CellViscosity {
    pub lambda: Vec<f64>,
    pub nu_ho: Vec<f64>,
    pub nu_lo: Vec<f64>,
}

/// Upper bound for |f'(u_h)| over a cell, sampled at quadrature points
/// and Lagrange nodes.
pub fn cell_wave_speed(space: &ElementSpace, flux: &Flux, coeffs: &[f64], cell: usize) -> f64 {
    let r = &space.reference;
    let mut local = [0.0; 25];
    let local = &mut local[..r.n_loc];
    space.gather(coeffs, cell, local);
    let origin = space.mesh.cell_origin(cell);
    let mut speed = 0.0f64;
    for q in 0..r.n_q {
        let mut u = 0.0;
        for (dof, &c) in local.iter().enumerate() {
            u += c * r.center.row(0, dof)[q];
        }
        let x = [origin[0] + space.quad_offsets[q][0], origin[1] + space.quad_offsets[q][1]];
        speed = speed.max(flux.wave_speed(x, u));
    }
    for (dof, &g) in space.dofs(cell).iter().enumerate() {
        let _ = dof;
        let x = space.node_coords[g as usize];
        speed = speed.max(flux.wave_speed(x, coeffs[g as usize]));
    }
    speed
}

/// Builds per-cell viscosities; `lambda_ho` / `lambda_lo` override the
/// sampled wave speed for the respective operator component.
#[allow(clippy::too_many_arguments)]
pub fn viscosities(
    space: &ElementSpace,
    flux: &Flux,
    coeffs: &[f64],
    h_local: f64,
    lambda_ho: Option<f64>,
    lambda_lo: Option<f64>,
    exec: &ExecMode,
) -> CellViscosity {
    let p = space.degree as f64;
    let factor = h_local / (2.0 * p);
    let lambda = if lambda_ho.is_some() && lambda_lo.is_some() {
        vec![0.0; space.mesh.n_cells]
    } else {
        exec.map(space.mesh.n_cells, |cell| cell_wave_speed(space, flux, coeffs, cell))
    };
    let nu_ho = lambda.iter().map(|&l| lambda_ho.unwrap_or(l) * factor).collect();
    let nu_lo = lambda.iter().map(|&l| lambda_lo.unwrap_or(l) * factor).collect();
    CellViscosity { lambda, nu_ho, nu_lo }
}

/// r_i -= sum_e nu_e int grad(phi_i) . grad(u_h).
pub fn lo_residual(
    space: &ElementSpace,
    nu: &[f64],
    coeffs: &[f64],
    out: &mut [f64],
    exec: &ExecMode,
) {
    let r = &space.reference;
    let n_loc = r.n_loc;
    let n_q = r.n_q;
    let dim = space.mesh.dim;
    exec.accumulate(space.mesh.n_cells, out, |cell, acc| {
        if nu[cell] == 0.0 {
            return;
        }
        let mut local = [0.0; 25];
        let local = &mut local[..n_loc];
        space.gather(coeffs, cell, local);
        let mut grad = [[0.0; 36]; 2];
        for axis in 0..dim {
            let k = 1 + axis;
            let scale = space.deriv_scale[k];
            for q in 0..n_q {
                let mut du = 0.0;
                for (dof, &c) in local.iter().enumerate() {
                    du += c * r.center.row(k, dof)[q];
                }
                grad[axis][q] = du * scale * space.quad_weights[q] * nu[cell];
            }
        }
        for (dof, &g) in space.dofs(cell).iter().enumerate() {
            let mut acc_i = 0.0;
            for axis in 0..dim {
                let k = 1 + axis;
                let row = r.center.row(k, dof);
                let scale = space.deriv_scale[k];
                for q in 0..n_q {
                    acc_i += grad[axis][q] * row[q] * scale;
                }
            }
            acc[g as usize] -= acc_i;
        }
    });
}

/// r_i -= sum_e nu_e int grad(phi_i) . (grad(u_h) - g_h), the nonsymmetric
/// two-level VMS operator.
pub fn vms_residual(
    space: &ElementSpace,
    nu: &[f64],
    coeffs: &[f64],
    grad: &RecoveredGradient,
    out: &mut [f64],
    exec: &ExecMode,
) {
    let r = &space.reference;
    let n_q = r.n_q;
    let dim = space.mesh.dim;
    exec.accumulate(space.mesh.n_cells, out, |cell, acc| {
        if nu[cell] == 0.0 {
            return;
        }
        let mut fluct = [[0.0; 36]; 2];
        cell_fluctuation(space, coeffs, grad, cell, &mut fluct);
        for axis in 0..dim {
            for q in 0..n_q {
                fluct[axis][q] *= space.quad_weights[q] * nu[cell];
            }
        }
        for (dof, &g) in space.dofs(cell).iter().enumerate() {
            let mut acc_i = 0.0;
            for axis in 0..dim {
                let k = 1 + axis;
                let row = r.center.row(k, dof);
                let scale = space.deriv_scale[k];
                for q in 0..n_q {
                    acc_i += fluct[axis][q] * row[q] * scale;
                }
            }
            acc[g as usize] -= acc_i;
        }
    });
}

/// Workspace for the symmetric fluctuation assembly.
#[derive(Clone, Debug)]
pub struct StabScratch {
    work: Vec<f64>,
    z: Vec<Vec<f64>>,
    tmp: Vec<f64>,
}

impl StabScratch {
    pub fn new(space: &ElementSpace) -> StabScratch {
        let n = space.n_dofs;
        StabScratch {
            work: vec![0.0; n * (1 + space.mesh.dim)],
            z: vec![vec![0.0; n]; space.mesh.dim],
            tmp: vec![0.0; n],
        }
    }
}

/// Blended WENO residual:
/// r_i -= sum_e [ omega gamma_e nu_ho (grad phi_i - pi grad phi_i).(grad u - pi grad u)
///              + (1 - gamma_e) nu_lo grad(phi_i) . grad(u_h) ].
/// Requires the consistent-mass recovery for `grad`.
#[allow(clippy::too_many_arguments)]
pub fn weno_residual(
    space: &ElementSpace,
    mass: &MassOperator,
    cmats: &GradientMatrices,
    grad: &RecoveredGradient,
    gamma: &[f64],
    omega: f64,
    nu_ho: &[f64],
    nu_lo: &[f64],
    coeffs: &[f64],
    out: &mut [f64],
    scratch: &mut StabScratch,
    exec: &ExecMode,
) -> Result<(), MassSolveError> {
    let r = &space.reference;
    let n_loc = r.n_loc;
    let n_q = r.n_q;
    let dim = space.mesh.dim;
    let n = space.n_dofs;
    scratch.work.fill(0.0);

    // Element loop: grad-tested part (own residual slot) plus the weighted
    // moments q_a[j] = sum_e c_e int phi_j F_a needed for the projected
    // test-function part.
    exec.accumulate(space.mesh.n_cells, &mut scratch.work, |cell, acc| {
        let c_ho = omega * gamma[cell] * nu_ho[cell];
        let c_lo = (1.0 - gamma[cell]) * nu_lo[cell];
        if c_ho == 0.0 && c_lo == 0.0 {
            return;
        }
        let mut local = [0.0; 25];
        let local = &mut local[..n_loc];
        space.gather(coeffs, cell, local);
        let mut fluct = [[0.0; 36]; 2];
        let mut du = [[0.0; 36]; 2];
        for axis in 0..dim {
            let k = 1 + axis;
            let scale = space.deriv_scale[k];
            let mut gl = [0.0; 25];
            let gl = &mut gl[..n_loc];
            space.gather(&grad.components[axis], cell, gl);
            for q in 0..n_q {
                let mut d = 0.0;
                let mut gv = 0.0;
                for dof in 0..n_loc {
                    d += local[dof] * r.center.row(k, dof)[q];
                    gv += gl[dof] * r.center.row(0, dof)[q];
                }
                du[axis][q] = d * scale;
                fluct[axis][q] = du[axis][q] - gv;
            }
        }
        let dofs = space.dofs(cell);
        for (dof, &g) in dofs.iter().enumerate() {
            let mut acc_i = 0.0;
            for axis in 0..dim {
                let k = 1 + axis;
                let row = r.center.row(k, dof);
                let scale = space.deriv_scale[k];
                for q in 0..n_q {
                    let w = space.quad_weights[q];
                    acc_i += w * row[q] * scale * (c_ho * fluct[axis][q] + c_lo * du[axis][q]);
                }
            }
            acc[g as usize] -= acc_i;
        }
        if c_ho != 0.0 {
            for axis in 0..dim {
                let base = (1 + axis) * n;
                for (dof, &g) in dofs.iter().enumerate() {
                    let row = r.center.row(0, dof);
                    let mut acc_i = 0.0;
                    for q in 0..n_q {
                        acc_i += space.quad_weights[q] * row[q] * fluct[axis][q];
                    }
                    acc[base + g as usize] += c_ho * acc_i;
                }
            }
        }
    });

    for i in 0..n {
        out[i] += scratch.work[i];
    }
    // Projected part: out += sum_a C_a^T M^{-1} q_a.
    for axis in 0..dim {
        let q_a = &scratch.work[(1 + axis) * n..(2 + axis) * n];
        mass.solve_into(q_a, &mut scratch.z[axis])?;
        cmats.c[axis].mul_transpose_vec(&scratch.z[axis], &mut scratch.tmp);
        for i in 0..n {
            out[i] += scratch.tmp[i];
        }
    }
    Ok(())
}

/// Symmetric high-order operator: the WENO blend with gamma_e = 1.
#[allow(clippy::too_many_arguments)]
pub fn hos_residual(
    space: &ElementSpace,
    mass: &MassOperator,
    cmats: &GradientMatrices,
    grad: &RecoveredGradient,
    omega: f64,
    nu_ho: &[f64],
    coeffs: &[f64],
    out: &mut [f64],
    scratch: &mut StabScratch,
    exec: &ExecMode,
) -> Result<(), MassSolveError> {
    let ones = vec![1.0; space.mesh.n_cells];
    let zeros = vec![0.0; space.mesh.n_cells];
    weno_residual(
        space, mass, cmats, grad, &ones, omega, nu_ho, &zeros, coeffs, out, scratch, exec,
    )
}

/// Quadratic form s_h(u; u, u) of the blended operator (omega = 1 path),
/// evaluated by direct quadrature.
pub fn stabilization_energy(
    space: &ElementSpace,
    grad: &RecoveredGradient,
    gamma: &[f64],
    omega: f64,
    nu_ho: &[f64],
    nu_lo: &[f64],
    coeffs: &[f64],
    exec: &ExecMode,
) -> f64 {
    let dim = space.mesh.dim;
    let n_q = space.reference.n_q;
    let parts = exec.map(space.mesh.n_cells, |cell| {
        let c_ho = omega * gamma[cell] * nu_ho[cell];
        let c_lo = (1.0 - gamma[cell]) * nu_lo[cell];
        if c_ho == 0.0 && c_lo == 0.0 {
            return 0.0;
        }
        let mut fluct = [[0.0; 36]; 2];
        cell_fluctuation(space, coeffs, grad, cell, &mut fluct);
        let mut local = [0.0; 25];
        let local = &mut local[..space.reference.n_loc];
        space.gather(coeffs, cell, local);
        let mut ho = 0.0;
        let mut lo = 0.0;
        for axis in 0..dim {
            let k = 1 + axis;
            let scale = space.deriv_scale[k];
            for q in 0..n_q {
                let mut du = 0.0;
                for (dof, &c) in local.iter().enumerate() {
                    du += c * space.reference.center.row(k, dof)[q];
                }
                du *= scale;
                ho += space.quad_weights[q] * fluct[axis][q] * fluct[axis][q];
                lo += space.quad_weights[q] * du * du;
            }
        }
        c_ho * ho + c_lo * lo
    });
    parts.iter().sum()
}

/// Fluctuation grad(u_h) - g_h at the quadrature points of one cell,
/// written into fixed-size per-axis rows.
fn cell_fluctuation(
    space: &ElementSpace,
    coeffs: &[f64],
    grad: &RecoveredGradient,
    cell: usize,
    out: &mut [[f64; 36]; 2],
) {
    let r = &space.reference;
    let n_loc = r.n_loc;
    let mut local = [0.0; 25];
    let local = &mut local[..n_loc];
    space.gather(coeffs, cell, local);
    for axis in 0..space.mesh.dim {
        let k = 1 + axis;
        let scale = space.deriv_scale[k];
        let mut gl = [0.0; 25];
        let gl = &mut gl[..n_loc];
        space.gather(&grad.components[axis], cell, gl);
        for q in 0..r.n_q {
            let mut du = 0.0;
            let mut gv = 0.0;
            for dof in 0..n_loc {
                du += local[dof] * r.center.row(k, dof)[q];
                gv += gl[dof] * r.center.row(0, dof)[q];
            }
            out[axis][q] = du * scale - gv;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{MassKind, MassOperator};
    use crate::element::{interpolate, SolutionField};
    use crate::gradient::{assemble_gradient_matrices, project_consistent};
    use crate::mesh::{BoundaryMode, Mesh};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn space_1d(cells: usize, p: usize, mode: BoundaryMode) -> Arc<ElementSpace> {
        let mesh = Arc::new(Mesh::build(1, &[cells], &[(0.0, 1.0)], mode).unwrap());
        Arc::new(ElementSpace::build(mesh, p, p + 2).unwrap())
    }

    struct Setup {
        space: Arc<ElementSpace>,
        mass: MassOperator,
        cmats: GradientMatrices,
        exec: ExecMode,
    }

    impl Setup {
        fn new(space: Arc<ElementSpace>) -> Setup {
            let mass = MassOperator::assemble(&space, MassKind::Consistent);
            let cmats = assemble_gradient_matrices(&space);
            Setup { space, mass, cmats, exec: ExecMode::new(1) }
        }

        fn grad(&self, coeffs: &[f64]) -> RecoveredGradient {
            let mut g = RecoveredGradient::zeros(&self.space);
            project_consistent(&self.space, &self.mass, &self.cmats, coeffs, &mut g).unwrap();
            g
        }

        /// Bilinear value s(u, w) of the WENO stabilization.
        fn weno_form(&self, gamma: &[f64], nu: &[f64], u: &[f64], w: &[f64]) -> f64 {
            let grad = self.grad(u);
            let mut out = vec![0.0; self.space.n_dofs];
            let mut scratch = StabScratch::new(&self.space);
            weno_residual(
                &self.space, &self.mass, &self.cmats, &grad, gamma, 1.0, nu, nu, u, &mut out,
                &mut scratch, &self.exec,
            )
            .unwrap();
            -w.iter().zip(&out).map(|(a, b)| a * b).sum::<f64>()
        }
    }

    #[test]
    fn wave_speed_examples() {
        let space = space_1d(4, 1, BoundaryMode::Periodic);
        let f = interpolate(&space, |x| x[0]);
        let adv = Flux::ConstantAdvection { velocity: [1.0, 0.0] };
        assert!((cell_wave_speed(&space, &adv, &f.coeffs, 2) - 1.0).abs() < 1e-15);

        let u = vec![-0.3, 0.9, -1.0, 0.4];
        assert!((cell_wave_speed(&space, &Flux::Burgers, &u, 1) - 1.0).abs() < 1e-15);
        assert!((cell_wave_speed(&space, &Flux::Burgers, &u, 0) - 0.9).abs() < 1e-15);

        assert!((cell_wave_speed(&space, &Flux::Kpp, &u, 0) - 1.0).abs() < 1e-15);
        // Override table used for the KPP runs.
        let exec = ExecMode::new(1);
        let visc =
            viscosities(&space, &Flux::Kpp, &u, 0.25, Some(1.0), Some(2.0), &exec);
        assert!((visc.nu_ho[0] - 1.0 * 0.25 / 2.0).abs() < 1e-15);
        assert!((visc.nu_lo[0] - 2.0 * 0.25 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn viscosity_scales_with_h_and_degree() {
        let adv = Flux::ConstantAdvection { velocity: [1.0, 0.0] };
        let exec = ExecMode::new(1);
        let space = space_1d(4, 1, BoundaryMode::Periodic);
        let f = interpolate(&space, |_| 1.0);
        let v1 = viscosities(&space, &adv, &f.coeffs, 0.25, None, None, &exec);
        let v2 = viscosities(&space, &adv, &f.coeffs, 0.5, None, None, &exec);
        assert!((v2.nu_lo[0] - 2.0 * v1.nu_lo[0]).abs() < 1e-15);
        let space2 = space_1d(4, 2, BoundaryMode::Periodic);
        let f2 = interpolate(&space2, |_| 1.0);
        let v3 = viscosities(&space2, &adv, &f2.coeffs, 0.25, None, None, &exec);
        assert!((v3.nu_lo[0] - 0.5 * v1.nu_lo[0]).abs() < 1e-15);
    }

    #[test]
    fn lo_residual_single_cell_stiffness() {
        // Cell 0 of a 2-cell mesh carries nodal values (0,1):
        // r_0 = +nu/h, r_1 = -nu/h, r_2 = 0.
        let space = space_1d(2, 1, BoundaryMode::Bounded);
        let exec = ExecMode::new(1);
        let u = vec![0.0, 1.0, 1.0];
        let nu = vec![0.3, 0.0];
        let mut out = vec![0.0; 3];
        lo_residual(&space, &nu, &u, &mut out, &exec);
        let h = 0.5;
        assert!((out[0] - 0.3 / h).abs() < 1e-13);
        assert!((out[1] + 0.3 / h).abs() < 1e-13);
        assert!(out[2].abs() < 1e-15);

        // Constant field: zero. All-ones contraction: zero.
        let c = interpolate(&space, |_| 2.0);
        let mut out = vec![0.0; 3];
        lo_residual(&space, &[0.3, 0.3], &c.coeffs, &mut out, &exec);
        assert!(out.iter().all(|v| v.abs() < 1e-14));
        let mut out = vec![0.0; 3];
        lo_residual(&space, &[0.3, 0.3], &u, &mut out, &exec);
        let total: f64 = out.iter().sum();
        assert!(total.abs() < 1e-14);
    }

    #[test]
    fn vms_matches_direct_quadrature_oracle() {
        let setup = Setup::new(space_1d(6, 1, BoundaryMode::Periodic));
        let space = &setup.space;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u: Vec<f64> = (0..space.n_dofs).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let nu = vec![0.17; 6];
        let grad = setup.grad(&u);
        let mut out = vec![0.0; space.n_dofs];
        vms_residual(space, &nu, &u, &grad, &mut out, &setup.exec);

        // Oracle: -nu int phi_i' (u' - g) via independent quadrature on
        // each cell using eval_at.
        let uf = SolutionField { space: space.clone(), coeffs: u.clone() };
        let gf = SolutionField { space: space.clone(), coeffs: grad.components[0].clone() };
        let pts: Vec<[f64; 2]> = space.reference.q_points_1d.iter().map(|&x| [x, 0.0]).collect();
        let mut expect = vec![0.0; space.n_dofs];
        let h = 1.0 / 6.0;
        for cell in 0..6 {
            let ue = uf.eval_at(cell, &pts);
            let ge = gf.eval_at(cell, &pts);
            for (dof, &g) in space.dofs(cell).iter().enumerate() {
                let mut acc = 0.0;
                for (q, pt) in pts.iter().enumerate() {
                    let dphi = space.reference.basis.eval(dof, 1, pt[0]) / h;
                    acc += space.quad_weights[q] * dphi * (ue[q][1] - ge[q][0]);
                }
                expect[g as usize] -= nu[cell] * acc;
            }
        }
        for (a, b) in out.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }

        // VMS on a globally linear field (bounded mesh) vanishes: the
        // recovered gradient equals the exact constant gradient.
        let setup = Setup::new(space_1d(5, 1, BoundaryMode::Bounded));
        let f = interpolate(&setup.space, |x| 2.0 * x[0] + 0.5);
        let grad = setup.grad(&f.coeffs);
        let mut out = vec![0.0; setup.space.n_dofs];
        vms_residual(&setup.space, &[0.2; 5], &f.coeffs, &grad, &mut out, &setup.exec);
        assert!(out.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn weno_limits_reproduce_lo_and_hos() {
        let setup = Setup::new(space_1d(8, 2, BoundaryMode::Periodic));
        let space = &setup.space;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u: Vec<f64> = (0..space.n_dofs).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let nu: Vec<f64> = (0..8).map(|i| 0.05 + 0.01 * i as f64).collect();
        let grad = setup.grad(&u);
        let mut scratch = StabScratch::new(space);

        // gamma = 0 reduces to the low-order operator.
        let gamma = vec![0.0; 8];
        let mut weno = vec![0.0; space.n_dofs];
        weno_residual(
            space, &setup.mass, &setup.cmats, &grad, &gamma, 1.0, &nu, &nu, &u, &mut weno,
            &mut scratch, &setup.exec,
        )
        .unwrap();
        let mut lo = vec![0.0; space.n_dofs];
        lo_residual(space, &nu, &u, &mut lo, &setup.exec);
        for (a, b) in weno.iter().zip(&lo) {
            assert!((a - b).abs() < 1e-13);
        }

        // gamma = 1, omega = 1 reduces to the symmetric high-order operator.
        let gamma = vec![1.0; 8];
        let mut weno1 = vec![0.0; space.n_dofs];
        weno_residual(
            space, &setup.mass, &setup.cmats, &grad, &gamma, 1.0, &nu, &nu, &u, &mut weno1,
            &mut scratch, &setup.exec,
        )
        .unwrap();
        let mut hos = vec![0.0; space.n_dofs];
        hos_residual(
            space, &setup.mass, &setup.cmats, &grad, 1.0, &nu, &u, &mut hos, &mut scratch,
            &setup.exec,
        )
        .unwrap();
        for (a, b) in weno1.iter().zip(&hos) {
            assert!((a - b).abs() < 1e-13);
        }

        // gamma = 1/2 is the arithmetic mean of the two.
        let gamma = vec![0.5; 8];
        let mut weno_half = vec![0.0; space.n_dofs];
        weno_residual(
            space, &setup.mass, &setup.cmats, &grad, &gamma, 1.0, &nu, &nu, &u, &mut weno_half,
            &mut scratch, &setup.exec,
        )
        .unwrap();
        for i in 0..space.n_dofs {
            let mean = 0.5 * (weno1[i] + lo[i]);
            assert!((weno_half[i] - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_form_is_symmetric_and_psd() {
        let setup = Setup::new(space_1d(7, 2, BoundaryMode::Periodic));
        let n = setup.space.n_dofs;
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let nu: Vec<f64> = (0..7).map(|_| rng.gen_range(0.01..0.2)).collect();
        let gamma: Vec<f64> = (0..7).map(|_| rng.gen_range(0.0..1.0)).collect();
        for _ in 0..4 {
            let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let suu = setup.weno_form(&gamma, &nu, &u, &u);
            let sww = setup.weno_form(&gamma, &nu, &w, &w);
            assert!(suu >= -1e-12 && sww >= -1e-12, "not PSD: {suu} {sww}");
            // s(u, w) fixes the sensor state at u for both evaluations.
            let suw = setup.weno_form(&gamma, &nu, &u, &w);
            let swu = {
                let grad = setup.grad(&w);
                let mut out = vec![0.0; n];
                let mut scratch = StabScratch::new(&setup.space);
                weno_residual(
                    &setup.space, &setup.mass, &setup.cmats, &grad, &gamma, 1.0, &nu, &nu, &w,
                    &mut out, &mut scratch, &setup.exec,
                )
                .unwrap();
                -u.iter().zip(&out).map(|(a, b)| a * b).sum::<f64>()
            };
            let scale = suu.abs() + sww.abs() + 1e-30;
            assert!(
                (suw - swu).abs() <= 1e-10 * scale,
                "asymmetry {:.3e} at scale {:.3e}",
                (suw - swu).abs(),
                scale
            );
        }
    }

    #[test]
    fn stabilization_residual_annihilates_constants() {
        // Contraction with the all-ones test array is zero for every scheme.
        let setup = Setup::new(space_1d(6, 3, BoundaryMode::Periodic));
        let space = &setup.space;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let u: Vec<f64> = (0..space.n_dofs).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let nu = vec![0.07; 6];
        let gamma: Vec<f64> = (0..6).map(|_| rng.gen_range(0.0..1.0)).collect();
        let grad = setup.grad(&u);
        let mut scratch = StabScratch::new(space);

        let mut out = vec![0.0; space.n_dofs];
        lo_residual(space, &nu, &u, &mut out, &setup.exec);
        assert!(out.iter().sum::<f64>().abs() < 1e-12);

        let mut out = vec![0.0; space.n_dofs];
        vms_residual(space, &nu, &u, &grad, &mut out, &setup.exec);
        assert!(out.iter().sum::<f64>().abs() < 1e-12);

        let mut out = vec![0.0; space.n_dofs];
        weno_residual(
            space, &setup.mass, &setup.cmats, &grad, &gamma, 1.0, &nu, &nu, &u, &mut out,
            &mut scratch, &setup.exec,
        )
        .unwrap();
        assert!(out.iter().sum::<f64>().abs() < 1e-12);

        // Constant fields produce identically zero residuals.
        let c = interpolate(space, |_| 4.0);
        let gc = setup.grad(&c.coeffs);
        let mut out = vec![0.0; space.n_dofs];
        weno_residual(
            space, &setup.mass, &setup.cmats, &gc, &gamma, 1.0, &nu, &nu, &c.coeffs, &mut out,
            &mut scratch, &setup.exec,
        )
        .unwrap();
        assert!(out.iter().all(|v| v.abs() < 1e-11));
    }

    #[test]
    fn energy_examples_and_nonnegativity() {
        let setup = Setup::new(space_1d(2, 1, BoundaryMode::Bounded));
        let space = &setup.space;
        // gamma = 0, nodal (0,1) on cell 0 of width h: energy nu/h.
        let u = vec![0.0, 1.0, 1.0];
        let nu = vec![0.3, 0.0];
        let grad = setup.grad(&u);
        let e = stabilization_energy(
            space, &grad, &[0.0, 0.0], 1.0, &nu, &nu, &u, &setup.exec,
        );
        assert!((e - 0.3 / 0.5).abs() < 1e-12);

        // Constant field: zero energy.
        let c = interpolate(space, |_| 1.0);
        let gc = setup.grad(&c.coeffs);
        let e = stabilization_energy(space, &gc, &[0.5, 0.5], 1.0, &nu, &nu, &c.coeffs, &setup.exec);
        assert!(e.abs() < 1e-14);

        // Nonnegativity for random fields and random gamma.
        let setup = Setup::new(space_1d(9, 2, BoundaryMode::Periodic));
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..5 {
            let u: Vec<f64> =
                (0..setup.space.n_dofs).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let gamma: Vec<f64> = (0..9).map(|_| rng.gen_range(0.0..1.0)).collect();
            let nu: Vec<f64> = (0..9).map(|_| rng.gen_range(0.0..0.3)).collect();
            let grad = setup.grad(&u);
            let e = stabilization_energy(
                &setup.space, &grad, &gamma, 1.0, &nu, &nu, &u, &setup.exec,
            );
            assert!(e >= 0.0);
        }
    }

    #[test]
    fn polynomial_exactness_on_bounded_mesh() {
        // Interpolant of a Q_p polynomial: gamma = 1 from the sensor and the
        // WENO contribution vanishes (continuous representable gradient).
        use crate::mesh::stencils as build_stencils;
        use crate::sensor::{Sensor, SensorConfig};
        let mesh =
            Arc::new(Mesh::build(2, &[4, 4], &[(0.0, 1.0); 2], BoundaryMode::Bounded).unwrap());
        let space = Arc::new(ElementSpace::build(mesh, 2, 4).unwrap());
        let setup = Setup::new(space.clone());
        let st = build_stencils(&space.mesh);
        let f = interpolate(&space, |x| 0.3 + x[0] + x[1] * x[0] + x[1] * x[1] * x[0] * x[0]);
        let sensor = Sensor::new(&space, SensorConfig::with_defaults(space.mesh.dim, space.mesh.diameter()));
        let mut gamma = Vec::new();
        sensor.gamma(&space, &st, &f.coeffs, &setup.exec, &mut gamma);
        assert!(gamma.iter().all(|&g| (g - 1.0).abs() < 1e-9), "gamma not 1 on polynomial");

        let grad = setup.grad(&f.coeffs);
        let nu = vec![0.1; space.mesh.n_cells];
        let mut out = vec![0.0; space.n_dofs];
        let mut scratch = StabScratch::new(&space);
        weno_residual(
            &space, &setup.mass, &setup.cmats, &grad, &gamma, 1.0, &nu, &nu, &f.coeffs, &mut out,
            &mut scratch, &setup.exec,
        )
        .unwrap();
        let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(peak < 1e-9, "residual peak {peak}");
    }
}
