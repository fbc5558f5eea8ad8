//! Benchmark problem definitions, the L1 error measure and the
//! experimental order of convergence.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::element::ElementSpace;
use crate::exec::ExecMode;
use crate::flux::Flux;
use crate::mesh::BoundaryMode;

/// Per-problem parameter overrides applied on top of the global defaults
/// (explicit user configuration still wins).
#[derive(Clone, Copy, Debug, Default)]
pub struct ProblemOverrides {
    pub sensor_q: Option<f64>,
    pub lambda_ho: Option<f64>,
    pub lambda_lo: Option<f64>,
    /// Use equal linear weights 1/(m_e+1) instead of the floor rule.
    pub equal_linear_weights: bool,
    /// Lump the mass matrix when running the plain CG scheme.
    pub lumped_mass_for_cg: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct ProblemDefinition {
    pub name: &'static str,
    pub dim: usize,
    pub domain: [(f64, f64); 2],
    pub boundary: BoundaryMode,
    /// Dirichlet datum imposed weakly on inflow faces of bounded meshes.
    pub inflow_value: f64,
    pub flux: Flux,
    pub initial: fn([f64; 2]) -> f64,
    pub exact: Option<fn([f64; 2], f64) -> f64>,
    /// Time up to which `exact` is valid.
    pub exact_valid_until: f64,
    pub default_final_time: f64,
    pub overrides: ProblemOverrides,
}

pub const PROBLEM_NAMES: [&str; 5] = ["adv1d-smooth", "adv1d-disc", "burgers", "sbr", "kpp"];

pub fn by_name(name: &str) -> Option<ProblemDefinition> {
    match name {
        "adv1d-smooth" => Some(advection1d_smooth()),
        "adv1d-disc" => Some(advection1d_discontinuous()),
        "burgers" => Some(burgers1d()),
        "sbr" => Some(solid_body_rotation()),
        "kpp" => Some(kpp()),
        _ => None,
    }
}

fn smooth_initial(x: [f64; 2]) -> f64 {
    (2.0 * PI * (x[0] - 0.5)).cos()
}

fn smooth_exact(x: [f64; 2], t: f64) -> f64 {
    smooth_initial([(x[0] - t).rem_euclid(1.0), 0.0])
}

/// 1D advection of cos(2 pi (x - 1/2)) with unit velocity.
pub fn advection1d_smooth() -> ProblemDefinition {
    ProblemDefinition {
        name: "adv1d-smooth",
        dim: 1,
        domain: [(0.0, 1.0), (0.0, 1.0)],
        boundary: BoundaryMode::Periodic,
        inflow_value: 0.0,
        flux: Flux::ConstantAdvection { velocity: [1.0, 0.0] },
        initial: smooth_initial,
        exact: Some(smooth_exact),
        exact_valid_until: f64::INFINITY,
        default_final_time: 1.0,
        overrides: ProblemOverrides { sensor_q: Some(3.0), ..Default::default() },
    }
}

fn hat_bump_initial(x: [f64; 2]) -> f64 {
    let x = x[0];
    if (0.2..=0.4).contains(&x) {
        1.0
    } else if 0.5 < x && x < 0.9 {
        (10.0f64).exp() * (1.0 / (0.5 - x)).exp() * (1.0 / (x - 0.9)).exp()
    } else {
        0.0
    }
}

fn hat_bump_exact(x: [f64; 2], t: f64) -> f64 {
    hat_bump_initial([(x[0] - t).rem_euclid(1.0), 0.0])
}

/// 1D advection of a square hat plus a smooth bump.
pub fn advection1d_discontinuous() -> ProblemDefinition {
    ProblemDefinition {
        name: "adv1d-disc",
        dim: 1,
        domain: [(0.0, 1.0), (0.0, 1.0)],
        boundary: BoundaryMode::Periodic,
        inflow_value: 0.0,
        flux: Flux::ConstantAdvection { velocity: [1.0, 0.0] },
        initial: hat_bump_initial,
        exact: Some(hat_bump_exact),
        exact_valid_until: f64::INFINITY,
        default_final_time: 1.0,
        overrides: ProblemOverrides::default(),
    }
}

/// Critical (shock formation) time of the Burgers benchmark.
pub const BURGERS_CRITICAL_TIME: f64 = 1.0 / (2.0 * PI);

fn burgers_initial(x: [f64; 2]) -> f64 {
    (2.0 * PI * x[0]).sin()
}

/// Solves u = sin(2 pi (x - u t)) by Newton iteration (bisection fallback);
/// valid for t below the critical time.
pub fn burgers_exact(x: [f64; 2], t: f64) -> f64 {
    let x = x[0];
    let g = |u: f64| u - (2.0 * PI * (x - u * t)).sin();
    let dg = |u: f64| 1.0 + 2.0 * PI * t * (2.0 * PI * (x - u * t)).cos();
    let mut u = burgers_initial([x, 0.0]);
    for _ in 0..50 {
        let r = g(u);
        if r.abs() < 1e-13 {
            return u;
        }
        u -= r / dg(u);
    }
    // Bisection fallback: g(-1) <= 0 <= g(1) and g is monotone for t < t_c.
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// 1D inviscid Burgers equation with sinusoidal data.
pub fn burgers1d() -> ProblemDefinition {
    ProblemDefinition {
        name: "burgers",
        dim: 1,
        domain: [(0.0, 1.0), (0.0, 1.0)],
        boundary: BoundaryMode::Periodic,
        inflow_value: 0.0,
        flux: Flux::Burgers,
        initial: burgers_initial,
        exact: Some(burgers_exact),
        exact_valid_until: BURGERS_CRITICAL_TIME,
        default_final_time: 1.0,
        overrides: ProblemOverrides::default(),
    }
}

fn sbr_initial(x: [f64; 2]) -> f64 {
    let (x, y) = (x[0], x[1]);
    let hump = ((x - 0.25).powi(2) + (y - 0.5).powi(2)).sqrt();
    if hump <= 0.15 {
        return 0.25 + 0.25 * (PI * hump / 0.15).cos();
    }
    let cone = ((x - 0.5).powi(2) + (y - 0.25).powi(2)).sqrt();
    if cone <= 0.15 {
        return 1.0 - cone / 0.15;
    }
    let cyl = ((x - 0.5).powi(2) + (y - 0.75).powi(2)).sqrt();
    if cyl <= 0.15 && ((x - 0.5).abs() >= 0.025 || y >= 0.85) {
        return 1.0;
    }
    0.0
}

fn sbr_exact(x: [f64; 2], t: f64) -> f64 {
    // Rigid rotation: trace the characteristic back around the center.
    let angle = -2.0 * PI * t;
    let (dx, dy) = (x[0] - 0.5, x[1] - 0.5);
    let (c, s) = (angle.cos(), angle.sin());
    sbr_initial([0.5 + c * dx - s * dy, 0.5 + s * dx + c * dy])
}

/// Solid body rotation of a hump, a cone and a slotted cylinder.
pub fn solid_body_rotation() -> ProblemDefinition {
    ProblemDefinition {
        name: "sbr",
        dim: 2,
        domain: [(0.0, 1.0), (0.0, 1.0)],
        boundary: BoundaryMode::Bounded,
        inflow_value: 0.0,
        flux: Flux::RigidRotation { center: [0.5, 0.5], angular: 2.0 * PI },
        initial: sbr_initial,
        exact: Some(sbr_exact),
        exact_valid_until: f64::INFINITY,
        default_final_time: 1.0,
        overrides: ProblemOverrides::default(),
    }
}

fn kpp_initial(x: [f64; 2]) -> f64 {
    if (x[0] * x[0] + x[1] * x[1]).sqrt() <= 1.0 {
        3.5 * PI
    } else {
        0.25 * PI
    }
}

/// KPP problem with the nonconvex flux (sin u, cos u).
pub fn kpp() -> ProblemDefinition {
    ProblemDefinition {
        name: "kpp",
        dim: 2,
        domain: [(-2.0, 2.0), (-2.5, 1.5)],
        boundary: BoundaryMode::Bounded,
        inflow_value: 0.25 * PI,
        flux: Flux::Kpp,
        initial: kpp_initial,
        exact: None,
        exact_valid_until: 0.0,
        default_final_time: 1.0,
        overrides: ProblemOverrides {
            lambda_ho: Some(1.0),
            lambda_lo: Some(2.0),
            equal_linear_weights: true,
            lumped_mass_for_cg: true,
            ..Default::default()
        },
    }
}

/// L1 norm of u_h - u_exact(., t) by quadrature.
pub fn l1_error(
    space: &Arc<ElementSpace>,
    coeffs: &[f64],
    exact: fn([f64; 2], f64) -> f64,
    t: f64,
    exec: &ExecMode,
) -> f64 {
    let r = &space.reference;
    let n_q = r.n_q;
    let parts = exec.map(space.mesh.n_cells, |cell| {
        let mut local = [0.0; 25];
        let local = &mut local[..r.n_loc];
        space.gather(coeffs, cell, local);
        let origin = space.mesh.cell_origin(cell);
        let mut acc = 0.0;
        for q in 0..n_q {
            let mut u = 0.0;
            for (dof, &c) in local.iter().enumerate() {
                u += c * r.center.row(0, dof)[q];
            }
            let x = [origin[0] + space.quad_offsets[q][0], origin[1] + space.quad_offsets[q][1]];
            acc += space.quad_weights[q] * (u - exact(x, t)).abs();
        }
        acc
    });
    parts.iter().sum()
}

/// Experimental orders of convergence: entry k (k >= 1) is
/// log(E_{k-1}/E_k) / log(n_k/n_{k-1}) with n = N_h^(1/dim).
pub fn eoc(errors: &[f64], dof_counts: &[usize], dim: usize) -> Vec<Option<f64>> {
    let mut out = vec![None; errors.len()];
    for k in 1..errors.len() {
        let n_prev = (dof_counts[k - 1] as f64).powf(1.0 / dim as f64);
        let n_cur = (dof_counts[k] as f64).powf(1.0 / dim as f64);
        out[k] = Some((errors[k - 1] / errors[k]).ln() / (n_cur / n_prev).ln());
    }
    out
}

/// Minimum and maximum nodal value of a coefficient vector.
pub fn extrema(coeffs: &[f64]) -> (f64, f64) {
    coeffs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::interpolate;
    use crate::mesh::Mesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn smooth_advection_values() {
        let p = advection1d_smooth();
        assert!(((p.initial)([0.5, 0.0]) - 1.0).abs() < 1e-15);
        let ex = p.exact.unwrap();
        // Full period returns the initial condition.
        for x in [0.1, 0.33, 0.8] {
            assert!((ex([x, 0.0], 1.0) - (p.initial)([x, 0.0])).abs() < 1e-12);
        }
        // Characteristic tracing: u(1/4, 1/4) = u0(0) = cos(-pi) = -1.
        assert!((ex([0.25, 0.0], 0.25) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn hat_bump_values() {
        let p = advection1d_discontinuous();
        assert_eq!((p.initial)([0.3, 0.0]), 1.0);
        assert_eq!((p.initial)([0.45, 0.0]), 0.0);
        // exp(10) exp(-5) exp(-5) = 1 at x = 0.7.
        assert!(((p.initial)([0.7, 0.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn burgers_exact_oracle() {
        let p = burgers1d();
        let ex = p.exact.unwrap();
        for x in [0.0, 0.25, 0.6, 0.99] {
            assert!((ex([x, 0.0], 0.0) - (2.0 * PI * x).sin()).abs() < 1e-12);
        }
        // Fixed point by odd symmetry.
        for t in [0.01, 0.05, 0.1, 0.14] {
            assert!(ex([0.5, 0.0], t).abs() < 1e-12);
        }
        // Implicit relation satisfied to high accuracy up to 0.9 t_c.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let x: f64 = rng.gen_range(0.0..1.0);
            let t: f64 = rng.gen_range(0.0..0.9 * BURGERS_CRITICAL_TIME);
            let u = ex([x, 0.0], t);
            let defect = u - (2.0 * PI * (x - u * t)).sin();
            assert!(defect.abs() < 1e-12, "x={x} t={t}: {defect:.3e}");
        }
        // Newton at (0.25, 0.1) converges from u0 = 1.
        let u = ex([0.25, 0.0], 0.1);
        assert!((u - (2.0 * PI * (0.25 - u * 0.1)).sin()).abs() < 1e-12);
    }

    #[test]
    fn sbr_initial_and_exact() {
        let p = solid_body_rotation();
        assert!(((p.initial)([0.25, 0.5]) - 0.5).abs() < 1e-15);
        assert!(((p.initial)([0.5, 0.25]) - 1.0).abs() < 1e-15);
        assert_eq!((p.initial)([0.5, 0.75]), 0.0); // inside the slot
        assert_eq!((p.initial)([0.5, 0.88]), 1.0); // cylinder above the slot
        let ex = p.exact.unwrap();
        for pt in [[0.3, 0.4], [0.5, 0.8], [0.7, 0.2]] {
            assert!((ex(pt, 1.0) - (p.initial)(pt)).abs() < 1e-12);
            // Quarter turn moves the cone center to (0.75, 0.5).
        }
        assert!((ex([0.75, 0.5], 0.25) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kpp_initial_extremes_at_nodes() {
        let p = kpp();
        assert!(((p.initial)([0.0, 0.0]) - 3.5 * PI).abs() < 1e-15);
        assert!(((p.initial)([2.0, 1.0]) - 0.25 * PI).abs() < 1e-15);
        let mesh = Arc::new(
            Mesh::build(2, &[16, 16], &[p.domain[0], p.domain[1]], p.boundary).unwrap(),
        );
        let space = Arc::new(ElementSpace::build(mesh, 1, 3).unwrap());
        let f = interpolate(&space, p.initial);
        let (lo, hi) = extrema(&f.coeffs);
        assert_eq!(lo, 0.25 * PI);
        assert_eq!(hi, 3.5 * PI);
    }

    #[test]
    fn l1_error_examples() {
        let exec = ExecMode::new(1);
        let mesh = Arc::new(Mesh::build(1, &[8], &[(0.0, 1.0)], BoundaryMode::Periodic).unwrap());
        let space = Arc::new(ElementSpace::build(mesh, 2, 4).unwrap());

        // Interpolant of a linear exact solution (bounded mesh so the
        // interpolant does not wrap): error at rounding level.
        fn linear(x: [f64; 2], _t: f64) -> f64 {
            0.3 * x[0] + 0.1
        }
        let bmesh = Arc::new(Mesh::build(1, &[8], &[(0.0, 1.0)], BoundaryMode::Bounded).unwrap());
        let bspace = Arc::new(ElementSpace::build(bmesh, 2, 4).unwrap());
        let f = interpolate(&bspace, |x| linear(x, 0.0));
        assert!(l1_error(&bspace, &f.coeffs, linear, 0.0, &exec) < 1e-13);

        // |0 - 1| over the unit interval.
        fn one(_x: [f64; 2], _t: f64) -> f64 {
            1.0
        }
        let z = crate::element::SolutionField::zeros(space.clone());
        assert!((l1_error(&space, &z.coeffs, one, 0.0, &exec) - 1.0).abs() < 1e-13);

        // Integral of |cos| over one period: 2/pi.
        let err = l1_error(&space, &z.coeffs, smooth_exact, 0.0, &exec);
        assert!((err - 2.0 / PI).abs() < 1e-6, "{err}");
    }

    #[test]
    fn eoc_reproduces_paper_style_rates() {
        // Errors exactly quartering with doubled resolution: rate 2.
        let rates = eoc(&[8.20e-3, 2.05e-3], &[16, 32], 1);
        assert!((rates[1].unwrap() - 2.00).abs() < 5e-3);
        let rates = eoc(&[1.0, 0.5], &[100, 200], 1);
        assert!((rates[1].unwrap() - 1.0).abs() < 1e-12);
        let rates = eoc(&[2.72e-4, 3.26e-5], &[32, 64], 1);
        assert!((rates[1].unwrap() - 3.06).abs() < 5e-3);
        // 2D counts enter through their square root.
        let rates = eoc(&[1.0, 0.25], &[64 * 64, 128 * 128], 2);
        assert!((rates[1].unwrap() - 2.0).abs() < 1e-12);
        assert!(rates[0].is_none());
    }

    #[test]
    fn problem_lookup() {
        for name in PROBLEM_NAMES {
            assert!(by_name(name).is_some());
        }
        assert!(by_name("euler").is_none());
    }
}
