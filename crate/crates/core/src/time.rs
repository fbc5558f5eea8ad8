//! Explicit Runge-Kutta integrators for M du/dt = R(u).
//!
//! Order p solutions are advanced with a scheme of order p+1: SSP-RK2
//! (Heun) and SSP-RK3 (Shu-Osher) in Butcher form, the classical RK4, and
//! the six-stage fifth-order member of the Fehlberg 4(5) pair. The time
//! step is Delta t = CFL * h / (lambda_max * (2p + 1)), recomputed every
//! step, clipped to land exactly on the final time.

use std::fmt;

use crate::assembly::{MassOperator, MassSolveError};

/// Explicit Butcher tableau.
#[derive(Clone, Debug)]
pub struct RkScheme {
    pub order: usize,
    pub stages: usize,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug)]
pub enum TimeError {
    UnsupportedOrder(usize),
    MassSolve(MassSolveError),
    /// Non-finite values detected after a stage update.
    NonFinite { step: usize, stage: usize },
}

impl fmt::Display for TimeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeError::UnsupportedOrder(o) => write!(f, "unsupported RK order {o} (need 2..=5)"),
            TimeError::MassSolve(e) => write!(f, "{e}"),
            TimeError::NonFinite { step, stage } => {
                write!(f, "non-finite solution values at step {step}, stage {stage}")
            }
        }
    }
}

impl std::error::Error for TimeError {}

impl From<MassSolveError> for TimeError {
    fn from(e: MassSolveError) -> TimeError {
        TimeError::MassSolve(e)
    }
}

pub fn rk_scheme(order: usize) -> Result<RkScheme, TimeError> {
    let scheme = match order {
        2 => RkScheme {
            order,
            stages: 2,
            a: vec![vec![], vec![1.0]],
            b: vec![0.5, 0.5],
            c: vec![0.0, 1.0],
        },
        3 => RkScheme {
            order,
            stages: 3,
            a: vec![vec![], vec![1.0], vec![0.25, 0.25]],
            b: vec![1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
            c: vec![0.0, 1.0, 0.5],
        },
        4 => RkScheme {
            order,
            stages: 4,
            a: vec![vec![], vec![0.5], vec![0.0, 0.5], vec![0.0, 0.0, 1.0]],
            b: vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
            c: vec![0.0, 0.5, 0.5, 1.0],
        },
        5 => RkScheme {
            order,
            stages: 6,
            a: vec![
                vec![],
                vec![0.25],
                vec![3.0 / 32.0, 9.0 / 32.0],
                vec![1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0],
                vec![439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0],
                vec![-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0],
            ],
            b: vec![
                16.0 / 135.0,
                0.0,
                6656.0 / 12825.0,
                28561.0 / 56430.0,
                -9.0 / 50.0,
                2.0 / 55.0,
            ],
            c: vec![0.0, 0.25, 3.0 / 8.0, 12.0 / 13.0, 1.0, 0.5],
        },
        _ => return Err(TimeError::UnsupportedOrder(order)),
    };
    Ok(scheme)
}

/// Semi-discrete system M du/dt = R(u) driven by the integrator.
pub trait SemiDiscrete {
    fn n_dofs(&self) -> usize;
    /// Full residual (convective + stabilization + boundary terms).
    fn rhs(&mut self, u: &[f64], out: &mut [f64]) -> Result<(), MassSolveError>;
    fn mass(&self) -> &MassOperator;
    /// Global wave speed bound for the CFL condition.
    fn max_wave_speed(&mut self, u: &[f64]) -> f64;
    /// h_min / (2p + 1), the mesh-dependent factor of the time step.
    fn cfl_length(&self) -> f64;
}

/// Stage storage reused across steps; stage solutions double as warm
/// starts for the mass solves of the next step.
#[derive(Clone, Debug)]
pub struct StepScratch {
    k: Vec<Vec<f64>>,
    u_stage: Vec<f64>,
    rhs: Vec<f64>,
}

impl StepScratch {
    pub fn new(n: usize, scheme: &RkScheme) -> StepScratch {
        StepScratch {
            k: vec![vec![0.0; n]; scheme.stages],
            u_stage: vec![0.0; n],
            rhs: vec![0.0; n],
        }
    }
}

/// One explicit RK step of size dt (no step-size control).
pub fn step(
    sys: &mut impl SemiDiscrete,
    scheme: &RkScheme,
    u: &mut [f64],
    dt: f64,
    scratch: &mut StepScratch,
) -> Result<(), TimeError> {
    let n = u.len();
    for s in 0..scheme.stages {
        scratch.u_stage.copy_from_slice(u);
        for (j, &a) in scheme.a[s].iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let kj = &scratch.k[j];
            for i in 0..n {
                scratch.u_stage[i] += dt * a * kj[i];
            }
        }
        sys.rhs(&scratch.u_stage, &mut scratch.rhs)?;
        sys.mass().solve_into(&scratch.rhs, &mut scratch.k[s])?;
        if !scratch.k[s].iter().all(|v| v.is_finite()) {
            return Err(TimeError::NonFinite { step: 0, stage: s });
        }
    }
    for (s, &b) in scheme.b.iter().enumerate() {
        if b == 0.0 {
            continue;
        }
        let ks = &scratch.k[s];
        for i in 0..n {
            u[i] += dt * b * ks[i];
        }
    }
    Ok(())
}

/// CFL-based step controller.
#[derive(Clone, Copy, Debug)]
pub struct TimeController {
    pub cfl: f64,
    pub final_time: f64,
}

#[derive(Clone, Debug)]
pub struct TimeReport {
    pub steps: usize,
    pub final_time: f64,
    /// Extrema of nodal values over the whole trajectory, when tracked.
    pub tracked_extrema: Option<(f64, f64)>,
}

/// Advance to the final time, recomputing dt from the current wave speed
/// every step.
pub fn integrate(
    sys: &mut impl SemiDiscrete,
    scheme: &RkScheme,
    controller: &TimeController,
    u: &mut [f64],
    track_extrema: bool,
) -> Result<TimeReport, TimeError> {
    let mut scratch = StepScratch::new(u.len(), scheme);
    let t_end = controller.final_time;
    let mut t = 0.0;
    let mut steps = 0usize;
    let mut extrema = if track_extrema {
        Some(u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        }))
    } else {
        None
    };
    let tol = 1e-12 * t_end.max(1.0);
    while t < t_end - tol {
        let lambda = sys.max_wave_speed(u);
        let mut dt = if lambda > 1e-300 {
            controller.cfl * sys.cfl_length() / lambda
        } else {
            t_end - t
        };
        dt = dt.min(t_end - t);
        step(sys, scheme, u, dt, &mut scratch).map_err(|e| match e {
            TimeError::NonFinite { stage, .. } => TimeError::NonFinite { step: steps, stage },
            other => other,
        })?;
        t += dt;
        steps += 1;
        if let Some((lo, hi)) = extrema.as_mut() {
            for &v in u.iter() {
                *lo = lo.min(v);
                *hi = hi.max(v);
            }
        }
    }
    Ok(TimeReport { steps, final_time: t, tracked_extrema: extrema })
}
