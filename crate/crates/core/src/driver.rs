//! Orchestration of single runs, convergence studies and scheme sweeps.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use crate::element::{interpolate, ElementSpace, SolutionField};
use crate::mesh::Mesh;
use crate::problems::{self, ProblemDefinition};
use crate::system::{Scheme, Settings, System};
use crate::time::{integrate, rk_scheme, TimeController, TimeError};

/// Everything needed to execute one run.
#[derive(Clone, Copy, Debug)]
pub struct RunPlan {
    pub problem: ProblemDefinition,
    pub scheme: Scheme,
    pub degree: usize,
    /// Cells per axis (all axes equal).
    pub cells: usize,
    pub settings: Settings,
    pub final_time: f64,
    pub track_extrema: bool,
}

impl RunPlan {
    pub fn new(problem: ProblemDefinition, scheme: Scheme, degree: usize, cells: usize) -> RunPlan {
        let settings = Settings::for_problem(&problem, scheme, degree);
        RunPlan {
            problem,
            scheme,
            degree,
            cells,
            settings,
            final_time: problem.default_final_time,
            track_extrema: false,
        }
    }

    pub fn n_dofs(&self) -> usize {
        let p = self.degree;
        let per_axis = match self.problem.boundary {
            crate::mesh::BoundaryMode::Periodic => self.cells * p,
            crate::mesh::BoundaryMode::Bounded => self.cells * p + 1,
        };
        per_axis.pow(self.problem.dim as u32)
    }
}

/// Cells per axis reproducing a target total DoF count exactly.
pub fn cells_for_dofs(problem: &ProblemDefinition, degree: usize, dofs: usize) -> Result<usize, String> {
    let p = degree;
    let per_axis = match problem.dim {
        1 => dofs,
        _ => {
            let n = (dofs as f64).sqrt().round() as usize;
            if n * n != dofs {
                return Err(format!("dofs={dofs} is not a square, as a 2D node grid requires"));
            }
            n
        }
    };
    let cells = match problem.boundary {
        crate::mesh::BoundaryMode::Periodic => {
            if per_axis % p != 0 {
                return Err(format!("dofs per axis {per_axis} not divisible by p={p}"));
            }
            per_axis / p
        }
        crate::mesh::BoundaryMode::Bounded => {
            if per_axis < 1 || (per_axis - 1) % p != 0 {
                return Err(format!("dofs per axis {per_axis} does not match E*p+1 for p={p}"));
            }
            (per_axis - 1) / p
        }
    };
    Ok(cells)
}

#[derive(Debug)]
pub enum RunError {
    /// Invalid discretization parameters (maps to exit code 2).
    Invalid(String),
    /// Numerical failure during time integration (exit code 1).
    Numerical(String),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Invalid(m) => write!(f, "invalid configuration: {m}"),
            RunError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub problem: &'static str,
    pub scheme: &'static str,
    pub degree: usize,
    pub cells: usize,
    pub n_dofs: usize,
    pub steps: usize,
    pub final_time: f64,
    pub l1_error: Option<f64>,
    pub u_min: f64,
    pub u_max: f64,
    pub tracked_extrema: Option<(f64, f64)>,
    pub wall_seconds: f64,
}

impl RunReport {
    pub fn lines(&self) -> Vec<String> {
        let mut out = vec![
            format!("problem = {}", self.problem),
            format!("scheme = {}", self.scheme),
            format!("p = {}", self.degree),
            format!("cells_per_axis = {}", self.cells),
            format!("n_dofs = {}", self.n_dofs),
            format!("final_time = {:.6e}", self.final_time),
            format!("steps = {}", self.steps),
            format!("u_min = {:.6e}", self.u_min),
            format!("u_max = {:.6e}", self.u_max),
        ];
        if let Some(e) = self.l1_error {
            out.push(format!("l1_error = {:.6e}", e));
        }
        if let Some((lo, hi)) = self.tracked_extrema {
            out.push(format!("trajectory_min = {:.6e}", lo));
            out.push(format!("trajectory_max = {:.6e}", hi));
        }
        out.push(format!("wall_seconds = {:.3}", self.wall_seconds));
        out
    }
}

pub struct RunOutput {
    pub report: RunReport,
    pub field: SolutionField,
    pub system: System,
}

/// Build the discretization and advance it to the final time.
pub fn execute(plan: &RunPlan) -> Result<RunOutput, RunError> {
    let start = Instant::now();
    let problem = &plan.problem;
    let mesh = Mesh::build(
        problem.dim,
        &[plan.cells, plan.cells],
        &problem.domain,
        problem.boundary,
    )
    .map_err(|e| RunError::Invalid(e.to_string()))?;
    let space = Arc::new(
        ElementSpace::build_with(
            Arc::new(mesh),
            plan.degree,
            plan.settings.quad_points,
            plan.settings.node_placement,
        )
        .map_err(|e| RunError::Invalid(e.to_string()))?,
    );
    let mut system = System::new(problem, space.clone(), plan.scheme, plan.settings)
        .map_err(|e| RunError::Invalid(e.to_string()))?;
    let scheme = rk_scheme(plan.settings.rk_order).map_err(|e| RunError::Invalid(e.to_string()))?;

    let mut u = interpolate(&space, problem.initial).coeffs;
    let controller = TimeController { cfl: plan.settings.cfl, final_time: plan.final_time };
    let time_report =
        integrate(&mut system, &scheme, &controller, &mut u, plan.track_extrema).map_err(|e| {
            match e {
                TimeError::UnsupportedOrder(_) => RunError::Invalid(e.to_string()),
                other => RunError::Numerical(other.to_string()),
            }
        })?;

    let l1 = problem.exact.and_then(|exact| {
        (plan.final_time <= problem.exact_valid_until * (1.0 + 1e-12)).then(|| {
            problems::l1_error(&space, &u, exact, plan.final_time, system.exec())
        })
    });
    let (u_min, u_max) = problems::extrema(&u);
    let report = RunReport {
        problem: problem.name,
        scheme: plan.scheme.name(),
        degree: plan.degree,
        cells: plan.cells,
        n_dofs: space.n_dofs,
        steps: time_report.steps,
        final_time: time_report.final_time,
        l1_error: l1,
        u_min,
        u_max,
        tracked_extrema: time_report.tracked_extrema,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(RunOutput { report, field: SolutionField { space, coeffs: u }, system })
}

#[derive(Clone, Debug)]
pub struct ConvergenceRow {
    pub n_dofs: usize,
    pub cells: usize,
    pub error: f64,
    pub eoc: Option<f64>,
    pub steps: usize,
    pub wall_seconds: f64,
}

/// Grid convergence study over explicit DoF levels.
pub fn convergence(plan: &RunPlan, dof_levels: &[usize]) -> Result<Vec<ConvergenceRow>, RunError> {
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    let mut errors = Vec::new();
    let mut dofs = Vec::new();
    for &level in dof_levels {
        let cells = cells_for_dofs(&plan.problem, plan.degree, level)
            .map_err(RunError::Invalid)?;
        let mut p = *plan;
        p.cells = cells;
        let out = execute(&p)?;
        let error = out.report.l1_error.ok_or_else(|| {
            RunError::Invalid(format!(
                "problem '{}' has no exact solution at t = {}",
                plan.problem.name, plan.final_time
            ))
        })?;
        errors.push(error);
        dofs.push(out.report.n_dofs);
        rows.push(ConvergenceRow {
            n_dofs: out.report.n_dofs,
            cells,
            error,
            eoc: None,
            steps: out.report.steps,
            wall_seconds: out.report.wall_seconds,
        });
    }
    for (row, rate) in rows.iter_mut().zip(problems::eoc(&errors, &dofs, plan.problem.dim)) {
        row.eoc = rate;
    }
    Ok(rows)
}
