//! The assembled semi-discrete system for one benchmark run: convective
//! term, weak inflow boundary, and the selected stabilization scheme.

use std::fmt;
use std::sync::Arc;

use crate::assembly::{
    convective_residual, inflow_boundary_residual, MassKind, MassOperator, MassSolveError,
};
use crate::element::{ElementSpace, NodePlacement};
use crate::exec::ExecMode;
use crate::flux::Flux;
use crate::gradient::{
    assemble_gradient_matrices, project_consistent, project_lumped, GradientMatrices,
    RecoveredGradient, RecoveryMethod,
};
use crate::mesh::{stencils, BoundaryFace, BoundaryMode, StencilSet};
use crate::problems::ProblemDefinition;
use crate::sensor::{LinearWeightRule, Sensor, SensorConfig};
use crate::stabilization::{
    cell_wave_speed, lo_residual, stabilization_energy, viscosities, vms_residual, weno_residual,
    CellViscosity, StabScratch,
};
use crate::time::SemiDiscrete;

/// Stabilization scheme selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Cg,
    Vms,
    Ho,
    Lo,
    Weno,
}

pub const SCHEME_NAMES: [&str; 5] = ["CG", "VMS", "HO", "LO", "WENO"];

impl Scheme {
    pub fn parse(s: &str) -> Option<Scheme> {
        match s.to_ascii_uppercase().as_str() {
            "CG" => Some(Scheme::Cg),
            "VMS" => Some(Scheme::Vms),
            "HO" => Some(Scheme::Ho),
            "LO" => Some(Scheme::Lo),
            "WENO" => Some(Scheme::Weno),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Cg => "CG",
            Scheme::Vms => "VMS",
            Scheme::Ho => "HO",
            Scheme::Lo => "LO",
            Scheme::Weno => "WENO",
        }
    }
}

/// Fully resolved numerical settings of a run.
#[derive(Clone, Copy, Debug)]
pub struct Settings {
    pub omega: f64,
    pub sensor_q: f64,
    pub beta_q: f64,
    pub r: i32,
    pub epsilon: f64,
    pub linear_weights: LinearWeightRule,
    pub lambda_ho: Option<f64>,
    pub lambda_lo: Option<f64>,
    pub recovery: RecoveryMethod,
    pub mass_kind: MassKind,
    /// h_e = mesh_size_factor * cell diameter.
    pub mesh_size_factor: f64,
    pub cfl: f64,
    pub rk_order: usize,
    pub quad_points: usize,
    pub node_placement: NodePlacement,
    pub threads: usize,
}

impl Settings {
    /// Global defaults merged with the per-problem overrides.
    pub fn for_problem(problem: &ProblemDefinition, scheme: Scheme, degree: usize) -> Settings {
        let ov = &problem.overrides;
        Settings {
            omega: 1.0,
            sensor_q: ov.sensor_q.unwrap_or(1.0),
            // Classical smoothness-indicator exponent: 2 in 1D, 1 in 2D.
            beta_q: if problem.dim == 1 { 2.0 } else { 1.0 },
            r: 2,
            epsilon: 1e-6,
            linear_weights: if ov.equal_linear_weights {
                LinearWeightRule::Equal
            } else {
                LinearWeightRule::Floor(1e-3)
            },
            lambda_ho: ov.lambda_ho,
            lambda_lo: ov.lambda_lo,
            recovery: RecoveryMethod::Consistent,
            mass_kind: if scheme == Scheme::Cg && ov.lumped_mass_for_cg {
                MassKind::Lumped
            } else {
                MassKind::Consistent
            },
            mesh_size_factor: 1.0,
            cfl: 0.1,
            rk_order: degree + 1,
            quad_points: degree + 2,
            node_placement: NodePlacement::Equispaced,
            threads: 1,
        }
    }
}

#[derive(Debug)]
pub enum SystemError {
    /// HO and WENO need the consistent-mass recovery for the symmetric form.
    LumpedRecoveryWithSymmetricScheme,
}

impl fmt::Display for SystemError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemError::LumpedRecoveryWithSymmetricScheme => {
                write!(f, "HO/WENO schemes require recovery=consistent")
            }
        }
    }
}

impl std::error::Error for SystemError {}

/// Semi-discrete operator M du/dt = R(u) for one problem + scheme.
pub struct System {
    pub space: Arc<ElementSpace>,
    pub scheme: Scheme,
    pub settings: Settings,
    pub flux: Flux,
    pub h_local: f64,
    stencil_set: StencilSet,
    boundary_faces: Vec<BoundaryFace>,
    inflow_value: f64,
    mass_time: MassOperator,
    mass_proj: MassOperator,
    cmats: Option<GradientMatrices>,
    sensor: Option<Sensor>,
    exec: ExecMode,
    // Reused state (warm starts for the projection solves).
    grad: RecoveredGradient,
    gamma: Vec<f64>,
    scratch: StabScratch,
    visc_cache: Option<CellViscosity>,
    speed_cache: Option<f64>,
}

impl System {
    pub fn new(
        problem: &ProblemDefinition,
        space: Arc<ElementSpace>,
        scheme: Scheme,
        settings: Settings,
    ) -> Result<System, SystemError> {
        if matches!(scheme, Scheme::Ho | Scheme::Weno)
            && settings.recovery == RecoveryMethod::Lumped
        {
            return Err(SystemError::LumpedRecoveryWithSymmetricScheme);
        }
        let h_local = settings.mesh_size_factor * space.mesh.diameter();
        let needs_projection = matches!(scheme, Scheme::Vms | Scheme::Ho | Scheme::Weno);
        let mass_time = MassOperator::assemble(&space, settings.mass_kind);
        let mut mass_proj = mass_time.clone();
        mass_proj.kind = MassKind::Consistent;
        let cmats = needs_projection.then(|| assemble_gradient_matrices(&space));
        let sensor = (scheme == Scheme::Weno).then(|| {
            Sensor::new(
                &space,
                SensorConfig {
                    q: settings.sensor_q,
                    beta_q: settings.beta_q,
                    r: settings.r,
                    epsilon: settings.epsilon,
                    weights: settings.linear_weights,
                    h_local,
                },
            )
        });
        let boundary_faces = match space.mesh.boundary {
            BoundaryMode::Bounded => space.mesh.boundary_faces(),
            BoundaryMode::Periodic => Vec::new(),
        };
        let grad = RecoveredGradient::zeros(&space);
        let scratch = StabScratch::new(&space);
        let stencil_set = stencils(&space.mesh);
        Ok(System {
            scheme,
            settings,
            flux: problem.flux,
            h_local,
            stencil_set,
            boundary_faces,
            inflow_value: problem.inflow_value,
            mass_time,
            mass_proj,
            cmats,
            sensor,
            exec: ExecMode::new(settings.threads),
            grad,
            gamma: Vec::new(),
            scratch,
            visc_cache: None,
            speed_cache: None,
            space,
        })
    }

    pub fn exec(&self) -> &ExecMode {
        &self.exec
    }

    /// Blending factors of the most recent WENO residual evaluation.
    pub fn last_gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn sensor(&self) -> Option<&Sensor> {
        self.sensor.as_ref()
    }

    pub fn stencil_set(&self) -> &StencilSet {
        &self.stencil_set
    }

    fn viscosity(&mut self, u: &[f64]) -> CellViscosity {
        if let Some(v) = &self.visc_cache {
            return v.clone();
        }
        let v = viscosities(
            &self.space,
            &self.flux,
            u,
            self.h_local,
            self.settings.lambda_ho,
            self.settings.lambda_lo,
            &self.exec,
        );
        if self.flux.speed_is_state_independent() {
            self.visc_cache = Some(v.clone());
        }
        v
    }

    /// Quadratic form s_h(u; u, u) of the configured stabilization
    /// (omega = 1 path); zero for the plain CG scheme.
    pub fn energy(&mut self, u: &[f64]) -> Result<f64, MassSolveError> {
        let n_cells = self.space.mesh.n_cells;
        let visc = self.viscosity(u);
        let gamma = match self.scheme {
            Scheme::Cg => return Ok(0.0),
            Scheme::Lo => vec![0.0; n_cells],
            Scheme::Ho | Scheme::Vms => vec![1.0; n_cells],
            Scheme::Weno => {
                let sensor = self.sensor.as_ref().expect("sensor");
                let mut g = Vec::new();
                sensor.gamma(&self.space, &self.stencil_set, u, &self.exec, &mut g);
                g
            }
        };
        if self.scheme != Scheme::Lo {
            self.project(u)?;
        }
        Ok(stabilization_energy(
            &self.space,
            &self.grad,
            &gamma,
            1.0,
            &visc.nu_ho,
            &visc.nu_lo,
            u,
            &self.exec,
        ))
    }

    fn project(&mut self, u: &[f64]) -> Result<(), MassSolveError> {
        match self.settings.recovery {
            RecoveryMethod::Consistent => project_consistent(
                &self.space,
                &self.mass_proj,
                self.cmats.as_ref().expect("gradient matrices"),
                u,
                &mut self.grad,
            ),
            RecoveryMethod::Lumped => {
                project_lumped(&self.space, u, &mut self.grad);
                Ok(())
            }
        }
    }
}

impl SemiDiscrete for System {
    fn n_dofs(&self) -> usize {
        self.space.n_dofs
    }

    fn rhs(&mut self, u: &[f64], out: &mut [f64]) -> Result<(), MassSolveError> {
        out.fill(0.0);
        convective_residual(&self.space, &self.flux, u, out, &self.exec);
        if !self.boundary_faces.is_empty() {
            inflow_boundary_residual(
                &self.space,
                &self.flux,
                self.inflow_value,
                &self.boundary_faces,
                u,
                out,
            );
        }
        match self.scheme {
            Scheme::Cg => {}
            Scheme::Lo => {
                let visc = self.viscosity(u);
                lo_residual(&self.space, &visc.nu_lo, u, out, &self.exec);
            }
            Scheme::Vms => {
                let visc = self.viscosity(u);
                self.project(u)?;
                vms_residual(&self.space, &visc.nu_ho, u, &self.grad, out, &self.exec);
            }
            Scheme::Ho | Scheme::Weno => {
                let n_cells = self.space.mesh.n_cells;
                if self.scheme == Scheme::Weno {
                    let sensor = self.sensor.as_ref().expect("sensor");
                    // Freshest data: the sensor sees each stage's input field.
                    let mut gamma = std::mem::take(&mut self.gamma);
                    sensor.gamma(&self.space, &self.stencil_set, u, &self.exec, &mut gamma);
                    self.gamma = gamma;
                } else {
                    self.gamma.clear();
                    self.gamma.resize(n_cells, 1.0);
                }
                let visc = self.viscosity(u);
                self.project(u)?;
                weno_residual(
                    &self.space,
                    &self.mass_proj,
                    self.cmats.as_ref().expect("gradient matrices"),
                    &self.grad,
                    &self.gamma,
                    self.settings.omega,
                    &visc.nu_ho,
                    &visc.nu_lo,
                    u,
                    out,
                    &mut self.scratch,
                    &self.exec,
                )?;
            }
        }
        Ok(())
    }

    fn mass(&self) -> &MassOperator {
        &self.mass_time
    }

    fn max_wave_speed(&mut self, u: &[f64]) -> f64 {
        if let Some(s) = self.speed_cache {
            return s;
        }
        let space = &self.space;
        let flux = &self.flux;
        let s = self
            .exec
            .max(space.mesh.n_cells, |cell| cell_wave_speed(space, flux, u, cell));
        if self.flux.speed_is_state_independent() {
            self.speed_cache = Some(s);
        }
        s
    }

    fn cfl_length(&self) -> f64 {
        self.h_local / (2.0 * self.space.degree as f64 + 1.0)
    }
}

impl Flux {
    /// Whether |f'| is independent of the transported state (allowing the
    /// per-cell wave speed to be cached across time steps).
    pub fn speed_is_state_independent(&self) -> bool {
        !matches!(self, Flux::Burgers)
    }
}
