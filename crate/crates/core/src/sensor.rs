//! WENO-based smoothness sensor.
//!
//! For each cell the solution is compared against a Hermite WENO
//! reconstruction u*: candidates extend the neighbor polynomials into the
//! cell (with the cell average corrected), are weighted by inverse
//! smoothness, and the blending factor
//!
//!   gamma_e = 1 - min(1, ||u^e - u^{e,*}||_e / ||u^e||_e)^q
//!
//! selects high-order (gamma = 1) versus low-order (gamma = 0)
//! dissipation. The seminorm ||.||_e is the scaled Sobolev seminorm
//! sum_{1<=|k|<=p} h_e^{2|k|-d} int |D^k v|^2.

use crate::element::{side_index, ElementSpace};
use crate::exec::ExecMode;
use crate::mesh::{Neighbor, StencilSet};

const MAX_Q: usize = 36;
const MAX_CAND: usize = 5;

/// Rule for the linear weights of the reconstruction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LinearWeightRule {
    /// Weight `floor` per neighbor stencil, 1 - m_e * floor for the cell itself.
    Floor(f64),
    /// All stencils weighted equally, 1 / (m_e + 1).
    Equal,
}

impl LinearWeightRule {
    pub fn weights(&self, m_e: usize, out: &mut [f64]) {
        match *self {
            LinearWeightRule::Floor(c) => {
                out[0] = 1.0 - m_e as f64 * c;
                out[1..=m_e].fill(c);
            }
            LinearWeightRule::Equal => out[..=m_e].fill(1.0 / (m_e + 1) as f64),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SensorConfig {
    /// Sensor exponent q >= 1.
    pub q: f64,
    /// Exponent applied to the seminorm inside beta_l.
    pub beta_q: f64,
    /// Nonlinear weight exponent r.
    pub r: i32,
    /// Regularization added to beta_l before raising to r.
    pub epsilon: f64,
    pub weights: LinearWeightRule,
    /// Local mesh size h_e used by the seminorm scaling.
    pub h_local: f64,
}

impl SensorConfig {
    pub fn with_defaults(dim: usize, h_local: f64) -> SensorConfig {
        SensorConfig {
            q: 1.0,
            // Classical indicator exponent: 2 in 1D, 1 in 2D.
            beta_q: if dim == 1 { 2.0 } else { 1.0 },
            r: 2,
            epsilon: 1e-6,
            weights: LinearWeightRule::Floor(1e-3),
            h_local,
        }
    }
}

/// Per-cell diagnostics of the sensor evaluation.
#[derive(Clone, Debug)]
pub struct SensorState {
    pub gamma: Vec<f64>,
    pub beta: Vec<Vec<f64>>,
    pub omega: Vec<Vec<f64>>,
    /// ||u^e - u^{e,*}||_e per cell.
    pub distance: Vec<f64>,
    /// ||u^e||_e per cell.
    pub scale: Vec<f64>,
}

/// Normalized nonlinear weights from smoothness values and linear weights.
pub fn nonlinear_weights(beta: &[f64], linear: &[f64], r: i32, epsilon: f64, out: &mut [f64]) {
    let mut total = 0.0;
    for l in 0..beta.len() {
        let w = linear[l] / (epsilon + beta[l]).powi(r);
        out[l] = w;
        total += w;
    }
    for w in out[..beta.len()].iter_mut() {
        *w /= total;
    }
}

/// Evaluates gamma_e for every cell; also exposes seminorms of field
/// restrictions and the candidate list for tests and diagnostics.
pub struct Sensor {
    pub cfg: SensorConfig,
    /// h_e^{2|k|-d} * (physical derivative scaling)^2 per multi-index.
    factors: Vec<f64>,
}

impl Sensor {
    pub fn new(space: &ElementSpace, cfg: SensorConfig) -> Sensor {
        Sensor { factors: seminorm_factors(space, cfg.h_local), cfg }
    }

    /// Fill `gamma` with the per-cell blending factors.
    pub fn gamma(
        &self,
        space: &ElementSpace,
        stencils: &StencilSet,
        coeffs: &[f64],
        exec: &ExecMode,
        gamma: &mut Vec<f64>,
    ) {
        let eps_scale = degenerate_scale(coeffs);
        let out = exec.map_with(
            space.mesh.n_cells,
            || SensorScratch::new(space),
            |scratch, cell| self.cell_gamma(space, stencils, coeffs, cell, eps_scale, scratch).0,
        );
        *gamma = out;
    }

    /// Full diagnostic state (serial; used by dumps and tests).
    pub fn state(&self, space: &ElementSpace, stencils: &StencilSet, coeffs: &[f64]) -> SensorState {
        let eps_scale = degenerate_scale(coeffs);
        let n = space.mesh.n_cells;
        let mut scratch = SensorScratch::new(space);
        let mut st = SensorState {
            gamma: Vec::with_capacity(n),
            beta: Vec::with_capacity(n),
            omega: Vec::with_capacity(n),
            distance: Vec::with_capacity(n),
            scale: Vec::with_capacity(n),
        };
        for cell in 0..n {
            let (g, detail) = self.cell_gamma(space, stencils, coeffs, cell, eps_scale, &mut scratch);
            let m = stencils.stencil_count(cell);
            st.gamma.push(g);
            st.beta.push(detail.beta[..=m].to_vec());
            st.omega.push(detail.omega[..=m].to_vec());
            st.distance.push(detail.distance);
            st.scale.push(detail.scale);
        }
        st
    }

    fn cell_gamma(
        &self,
        space: &ElementSpace,
        stencils: &StencilSet,
        coeffs: &[f64],
        cell: usize,
        eps_scale: f64,
        scratch: &mut SensorScratch,
    ) -> (f64, CellDetail) {
        let r = &space.reference;
        let n_q = r.n_q;
        let n_k = r.multi_indices.len();
        let stride = n_k * n_q;
        let nbrs = &stencils.neighbors[cell];
        let m_e = nbrs.len();

        // Derivative rows (|k| >= 1) of the own polynomial and of each
        // neighbor extension, at the cell's quadrature points.
        let mut local = [0.0; 25];
        let local = &mut local[..r.n_loc];
        let derivs = &mut scratch.derivs;
        space.gather(coeffs, cell, local);
        for k in 1..n_k {
            r.center.apply(k, local, &mut derivs[k * n_q..(k + 1) * n_q]);
        }
        for (l, nb) in nbrs.iter().enumerate() {
            space.gather(coeffs, nb.cell, local);
            let table = &r.ext[2 * nb.axis + side_index(nb.side)];
            let base = (l + 1) * stride;
            for k in 1..n_k {
                table.apply(k, local, &mut derivs[base + k * n_q..base + (k + 1) * n_q]);
            }
        }

        let seminorm_of = |rows: &[f64]| -> f64 {
            let mut acc = 0.0;
            for k in 1..n_k {
                let f = self.factors[k];
                let row = &rows[k * n_q..(k + 1) * n_q];
                let mut s = 0.0;
                for (q, &v) in row.iter().enumerate() {
                    s += space.quad_weights[q] * v * v;
                }
                acc += f * s;
            }
            acc.sqrt()
        };

        let mut detail = CellDetail::default();
        for l in 0..=m_e {
            detail.beta[l] = seminorm_of(&derivs[l * stride..(l + 1) * stride]).powf(self.cfg.beta_q);
        }
        let mut linear = [0.0; MAX_CAND];
        self.cfg.weights.weights(m_e, &mut linear);
        nonlinear_weights(
            &detail.beta[..=m_e],
            &linear[..=m_e],
            self.cfg.r,
            self.cfg.epsilon,
            &mut detail.omega[..=m_e],
        );

        // Distance ||u^e - u^{e,*}||_e; the average correction drops out
        // because only derivatives enter the seminorm.
        let diff = &mut scratch.diff;
        for k in 1..n_k {
            for q in 0..n_q {
                let idx = k * n_q + q;
                let mut recon = 0.0;
                for l in 0..=m_e {
                    recon += detail.omega[l] * derivs[l * stride + idx];
                }
                diff[idx] = derivs[idx] - recon;
            }
        }
        detail.distance = seminorm_of(diff);
        detail.scale = if self.cfg.beta_q == 1.0 {
            detail.beta[0]
        } else {
            seminorm_of(&derivs[..stride])
        };

        let gamma = if detail.scale <= eps_scale {
            1.0
        } else {
            1.0 - (detail.distance / detail.scale).min(1.0).powf(self.cfg.q)
        };
        (gamma, detail)
    }
}

/// Per-worker buffers for the sensor evaluation.
struct SensorScratch {
    /// Candidate derivative rows, (m_e + 1) blocks of n_k * n_q values.
    derivs: Vec<f64>,
    diff: Vec<f64>,
}

impl SensorScratch {
    fn new(space: &ElementSpace) -> SensorScratch {
        let stride = space.reference.multi_indices.len() * space.reference.n_q;
        SensorScratch { derivs: vec![0.0; MAX_CAND * stride], diff: vec![0.0; stride] }
    }
}

#[derive(Clone, Copy)]
struct CellDetail {
    beta: [f64; MAX_CAND],
    omega: [f64; MAX_CAND],
    distance: f64,
    scale: f64,
}

impl Default for CellDetail {
    fn default() -> Self {
        CellDetail { beta: [0.0; MAX_CAND], omega: [0.0; MAX_CAND], distance: 0.0, scale: 0.0 }
    }
}

/// Threshold below which ||u^e||_e counts as zero and gamma_e = 1.
fn degenerate_scale(coeffs: &[f64]) -> f64 {
    let sup = coeffs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    1e-14 * (sup + 1.0)
}

/// Seminorm scaling factors h_e^{2|k|-d} combined with the reference-to-
/// physical derivative scaling (squared, as it sits inside the integral).
pub fn seminorm_factors(space: &ElementSpace, h_local: f64) -> Vec<f64> {
    let d = space.mesh.dim as i32;
    space
        .reference
        .multi_indices
        .iter()
        .zip(&space.deriv_scale)
        .map(|(k, s)| {
            let total = (k[0] + k[1]) as i32;
            h_local.powi(2 * total - d) * s * s
        })
        .collect()
}

/// Scaled Sobolev seminorm of the field restricted to one cell.
pub fn seminorm(space: &ElementSpace, coeffs: &[f64], cell: usize, h_local: f64) -> f64 {
    let r = &space.reference;
    let factors = seminorm_factors(space, h_local);
    let mut local = [0.0; 25];
    let local = &mut local[..r.n_loc];
    space.gather(coeffs, cell, local);
    let mut row = [0.0; MAX_Q];
    let mut acc = 0.0;
    for k in 1..r.multi_indices.len() {
        r.center.apply(k, local, &mut row[..r.n_q]);
        let mut s = 0.0;
        for q in 0..r.n_q {
            s += space.quad_weights[q] * row[q] * row[q];
        }
        acc += factors[k] * s;
    }
    acc.sqrt()
}

/// One Hermite candidate polynomial evaluated on the owner cell.
#[derive(Clone, Debug)]
pub struct Candidate {
    /// None for the identity candidate l = 0.
    pub source: Option<Neighbor>,
    /// Values at the owner's quadrature points (average-corrected if requested).
    pub values: Vec<f64>,
    /// Physical derivatives [k-1][q] for multi-indices with |k| >= 1.
    pub derivatives: Vec<Vec<f64>>,
    /// pi_e(u^e - u^{e'}); zero for l = 0.
    pub average_correction: f64,
}

/// All candidate polynomials of a cell. With `apply_correction` false the
/// values are the raw neighbor extensions (the derivatives never change).
pub fn candidates(
    space: &ElementSpace,
    stencils: &StencilSet,
    coeffs: &[f64],
    cell: usize,
    apply_correction: bool,
) -> Vec<Candidate> {
    let r = &space.reference;
    let n_q = r.n_q;
    let n_k = r.multi_indices.len();
    let vol = space.mesh.cell_volume();
    let average = |vals: &[f64]| -> f64 {
        vals.iter().zip(&space.quad_weights).map(|(v, w)| v * w).sum::<f64>() / vol
    };
    let mut local = [0.0; 25];
    let local = &mut local[..r.n_loc];

    let build = |local: &[f64], table: &crate::element::DerivTable, source: Option<Neighbor>, own_avg: f64| {
        let mut values = vec![0.0; n_q];
        table.apply(0, local, &mut values);
        let correction = if source.is_some() { own_avg - average(&values) } else { 0.0 };
        if apply_correction {
            for v in values.iter_mut() {
                *v += correction;
            }
        }
        let derivatives = (1..n_k)
            .map(|k| {
                let mut row = vec![0.0; n_q];
                table.apply(k, local, &mut row);
                for v in row.iter_mut() {
                    *v *= space.deriv_scale[k];
                }
                row
            })
            .collect();
        Candidate { source, values, derivatives, average_correction: correction }
    };

    space.gather(coeffs, cell, local);
    let own = build(local, &r.center, None, 0.0);
    let own_avg = average(&own.values);
    let mut out = vec![own];
    for nb in &stencils.neighbors[cell] {
        space.gather(coeffs, nb.cell, local);
        let table = &r.ext[2 * nb.axis + side_index(nb.side)];
        out.push(build(local, table, Some(*nb), own_avg));
    }
    out
}
