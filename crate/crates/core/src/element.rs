//! Reference Q_p Lagrange elements, Gauss-Legendre quadrature and the
//! global continuous finite element space.
//!
//! Basis functions are tensor products of 1D Lagrange polynomials on
//! [0,1]. All basis values and partial derivatives D^k (|k| <= p) are
//! tabulated once at the quadrature points of the reference cell and at
//! the quadrature points shifted into face-adjacent neighbor cells; the
//! shifted tables let a neighbor's polynomial be evaluated on the owner
//! cell without any per-cell geometry work (the mesh is uniform affine).

use std::fmt;
use std::sync::Arc;

use crate::mesh::{BoundaryMode, Mesh};

/// Placement of the Lagrange interpolation nodes on [0,1].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodePlacement {
    Equispaced,
    GaussLobatto,
}

#[derive(Debug)]
pub enum SpaceError {
    UnsupportedDegree(usize),
    TooFewQuadraturePoints { got: usize, min: usize },
}

impl fmt::Display for SpaceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceError::UnsupportedDegree(p) => write!(f, "unsupported degree p={p} (need 1..=4)"),
            SpaceError::TooFewQuadraturePoints { got, min } => {
                write!(f, "{got} quadrature points per axis, need at least {min}")
            }
        }
    }
}

impl std::error::Error for SpaceError {}

/// Gauss-Legendre rule with `n` points on [0,1]; weights sum to 1.
///
/// Exact for polynomials of degree <= 2n-1.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Newton iteration on P_n over [-1,1] from the Chebyshev guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (pn, pn1) = legendre_pair(n, x);
            let dpn = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dpn;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (pn, pn1) = legendre_pair(n, x);
        let dpn = n as f64 * (x * pn - pn1) / (x * x - 1.0);
        let w = 2.0 / ((1.0 - x * x) * dpn * dpn);
        // Map to [0,1], reversing so points come out ascending.
        points[n - 1 - i] = 0.5 * (x + 1.0);
        weights[n - 1 - i] = 0.5 * w;
    }
    (points, weights)
}

/// Returns (P_n(x), P_{n-1}(x)).
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

/// 1D Lagrange basis of degree p on [0,1], stored in monomial form so it
/// can be differentiated and evaluated outside the reference interval.
#[derive(Clone, Debug)]
pub struct Basis1d {
    pub degree: usize,
    pub nodes: Vec<f64>,
    /// coeffs[i][k] is the x^k coefficient of basis polynomial i.
    coeffs: Vec<Vec<f64>>,
}

impl Basis1d {
    pub fn new(degree: usize, placement: NodePlacement) -> Basis1d {
        let nodes = match placement {
            NodePlacement::Equispaced => {
                (0..=degree).map(|i| i as f64 / degree as f64).collect::<Vec<_>>()
            }
            NodePlacement::GaussLobatto => gauss_lobatto_nodes(degree),
        };
        let coeffs = (0..=degree)
            .map(|i| {
                let mut c = vec![1.0];
                let mut scale = 1.0;
                for (j, &xj) in nodes.iter().enumerate() {
                    if j == i {
                        continue;
                    }
                    // Multiply accumulated polynomial by (x - xj).
                    let mut next = vec![0.0; c.len() + 1];
                    for (k, &ck) in c.iter().enumerate() {
                        next[k] -= xj * ck;
                        next[k + 1] += ck;
                    }
                    c = next;
                    scale *= nodes[i] - xj;
                }
                c.iter().map(|ck| ck / scale).collect()
            })
            .collect();
        Basis1d { degree, nodes, coeffs }
    }

    /// m-th derivative of basis polynomial `i` at `x` (x may lie outside [0,1]).
    pub fn eval(&self, i: usize, m: usize, x: f64) -> f64 {
        let c = &self.coeffs[i];
        if m >= c.len() {
            return 0.0;
        }
        // Horner on the m-times differentiated coefficients.
        let mut acc = 0.0;
        for k in (m..c.len()).rev() {
            let mut fall = 1.0;
            for j in 0..m {
                fall *= (k - j) as f64;
            }
            acc = acc * x + c[k] * fall;
        }
        acc
    }

    /// Integral of basis polynomial `i` over [0,1].
    pub fn integral(&self, i: usize) -> f64 {
        self.coeffs[i]
            .iter()
            .enumerate()
            .map(|(k, ck)| ck / (k + 1) as f64)
            .sum()
    }
}

fn gauss_lobatto_nodes(degree: usize) -> Vec<f64> {
    // Roots of (1-x^2) P'_p(x) mapped to [0,1]; hardcoded for p <= 4.
    let half = 0.5;
    match degree {
        1 => vec![0.0, 1.0],
        2 => vec![0.0, half, 1.0],
        3 => {
            let a = half / 5.0f64.sqrt();
            vec![0.0, half - a, half + a, 1.0]
        }
        4 => {
            let a = half * (3.0f64 / 7.0).sqrt();
            vec![0.0, half - a, half, half + a, 1.0]
        }
        _ => panic!("Gauss-Lobatto nodes tabulated only for p <= 4"),
    }
}

/// Table of reference derivative values: data[k][dof][q], contiguous in q.
#[derive(Clone, Debug)]
pub struct DerivTable {
    pub n_k: usize,
    pub n_loc: usize,
    pub n_q: usize,
    data: Vec<f64>,
}

impl DerivTable {
    fn zeros(n_k: usize, n_loc: usize, n_q: usize) -> DerivTable {
        DerivTable { n_k, n_loc, n_q, data: vec![0.0; n_k * n_loc * n_q] }
    }

    #[inline]
    pub fn row(&self, k: usize, dof: usize) -> &[f64] {
        let base = (k * self.n_loc + dof) * self.n_q;
        &self.data[base..base + self.n_q]
    }

    fn row_mut(&mut self, k: usize, dof: usize) -> &mut [f64] {
        let base = (k * self.n_loc + dof) * self.n_q;
        &mut self.data[base..base + self.n_q]
    }

    /// out[q] = sum_dof coeffs[dof] * table[k][dof][q].
    #[inline]
    pub fn apply(&self, k: usize, coeffs: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (dof, &c) in coeffs.iter().enumerate() {
            let row = self.row(k, dof);
            for (o, r) in out.iter_mut().zip(row) {
                *o += c * r;
            }
        }
    }
}

/// Reference element: basis tables at quadrature points of the own cell
/// (`center`), of each neighbor extension (`ext`, indexed 2*axis + side),
/// and at boundary-face quadrature points (`face_values`).
#[derive(Clone, Debug)]
pub struct ReferenceElement {
    pub dim: usize,
    pub degree: usize,
    pub basis: Basis1d,
    pub q_points_1d: Vec<f64>,
    pub q_weights_1d: Vec<f64>,
    pub n_loc: usize,
    pub n_q: usize,
    /// Multi-indices [k1, k2] ordered by total degree; entry 0 is the value.
    pub multi_indices: Vec<[usize; 2]>,
    pub center: DerivTable,
    pub ext: Vec<DerivTable>,
    /// face_values[2*axis+side][dof*nq1d + q]; nq1d = 1 in 1D.
    pub face_values: Vec<Vec<f64>>,
    /// Gradient of each basis function at each local node (reference coords):
    /// node_gradients[(dof*n_loc + node)*2 + axis].
    pub node_gradients: Vec<f64>,
    /// Integral of each local basis function over the reference cell.
    pub node_integrals: Vec<f64>,
}

pub fn side_index(side: i8) -> usize {
    if side < 0 {
        0
    } else {
        1
    }
}

impl ReferenceElement {
    pub fn new(dim: usize, degree: usize, n_q1d: usize, placement: NodePlacement) -> ReferenceElement {
        let basis = Basis1d::new(degree, placement);
        let (qp, qw) = gauss_legendre(n_q1d);
        let per_axis = degree + 1;
        let n_loc = per_axis.pow(dim as u32);
        let n_q = n_q1d.pow(dim as u32);

        let mut multi_indices = Vec::new();
        for total in 0..=degree {
            if dim == 1 {
                multi_indices.push([total, 0]);
            } else {
                for k1 in (0..=total).rev() {
                    multi_indices.push([k1, total - k1]);
                }
            }
        }
        let n_k = multi_indices.len();

        // 1D tables at offsets -1, 0, +1: tab[o][m][i][q].
        let offsets = [-1.0f64, 0.0, 1.0];
        let mut tab1d = vec![vec![vec![vec![0.0; n_q1d]; per_axis]; degree + 1]; 3];
        for (o, &off) in offsets.iter().enumerate() {
            for m in 0..=degree {
                for i in 0..per_axis {
                    for (q, &x) in qp.iter().enumerate() {
                        tab1d[o][m][i][q] = basis.eval(i, m, x + off);
                    }
                }
            }
        }

        let fill = |table: &mut DerivTable, ox: usize, oy: usize| {
            for (k, mi) in multi_indices.iter().enumerate() {
                for dof in 0..n_loc {
                    let (i, j) = (dof % per_axis, dof / per_axis);
                    let row = table.row_mut(k, dof);
                    if dim == 1 {
                        row.copy_from_slice(&tab1d[ox][mi[0]][i]);
                    } else {
                        for qy in 0..n_q1d {
                            for qx in 0..n_q1d {
                                row[qy * n_q1d + qx] =
                                    tab1d[ox][mi[0]][i][qx] * tab1d[oy][mi[1]][j][qy];
                            }
                        }
                    }
                }
            }
        };

        let mut center = DerivTable::zeros(n_k, n_loc, n_q);
        fill(&mut center, 1, 1);

        // Extension tables: a neighbor on side s along an axis sees the
        // owner's points at its own reference coordinate shifted by -s.
        let mut ext = Vec::new();
        for axis in 0..dim {
            for side in [-1i32, 1] {
                let o = (1 - side) as usize; // side -1 -> offset +1 (index 2), side +1 -> offset -1 (index 0)
                let (ox, oy) = if axis == 0 { (o, 1) } else { (1, o) };
                let mut t = DerivTable::zeros(n_k, n_loc, n_q);
                fill(&mut t, ox, oy);
                ext.push(t);
            }
        }

        // Face value tables for boundary integrals.
        let mut face_values = Vec::new();
        for axis in 0..dim {
            for side in [0usize, 1] {
                let xf = side as f64;
                let nq_face = if dim == 1 { 1 } else { n_q1d };
                let mut vals = vec![0.0; n_loc * nq_face];
                for dof in 0..n_loc {
                    let (i, j) = (dof % per_axis, dof / per_axis);
                    for q in 0..nq_face {
                        vals[dof * nq_face + q] = if dim == 1 {
                            basis.eval(i, 0, xf)
                        } else if axis == 0 {
                            basis.eval(i, 0, xf) * basis.eval(j, 0, qp[q])
                        } else {
                            basis.eval(i, 0, qp[q]) * basis.eval(j, 0, xf)
                        };
                    }
                }
                face_values.push(vals);
            }
        }

        let mut node_gradients = vec![0.0; n_loc * n_loc * 2];
        for dof in 0..n_loc {
            let (i, j) = (dof % per_axis, dof / per_axis);
            for node in 0..n_loc {
                let (a, b) = (node % per_axis, node / per_axis);
                let (xa, xb) = (basis.nodes[a], basis.nodes[b]);
                let idx = (dof * n_loc + node) * 2;
                if dim == 1 {
                    node_gradients[idx] = basis.eval(i, 1, xa);
                } else {
                    node_gradients[idx] = basis.eval(i, 1, xa) * basis.eval(j, 0, xb);
                    node_gradients[idx + 1] = basis.eval(i, 0, xa) * basis.eval(j, 1, xb);
                }
            }
        }

        let node_integrals = (0..n_loc)
            .map(|dof| {
                let (i, j) = (dof % per_axis, dof / per_axis);
                if dim == 1 {
                    basis.integral(i)
                } else {
                    basis.integral(i) * basis.integral(j)
                }
            })
            .collect();

        ReferenceElement {
            dim,
            degree,
            basis,
            q_points_1d: qp,
            q_weights_1d: qw,
            n_loc,
            n_q,
            multi_indices,
            center,
            ext,
            face_values,
            node_gradients,
            node_integrals,
        }
    }

    /// Index of the multi-index [k1, k2] in `multi_indices`.
    pub fn k_index(&self, k: [usize; 2]) -> usize {
        self.multi_indices.iter().position(|m| *m == k).expect("multi-index in range")
    }
}

/// Global continuous finite element space over a uniform mesh.
#[derive(Clone, Debug)]
pub struct ElementSpace {
    pub mesh: Arc<Mesh>,
    pub degree: usize,
    pub reference: ReferenceElement,
    pub n_dofs: usize,
    /// cell_dofs[cell * n_loc + local] = global dof index.
    pub cell_dofs: Vec<u32>,
    pub node_coords: Vec<[f64; 2]>,
    /// Physical scaling hx^{-k1} hy^{-k2} per multi-index.
    pub deriv_scale: Vec<f64>,
    /// Product quadrature weight times cell volume, per 2D/1D point.
    pub quad_weights: Vec<f64>,
    /// Physical offset of each quadrature point from the cell origin.
    pub quad_offsets: Vec<[f64; 2]>,
}

impl ElementSpace {
    pub fn build(mesh: Arc<Mesh>, degree: usize, n_q1d: usize) -> Result<ElementSpace, SpaceError> {
        ElementSpace::build_with(mesh, degree, n_q1d, NodePlacement::Equispaced)
    }

    pub fn build_with(
        mesh: Arc<Mesh>,
        degree: usize,
        n_q1d: usize,
        placement: NodePlacement,
    ) -> Result<ElementSpace, SpaceError> {
        if degree < 1 || degree > 4 {
            return Err(SpaceError::UnsupportedDegree(degree));
        }
        if n_q1d < degree + 1 {
            return Err(SpaceError::TooFewQuadraturePoints { got: n_q1d, min: degree + 1 });
        }
        let reference = ReferenceElement::new(mesh.dim, degree, n_q1d, placement);
        let p = degree;
        let per_axis = p + 1;

        // Global node counts per axis.
        let mut nodes_per_axis = [1usize; 2];
        for axis in 0..mesh.dim {
            let n = mesh.cells_per_axis[axis];
            nodes_per_axis[axis] = match mesh.boundary {
                BoundaryMode::Periodic => n * p,
                BoundaryMode::Bounded => n * p + 1,
            };
        }
        let n_dofs = nodes_per_axis[0] * nodes_per_axis[1];

        let global_axis = |axis: usize, cell_idx: usize, local: usize| -> usize {
            let g = cell_idx * p + local;
            match mesh.boundary {
                BoundaryMode::Periodic => g % nodes_per_axis[axis],
                BoundaryMode::Bounded => g,
            }
        };

        let n_loc = reference.n_loc;
        let mut cell_dofs = vec![0u32; mesh.n_cells * n_loc];
        for cell in 0..mesh.n_cells {
            let (cx, cy) = mesh.cell_coords(cell);
            for dof in 0..n_loc {
                let (i, j) = (dof % per_axis, dof / per_axis);
                let gx = global_axis(0, cx, i);
                let g = if mesh.dim == 1 {
                    gx
                } else {
                    global_axis(1, cy, j) * nodes_per_axis[0] + gx
                };
                cell_dofs[cell * n_loc + dof] = g as u32;
            }
        }

        let mut node_coords = vec![[0.0; 2]; n_dofs];
        for g in 0..n_dofs {
            let gx = g % nodes_per_axis[0];
            let gy = g / nodes_per_axis[0];
            let coord = |axis: usize, gi: usize| -> f64 {
                let (cell_idx, local) = (gi / p, gi % p);
                mesh.domain[axis].0
                    + (cell_idx as f64 + reference.basis.nodes[local]) * mesh.edge_lengths[axis]
            };
            node_coords[g][0] = coord(0, gx);
            if mesh.dim == 2 {
                node_coords[g][1] = coord(1, gy);
            }
        }

        let deriv_scale = reference
            .multi_indices
            .iter()
            .map(|k| {
                mesh.edge_lengths[0].powi(-(k[0] as i32))
                    * if mesh.dim == 2 { mesh.edge_lengths[1].powi(-(k[1] as i32)) } else { 1.0 }
            })
            .collect();

        let vol = mesh.cell_volume();
        let mut quad_weights = Vec::with_capacity(reference.n_q);
        let mut quad_offsets = Vec::with_capacity(reference.n_q);
        for q in 0..reference.n_q {
            let (qx, qy) = (q % n_q1d, q / n_q1d);
            let w = if mesh.dim == 1 {
                reference.q_weights_1d[qx]
            } else {
                reference.q_weights_1d[qx] * reference.q_weights_1d[qy]
            };
            quad_weights.push(w * vol);
            let mut off = [reference.q_points_1d[qx] * mesh.edge_lengths[0], 0.0];
            if mesh.dim == 2 {
                off[1] = reference.q_points_1d[qy] * mesh.edge_lengths[1];
            }
            quad_offsets.push(off);
        }

        Ok(ElementSpace {
            mesh,
            degree,
            reference,
            n_dofs,
            cell_dofs,
            node_coords,
            deriv_scale,
            quad_weights,
            quad_offsets,
        })
    }

    #[inline]
    pub fn dofs(&self, cell: usize) -> &[u32] {
        let n = self.reference.n_loc;
        &self.cell_dofs[cell * n..(cell + 1) * n]
    }

    /// Copy a cell's coefficients out of a global array.
    #[inline]
    pub fn gather(&self, coeffs: &[f64], cell: usize, out: &mut [f64]) {
        for (o, &g) in out.iter_mut().zip(self.dofs(cell)) {
            *o = coeffs[g as usize];
        }
    }

    /// Quadrature approximation of the mean value of a field over a cell.
    pub fn cell_average(&self, coeffs: &[f64], cell: usize) -> f64 {
        let mut local = [0.0; 25];
        let local = &mut local[..self.reference.n_loc];
        self.gather(coeffs, cell, local);
        let mut acc = 0.0;
        for q in 0..self.reference.n_q {
            let mut v = 0.0;
            for (dof, &c) in local.iter().enumerate() {
                v += c * self.reference.center.row(0, dof)[q];
            }
            acc += self.quad_weights[q] * v;
        }
        acc / self.mesh.cell_volume()
    }

    /// Physical coordinates of a reference point within a cell.
    pub fn physical_point(&self, cell: usize, reference: [f64; 2]) -> [f64; 2] {
        let o = self.mesh.cell_origin(cell);
        [
            o[0] + reference[0] * self.mesh.edge_lengths[0],
            if self.mesh.dim == 2 { o[1] + reference[1] * self.mesh.edge_lengths[1] } else { 0.0 },
        ]
    }
}

/// Global coefficient vector u_h = sum_j u_j phi_j over an element space.
#[derive(Clone, Debug)]
pub struct SolutionField {
    pub space: Arc<ElementSpace>,
    pub coeffs: Vec<f64>,
}

impl SolutionField {
    pub fn zeros(space: Arc<ElementSpace>) -> SolutionField {
        let n = space.n_dofs;
        SolutionField { space, coeffs: vec![0.0; n] }
    }

    /// Values and physical derivatives (all D^k with |k| <= p, ordered as
    /// `reference.multi_indices`) at reference points inside a cell.
    pub fn eval_at(&self, cell: usize, points: &[[f64; 2]]) -> Vec<Vec<f64>> {
        let space = &self.space;
        let r = &space.reference;
        let per_axis = space.degree + 1;
        let mut local = [0.0; 25];
        let local = &mut local[..r.n_loc];
        space.gather(&self.coeffs, cell, local);
        points
            .iter()
            .map(|pt| {
                r.multi_indices
                    .iter()
                    .enumerate()
                    .map(|(ki, mi)| {
                        let mut acc = 0.0;
                        for (dof, &c) in local.iter().enumerate() {
                            let (i, j) = (dof % per_axis, dof / per_axis);
                            let mut v = r.basis.eval(i, mi[0], pt[0]);
                            if space.mesh.dim == 2 {
                                v *= r.basis.eval(j, mi[1], pt[1]);
                            }
                            acc += c * v;
                        }
                        acc * space.deriv_scale[ki]
                    })
                    .collect()
            })
            .collect()
    }
}

/// Nodal interpolant: coefficient at each global dof is the function value
/// at its Lagrange node.
pub fn interpolate(space: &Arc<ElementSpace>, f: impl Fn([f64; 2]) -> f64) -> SolutionField {
    let coeffs = space.node_coords.iter().map(|&x| f(x)).collect();
    SolutionField { space: Arc::clone(space), coeffs }
}
