//! Structured 1D interval and 2D Cartesian quad meshes.
//!
//! All cells are congruent axis-aligned boxes. Connectivity is either
//! periodic (wraparound) or bounded, and the von Neumann neighbor sets
//! feed the WENO reconstruction stencils.

use std::fmt;

/// Boundary treatment of the mesh.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryMode {
    Periodic,
    Bounded,
}

#[derive(Debug)]
pub enum MeshError {
    /// Too few cells along an axis for the requested boundary mode.
    TooFewCells { axis: usize, got: usize, min: usize },
    /// Domain box with lo >= hi along an axis.
    DegenerateBox { axis: usize, lo: f64, hi: f64 },
    UnsupportedDimension(usize),
}

impl fmt::Display for MeshError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshError::TooFewCells { axis, got, min } => {
                write!(f, "axis {axis}: {got} cells, need at least {min}")
            }
            MeshError::DegenerateBox { axis, lo, hi } => {
                write!(f, "axis {axis}: degenerate bounds [{lo}, {hi}]")
            }
            MeshError::UnsupportedDimension(d) => write!(f, "unsupported dimension {d}"),
        }
    }
}

impl std::error::Error for MeshError {}

/// A face-adjacent (von Neumann) neighbor of a cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Neighbor {
    pub cell: usize,
    /// Axis along which the neighbor lies (0 = x, 1 = y).
    pub axis: usize,
    /// -1 if the neighbor is on the low side, +1 on the high side.
    pub side: i8,
}

/// A boundary face of a bounded mesh; its outward normal points along
/// `axis` with sign `side`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryFace {
    pub cell: usize,
    pub axis: usize,
    pub side: i8,
}

/// Uniform structured mesh.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub dim: usize,
    pub cells_per_axis: [usize; 2],
    /// Per-axis (lo, hi) bounds; axis 1 unused in 1D.
    pub domain: [(f64, f64); 2],
    pub boundary: BoundaryMode,
    pub edge_lengths: [f64; 2],
    pub n_cells: usize,
}

impl Mesh {
    pub fn build(
        dim: usize,
        cells_per_axis: &[usize],
        domain: &[(f64, f64)],
        boundary: BoundaryMode,
    ) -> Result<Mesh, MeshError> {
        if dim != 1 && dim != 2 {
            return Err(MeshError::UnsupportedDimension(dim));
        }
        let min_cells = match boundary {
            // Periodic wraparound neighbors must be distinct from each other.
            BoundaryMode::Periodic => 3,
            BoundaryMode::Bounded => 2,
        };
        let mut cells = [1usize; 2];
        let mut dom = [(0.0, 1.0); 2];
        let mut edges = [1.0f64; 2];
        for axis in 0..dim {
            let n = cells_per_axis[axis];
            if n < min_cells {
                return Err(MeshError::TooFewCells { axis, got: n, min: min_cells });
            }
            let (lo, hi) = domain[axis];
            if !(lo < hi) {
                return Err(MeshError::DegenerateBox { axis, lo, hi });
            }
            cells[axis] = n;
            dom[axis] = (lo, hi);
            edges[axis] = (hi - lo) / n as f64;
        }
        Ok(Mesh {
            dim,
            cells_per_axis: cells,
            domain: dom,
            boundary,
            edge_lengths: edges,
            n_cells: cells[0] * cells[1],
        })
    }

    /// Cell diameter h_K: the edge length in 1D, sqrt(hx^2 + hy^2) in 2D.
    pub fn diameter(&self) -> f64 {
        if self.dim == 1 {
            self.edge_lengths[0]
        } else {
            (self.edge_lengths[0].powi(2) + self.edge_lengths[1].powi(2)).sqrt()
        }
    }

    /// Measure of a single cell (length or area).
    pub fn cell_volume(&self) -> f64 {
        if self.dim == 1 {
            self.edge_lengths[0]
        } else {
            self.edge_lengths[0] * self.edge_lengths[1]
        }
    }

    pub fn cell_index(&self, ix: usize, iy: usize) -> usize {
        iy * self.cells_per_axis[0] + ix
    }

    pub fn cell_coords(&self, cell: usize) -> (usize, usize) {
        let nx = self.cells_per_axis[0];
        (cell % nx, cell / nx)
    }

    /// Lower-left corner of the cell.
    pub fn cell_origin(&self, cell: usize) -> [f64; 2] {
        let (ix, iy) = self.cell_coords(cell);
        [
            self.domain[0].0 + ix as f64 * self.edge_lengths[0],
            self.domain[1].0 + iy as f64 * self.edge_lengths[1],
        ]
    }

    pub fn centroid(&self, cell: usize) -> [f64; 2] {
        let o = self.cell_origin(cell);
        let mut c = [o[0] + 0.5 * self.edge_lengths[0], 0.0];
        if self.dim == 2 {
            c[1] = o[1] + 0.5 * self.edge_lengths[1];
        }
        c
    }

    /// Face-adjacent neighbor along `axis` on `side`, if it exists.
    pub fn neighbor(&self, cell: usize, axis: usize, side: i8) -> Option<usize> {
        let (ix, iy) = self.cell_coords(cell);
        let n = self.cells_per_axis[axis];
        let i = if axis == 0 { ix } else { iy };
        let j = match self.boundary {
            BoundaryMode::Periodic => (i + n).wrapping_add_signed(side as isize) % n,
            BoundaryMode::Bounded => {
                let j = i.checked_add_signed(side as isize)?;
                if j >= n {
                    return None;
                }
                j
            }
        };
        Some(if axis == 0 { self.cell_index(j, iy) } else { self.cell_index(ix, j) })
    }

    /// Von Neumann neighbors in the fixed order -x, +x, -y, +y.
    pub fn neighbors(&self, cell: usize) -> Vec<Neighbor> {
        let mut out = Vec::with_capacity(2 * self.dim);
        for axis in 0..self.dim {
            for side in [-1i8, 1] {
                if let Some(c) = self.neighbor(cell, axis, side) {
                    out.push(Neighbor { cell: c, axis, side });
                }
            }
        }
        out
    }

    /// All boundary faces (empty for periodic meshes).
    pub fn boundary_faces(&self) -> Vec<BoundaryFace> {
        let mut out = Vec::new();
        if self.boundary == BoundaryMode::Periodic {
            return out;
        }
        for cell in 0..self.n_cells {
            for axis in 0..self.dim {
                for side in [-1i8, 1] {
                    if self.neighbor(cell, axis, side).is_none() {
                        out.push(BoundaryFace { cell, axis, side });
                    }
                }
            }
        }
        out
    }
}

/// Reconstruction stencils: per cell, S^e_0 = {e} plus one two-cell
/// stencil {e, e'} per von Neumann neighbor e'.
#[derive(Clone, Debug)]
pub struct StencilSet {
    /// neighbors[e][l-1] is the second member of stencil S^e_l.
    pub neighbors: Vec<Vec<Neighbor>>,
}

impl StencilSet {
    /// Number of two-cell stencils m_e for a cell.
    pub fn stencil_count(&self, cell: usize) -> usize {
        self.neighbors[cell].len()
    }
}

pub fn stencils(mesh: &Mesh) -> StencilSet {
    StencilSet {
        neighbors: (0..mesh.n_cells).map(|e| mesh.neighbors(e)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_interval(n: usize, mode: BoundaryMode) -> Mesh {
        Mesh::build(1, &[n], &[(0.0, 1.0)], mode).unwrap()
    }

    fn unit_square(n: usize, mode: BoundaryMode) -> Mesh {
        Mesh::build(2, &[n, n], &[(0.0, 1.0), (0.0, 1.0)], mode).unwrap()
    }

    #[test]
    fn periodic_1d_wraparound() {
        let mesh = unit_interval(4, BoundaryMode::Periodic);
        let nbrs: Vec<usize> = mesh.neighbors(0).iter().map(|n| n.cell).collect();
        assert_eq!(nbrs, vec![3, 1]);
    }

    #[test]
    fn periodic_2d_wraparound() {
        let mesh = unit_square(3, BoundaryMode::Periodic);
        let c00 = mesh.cell_index(0, 0);
        let nbrs: Vec<usize> = mesh.neighbors(c00).iter().map(|n| n.cell).collect();
        assert_eq!(
            nbrs,
            vec![
                mesh.cell_index(2, 0),
                mesh.cell_index(1, 0),
                mesh.cell_index(0, 2),
                mesh.cell_index(0, 1)
            ]
        );
    }

    #[test]
    fn bounded_2d_corner() {
        let mesh = unit_square(128, BoundaryMode::Bounded);
        assert_eq!(mesh.neighbors(0).len(), 2);
        let expected = (2.0f64).sqrt() / 128.0;
        assert!((mesh.diameter() - expected).abs() < 1e-15);
    }

    #[test]
    fn stencil_counts() {
        let mesh = unit_interval(4, BoundaryMode::Periodic);
        let st = stencils(&mesh);
        assert_eq!(st.stencil_count(0), 2);
        let cells: Vec<usize> = st.neighbors[0].iter().map(|n| n.cell).collect();
        assert_eq!(cells, vec![3, 1]);

        let mesh = unit_square(3, BoundaryMode::Periodic);
        let st = stencils(&mesh);
        assert_eq!(st.stencil_count(mesh.cell_index(1, 1)), 4);

        let mesh = unit_square(4, BoundaryMode::Bounded);
        let st = stencils(&mesh);
        assert_eq!(st.stencil_count(0), 2);
    }

    #[test]
    fn neighbor_relation_is_symmetric() {
        for mode in [BoundaryMode::Periodic, BoundaryMode::Bounded] {
            let mesh = unit_square(5, mode);
            for e in 0..mesh.n_cells {
                for n in mesh.neighbors(e) {
                    let back: Vec<usize> =
                        mesh.neighbors(n.cell).iter().map(|m| m.cell).collect();
                    assert!(back.contains(&e), "asymmetric adjacency at {e} <-> {}", n.cell);
                }
            }
        }
    }

    #[test]
    fn cell_measures_sum_to_domain() {
        let mesh = Mesh::build(2, &[7, 5], &[(-2.0, 2.0), (-2.5, 1.5)], BoundaryMode::Bounded)
            .unwrap();
        let total = mesh.cell_volume() * mesh.n_cells as f64;
        assert!((total - 16.0).abs() < 1e-12);
    }

    #[test]
    fn periodic_stencil_counts_identical() {
        let mesh = unit_square(4, BoundaryMode::Periodic);
        let st = stencils(&mesh);
        assert!((0..mesh.n_cells).all(|e| st.stencil_count(e) == 4));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Mesh::build(1, &[2], &[(0.0, 1.0)], BoundaryMode::Periodic).is_err());
        assert!(Mesh::build(1, &[1], &[(0.0, 1.0)], BoundaryMode::Bounded).is_err());
        assert!(Mesh::build(1, &[8], &[(1.0, 1.0)], BoundaryMode::Bounded).is_err());
        assert!(Mesh::build(3, &[4, 4, 4], &[(0.0, 1.0); 3], BoundaryMode::Periodic).is_err());
    }

    #[test]
    fn boundary_faces_bounded() {
        let mesh = unit_square(4, BoundaryMode::Bounded);
        let faces = mesh.boundary_faces();
        assert_eq!(faces.len(), 16);
        assert!(unit_square(4, BoundaryMode::Periodic).boundary_faces().is_empty());
    }
}
