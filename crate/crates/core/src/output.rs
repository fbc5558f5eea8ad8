//! CSV emission and field dumps.

use std::io::{self, Write};

use crate::driver::{ConvergenceRow, RunReport};
use crate::element::ElementSpace;
use crate::sensor::SensorState;

/// 1D dump: `x,u` rows at the element nodes in ascending x.
pub fn dump_field_1d(space: &ElementSpace, coeffs: &[f64], w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "x,u")?;
    for (g, x) in space.node_coords.iter().enumerate() {
        writeln!(w, "{:.9e},{:.9e}", x[0], coeffs[g])?;
    }
    Ok(())
}

/// 2D dump: a header line followed by the structured grid of nodal values
/// (one row per y level, x ascending within a row).
pub fn dump_field_2d(space: &ElementSpace, coeffs: &[f64], w: &mut impl Write) -> io::Result<()> {
    let p = space.degree;
    let mesh = &space.mesh;
    let nx = match mesh.boundary {
        crate::mesh::BoundaryMode::Periodic => mesh.cells_per_axis[0] * p,
        crate::mesh::BoundaryMode::Bounded => mesh.cells_per_axis[0] * p + 1,
    };
    let ny = space.n_dofs / nx;
    writeln!(
        w,
        "# nx={} ny={} x=[{},{}] y=[{},{}]",
        nx, ny, mesh.domain[0].0, mesh.domain[0].1, mesh.domain[1].0, mesh.domain[1].1
    )?;
    for j in 0..ny {
        let row: Vec<String> =
            (0..nx).map(|i| format!("{:.9e}", coeffs[j * nx + i])).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Legacy VTK structured-points dump of a 2D field (equispaced nodes).
pub fn dump_field_vtk(space: &ElementSpace, coeffs: &[f64], w: &mut impl Write) -> io::Result<()> {
    let p = space.degree;
    let mesh = &space.mesh;
    let nx = match mesh.boundary {
        crate::mesh::BoundaryMode::Periodic => mesh.cells_per_axis[0] * p,
        crate::mesh::BoundaryMode::Bounded => mesh.cells_per_axis[0] * p + 1,
    };
    let ny = space.n_dofs / nx;
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "solution field")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {nx} {ny} 1")?;
    writeln!(w, "ORIGIN {} {} 0", mesh.domain[0].0, mesh.domain[1].0)?;
    writeln!(
        w,
        "SPACING {} {} 1",
        mesh.edge_lengths[0] / p as f64,
        mesh.edge_lengths[1] / p as f64
    )?;
    writeln!(w, "POINT_DATA {}", space.n_dofs)?;
    writeln!(w, "SCALARS u double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for v in coeffs {
        writeln!(w, "{v:.9e}")?;
    }
    Ok(())
}

/// Per-cell sensor dump: cell index, centroid, gamma and smoothness values.
pub fn dump_gamma(
    space: &ElementSpace,
    state: &SensorState,
    w: &mut impl Write,
) -> io::Result<()> {
    writeln!(w, "cell,cx,cy,gamma,beta...")?;
    for cell in 0..space.mesh.n_cells {
        let c = space.mesh.centroid(cell);
        let betas: Vec<String> =
            state.beta[cell].iter().map(|b| format!("{b:.6e}")).collect();
        writeln!(
            w,
            "{},{:.9e},{:.9e},{:.6e},{}",
            cell,
            c[0],
            c[1],
            state.gamma[cell],
            betas.join(",")
        )?;
    }
    Ok(())
}

/// Report as `key = value` lines.
pub fn write_report(report: &RunReport, w: &mut impl Write) -> io::Result<()> {
    for line in report.lines() {
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Convergence table in CSV form: one row per level.
pub fn write_convergence_csv(rows: &[ConvergenceRow], w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "N_h,E1,EOC,steps,wall_seconds")?;
    for row in rows {
        let eoc = row.eoc.map(|r| format!("{r:.6}")).unwrap_or_default();
        writeln!(
            w,
            "{},{:.6e},{},{},{:.3}",
            row.n_dofs, row.error, eoc, row.steps, row.wall_seconds
        )?;
    }
    Ok(())
}

/// Scheme-comparison sweep in CSV form.
pub fn write_sweep_csv(reports: &[RunReport], w: &mut impl Write) -> io::Result<()> {
    writeln!(w, "scheme,N_h,E1,u_min,u_max,steps,wall_seconds")?;
    for r in reports {
        let e1 = r.l1_error.map(|e| format!("{e:.6e}")).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{:.6e},{:.6e},{},{:.3}",
            r.scheme, r.n_dofs, e1, r.u_min, r.u_max, r.steps, r.wall_seconds
        )?;
    }
    Ok(())
}
