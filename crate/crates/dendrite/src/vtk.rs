//! Legacy ASCII VTK snapshots (`STRUCTURED_POINTS`).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use dendrite_core::alloy::composition_from_uc;
use dendrite_core::{FieldState, Grid, Model};

use crate::error::{Error, Result};

/// Writes the snapshot to `w`. Nodes are listed with x fastest.
pub fn write_vtk_to<W: Write>(
    mut w: W,
    state: &FieldState,
    grid: &Grid,
    model: &Model,
) -> std::io::Result<()> {
    let n = grid.nodes_per_axis();
    let h = grid.spacing();
    let o = grid.origin();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "dendrite snapshot t={:.8e}", state.time)?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {} {} {}", n[0], n[1], n[2])?;
    writeln!(w, "ORIGIN {:.8e} {:.8e} {:.8e}", o[0], o[1], o[2])?;
    writeln!(w, "SPACING {:.8e} {:.8e} {:.8e}", h[0], h[1], h[2])?;
    writeln!(w, "POINT_DATA {}", grid.node_count())?;
    field(&mut w, "phi", state.phi.iter().copied())?;
    match model {
        Model::PureMelt(_) => field(&mut w, "u", state.scalar.iter().copied())?,
        Model::Alloy(p) => {
            field(&mut w, "u_c", state.scalar.iter().copied())?;
            let c = state
                .scalar
                .iter()
                .zip(&state.phi)
                .map(|(&u, &phi)| composition_from_uc(u, phi, p.c_l0, p.k));
            field(&mut w, "composition", c)?;
        }
    }
    w.flush()
}

fn field<W: Write>(
    w: &mut W,
    name: &str,
    values: impl Iterator<Item = f64>,
) -> std::io::Result<()> {
    writeln!(w, "SCALARS {name} double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for v in values {
        writeln!(w, "{v:.8e}")?;
    }
    Ok(())
}

/// Writes a snapshot file.
pub fn write_vtk(path: &Path, state: &FieldState, grid: &Grid, model: &Model) -> Result<()> {
    state.check(grid)?;
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_vtk_to(BufWriter::new(f), state, grid, model).map_err(|e| Error::io(path, e))
}
