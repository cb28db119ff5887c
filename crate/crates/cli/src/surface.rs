//! Plot-ready surface data: one row per design point.

use std::path::Path;

use rancova::SurfaceRow;

use crate::error::{CliError, Result};

pub fn write_surface(path: &Path, rows: &[SurfaceRow]) -> Result<()> {
    let err = |e: csv::Error| CliError::io(format!("writing {}", path.display()), e.into());
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    if rows.is_empty() {
        w.write_record(["x1", "x2", "n1", "n2", "est1", "est2", "diff", "p_value", "comparable"]).map_err(err)?;
    }
    for row in rows {
        w.serialize(row).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

pub fn read_surface(path: &Path) -> Result<Vec<SurfaceRow>> {
    let err = |e: csv::Error| CliError::Data { path: path.to_path_buf(), message: e.to_string() };
    let mut r = csv::Reader::from_path(path).map_err(err)?;
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(err)
}
