use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{FieldRole, Mesh2D, ScalarField2D};
use crate::error::{Error, Result};

/// Writes `nx ny hx hy` followed by one value per line (x-major, 17
/// significant digits).
pub fn write_field(path: &Path, f: &ScalarField2D) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let m = f.mesh();
    writeln!(w, "{} {} {:.16e} {:.16e}", m.nx, m.ny, m.hx, m.hy)?;
    for v in f.values() {
        writeln!(w, "{v:.16e}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field(path: &Path, role: FieldRole) -> Result<ScalarField2D> {
    let r = BufReader::new(File::open(path)?);
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config(format!("{}: empty field file", path.display())))??;
    let parts: Vec<&str> = header.split_whitespace().collect();
    let bad = || Error::Config(format!("{}: malformed header {header:?}", path.display()));
    if parts.len() != 4 {
        return Err(bad());
    }
    let nx: usize = parts[0].parse().map_err(|_| bad())?;
    let ny: usize = parts[1].parse().map_err(|_| bad())?;
    let mesh = Mesh2D::new(nx, ny)?;
    let mut values = Vec::with_capacity(mesh.len());
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: f64 = t
            .parse()
            .map_err(|_| Error::Config(format!("{}: bad value {t:?}", path.display())))?;
        values.push(v);
    }
    ScalarField2D::from_values(mesh, values, role)
}
