//! File writers shared by the pipelines. Floats are written with 17
//! significant digits so that values round-trip.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::grid::GridSpec;
use crate::landscape::Landscape;
use crate::operator::CoefficientField;

/// Scientific notation with 17 significant digits; `inf`, `-inf`, `nan`
/// otherwise.
pub fn fmt_f(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Pretty JSON with a trailing newline. Non-finite floats become `null`.
pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

/// `node_index,x,y,u,W,V` per grid node, `y` empty in 1D.
pub fn write_landscape_csv(path: &Path, grid: &GridSpec, coeffs: &CoefficientField, landscape: &Landscape) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "node_index,x,y,u,W,V")?;
    let w = landscape.effective_potential();
    for (i, (&u, &v)) in landscape.u().iter().zip(coeffs.potential()).enumerate() {
        let [x, y] = grid.coords(i);
        let y = if grid.dim() == 2 { fmt_f(y) } else { String::new() };
        writeln!(f, "{},{},{},{},{},{}", i, fmt_f(x), y, fmt_f(u), fmt_f(w[i]), fmt_f(v))?;
    }
    f.flush()?;
    Ok(())
}
