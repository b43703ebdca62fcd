//! CSV grid snapshots.
//!
//! ```text
//! # ambidiff grid nx=<nx> ny=<ny> tau=<tau>
//! <row j = 0: nx comma-separated values>
//! ...
//! <row j = ny-1>
//! ```
//!
//! Value `(i, j)` sits in column `i` of line `j + 2`. Numbers use Rust's
//! shortest round-trip decimal formatting, so reading a snapshot back gives
//! the identical bits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::grid::{Grid2D, ScalarField};

const HEADER_PREFIX: &str = "# ambidiff grid ";

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub nx: usize,
    pub ny: usize,
    pub tau: f64,
    pub values: Vec<f64>,
}

impl Snapshot {
    /// Attach the snapshot to a grid with matching node counts.
    pub fn into_field(self, grid: Grid2D) -> Result<ScalarField> {
        if self.nx != grid.nx || self.ny != grid.ny {
            return Err(Error::GridMismatch);
        }
        ScalarField::new(grid, self.values)
    }
}

pub fn format_snapshot(field: &ScalarField, tau: f64) -> String {
    let g = field.grid();
    let mut out = String::with_capacity(g.len() * 20 + 64);
    let _ = writeln!(out, "{HEADER_PREFIX}nx={} ny={} tau={}", g.nx, g.ny, tau);
    for row in field.values().chunks(g.nx) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

pub fn write_snapshot(field: &ScalarField, tau: f64, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_snapshot(field, tau)).map_err(|e| Error::io(path, e))
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<Snapshot> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_snapshot(&text).map_err(|message| Error::Snapshot {
        path: PathBuf::from(path),
        message,
    })
}

pub fn parse_snapshot(text: &str) -> std::result::Result<Snapshot, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty file")?;
    let rest = header
        .strip_prefix(HEADER_PREFIX)
        .ok_or_else(|| format!("bad header line: {header:?}"))?;
    let (mut nx, mut ny, mut tau) = (None, None, None);
    for tok in rest.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| format!("bad header token {tok:?}"))?;
        match k {
            "nx" => nx = Some(v.parse::<usize>().map_err(|e| format!("nx: {e}"))?),
            "ny" => ny = Some(v.parse::<usize>().map_err(|e| format!("ny: {e}"))?),
            "tau" => tau = Some(v.parse::<f64>().map_err(|e| format!("tau: {e}"))?),
            _ => return Err(format!("unknown header key {k:?}")),
        }
    }
    let nx = nx.ok_or("header lacks nx")?;
    let ny = ny.ok_or("header lacks ny")?;
    let tau = tau.ok_or("header lacks tau")?;
    let mut values = Vec::with_capacity(nx * ny);
    for (j, line) in lines.enumerate() {
        if j >= ny {
            if line.trim().is_empty() {
                continue;
            }
            return Err(format!("more than ny={ny} rows"));
        }
        let before = values.len();
        for (i, tok) in line.split(',').enumerate() {
            let v = tok
                .trim()
                .parse::<f64>()
                .map_err(|e| format!("line {}, column {}: {e}", j + 2, i + 1))?;
            values.push(v);
        }
        if values.len() - before != nx {
            return Err(format!(
                "line {} has {} values, expected {nx}",
                j + 2,
                values.len() - before
            ));
        }
    }
    if values.len() != nx * ny {
        return Err(format!("expected {ny} rows, found {}", values.len() / nx.max(1)));
    }
    Ok(Snapshot { nx, ny, tau, values })
}
