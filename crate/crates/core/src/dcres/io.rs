use std::fmt::Write as _;

use super::grid::Grid2D;
use crate::error::{check_len, Error, Result};

/// Plain-text grid: header `nx ny`, then `ny` lines of `nx` space-separated
/// values, row `j = 0` first. Values use the shortest round-trip format.
/// Lines starting with `#` are comments and are skipped by [`read_grid`].
pub fn write_grid(grid: Grid2D, values: &[f64]) -> Result<String> {
    check_len("grid values", values.len(), grid.cells())?;
    let mut out = format!("{} {}\n", grid.nx(), grid.ny());
    for row in values.chunks(grid.nx()) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    Ok(out)
}

pub fn read_grid(text: &str) -> Result<(Grid2D, Vec<f64>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let header = lines.next().ok_or_else(|| Error::Parse("empty grid file".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad grid header {header:?}"))))
        .collect::<Result<_>>()?;
    if dims.len() != 2 {
        return Err(Error::Parse(format!("grid header needs `nx ny`, got {header:?}")));
    }
    let grid = Grid2D::new(dims[0], dims[1])?;
    let mut values = Vec::with_capacity(grid.cells());
    for (r, line) in lines.enumerate() {
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad value {t:?} in row {r}"))))
            .collect::<Result<_>>()?;
        if row.len() != grid.nx() {
            return Err(Error::Parse(format!("row {r} has {} values, expected {}", row.len(), grid.nx())));
        }
        values.extend(row);
    }
    if values.len() != grid.cells() {
        return Err(Error::Parse(format!("expected {} rows, got {}", grid.ny(), values.len() / grid.nx())));
    }
    Ok((grid, values))
}
