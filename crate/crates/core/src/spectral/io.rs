//! Field snapshot files.
//!
//! A snapshot is one line of JSON (the header) terminated by `\n`, followed by
//! the real-space samples as little-endian `f64`: component 0 over the whole
//! grid, then component 1, and so on; within a component the grid is row-major
//! with axis 0 varying slowest.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::field::SpectralField;
use super::grid::SpectralGrid;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub d: usize,
    pub grid_size: usize,
    pub time: f64,
    pub equation: String,
    pub nu: f64,
}

pub fn write_snapshot<F: Real, W: Write>(
    mut w: W,
    grid: &SpectralGrid<F>,
    field: &SpectralField<F>,
    equation: &str,
    nu: F,
) -> Result<()> {
    let header = SnapshotHeader {
        d: field.dim(),
        grid_size: field.grid_size(),
        time: field.time.to_f64_lossy(),
        equation: equation.to_string(),
        nu: nu.to_f64_lossy(),
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    let mut bytes = Vec::with_capacity(field.dim() * grid.len() * 8);
    for comp in field.to_physical(grid) {
        for v in comp {
            bytes.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
        }
    }
    w.write_all(&bytes)?;
    Ok(())
}

pub fn read_snapshot<F: Real, R: BufRead>(mut r: R) -> Result<(SnapshotHeader, SpectralField<F>)> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: SnapshotHeader = serde_json::from_str(line.trim_end())?;
    let grid = SpectralGrid::<F>::new(header.d, header.grid_size)?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let expected = header.d * grid.len() * 8;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "snapshot payload has {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let values: Vec<Vec<F>> = bytes
        .chunks_exact(grid.len() * 8)
        .map(|chunk| {
            chunk
                .chunks_exact(8)
                .map(|b| F::lit(f64::from_le_bytes(b.try_into().expect("8 bytes"))))
                .collect()
        })
        .collect();
    let mut field = SpectralField::from_physical(&grid, &values)?;
    field.time = F::lit(header.time);
    Ok((header, field))
}
