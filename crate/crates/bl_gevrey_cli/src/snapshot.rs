//! Binary snapshots: one JSON header line, then for every field its
//! samples and its x-Fourier coefficients as little-endian `f64`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use bl_gevrey::{Field, Grid};
use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const FORMAT: &str = "bl-gevrey-snapshot";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub format: String,
    pub version: u32,
    pub step: usize,
    pub t: f64,
    pub mu: f64,
    pub nu: f64,
    pub theta_e: f64,
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ymax: f64,
    /// Field names in storage order.
    pub fields: Vec<String>,
}

impl SnapshotHeader {
    pub fn grid(&self) -> Result<Grid, CliError> {
        Ok(Grid::new(self.nx, self.lx, self.ny, self.ymax)?)
    }

    /// Whether `grid` has the same shape and extent.
    pub fn matches(&self, grid: &Grid) -> bool {
        self.nx == grid.nx() && self.ny == grid.ny() && self.lx == grid.lx() && self.ymax == grid.ymax()
    }
}

/// Path of the JSON file stored next to a snapshot.
pub fn sidecar_path(snapshot: &Path) -> PathBuf {
    snapshot.with_extension("json")
}

/// Writes `bytes` through a temporary file and a rename, so readers never
/// see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension("partial");
    let mut f = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| CliError::io(&tmp, e))?;
    f.sync_all().map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn write_snapshot(path: &Path, header: &SnapshotHeader, fields: &[&Field]) -> Result<(), CliError> {
    let mut bytes = serde_json::to_vec(header).expect("header serializes");
    bytes.push(b'\n');
    for f in fields {
        for v in f.phys().iter() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        for c in f.spec().iter() {
            bytes.extend_from_slice(&c.re.to_le_bytes());
            bytes.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    write_atomic(path, &bytes)
}

fn split_header<'a>(path: &Path, bytes: &'a [u8]) -> Result<(SnapshotHeader, &'a [u8]), CliError> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| CliError::snapshot(path, "missing header line"))?;
    let header: SnapshotHeader = serde_json::from_slice(&bytes[..nl])
        .map_err(|e| CliError::snapshot(path, format!("bad header: {e}")))?;
    if header.format != FORMAT || header.version != VERSION {
        return Err(CliError::snapshot(
            path,
            format!("unsupported format {} v{}", header.format, header.version),
        ));
    }
    Ok((header, &bytes[nl + 1..]))
}

pub fn read_header(path: &Path) -> Result<SnapshotHeader, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(split_header(path, &bytes)?.0)
}

/// Reads a snapshot; fields come back in header order.
pub fn read_snapshot(path: &Path) -> Result<(SnapshotHeader, Vec<Field>), CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let (header, body) = split_header(path, &bytes)?;
    let grid = header.grid()?;
    let n = header.nx * header.ny;
    let per_field = 3 * n * 8;
    if body.len() != per_field * header.fields.len() {
        return Err(CliError::snapshot(
            path,
            format!("expected {} data bytes, found {}", per_field * header.fields.len(), body.len()),
        ));
    }
    let mut values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of eight")));
    let mut fields = Vec::new();
    for name in &header.fields {
        let phys: Vec<f64> = values.by_ref().take(n).collect();
        let spec: Vec<Complex64> = (0..n)
            .map(|_| {
                let re = values.next().expect("length checked");
                let im = values.next().expect("length checked");
                Complex64::new(re, im)
            })
            .collect();
        let shape = (header.ny, header.nx);
        let phys = Array2::from_shape_vec(shape, phys).expect("length checked");
        let spec = Array2::from_shape_vec(shape, spec).expect("length checked");
        let f = Field::from_parts(&grid, phys, spec)
            .map_err(|e| CliError::snapshot(path, format!("field {name}: {e}")))?;
        fields.push(f);
    }
    Ok((header, fields))
}
