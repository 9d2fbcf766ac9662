//! Snapshot data model, the DMDS1 binary format, and the shifted data
//! matrices fed to the decomposition.
//!
//! DMDS1 layout (little-endian):
//!
//! | bytes  | content                                   |
//! |--------|-------------------------------------------|
//! | 0..8   | ASCII `DMDSNAP1`                          |
//! | 8..12  | `u32` rows (points per snapshot, M)       |
//! | 12..16 | `u32` columns (snapshot count, N)         |
//! | 16..24 | `f64` sampling interval                   |
//! | 24..   | `N * M` `f64` values, one snapshot after another |

use std::fs;
use std::io::Read;
use std::path::Path;

use faer::{c64, Mat, MatRef};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"DMDSNAP1";
pub const HEADER_LEN: usize = 24;

/// Column-major stack of equally sized real fields sharing one sampling
/// interval. This is the raw content of a DMDS1 file; a single column is
/// allowed here (mode files, render input) but not in [`SnapshotMatrix`].
#[derive(Clone, Debug, PartialEq)]
pub struct FieldStack {
    rows: usize,
    cols: usize,
    dt: f64,
    data: Vec<f64>,
}

impl FieldStack {
    pub fn new(rows: usize, cols: usize, dt: f64, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidSnapshots(format!(
                "empty shape {rows} x {cols}"
            )));
        }
        if rows > u32::MAX as usize || cols > u32::MAX as usize {
            return Err(Error::SizeOverflow {
                rows: rows as u64,
                cols: cols as u64,
            });
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidSnapshots(format!(
                "sampling interval must be positive, got {dt}"
            )));
        }
        let expected = rows.checked_mul(cols).ok_or(Error::SizeOverflow {
            rows: rows as u64,
            cols: cols as u64,
        })?;
        if data.len() != expected {
            return Err(Error::LengthMismatch(format!(
                "{} values for a {rows} x {cols} stack",
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: k % rows,
                col: k / rows,
            });
        }
        Ok(Self {
            rows,
            cols,
            dt,
            data,
        })
    }

    pub fn from_columns(dt: f64, columns: &[Vec<f64>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if let Some(bad) = columns.iter().find(|c| c.len() != rows) {
            return Err(Error::LengthMismatch(format!(
                "column of length {} in a stack of length {rows}",
                bad.len()
            )));
        }
        Self::new(rows, columns.len(), dt, columns.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.rows)
    }

    pub fn as_mat(&self) -> MatRef<'_, f64> {
        MatRef::from_column_major_slice(&self.data, self.rows, self.cols)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.rows as u32).to_le_bytes());
        out.extend_from_slice(&(self.cols as u32).to_le_bytes());
        out.extend_from_slice(&self.dt.to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
            return Err(Error::BadMagic);
        }
        if bytes.len() < HEADER_LEN {
            return Err(Error::TruncatedPayload {
                expected: HEADER_LEN as u64,
                found: bytes.len() as u64,
            });
        }
        let rows = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        let cols = u32::from_le_bytes(bytes[12..16].try_into().unwrap());
        let dt = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
        let overflow = Error::SizeOverflow {
            rows: rows as u64,
            cols: cols as u64,
        };
        let payload = (rows as u64)
            .checked_mul(cols as u64)
            .and_then(|n| n.checked_mul(8))
            .filter(|&n| usize::try_from(n).is_ok())
            .ok_or(overflow)?;
        let found = (bytes.len() - HEADER_LEN) as u64;
        if found < payload {
            return Err(Error::TruncatedPayload {
                expected: payload,
                found,
            });
        }
        if found > payload {
            return Err(Error::TrailingBytes(found - payload));
        }
        let data = bytes[HEADER_LEN..]
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        Self::new(rows as usize, cols as usize, dt, data)
    }
}

pub fn read_fields(path: impl AsRef<Path>) -> Result<FieldStack> {
    FieldStack::decode(&fs::read(path)?)
}

pub fn write_fields(fields: &FieldStack, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, fields.encode())?;
    Ok(())
}

/// Time series of flattened field snapshots, one per column, uniformly
/// sampled every `dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotMatrix(FieldStack);

impl SnapshotMatrix {
    pub fn new(rows: usize, cols: usize, dt: f64, data: Vec<f64>) -> Result<Self> {
        FieldStack::new(rows, cols, dt, data)?.try_into()
    }

    pub fn from_columns(dt: f64, columns: &[Vec<f64>]) -> Result<Self> {
        FieldStack::from_columns(dt, columns)?.try_into()
    }

    /// Spatial points per snapshot (M).
    pub fn rows(&self) -> usize {
        self.0.rows
    }

    /// Number of snapshots (N).
    pub fn cols(&self) -> usize {
        self.0.cols
    }

    pub fn dt(&self) -> f64 {
        self.0.dt
    }

    pub fn data(&self) -> &[f64] {
        &self.0.data
    }

    pub fn column(&self, j: usize) -> &[f64] {
        self.0.column(j)
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.0.columns()
    }

    pub fn as_mat(&self) -> MatRef<'_, f64> {
        self.0.as_mat()
    }

    pub fn as_fields(&self) -> &FieldStack {
        &self.0
    }

    pub fn into_fields(self) -> FieldStack {
        self.0
    }

    /// Every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let data = self.0.data.iter().map(|v| v * factor).collect();
        Self::new(self.rows(), self.cols(), self.dt(), data)
    }
}

impl TryFrom<FieldStack> for SnapshotMatrix {
    type Error = Error;

    fn try_from(fields: FieldStack) -> Result<Self> {
        if fields.cols < 2 {
            return Err(Error::InvalidSnapshots(format!(
                "at least 2 snapshots required, got {}",
                fields.cols
            )));
        }
        Ok(Self(fields))
    }
}

pub fn load_snapshots(path: impl AsRef<Path>) -> Result<SnapshotMatrix> {
    read_fields(path)?.try_into()
}

pub fn save_snapshots(s: &SnapshotMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_fields(&s.0, path)
}

/// Reads comma-separated snapshots, one per line. A leading header line is
/// skipped when it does not parse as numbers.
pub fn read_csv_snapshots<R: Read>(reader: R, dt: f64) -> Result<SnapshotMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(values) => columns.push(values),
            Err(_) if line == 0 => continue,
            Err(e) => return Err(Error::Csv(format!("line {}: {e}", line + 1))),
        }
    }
    SnapshotMatrix::from_columns(dt, &columns)
}

/// Left- and right-shifted (optionally time-delay stacked) data matrices.
#[derive(Clone, Debug)]
pub struct DataMatrixPair {
    pub v0: Mat<f64>,
    pub v1: Mat<f64>,
    pub m_stack: usize,
    pub base_m: usize,
}

/// Stacks `m_stack + 1` consecutive snapshots per column and splits the
/// result into its left- and right-shifted parts.
pub fn build_data_matrices(s: &SnapshotMatrix, m_stack: usize) -> Result<DataMatrixPair> {
    let n = s.cols();
    if m_stack + 2 > n {
        return Err(Error::InsufficientSnapshots {
            snapshots: n,
            stack: m_stack,
        });
    }
    let base_m = s.rows();
    let rows = (m_stack + 1) * base_m;
    let pairs = n - m_stack - 1;
    let data = s.as_mat();
    let stacked = |offset: usize| {
        Mat::from_fn(rows, pairs, |i, k| {
            data[(i % base_m, k + offset + i / base_m)]
        })
    };
    Ok(DataMatrixPair {
        v0: stacked(0),
        v1: stacked(1),
        m_stack,
        base_m,
    })
}

/// Keeps the leading `base_m` entries of a stacked vector.
pub fn unstack_vector(v: &[c64], base_m: usize) -> Result<Vec<c64>> {
    if base_m == 0 || v.len() < base_m || !v.len().is_multiple_of(base_m) {
        return Err(Error::LengthMismatch(format!(
            "vector of length {} is not a stack of blocks of {base_m}",
            v.len()
        )));
    }
    Ok(v[..base_m].to_vec())
}
