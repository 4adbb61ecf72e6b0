//! Dataset file formats.
//!
//! Binary matrices use the `JFMX` layout (all little-endian):
//!
//! ```text
//! magic "JFMX" | version u32 | n u64 | cols u64 | row-major f32 payload
//! ```
//!
//! CSV matrices carry a header row and round-trip exactly (floats are
//! printed in shortest round-trippable form). Scheme files are CSV with one
//! row per channel; splits are JSON index lists.

use crate::data::{AcquisitionScheme, Split};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::Real;
use std::fs;
use std::path::Path;

const MAGIC: &[u8; 4] = b"JFMX";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 8;

pub fn save_matrix(path: &Path, matrix: &Matrix<Real>) -> Result<()> {
    let mut bytes = Vec::with_capacity(HEADER_LEN + matrix.data().len() * 4);
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&VERSION.to_le_bytes());
    bytes.extend_from_slice(&(matrix.rows() as u64).to_le_bytes());
    bytes.extend_from_slice(&(matrix.cols() as u64).to_le_bytes());
    for &v in matrix.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

pub fn load_matrix(path: &Path) -> Result<Matrix<Real>> {
    let bytes = fs::read(path)?;
    let fmt_err = |offset: usize, detail: String| Error::Format {
        path: path.display().to_string(),
        offset: offset as u64,
        detail,
    };
    if bytes.len() < HEADER_LEN {
        return Err(fmt_err(bytes.len(), "truncated header".into()));
    }
    if &bytes[0..4] != MAGIC {
        return Err(fmt_err(0, "bad magic, expected JFMX".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(fmt_err(4, format!("unsupported version {version}")));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    let expected = HEADER_LEN + rows.saturating_mul(cols).saturating_mul(4);
    if bytes.len() != expected {
        return Err(fmt_err(
            bytes.len().min(expected),
            format!(
                "header declares {rows}x{cols} ({expected} bytes), file has {} bytes",
                bytes.len()
            ),
        ));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for chunk in bytes[HEADER_LEN..].chunks_exact(4) {
        data.push(f32::from_le_bytes(chunk.try_into().unwrap()));
    }
    Ok(Matrix::from_vec(rows, cols, data))
}

pub fn save_matrix_csv(path: &Path, matrix: &Matrix<Real>) -> Result<()> {
    let mut out = String::new();
    let header: Vec<String> = (0..matrix.cols()).map(|c| format!("c{c}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for r in 0..matrix.rows() {
        let row: Vec<String> = matrix.row(r).iter().map(|v| format!("{v}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load_matrix_csv(path: &Path) -> Result<Matrix<Real>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| csv_err(path, 0, "missing header row"))?;
    let cols = header.split(',').count();
    let mut rows: Vec<Vec<Real>> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(cols);
        for field in line.split(',') {
            let v: Real = field
                .trim()
                .parse()
                .map_err(|_| csv_err(path, lineno + 1, &format!("bad number {field:?}")))?;
            row.push(v);
        }
        if row.len() != cols {
            return Err(csv_err(
                path,
                lineno + 1,
                &format!("expected {cols} fields, got {}", row.len()),
            ));
        }
        rows.push(row);
    }
    Ok(Matrix::from_rows(&rows))
}

fn csv_err(path: &Path, line: usize, detail: &str) -> Error {
    Error::Format {
        path: path.display().to_string(),
        offset: line as u64,
        detail: format!("csv line {line}: {detail}"),
    }
}

/// Scheme CSV: one row per channel. A leading `label` column is written
/// when channel names are present.
pub fn save_scheme(path: &Path, scheme: &AcquisitionScheme) -> Result<()> {
    let dims = scheme.params.cols();
    let mut out = String::new();
    let mut header: Vec<String> = Vec::new();
    if scheme.labels.is_some() {
        header.push("label".into());
    }
    header.extend((0..dims).map(|d| format!("p{d}")));
    out.push_str(&header.join(","));
    out.push('\n');
    for c in 0..scheme.channels() {
        let mut fields: Vec<String> = Vec::new();
        if let Some(labels) = &scheme.labels {
            fields.push(labels[c].clone());
        }
        fields.extend(scheme.params.row(c).iter().map(|v| format!("{v}")));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load_scheme(path: &Path) -> Result<AcquisitionScheme> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| csv_err(path, 0, "missing header row"))?;
    let fields: Vec<&str> = header.split(',').collect();
    let has_labels = fields.first() == Some(&"label");
    let dims = fields.len() - usize::from(has_labels);
    let mut rows: Vec<Vec<Real>> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        if has_labels {
            labels.push(
                parts
                    .next()
                    .ok_or_else(|| csv_err(path, lineno + 1, "missing label"))?
                    .to_string(),
            );
        }
        let mut row = Vec::with_capacity(dims);
        for field in parts {
            let v: Real = field
                .trim()
                .parse()
                .map_err(|_| csv_err(path, lineno + 1, &format!("bad number {field:?}")))?;
            row.push(v);
        }
        if row.len() != dims {
            return Err(csv_err(
                path,
                lineno + 1,
                &format!("expected {dims} parameters, got {}", row.len()),
            ));
        }
        rows.push(row);
    }
    AcquisitionScheme::new(
        Matrix::from_rows(&rows),
        if has_labels { Some(labels) } else { None },
    )
}

pub fn save_split(path: &Path, split: &Split) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(split)?)?;
    Ok(())
}

pub fn load_split(path: &Path) -> Result<Split> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Writes the retained acquisition rows for a binary mask — the handoff
/// file an acquisition system consumes to collect only the kept channels.
pub fn write_design_subset(
    path: &Path,
    scheme: &AcquisitionScheme,
    mask: &[u8],
) -> Result<()> {
    save_scheme(path, &scheme.subset(mask)?)
}
