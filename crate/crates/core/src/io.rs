//! File formats: CSV matrices/vectors, PGM images, run histories and
//! key=value metadata.
//!
//! Dense matrices are CSV with a `rows,cols` header line followed by one row
//! per line. Floats are written in Rust's shortest round-trip form, so a
//! parse of emitted CSV reproduces the in-memory values bitwise.

use crate::error::{Error, Result};
use crate::solvers::{IterationRecord, SolverRun};
use nalgebra::{DMatrix, DVector};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "{},{}", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{}", m[(i, j)])).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let name = path.display().to_string();
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(&name, "empty file"))?;
    let dims: Vec<&str> = header.split(',').collect();
    if dims.len() != 2 {
        return Err(Error::parse(&name, "header must be 'rows,cols'"));
    }
    let rows: usize = dims[0]
        .trim()
        .parse()
        .map_err(|_| Error::parse(&name, "bad row count"))?;
    let cols: usize = dims[1]
        .trim()
        .parse()
        .map_err(|_| Error::parse(&name, "bad column count"))?;
    let mut data = Vec::with_capacity(rows * cols);
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<&str> = line.split(',').collect();
        if vals.len() != cols {
            return Err(Error::parse(
                &name,
                format!(
                    "row {} has {} entries, expected {}",
                    i + 1,
                    vals.len(),
                    cols
                ),
            ));
        }
        for v in vals {
            data.push(
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::parse(&name, format!("bad float '{v}'")))?,
            );
        }
    }
    if data.len() != rows * cols {
        return Err(Error::parse(
            &name,
            format!("expected {} values, found {}", rows * cols, data.len()),
        ));
    }
    Ok(DMatrix::from_row_iterator(rows, cols, data))
}

/// A vector is stored as an n×1 matrix.
pub fn write_vector_csv(path: &Path, v: &DVector<f64>) -> Result<()> {
    let m = DMatrix::from_column_slice(v.len(), 1, v.as_slice());
    write_matrix_csv(path, &m)
}

pub fn read_vector_csv(path: &Path) -> Result<DVector<f64>> {
    let m = read_matrix_csv(path)?;
    if m.ncols() != 1 {
        return Err(Error::parse(
            path.display().to_string(),
            format!("expected a single column, found {}", m.ncols()),
        ));
    }
    Ok(DVector::from_column_slice(m.column(0).as_slice()))
}

/// Binary PGM (P5), 8-bit for `max_val <= 255`, 16-bit big-endian otherwise.
/// Values are linearly mapped from [lo, hi] (the image's own range).
pub fn write_pgm(
    path: &Path,
    img: &DVector<f64>,
    side_rows: usize,
    side_cols: usize,
    bits: u8,
) -> Result<()> {
    if img.len() != side_rows * side_cols {
        return Err(Error::InvalidParameter(format!(
            "image length {} does not match {}x{}",
            img.len(),
            side_rows,
            side_cols
        )));
    }
    let lo = img.min();
    let hi = img.max();
    let span = if hi > lo { hi - lo } else { 1.0 };
    let max_val: u32 = match bits {
        8 => 255,
        16 => 65535,
        other => {
            return Err(Error::InvalidParameter(format!(
                "pgm depth must be 8 or 16 bits, got {other}"
            )))
        }
    };
    let mut bytes = format!("P5\n{} {}\n{}\n", side_cols, side_rows, max_val).into_bytes();
    // flat storage is column-major (row fastest); PGM scans row by row
    for r in 0..side_rows {
        for c in 0..side_cols {
            let v = img[c * side_rows + r];
            let q = (((v - lo) / span) * max_val as f64)
                .round()
                .clamp(0.0, max_val as f64) as u32;
            if bits == 8 {
                bytes.push(q as u8);
            } else {
                bytes.push((q >> 8) as u8);
                bytes.push((q & 0xff) as u8);
            }
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Reads a binary P5 PGM back into a column-major flat image scaled to the
/// unit interval.
pub fn read_pgm(path: &Path) -> Result<(DVector<f64>, usize, usize)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let name = path.display().to_string();
    let mut fields = Vec::new();
    let mut pos = 0usize;
    // header: magic, width, height, maxval (comments allowed)
    while fields.len() < 4 && pos < bytes.len() {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        fields.push(
            std::str::from_utf8(&bytes[start..pos])
                .map_err(|_| Error::parse(&name, "non-ascii header"))?
                .to_string(),
        );
    }
    if fields.len() < 4 || fields[0] != "P5" {
        return Err(Error::parse(&name, "expected binary P5 header"));
    }
    pos += 1; // single whitespace after maxval
    let cols: usize = fields[1]
        .parse()
        .map_err(|_| Error::parse(&name, "bad width"))?;
    let rows: usize = fields[2]
        .parse()
        .map_err(|_| Error::parse(&name, "bad height"))?;
    let maxval: u32 = fields[3]
        .parse()
        .map_err(|_| Error::parse(&name, "bad maxval"))?;
    let two_bytes = maxval > 255;
    let need = rows * cols * if two_bytes { 2 } else { 1 };
    if bytes.len() < pos + need {
        return Err(Error::parse(&name, "truncated pixel data"));
    }
    let mut img = DVector::zeros(rows * cols);
    let mut cursor = pos;
    for r in 0..rows {
        for c in 0..cols {
            let q = if two_bytes {
                let v = ((bytes[cursor] as u32) << 8) | bytes[cursor + 1] as u32;
                cursor += 2;
                v
            } else {
                let v = bytes[cursor] as u32;
                cursor += 1;
                v
            };
            img[c * rows + r] = q as f64 / maxval as f64;
        }
    }
    Ok((img, rows, cols))
}

pub const RUN_CSV_HEADER: &str =
    "cycle,k_global,k_local,relres,relerr,objective_lp,bound_grad,bound_func,restarted";

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

pub fn write_run_csv(path: &Path, run: &SolverRun) -> Result<()> {
    let mut out = String::from(RUN_CSV_HEADER);
    out.push('\n');
    for r in &run.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.cycle,
            r.k_global,
            r.k_local,
            r.relres,
            opt(r.relerr),
            r.objective_lp,
            opt(r.bound_grad),
            opt(r.bound_func),
            if r.restarted { 1 } else { 0 }
        );
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_run_csv(path: &Path) -> Result<Vec<IterationRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let name = path.display().to_string();
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(&name, "empty file"))?;
    if header != RUN_CSV_HEADER {
        return Err(Error::parse(&name, "unexpected header"));
    }
    let parse_f = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::parse(&name, format!("bad float '{s}'")))
    };
    let parse_opt = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            parse_f(s).map(Some)
        }
    };
    let mut records = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(Error::parse(
                &name,
                format!("expected 9 fields, got {}", f.len()),
            ));
        }
        records.push(IterationRecord {
            cycle: f[0].parse().map_err(|_| Error::parse(&name, "bad cycle"))?,
            k_global: f[1]
                .parse()
                .map_err(|_| Error::parse(&name, "bad k_global"))?,
            k_local: f[2]
                .parse()
                .map_err(|_| Error::parse(&name, "bad k_local"))?,
            relres: parse_f(f[3])?,
            relerr: parse_opt(f[4])?,
            objective_lp: parse_f(f[5])?,
            bound_grad: parse_opt(f[6])?,
            bound_func: parse_opt(f[7])?,
            restarted: f[8] == "1",
        });
    }
    Ok(records)
}

/// key=value metadata, one per line, keys written in the order given.
pub fn write_meta(path: &Path, entries: &[(String, String)]) -> Result<()> {
    let mut out = String::new();
    for (k, v) in entries {
        let _ = writeln!(out, "{k}={v}");
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_meta(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some((k, v)) = line.split_once('=') {
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
    }
    Ok(out)
}
