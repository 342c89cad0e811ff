//! Problem bundles on disk: x_true.{csv,pgm}, b.csv, r_true.csv, meta.txt.

use flexgk::error::{Error, Result};
use flexgk::io;
use flexgk::operators::{Boundary, Operator};
use flexgk::problems::{NoiseKind, NoiseMeta, Problem};
use std::path::Path;

/// Image shape of the measurement vector (rows, cols): the image itself for
/// deblurring, the sinogram (rays × angles) for tomography.
pub struct BundleShape {
    pub data_rows: usize,
    pub data_cols: usize,
    pub solution_rows: usize,
    pub solution_cols: usize,
}

pub fn write_bundle(
    dir: &Path,
    problem: &Problem,
    meta: &[(String, String)],
    pgm_depth: u8,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let shape = shape_from_meta(meta)?;
    if let Some(x_true) = &problem.x_true {
        io::write_vector_csv(&dir.join("x_true.csv"), x_true)?;
        io::write_pgm(
            &dir.join("x_true.pgm"),
            x_true,
            shape.solution_rows,
            shape.solution_cols,
            pgm_depth,
        )?;
    }
    io::write_vector_csv(&dir.join("b.csv"), &problem.b)?;
    if let Some(r_true) = &problem.r_true {
        io::write_vector_csv(&dir.join("r_true.csv"), r_true)?;
    }
    io::write_meta(&dir.join("meta.txt"), meta)
}

pub fn read_bundle(dir: &Path) -> Result<(Problem, Vec<(String, String)>)> {
    let meta = io::read_meta(&dir.join("meta.txt"))?;
    let get = |key: &str| -> Result<&str> {
        meta.iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| {
                Error::parse(
                    dir.join("meta.txt").display().to_string(),
                    format!("missing key '{key}'"),
                )
            })
    };
    let parse_usize = |key: &str| -> Result<usize> {
        get(key)?.parse().map_err(|_| {
            Error::parse(
                dir.display().to_string(),
                format!("bad integer for '{key}'"),
            )
        })
    };
    let parse_f64 = |key: &str| -> Result<f64> {
        get(key)?
            .parse()
            .map_err(|_| Error::parse(dir.display().to_string(), format!("bad float for '{key}'")))
    };
    let op = match get("problem")? {
        "deblur" => Operator::gaussian_blur(
            parse_usize("side")?,
            parse_f64("psf_sigma")?,
            parse_usize("psf_halfwidth")?,
            Boundary::Zero,
        )?,
        "tomo" => Operator::parallel_beam(
            parse_usize("grid")?,
            parse_usize("angles")?,
            parse_usize("rays")?,
        )?,
        other => {
            return Err(Error::parse(
                dir.display().to_string(),
                format!("unknown problem kind '{other}'"),
            ))
        }
    };
    let b = io::read_vector_csv(&dir.join("b.csv"))?;
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::parse(
            dir.join("b.csv").display().to_string(),
            "data contains non-finite entries",
        ));
    }
    let x_true = {
        let p = dir.join("x_true.csv");
        if p.exists() {
            Some(io::read_vector_csv(&p)?)
        } else {
            None
        }
    };
    let r_true = {
        let p = dir.join("r_true.csv");
        if p.exists() {
            Some(io::read_vector_csv(&p)?)
        } else {
            None
        }
    };
    let fraction = parse_f64("noise_fraction").unwrap_or(0.0);
    let problem = Problem {
        op,
        b,
        x_true,
        r_true,
        noise: NoiseMeta {
            kind: if fraction > 0.0 {
                NoiseKind::SaltPepper
            } else {
                NoiseKind::None
            },
            fraction,
            seed: get("seed")?.parse().unwrap_or(0),
            corrupted: parse_usize("corrupted").unwrap_or(0),
            collisions: parse_usize("collisions").unwrap_or(0),
        },
    };
    Ok((problem, meta))
}

pub fn shape_from_meta(meta: &[(String, String)]) -> Result<BundleShape> {
    let get = |key: &str| meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
    let parse = |key: &str| -> Result<usize> {
        get(key)
            .ok_or_else(|| Error::InvalidParameter(format!("meta missing '{key}'")))?
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("meta has bad integer for '{key}'")))
    };
    match get("problem") {
        Some("deblur") => {
            let side = parse("side")?;
            Ok(BundleShape {
                data_rows: side,
                data_cols: side,
                solution_rows: side,
                solution_cols: side,
            })
        }
        Some("tomo") => {
            let grid = parse("grid")?;
            Ok(BundleShape {
                data_rows: parse("rays")?,
                data_cols: parse("angles")?,
                solution_rows: grid,
                solution_cols: grid,
            })
        }
        other => Err(Error::InvalidParameter(format!(
            "unknown problem kind {other:?}"
        ))),
    }
}
