//! File formats: domain configs (TOML), boundary samples and plot data (CSV),
//! reports and certificates (JSON).
//!
//! A domain file lists the outer circle and any number of holes:
//!
//! ```toml
//! [outer]
//! center = [0.0, 0.0]
//! radius = 1.0
//!
//! [[holes]]
//! center = [0.0, 0.0]
//! radius = 0.5
//! ```
//!
//! A sample file has rows `circle_index, theta, re, im`. Circles are indexed
//! from 0 with the holes first, in file order, and the outer circle last.
//! `theta` is the polar angle about the circle's centre, and every circle must
//! carry the same number `m` of samples at `theta = 2 pi j / m`, in any row
//! order. A header row is optional; lines starting with `#` are ignored.

use std::f64::consts::TAU;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::argument::phase_trace;
use crate::boundary::{BoundaryError, BoundaryFunction};
use crate::extend::{WitnessCertificate, CERTIFICATE_FORMAT_VERSION};
use crate::geometry::{CircleDomain, DomainSpec, GeometryError, Orientation};
use crate::harmonic::HarmonicRepresentation;

/// Allowed distance, in radians, between a sample angle and its grid angle.
pub const ANGLE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Write(#[from] std::io::Error),
    #[error("invalid domain file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("sample row {row}: {message}")]
    BadRow { row: usize, message: String },
    #[error("circle {circle} has {got} samples, circle 0 has {expected}")]
    UnequalCounts { circle: usize, got: usize, expected: usize },
    #[error("no samples for circle {circle}")]
    MissingCircle { circle: usize },
    #[error("circle {circle}: sample angles are not the equispaced grid 2 pi j / {m} (angle {theta})")]
    NotEquispaced { circle: usize, m: usize, theta: f64 },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("certificate format version {found} is not supported (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
}

fn read_file(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::File { path: path.to_owned(), source })
}

pub fn parse_domain(src: &str) -> Result<CircleDomain, IoError> {
    let spec: DomainSpec = toml::from_str(src)?;
    Ok(CircleDomain::new(spec.outer, spec.holes)?)
}

pub fn read_domain(path: &Path) -> Result<CircleDomain, IoError> {
    parse_domain(&read_file(path)?)
}

pub fn domain_to_toml(domain: &CircleDomain) -> String {
    toml::to_string(&DomainSpec::from(domain.clone())).expect("domain serializes")
}

/// Reads `circle_index, theta, re, im` rows into a sampled function on
/// `domain`. The sample count is taken from the file.
pub fn read_samples<R: Read>(reader: R, domain: &CircleDomain) -> Result<BoundaryFunction, IoError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let n = domain.circle_count();
    let mut rows: Vec<Vec<(f64, Complex64)>> = vec![Vec::new(); n];
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = record.position().map_or(i + 1, |p| p.line() as usize);
        if record.len() != 4 {
            return Err(IoError::BadRow { row, message: format!("expected 4 fields, got {}", record.len()) });
        }
        let Ok(circle) = record[0].parse::<usize>() else {
            if i == 0 {
                continue;
            }
            return Err(IoError::BadRow { row, message: format!("bad circle index {:?}", &record[0]) });
        };
        if circle >= n {
            return Err(IoError::BadRow {
                row,
                message: format!("circle index {circle} out of range (domain has {n} circles)"),
            });
        }
        let mut nums = [0.0; 3];
        for (slot, field) in nums.iter_mut().zip(record.iter().skip(1)) {
            *slot = field.parse().map_err(|_| IoError::BadRow {
                row,
                message: format!("bad number {field:?}"),
            })?;
        }
        rows[circle].push((nums[0], Complex64::new(nums[1], nums[2])));
    }

    let m = rows[0].len();
    for (circle, r) in rows.iter().enumerate() {
        if r.is_empty() {
            return Err(IoError::MissingCircle { circle });
        }
        if r.len() != m {
            return Err(IoError::UnequalCounts { circle, got: r.len(), expected: m });
        }
    }
    let sampling = domain.sampling(m)?;

    let mut values = Vec::with_capacity(n);
    for (circle, r) in rows.into_iter().enumerate() {
        let mut slots = vec![None; m];
        for (theta, v) in r {
            let pos = theta.rem_euclid(TAU) / TAU * m as f64;
            let j = pos.round();
            if (pos - j).abs() * TAU / m as f64 > ANGLE_TOLERANCE {
                return Err(IoError::NotEquispaced { circle, m, theta });
            }
            let j = j as usize % m;
            let index = match sampling.circle(circle).orientation {
                Orientation::Counterclockwise => j,
                Orientation::Clockwise => (m - j) % m,
            };
            if slots[index].replace(v).is_some() {
                return Err(IoError::NotEquispaced { circle, m, theta });
            }
        }
        values.push(slots.into_iter().map(|v| v.expect("m distinct slots filled")).collect());
    }
    Ok(BoundaryFunction::from_samples(sampling, values)?)
}

pub fn read_samples_file(path: &Path, domain: &CircleDomain) -> Result<BoundaryFunction, IoError> {
    let file = fs::File::open(path).map_err(|source| IoError::File { path: path.to_owned(), source })?;
    read_samples(file, domain)
}

/// Writes `f` in the format accepted by [`read_samples`], rows ordered by
/// circle and increasing angle.
pub fn write_samples<W: Write>(writer: W, f: &BoundaryFunction) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["circle_index", "theta", "re", "im"])?;
    let m = f.sampling().samples_per_circle();
    for (k, sc) in f.sampling().circles().iter().enumerate() {
        let vals = f.circle_values(k);
        for j in 0..m {
            let index = match sc.orientation {
                Orientation::Counterclockwise => j,
                Orientation::Clockwise => (m - j) % m,
            };
            let theta = TAU * j as f64 / m as f64;
            let v = vals[index];
            w.write_record(&[k.to_string(), theta.to_string(), v.re.to_string(), v.im.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Unwrapped argument of `f` per circle: rows `circle_index, t, arg`, where
/// `t` runs from 0 to 2 pi along the circle's boundary orientation.
pub fn write_phase_csv<W: Write>(writer: W, f: &BoundaryFunction) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["circle_index", "t", "arg"])?;
    for (k, trace) in phase_trace(f).into_iter().enumerate() {
        for (t, arg) in trace {
            w.write_record(&[k.to_string(), t.to_string(), arg.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Rows `label, index, re, im` for every basis coefficient.
pub fn write_coefficients_csv<W: Write>(writer: W, h: &HarmonicRepresentation) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["label", "index", "re", "im"])?;
    for (label, index, c) in h.coefficient_table() {
        w.write_record(&[label, index.to_string(), c.re.to_string(), c.im.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    fs::write(path, to_json(value)).map_err(|source| IoError::File { path: path.to_owned(), source })
}

pub fn parse_certificate(src: &str) -> Result<WitnessCertificate, IoError> {
    let probe: serde_json::Value = serde_json::from_str(src)?;
    let found = probe.get("format_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
    if found != CERTIFICATE_FORMAT_VERSION {
        return Err(IoError::UnsupportedVersion { found, expected: CERTIFICATE_FORMAT_VERSION });
    }
    Ok(serde_json::from_value(probe)?)
}

pub fn read_certificate(path: &Path) -> Result<WitnessCertificate, IoError> {
    parse_certificate(&read_file(path)?)
}

pub fn write_certificate(path: &Path, cert: &WitnessCertificate) -> Result<(), IoError> {
    write_json(path, cert)
}
