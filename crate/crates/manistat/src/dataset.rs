//! CSV ingestion for the supported data kinds: unit directions (lat/lon or
//! xyz), axes, planar landmark configurations, and tetrads. UTF-8,
//! comma-separated, '#'-prefixed lines are comments.

use std::path::Path;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::axial::Axis;
use crate::bookstein::Tetrad;
use crate::sphere::UnitVector;
use crate::{Error, Result};

/// Column convention for direction files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionConvention {
    /// Geographic latitude and longitude in degrees:
    /// (cos(lat)cos(lon), cos(lat)sin(lon), sin(lat)).
    LatLonDeg,
    /// Three Cartesian components, renormalized when within 1e-6 of unit.
    Xyz,
}

fn read_rows(path: &Path) -> Result<Vec<(usize, Vec<f64>)>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Result<Vec<f64>> = trimmed
            .split(',')
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| Error::Parse {
                    path: path.display().to_string(),
                    line,
                    message: format!("not a number: {:?}", f.trim()),
                })
            })
            .collect();
        rows.push((line, fields?));
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: 0,
            message: "no data rows".into(),
        });
    }
    Ok(rows)
}

fn arity_error(path: &Path, line: usize, want: &str, got: usize) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: format!("expected {want} fields, got {got}"),
    }
}

fn unit_from_xyz(path: &Path, line: usize, f: &[f64]) -> Result<UnitVector> {
    let v = DVector::from_row_slice(f);
    let norm = v.norm();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line,
            message: format!("xyz row has norm {norm}, outside the unit tolerance"),
        });
    }
    UnitVector::from_unnormalized(v)
}

/// Directions on S² from a CSV of lat/lon pairs (degrees) or xyz triples.
pub fn parse_directions(path: &Path, convention: DirectionConvention) -> Result<Vec<UnitVector>> {
    read_rows(path)?
        .into_iter()
        .map(|(line, f)| match convention {
            DirectionConvention::LatLonDeg => {
                if f.len() != 2 {
                    return Err(arity_error(path, line, "2", f.len()));
                }
                let lat = f[0].to_radians();
                let lon = f[1].to_radians();
                UnitVector::from_unnormalized(DVector::from_vec(vec![
                    lat.cos() * lon.cos(),
                    lat.cos() * lon.sin(),
                    lat.sin(),
                ]))
            }
            DirectionConvention::Xyz => {
                if f.len() != 3 {
                    return Err(arity_error(path, line, "3", f.len()));
                }
                unit_from_xyz(path, line, &f)
            }
        })
        .collect()
}

/// Axes from a CSV of xyz triples (sign is quotiented away).
pub fn parse_axes(path: &Path) -> Result<Vec<Axis>> {
    read_rows(path)?
        .into_iter()
        .map(|(line, f)| {
            if f.len() != 3 {
                return Err(arity_error(path, line, "3", f.len()));
            }
            let u = unit_from_xyz(path, line, &f)?;
            Axis::from_unnormalized(u.coords().clone())
        })
        .collect()
}

/// Landmark configurations from CSV rows of 2k fields (x1,y1,...,xk,yk).
pub fn parse_planar_landmarks(path: &Path, k: usize) -> Result<Vec<Vec<Complex64>>> {
    if k < 3 {
        return Err(Error::InvalidArgument("need at least 3 landmarks".into()));
    }
    read_rows(path)?
        .into_iter()
        .map(|(line, f)| {
            if f.len() != 2 * k {
                return Err(arity_error(path, line, &format!("{}", 2 * k), f.len()));
            }
            let config: Vec<Complex64> = (0..k)
                .map(|i| Complex64::new(f[2 * i], f[2 * i + 1]))
                .collect();
            if config.iter().all(|c| (c - config[0]).norm() < 1e-12) {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line,
                    message: "all landmarks identical".into(),
                });
            }
            Ok(config)
        })
        .collect()
}

/// Tetrads from CSV rows of 12 fields (4 landmarks × 3 coordinates).
pub fn parse_tetrads(path: &Path) -> Result<Vec<Tetrad>> {
    read_rows(path)?
        .into_iter()
        .map(|(line, f)| {
            if f.len() != 12 {
                return Err(arity_error(path, line, "12", f.len()));
            }
            let mut l = [[0.0; 3]; 4];
            for i in 0..4 {
                for r in 0..3 {
                    l[i][r] = f[3 * i + r];
                }
            }
            Tetrad::new(l).map_err(|e| Error::Parse {
                path: path.display().to_string(),
                line,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Paired tetrads from two equal-length files, matched by row index.
pub fn parse_paired_tetrads(before: &Path, after: &Path) -> Result<(Vec<Tetrad>, Vec<Tetrad>)> {
    let b = parse_tetrads(before)?;
    let a = parse_tetrads(after)?;
    if b.len() != a.len() {
        return Err(Error::LengthMismatch(b.len(), a.len()));
    }
    Ok((b, a))
}

/// CSV serializers, inverses of the parsers above (xyz for directions).
pub fn directions_to_csv(sample: &[UnitVector]) -> String {
    let mut out = String::from("# x,y,z\n");
    for p in sample {
        let c = p.coords();
        out.push_str(&format!("{:.17},{:.17},{:.17}\n", c[0], c[1], c[2]));
    }
    out
}

pub fn landmarks_to_csv(rows: &[Vec<Complex64>]) -> String {
    let mut out = String::from("# x1,y1,...\n");
    for config in rows {
        let fields: Vec<String> = config
            .iter()
            .flat_map(|c| [format!("{:.17}", c.re), format!("{:.17}", c.im)])
            .collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn tetrads_to_csv(rows: &[Tetrad]) -> String {
    let mut out = String::from("# x1,y1,z1,...,x4,y4,z4\n");
    for t in rows {
        let fields: Vec<String> = t
            .landmarks
            .iter()
            .flat_map(|l| l.iter().map(|v| format!("{v:.17}")))
            .collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}
