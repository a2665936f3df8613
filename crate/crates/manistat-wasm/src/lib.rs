//! Browser demo bindings: three interactive operations exposed to
//! JavaScript with JSON-string interfaces, thin wrappers over the library.
//!
//! Every function takes JSON text and returns JSON text; failures come back
//! as `{"error": "..."}` so the page can render them without exception
//! plumbing across the boundary.

use nalgebra::DVector;
use num_complex::Complex64;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use manistat::extrinsic::{extrinsic_mean, SphereInclusion};
use manistat::frechet::{c_hat, clt_region, psi_values, region_boundary_polyline, ChartedSample, CovarianceTriple};
use manistat::manifold::intrinsic_mean;
use manistat::shape::{affine_coords, preshape_from_landmarks, procrustes_mean, simultaneous_complex_intervals};
use manistat::sphere::{exp_map, lambda_hat, log_chart_s2, log_map, UnitVector};
use manistat::stat_kernel::resample_plan;

fn fail(message: impl std::fmt::Display) -> String {
    json!({ "error": message.to_string() }).to_string()
}

fn parse_rows(input: &str, arity: usize, what: &str) -> Result<Vec<Vec<f64>>, String> {
    let doc: Value =
        serde_json::from_str(input).map_err(|e| format!("input is not JSON: {e}"))?;
    let rows = doc
        .as_array()
        .ok_or_else(|| format!("expected a JSON array of {what} rows"))?;
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            let fields = row
                .as_array()
                .ok_or_else(|| format!("row {i} is not an array"))?;
            if fields.len() != arity {
                return Err(format!("row {i} has {} fields, expected {arity}", fields.len()));
            }
            fields
                .iter()
                .map(|v| v.as_f64().ok_or_else(|| format!("row {i} has a non-numeric field")))
                .collect()
        })
        .collect()
}

fn latlon_to_unit(lat_deg: f64, lon_deg: f64) -> manistat::Result<UnitVector> {
    let lat = lat_deg.to_radians();
    let lon = lon_deg.to_radians();
    UnitVector::from_unnormalized(DVector::from_vec(vec![
        lat.cos() * lon.cos(),
        lat.cos() * lon.sin(),
        lat.sin(),
    ]))
}

fn unit_to_latlon(p: &UnitVector) -> (f64, f64) {
    let c = p.coords();
    (c[2].clamp(-1.0, 1.0).asin().to_degrees(), c[1].atan2(c[0]).to_degrees())
}

/// Intrinsic mean and CLT confidence region on S^2 from latitude/longitude
/// degree pairs. Returns the mean, the chi-square threshold, and the region
/// boundary as a lat/lon polyline ready for plotting.
#[wasm_bindgen]
pub fn sphere_region(points_json: &str, level: f64, boundary_points: usize) -> String {
    match sphere_region_impl(points_json, level, boundary_points) {
        Ok(doc) => doc.to_string(),
        Err(e) => fail(e),
    }
}

fn sphere_region_impl(
    points_json: &str,
    level: f64,
    boundary_points: usize,
) -> Result<Value, String> {
    let rows = parse_rows(points_json, 2, "[lat, lon]")?;
    if rows.len() < 3 {
        return Err("need at least 3 points".into());
    }
    let sample: Vec<UnitVector> = rows
        .iter()
        .map(|r| latlon_to_unit(r[0], r[1]).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let incl = SphereInclusion { ambient: 3 };
    let ext = extrinsic_mean(&sample, &incl).map_err(|e| e.to_string())?;
    let mean = intrinsic_mean(&sample, exp_map, |p, x| log_map(p, x), &ext.mean_point, 1e-10, 1000)
        .map_err(|e| e.to_string())?;
    let chart = log_chart_s2(mean.clone()).map_err(|e| e.to_string())?;
    let coords: Vec<DVector<f64>> = sample
        .iter()
        .map(|x| chart.to_coords(x).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let pairs: Vec<[f64; 2]> = coords.iter().map(|u| [u[0], u[1]]).collect();
    let charted =
        ChartedSample::new("s2-log", coords, DVector::zeros(2)).map_err(|e| e.to_string())?;
    let lambda = lambda_hat(&pairs).map_err(|e| e.to_string())?;
    let cov =
        CovarianceTriple::new(lambda, c_hat(&psi_values(&charted))).map_err(|e| e.to_string())?;
    let region = clt_region(&charted, &cov, level).map_err(|e| e.to_string())?;
    let boundary: Vec<Value> = region_boundary_polyline(&region, boundary_points.max(3))
        .map_err(|e| e.to_string())?
        .iter()
        .map(|u| {
            let p = chart.from_coords(u).map_err(|e| e.to_string())?;
            let (lat, lon) = unit_to_latlon(&p);
            Ok(json!([lat, lon]))
        })
        .collect::<Result<_, String>>()?;
    let (lat, lon) = unit_to_latlon(&mean);
    Ok(json!({
        "n": sample.len(),
        "mean_latlon": [lat, lon],
        "mean_xyz": [mean.coords()[0], mean.coords()[1], mean.coords()[2]],
        "level": level,
        "threshold": region.threshold,
        "boundary_latlon": boundary,
    }))
}

/// Extrinsic mean axis on RP^2 from unnormalized xyz rows, with the
/// eigenvalues of the average Veronese image and the nonfocality eigengap.
#[wasm_bindgen]
pub fn axial_mean(axes_json: &str) -> String {
    match axial_mean_impl(axes_json) {
        Ok(doc) => doc.to_string(),
        Err(e) => fail(e),
    }
}

fn axial_mean_impl(axes_json: &str) -> Result<Value, String> {
    let rows = parse_rows(axes_json, 3, "[x, y, z]")?;
    if rows.is_empty() {
        return Err("need at least 1 axis".into());
    }
    let sample: Vec<manistat::axial::Axis> = rows
        .iter()
        .map(|r| {
            manistat::axial::Axis::from_unnormalized(DVector::from_vec(r.clone()))
                .map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;
    let cov = manistat::axial::rp_extrinsic_cov(&sample).map_err(|e| e.to_string())?;
    let m = cov.mean_axis.rep();
    Ok(json!({
        "n": sample.len(),
        "mean_axis": [m[0], m[1], m[2]],
        "eigenvalues": cov.eigenvalues.iter().copied().collect::<Vec<f64>>(),
        "eigengap": cov.gap,
    }))
}

/// Procrustes mean shape of planar landmark rows [x1, y1, ..., xk, yk], with
/// affine coordinates and bootstrap simultaneous rectangles for them.
#[wasm_bindgen]
pub fn planar_shape_mean(landmarks_json: &str, b: usize, seed: u64, level: f64) -> String {
    match planar_shape_mean_impl(landmarks_json, b, seed, level) {
        Ok(doc) => doc.to_string(),
        Err(e) => fail(e),
    }
}

fn planar_shape_mean_impl(
    landmarks_json: &str,
    b: usize,
    seed: u64,
    level: f64,
) -> Result<Value, String> {
    let doc: Value =
        serde_json::from_str(landmarks_json).map_err(|e| format!("input is not JSON: {e}"))?;
    let rows = doc
        .as_array()
        .ok_or_else(|| "expected a JSON array of landmark rows".to_string())?;
    if rows.is_empty() {
        return Err("need at least 1 configuration".into());
    }
    let first = rows[0].as_array().ok_or_else(|| "row 0 is not an array".to_string())?;
    if first.len() < 6 || first.len() % 2 != 0 {
        return Err("each row needs an even number of at least 6 fields".into());
    }
    let arity = first.len();
    let flat = parse_rows(landmarks_json, arity, "landmark")?;
    let shapes: Vec<_> = flat
        .iter()
        .map(|r| {
            let cfg: Vec<Complex64> = r
                .chunks(2)
                .map(|xy| Complex64::new(xy[0], xy[1]))
                .collect();
            preshape_from_landmarks(&cfg).map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;
    let mean = procrustes_mean(&shapes).map_err(|e| e.to_string())?;
    let coords = affine_coords(&mean.mean).map_err(|e| e.to_string())?;
    let mut out = json!({
        "n": shapes.len(),
        "landmarks": arity / 2,
        "mean_preshape": mean
            .mean
            .rep()
            .iter()
            .map(|z| json!({ "re": z.re, "im": z.im }))
            .collect::<Vec<Value>>(),
        "affine_coords": coords
            .iter()
            .map(|z| json!({ "re": z.re, "im": z.im }))
            .collect::<Vec<Value>>(),
        "eigengap": mean.gap,
    });
    if b > 0 {
        let plan = resample_plan(seed, b, shapes.len()).map_err(|e| e.to_string())?;
        let ivs = simultaneous_complex_intervals(&shapes, &plan, level).map_err(|e| e.to_string())?;
        out["intervals"] = Value::Array(
            ivs.intervals
                .iter()
                .map(|iv| {
                    json!({
                        "re": [iv.lo.re, iv.hi.re],
                        "im": [iv.lo.im, iv.hi.im],
                    })
                })
                .collect(),
        );
        out["margin_level"] = json!(ivs.margin_level);
        out["degenerate_count"] = json!(ivs.degenerate_count);
    }
    Ok(out)
}
