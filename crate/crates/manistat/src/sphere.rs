//! Geometry of the unit sphere `S^d` and its sphere-specific CLT
//! ingredients: exponential/logarithm maps, the `S^2` tangent frame,
//! logarithmic coordinates, the intrinsic Hessian of the squared geodesic
//! distance, and the extrinsic covariance for the inclusion embedding.

use nalgebra::{DMatrix, DVector};

use crate::manifold::Chart;
use crate::{Error, Result};

/// Tolerance on `p . x + 1` below which the log map is refused: the
/// logarithm is unbounded at the antipode.
pub const ANTIPODAL_TOL: f64 = 1e-9;

/// A point of `S^d` as a unit vector in `R^{d+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector(DVector<f64>);

impl UnitVector {
    pub fn new(v: DVector<f64>) -> Result<Self> {
        let norm = v.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "unit vector has norm {norm}"
            )));
        }
        Ok(Self(v))
    }

    /// Normalizes a nonzero vector onto the sphere.
    pub fn from_unnormalized(v: DVector<f64>) -> Result<Self> {
        let norm = v.norm();
        if norm < 1e-12 {
            return Err(Error::InvalidArgument("cannot normalize zero vector".into()));
        }
        Ok(Self(v / norm))
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len() - 1
    }
}

/// Geodesic (arc) distance.
pub fn geodesic_distance(p: &UnitVector, x: &UnitVector) -> f64 {
    p.0.dot(&x.0).clamp(-1.0, 1.0).acos()
}

/// Exp_p(v) = cos(|v|) p + sin(|v|) v/|v|, with v tangent at p.
pub fn exp_map(p: &UnitVector, v: &DVector<f64>) -> UnitVector {
    let norm = v.norm();
    if norm < 1e-300 {
        return p.clone();
    }
    let out = p.0.clone() * norm.cos() + v * (norm.sin() / norm);
    // renormalize against drift
    UnitVector::from_unnormalized(out).expect("exp map output is near-unit")
}

/// Log_p x = arccos(p.x) (x - (p.x)p) / |x - (p.x)p|; errors at the antipode.
pub fn log_map(p: &UnitVector, x: &UnitVector) -> Result<DVector<f64>> {
    let c = p.0.dot(&x.0).clamp(-1.0, 1.0);
    if c + 1.0 < ANTIPODAL_TOL {
        return Err(Error::CutLocus);
    }
    let rejection = &x.0 - &p.0 * c;
    let rnorm = rejection.norm();
    if rnorm < 1e-300 {
        return Ok(DVector::zeros(p.0.len()));
    }
    Ok(rejection * (c.acos() / rnorm))
}

/// The printed frame e1(p) of the S^2 chart together with the reconstructed
/// e2(p) = (-p1 p3 / s, -p2 p3 / s, s) where s = sqrt(p1^2 + p2^2); valid
/// away from the poles.
pub fn tangent_frame_s2(p: &UnitVector) -> Result<(DVector<f64>, DVector<f64>)> {
    if p.0.len() != 3 {
        return Err(Error::InvalidArgument("frame requires a point of S^2".into()));
    }
    let (p1, p2, p3) = (p.0[0], p.0[1], p.0[2]);
    let s2 = p1 * p1 + p2 * p2;
    if s2 <= 1e-18 {
        return Err(Error::InvalidArgument(
            "tangent frame undefined at the poles".into(),
        ));
    }
    let s = s2.sqrt();
    let e1 = DVector::from_vec(vec![-p2 / s, p1 / s, 0.0]);
    let e2 = DVector::from_vec(vec![-p1 * p3 / s, -p2 * p3 / s, s]);
    Ok((e1, e2))
}

/// Logarithmic coordinates of x in the S^2 chart at p: u^r = e_r(p) . Log_p x.
pub fn log_coords(p: &UnitVector, x: &UnitVector) -> Result<[f64; 2]> {
    let (e1, e2) = tangent_frame_s2(p)?;
    let v = log_map(p, x)?;
    Ok([e1.dot(&v), e2.dot(&v)])
}

/// Entry (r, s) of the Hessian of the squared geodesic distance in
/// logarithmic coordinates, evaluated at the chart center:
/// (2 u^r u^s / |u|^2)(1 - |u|/tan|u|) + 2 d_rs |u|/tan|u|.
pub fn hessian_entry(u: [f64; 2], r: usize, s: usize) -> Result<f64> {
    assert!(r < 2 && s < 2);
    let t2 = u[0] * u[0] + u[1] * u[1];
    let t = t2.sqrt();
    if t >= std::f64::consts::PI {
        return Err(Error::InvalidArgument(format!(
            "coordinate norm {t} outside the chart"
        )));
    }
    let delta = if r == s { 1.0 } else { 0.0 };
    if t < 1e-4 {
        // series: 1 - t/tan t = t^2/3 + t^4/45, t/tan t = 1 - t^2/3 - t^4/45
        let f = t2 / 3.0 + t2 * t2 / 45.0;
        return Ok(2.0 * u[r] * u[s] * (1.0 / 3.0 + t2 / 45.0) + 2.0 * delta * (1.0 - f));
    }
    let cot = t / t.tan();
    Ok((2.0 * u[r] * u[s] / t2) * (1.0 - cot) + 2.0 * delta * cot)
}

/// Plug-in Hessian estimate: the average of [`hessian_entry`] over the
/// sample's chart coordinates.
pub fn lambda_hat(coords: &[[f64; 2]]) -> Result<DMatrix<f64>> {
    let n = coords.len() as f64;
    let mut m = DMatrix::<f64>::zeros(2, 2);
    for u in coords {
        for r in 0..2 {
            for s in 0..2 {
                m[(r, s)] += hessian_entry(*u, r, s)?;
            }
        }
    }
    Ok(m / n)
}

/// Orthonormal tangent basis at p for general `S^d`, by Gram-Schmidt on the
/// canonical basis (deterministic: the axis most aligned with p is dropped).
pub fn tangent_basis(p: &DVector<f64>) -> Vec<DVector<f64>> {
    let k = p.len();
    let phat = p / p.norm();
    let drop = (0..k)
        .max_by(|&i, &j| phat[i].abs().partial_cmp(&phat[j].abs()).unwrap())
        .unwrap();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(k - 1);
    for i in 0..k {
        if i == drop {
            continue;
        }
        let mut v = DVector::zeros(k);
        v[i] = 1.0;
        v -= &phat * phat[i];
        for b in &basis {
            let proj = b.dot(&v);
            v -= b * proj;
        }
        let norm = v.norm();
        if norm > 1e-12 {
            basis.push(v / norm);
        }
    }
    basis
}

/// Extrinsic covariance of a sphere sample for the inclusion embedding:
/// |mu|^-2 times the empirical second moments of the tangential frame
/// components of the observations at mu/|mu|.
pub fn sphere_extrinsic_cov(sample: &[UnitVector], mu: &DVector<f64>) -> Result<DMatrix<f64>> {
    let norm = mu.norm();
    if norm <= 1e-12 {
        return Err(Error::FocalMean { gap: norm });
    }
    let basis = tangent_basis(mu);
    let d = basis.len();
    let n = sample.len() as f64;
    let mut g = DMatrix::<f64>::zeros(d, d);
    for x in sample {
        let comps: Vec<f64> = basis.iter().map(|e| e.dot(x.coords())).collect();
        for a in 0..d {
            for b in 0..d {
                g[(a, b)] += comps[a] * comps[b];
            }
        }
    }
    Ok(g / (n * norm * norm))
}

/// Chart at `base` given by the inverse exponential map, coordinates in the
/// S^2 frame of [`tangent_frame_s2`].
pub fn log_chart_s2(base: UnitVector) -> Result<Chart<UnitVector>> {
    let (e1, e2) = tangent_frame_s2(&base)?;
    let b_to = base.clone();
    let b_from = base.clone();
    let (e1f, e2f) = (e1.clone(), e2.clone());
    Ok(Chart::new(
        "s2-log",
        base,
        move |p: &UnitVector| {
            let v = log_map(&b_to, p)?;
            Ok(DVector::from_vec(vec![e1.dot(&v), e2.dot(&v)]))
        },
        move |u: &DVector<f64>| {
            let v = &e1f * u[0] + &e2f * u[1];
            Ok(exp_map(&b_from, &v))
        },
    ))
}
