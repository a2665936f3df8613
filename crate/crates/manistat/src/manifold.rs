//! Manifold-agnostic machinery: charts, the Fréchet function, the Karcher
//! fixed-point iteration for the intrinsic mean, and the support-radius
//! diagnostic for the concentration condition of the intrinsic-mean CLT.

use nalgebra::DVector;

use crate::{Error, Result};

/// A coordinate chart centered at `base`: `to` maps manifold points into
/// d-dimensional coordinates with `to(base) = 0`, `from` inverts it on the
/// chart domain.
pub struct Chart<P> {
    pub id: String,
    pub base: P,
    to: Box<dyn Fn(&P) -> Result<DVector<f64>> + Send + Sync>,
    from: Box<dyn Fn(&DVector<f64>) -> Result<P> + Send + Sync>,
}

impl<P> Chart<P> {
    pub fn new(
        id: impl Into<String>,
        base: P,
        to: impl Fn(&P) -> Result<DVector<f64>> + Send + Sync + 'static,
        from: impl Fn(&DVector<f64>) -> Result<P> + Send + Sync + 'static,
    ) -> Self {
        Self {
            id: id.into(),
            base,
            to: Box::new(to),
            from: Box::new(from),
        }
    }

    pub fn to_coords(&self, p: &P) -> Result<DVector<f64>> {
        (self.to)(p)
    }

    pub fn from_coords(&self, u: &DVector<f64>) -> Result<P> {
        (self.from)(u)
    }
}

/// Empirical Fréchet function: the mean squared distance from `p` to the
/// sample.
pub fn frechet_value<P>(points: &[P], p: &P, distance: impl Fn(&P, &P) -> f64) -> f64 {
    let n = points.len() as f64;
    points.iter().map(|x| distance(p, x).powi(2)).sum::<f64>() / n
}

/// Outcome of the support-radius concentration check: the sample must fit in
/// a ball of radius less than pi/(4K) around `center`, K^2 the curvature sup.
#[derive(Debug, Clone)]
pub struct SupportRadiusCheck {
    pub r: f64,
    pub bound: f64,
    pub ok: bool,
}

pub fn support_radius_check<P>(
    points: &[P],
    center: &P,
    curvature_sup: f64,
    distance: impl Fn(&P, &P) -> f64,
) -> SupportRadiusCheck {
    let r = points
        .iter()
        .map(|x| distance(center, x))
        .fold(0.0f64, f64::max);
    let bound = if curvature_sup > 0.0 {
        std::f64::consts::PI / (4.0 * curvature_sup.sqrt())
    } else {
        f64::INFINITY
    };
    SupportRadiusCheck {
        r,
        bound,
        ok: r < bound,
    }
}

/// Intrinsic (Karcher) mean by tangent-mean shooting: iterate
/// `p <- Exp_p(mean_i Log_p x_i)` until the tangent mean has norm below
/// `tol`, at most `max_iter` iterations.
pub fn intrinsic_mean<P: Clone>(
    points: &[P],
    exp_map: impl Fn(&P, &DVector<f64>) -> P,
    log_map: impl Fn(&P, &P) -> Result<DVector<f64>>,
    init: &P,
    tol: f64,
    max_iter: usize,
) -> Result<P> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    let n = points.len() as f64;
    let mut current = init.clone();
    let mut prev_value = f64::INFINITY;
    for _ in 0..max_iter {
        let mut tangent: Option<DVector<f64>> = None;
        let mut value = 0.0;
        for x in points {
            let v = log_map(&current, x)?;
            value += v.norm_squared();
            tangent = Some(match tangent {
                Some(acc) => acc + &v,
                None => v,
            });
        }
        value /= n;
        // The Karcher step never increases the Fréchet value on concentrated
        // data; tolerate roundoff.
        debug_assert!(value <= prev_value + 1e-9 * (1.0 + prev_value));
        prev_value = value;
        let mut step = tangent.expect("nonempty sample");
        step /= n;
        if step.norm() < tol {
            return Ok(current);
        }
        current = exp_map(&current, &step);
    }
    Err(Error::NoConvergence(max_iter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{self, UnitVector};

    fn s2(x: f64, y: f64, z: f64) -> UnitVector {
        UnitVector::new(DVector::from_vec(vec![x, y, z])).unwrap()
    }

    fn dist(p: &UnitVector, x: &UnitVector) -> f64 {
        sphere::geodesic_distance(p, x)
    }

    #[test]
    fn frechet_value_singleton_is_zero() {
        let p = s2(0.0, 0.0, 1.0);
        assert_eq!(frechet_value(&[p.clone()], &p, dist), 0.0);
    }

    #[test]
    fn frechet_value_quarter_circle() {
        let p = s2(0.0, 0.0, 1.0);
        let e1 = s2(1.0, 0.0, 0.0);
        let expected = (std::f64::consts::FRAC_PI_2).powi(2);
        assert!((frechet_value(&[e1], &p, dist) - expected).abs() < 1e-14);
    }

    #[test]
    fn frechet_value_matches_direct_sum() {
        let p = s2(0.6, 0.0, 0.8);
        let sample = vec![s2(1.0, 0.0, 0.0), s2(0.0, 1.0, 0.0), s2(0.0, 0.0, 1.0)];
        let direct: f64 = sample
            .iter()
            .map(|x| {
                let c = p.coords().dot(x.coords()).clamp(-1.0, 1.0);
                c.acos().powi(2)
            })
            .sum::<f64>()
            / 3.0;
        assert!((frechet_value(&sample, &p, dist) - direct).abs() < 1e-12);
    }

    fn exp(p: &UnitVector, v: &DVector<f64>) -> UnitVector {
        sphere::exp_map(p, v)
    }

    fn log(p: &UnitVector, x: &UnitVector) -> Result<DVector<f64>> {
        sphere::log_map(p, x)
    }

    #[test]
    fn constant_sample_mean_is_the_point() {
        let p = s2(0.6, 0.0, 0.8);
        let init = s2(0.0, 0.0, 1.0);
        let m = intrinsic_mean(&[p.clone(), p.clone()], exp, log, &init, 1e-12, 1000).unwrap();
        assert!((m.coords() - p.coords()).norm() < 1e-10);
    }

    #[test]
    fn symmetric_pair_mean_is_midpoint() {
        let q = s2(0.0, 0.0, 1.0);
        let v = DVector::from_vec(vec![0.3, 0.0, 0.0]);
        let a = sphere::exp_map(&q, &v);
        let b = sphere::exp_map(&q, &(-&v));
        let m = intrinsic_mean(&[a, b], exp, log, &q, 1e-12, 1000).unwrap();
        assert!((m.coords() - q.coords()).norm() < 1e-10);
    }

    #[test]
    fn support_radius_single_point() {
        let p = s2(0.0, 0.0, 1.0);
        let c = support_radius_check(&[p.clone()], &p, 1.0, dist);
        assert_eq!(c.r, 0.0);
        assert!(c.ok);
    }

    #[test]
    fn support_radius_fails_at_quarter_circle() {
        let p = s2(0.0, 0.0, 1.0);
        let x = s2(1.0, 0.0, 0.0);
        let c = support_radius_check(&[x], &p, 1.0, dist);
        assert!(!c.ok);
        assert!((c.bound - std::f64::consts::FRAC_PI_4).abs() < 1e-14);
    }

    #[test]
    fn support_radius_flat_is_unbounded() {
        let p = s2(0.0, 0.0, 1.0);
        let x = s2(1.0, 0.0, 0.0);
        let c = support_radius_check(&[x], &p, 0.0, dist);
        assert!(c.ok);
        assert!(c.bound.is_infinite());
    }
}
