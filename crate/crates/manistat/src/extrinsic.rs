//! Generic extrinsic-mean machinery for a closed embedding j: projection
//! mean, plug-in extrinsic covariance, chi-square T statistics in the
//! population and sample frames, confidence regions, and their bootstrap
//! calibrations.

use nalgebra::{DMatrix, DVector};

use crate::frechet::{collect_bootstrap, inv_pd, BootstrapDistribution};
use crate::stat_kernel::{chi2_cdf, chi2_quantile, ResamplePlan};
use crate::{Error, Result};

/// A closed embedding j of a d-dimensional manifold into R^k together with
/// the nearest-point projection onto its image.
///
/// `frame_at` returns the pullback frame: the images dj(f_a) of an
/// orthonormal tangent basis, each divided by its squared ambient norm. In
/// this convention the tangential component of an ambient vector v along
/// coordinate a is `frame[a] . v`, and the plug-in covariance of
/// [`extrinsic_cov`] reproduces the closed-form projective-space covariances
/// without a normalization mismatch. The vectors are mutually orthogonal;
/// their common norm is 1 only for isometric embeddings like the sphere
/// inclusion.
pub trait Embedding {
    type Point: Clone;

    fn ambient_dim(&self) -> usize;
    fn manifold_dim(&self) -> usize;
    fn embed(&self, p: &Self::Point) -> DVector<f64>;
    /// Nearest-point projection; returns the projected manifold point and
    /// the nonfocality gap (embedding-specific margin, e.g. eigengap).
    fn project(&self, ambient: &DVector<f64>) -> Result<(Self::Point, f64)>;
    fn frame_at(&self, p: &Self::Point) -> Vec<DVector<f64>>;

    /// Directional derivative of the projection, by central differences
    /// unless an embedding supplies an analytic formula.
    fn d_project(&self, base: &DVector<f64>, dir: &DVector<f64>) -> Result<DVector<f64>> {
        let h = 1e-6 * (1.0 + base.norm());
        let (plus, _) = self.project(&(base + dir * h))?;
        let (minus, _) = self.project(&(base - dir * h))?;
        Ok((self.embed(&plus) - self.embed(&minus)) / (2.0 * h))
    }
}

/// Everything the §3-style inference needs about one sample: the ambient
/// mean and its projection, the ambient covariance S, and the tangential
/// plug-in covariance G.
#[derive(Debug, Clone)]
pub struct ExtrinsicSummary<P> {
    pub ambient_mean: DVector<f64>,
    pub mean_point: P,
    pub projected_mean: DVector<f64>,
    pub s_hat: DMatrix<f64>,
    pub g_hat: DMatrix<f64>,
    pub nonfocal_gap: f64,
    pub n: usize,
}

/// Extrinsic mean by projection of the ambient average, with the plug-in
/// covariance attached.
pub fn extrinsic_mean<E: Embedding>(sample: &[E::Point], e: &E) -> Result<ExtrinsicSummary<E::Point>> {
    if sample.is_empty() {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    let n = sample.len();
    let k = e.ambient_dim();
    let embedded: Vec<DVector<f64>> = sample.iter().map(|p| e.embed(p)).collect();
    let mut ambient_mean = DVector::zeros(k);
    for y in &embedded {
        ambient_mean += y;
    }
    ambient_mean /= n as f64;
    let (mean_point, nonfocal_gap) = e.project(&ambient_mean)?;
    let projected_mean = e.embed(&mean_point);
    let mut s_hat = DMatrix::zeros(k, k);
    for y in &embedded {
        let dev = y - &ambient_mean;
        s_hat += &dev * dev.transpose();
    }
    s_hat /= n as f64;
    let mut summary = ExtrinsicSummary {
        ambient_mean,
        mean_point,
        projected_mean,
        s_hat,
        g_hat: DMatrix::zeros(0, 0),
        nonfocal_gap,
        n,
    };
    summary.g_hat = extrinsic_cov(e, &summary)?;
    Ok(summary)
}

/// The tangential compression G = A S A^T, where row a of A holds the
/// pullback-frame components of the projection differential along each
/// ambient basis direction.
pub fn extrinsic_cov<E: Embedding>(e: &E, summary: &ExtrinsicSummary<E::Point>) -> Result<DMatrix<f64>> {
    let k = e.ambient_dim();
    let d = e.manifold_dim();
    let frames = e.frame_at(&summary.mean_point);
    let mut a = DMatrix::zeros(d, k);
    let mut dir = DVector::zeros(k);
    for b in 0..k {
        dir[b] = 1.0;
        let dp = e.d_project(&summary.ambient_mean, &dir)?;
        for (r, f) in frames.iter().enumerate() {
            a[(r, b)] = f.dot(&dp);
        }
        dir[b] = 0.0;
    }
    Ok(&a * &summary.s_hat * a.transpose())
}

fn orthonormalize(vectors: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        for b in &out {
            let proj = b.dot(&w);
            w -= b * proj;
        }
        let norm = w.norm();
        if norm > 1e-12 {
            out.push(w / norm);
        }
    }
    out
}

/// Rescales the pullback-frame covariance to the orthonormalized frame.
fn g_unit<E: Embedding>(e: &E, summary: &ExtrinsicSummary<E::Point>) -> DMatrix<f64> {
    let frames = e.frame_at(&summary.mean_point);
    let d = frames.len();
    let norms: Vec<f64> = frames.iter().map(|f| f.norm()).collect();
    DMatrix::from_fn(d, d, |a, b| summary.g_hat[(a, b)] / (norms[a] * norms[b]))
}

/// T statistic with the tangential component taken in a frame at the
/// hypothesized point. The sample frame is transported by projecting it onto
/// the hypothesis tangent space and re-orthonormalizing; the same transition
/// carries G, so the quadratic form is frame-consistent.
pub fn t_stat_population_frame<E: Embedding>(
    e: &E,
    summary: &ExtrinsicSummary<E::Point>,
    hypothesized: &E::Point,
) -> Result<f64> {
    let d = e.manifold_dim();
    let sample_frames = orthonormalize(&e.frame_at(&summary.mean_point));
    let hyp_frames = orthonormalize(&e.frame_at(hypothesized));
    // project the sample frame onto the hypothesis tangent space
    let projected: Vec<DVector<f64>> = sample_frames
        .iter()
        .map(|s| {
            let mut acc = DVector::zeros(s.len());
            for h in &hyp_frames {
                acc += h * h.dot(s);
            }
            acc
        })
        .collect();
    let f = orthonormalize(&projected);
    if f.len() != d {
        return Err(Error::SingularCovariance);
    }
    let m = DMatrix::from_fn(d, d, |a, b| f[a].dot(&sample_frames[b]));
    let g_h = &m * g_unit(e, summary) * m.transpose();
    let diff = &summary.projected_mean - e.embed(hypothesized);
    let t = DVector::from_fn(d, |a, _| f[a].dot(&diff));
    let inv = inv_pd(&g_h)?;
    Ok(summary.n as f64 * (t.transpose() * inv * &t)[(0, 0)])
}

/// T statistic with the tangential component taken in the frame at the
/// sample projection itself; no frame completion at the hypothesis.
pub fn t_stat_sample_frame<E: Embedding>(
    e: &E,
    summary: &ExtrinsicSummary<E::Point>,
    hypothesized: &E::Point,
) -> Result<f64> {
    let d = e.manifold_dim();
    let frames = orthonormalize(&e.frame_at(&summary.mean_point));
    let diff = &summary.projected_mean - e.embed(hypothesized);
    let t = DVector::from_fn(d, |a, _| frames[a].dot(&diff));
    let inv = inv_pd(&g_unit(e, summary))?;
    Ok(summary.n as f64 * (t.transpose() * inv * &t)[(0, 0)])
}

/// Squared norm of the tangential component at the sample projection, the
/// unstudentized statistic of the nonpivotal bootstrap.
fn tangential_sq_norm<E: Embedding>(
    e: &E,
    summary: &ExtrinsicSummary<E::Point>,
    target: &DVector<f64>,
) -> f64 {
    let frames = orthonormalize(&e.frame_at(&summary.mean_point));
    let diff = target - &summary.projected_mean;
    frames.iter().map(|f| f.dot(&diff).powi(2)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameVariant {
    Population,
    Sample,
}

/// Chi-square confidence region for the extrinsic mean: membership by
/// comparing the chosen T statistic to its chi-square quantile.
pub struct ExtrinsicRegion<'a, E: Embedding> {
    pub embedding: &'a E,
    pub summary: ExtrinsicSummary<E::Point>,
    pub threshold: f64,
    pub level: f64,
    pub variant: FrameVariant,
}

impl<'a, E: Embedding> ExtrinsicRegion<'a, E> {
    pub fn statistic(&self, v: &E::Point) -> Result<f64> {
        match self.variant {
            FrameVariant::Population => t_stat_population_frame(self.embedding, &self.summary, v),
            FrameVariant::Sample => t_stat_sample_frame(self.embedding, &self.summary, v),
        }
    }

    pub fn contains(&self, v: &E::Point) -> Result<bool> {
        Ok(self.statistic(v)? <= self.threshold)
    }
}

pub fn extrinsic_region<'a, E: Embedding>(
    sample: &[E::Point],
    e: &'a E,
    level: f64,
    variant: FrameVariant,
) -> Result<ExtrinsicRegion<'a, E>> {
    let summary = extrinsic_mean(sample, e)?;
    let d = e.manifold_dim() as u32;
    Ok(ExtrinsicRegion {
        embedding: e,
        summary,
        threshold: chi2_quantile(d, level)?,
        level,
        variant,
    })
}

/// P-value of the T statistic against its chi-square reference.
pub fn t_stat_p_value(df: u32, statistic: f64) -> f64 {
    1.0 - chi2_cdf(df, statistic)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BootstrapVariant {
    /// Replicate statistic studentized by the replicate covariance, frame at
    /// the original sample projection.
    Pivotal,
    /// Frame and covariance both from the replicate.
    SampleFrame,
    /// Unstudentized squared tangential norm.
    Nonpivotal,
}

/// A bootstrap-calibrated region: the chosen statistic compared against the
/// bootstrap quantile instead of the chi-square one.
pub struct ExtrinsicBootstrapRegion<'a, E: Embedding> {
    pub embedding: &'a E,
    pub summary: ExtrinsicSummary<E::Point>,
    pub threshold: f64,
    pub level: f64,
    pub variant: BootstrapVariant,
    pub boot: BootstrapDistribution,
}

impl<'a, E: Embedding> ExtrinsicBootstrapRegion<'a, E> {
    pub fn statistic(&self, v: &E::Point) -> Result<f64> {
        match self.variant {
            BootstrapVariant::Pivotal => t_stat_population_frame(self.embedding, &self.summary, v),
            BootstrapVariant::SampleFrame => t_stat_sample_frame(self.embedding, &self.summary, v),
            BootstrapVariant::Nonpivotal => {
                Ok(self.summary.n as f64
                    * tangential_sq_norm(self.embedding, &self.summary, &self.embedding.embed(v)))
            }
        }
    }

    pub fn contains(&self, v: &E::Point) -> Result<bool> {
        Ok(self.statistic(v)? <= self.threshold)
    }
}

pub fn bootstrap_extrinsic<'a, E: Embedding>(
    sample: &[E::Point],
    e: &'a E,
    plan: &ResamplePlan,
    level: f64,
    variant: BootstrapVariant,
) -> Result<ExtrinsicBootstrapRegion<'a, E>> {
    let summary = extrinsic_mean(sample, e)?;
    let boot = collect_bootstrap(plan, |idx| {
        let replicate: Vec<E::Point> = idx.iter().map(|&i| sample[i].clone()).collect();
        let rep_summary = extrinsic_mean(&replicate, e)?;
        match variant {
            // tangential component at the original projection, replicate G
            BootstrapVariant::Pivotal => {
                t_stat_population_frame(e, &rep_summary, &summary.mean_point)
            }
            BootstrapVariant::SampleFrame => {
                t_stat_sample_frame(e, &rep_summary, &summary.mean_point)
            }
            BootstrapVariant::Nonpivotal => {
                Ok(summary.n as f64 * tangential_sq_norm(e, &summary, &rep_summary.projected_mean))
            }
        }
    })?;
    let threshold = boot.quantile(level);
    Ok(ExtrinsicBootstrapRegion {
        embedding: e,
        summary,
        threshold,
        level,
        variant,
        boot,
    })
}

/// The inclusion S^d ⊂ R^{d+1} with radial projection; the simplest
/// (isometric) embedding, whose pullback frames are orthonormal.
pub struct SphereInclusion {
    pub ambient: usize,
}

impl Embedding for SphereInclusion {
    type Point = crate::sphere::UnitVector;

    fn ambient_dim(&self) -> usize {
        self.ambient
    }

    fn manifold_dim(&self) -> usize {
        self.ambient - 1
    }

    fn embed(&self, p: &Self::Point) -> DVector<f64> {
        p.coords().clone()
    }

    fn project(&self, ambient: &DVector<f64>) -> Result<(Self::Point, f64)> {
        let norm = ambient.norm();
        if norm <= 1e-12 {
            return Err(Error::FocalMean { gap: norm });
        }
        Ok((crate::sphere::UnitVector::from_unnormalized(ambient.clone())?, norm))
    }

    fn frame_at(&self, p: &Self::Point) -> Vec<DVector<f64>> {
        crate::sphere::tangent_basis(p.coords())
    }

    fn d_project(&self, base: &DVector<f64>, dir: &DVector<f64>) -> Result<DVector<f64>> {
        let norm = base.norm();
        if norm <= 1e-12 {
            return Err(Error::FocalMean { gap: norm });
        }
        let unit = base / norm;
        Ok((dir - &unit * unit.dot(dir)) / norm)
    }
}
