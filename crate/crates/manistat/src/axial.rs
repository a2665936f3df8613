//! Axial statistics on RP^{N-1}: the Veronese-Whitney embedding x ↦ xxᵗ,
//! eigen-projection onto its image, the closed-form extrinsic covariance,
//! and the chi-square axis test.

use nalgebra::{DMatrix, DVector};

use crate::extrinsic::{
    extrinsic_mean, t_stat_p_value, t_stat_population_frame, t_stat_sample_frame, Embedding,
    FrameVariant,
};
use crate::stat_kernel::sym_eigen;
use crate::{Error, Result};

/// Relative eigengap below which the top eigenvalue is treated as a tie and
/// the matrix as focal.
pub const FOCAL_GAP_TOL: f64 = 1e-9;

/// An axis [x] = {x, -x}: a unit vector with a canonical sign, so that equal
/// axes have equal representatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis(DVector<f64>);

impl Axis {
    pub fn new(v: DVector<f64>) -> Result<Self> {
        let norm = v.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("axis has norm {norm}")));
        }
        Ok(Self(canonical_sign(v)))
    }

    pub fn from_unnormalized(v: DVector<f64>) -> Result<Self> {
        let norm = v.norm();
        if norm < 1e-12 {
            return Err(Error::InvalidArgument("cannot normalize zero vector".into()));
        }
        Ok(Self(canonical_sign(v / norm)))
    }

    pub fn rep(&self) -> &DVector<f64> {
        &self.0
    }
}

/// Flips the sign so the component of largest magnitude (lowest index on
/// ties) is positive.
fn canonical_sign(v: DVector<f64>) -> DVector<f64> {
    let mut best = 0usize;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        -v
    } else {
        v
    }
}

/// The embedding image xxᵗ.
pub fn veronese_rp(a: &Axis) -> DMatrix<f64> {
    let x = a.rep();
    x * x.transpose()
}

/// Projection of a symmetric matrix onto the embedded RP^{N-1}: the top unit
/// eigenvector, with the eigengap as the nonfocality margin.
pub struct RpProjection {
    pub axis: Axis,
    pub gap: f64,
}

pub fn rp_project(a: &DMatrix<f64>) -> Result<RpProjection> {
    let eig = sym_eigen(a)?;
    let n = a.nrows();
    let top = eig.values[n - 1];
    let gap = top - eig.values[n - 2];
    if gap <= FOCAL_GAP_TOL * top.max(1.0) {
        return Err(Error::FocalMean { gap });
    }
    let axis = Axis::from_unnormalized(eig.vectors.column(n - 1).into())?;
    Ok(RpProjection { axis, gap })
}

/// Eigen-data of K = n⁻¹ Σ XᵣXᵣᵗ together with the closed-form tangential
/// covariance in the eigenbasis m₁,…,m_{N−1} (ascending).
pub struct RpCovariance {
    pub mean_axis: Axis,
    pub eigenvalues: DVector<f64>,
    /// Columns are the eigenvectors, ascending; the last is the mean axis.
    pub eigenvectors: DMatrix<f64>,
    pub gap: f64,
    pub g: DMatrix<f64>,
}

pub fn rp_extrinsic_cov(sample: &[Axis]) -> Result<RpCovariance> {
    if sample.is_empty() {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    let dim = sample[0].rep().len();
    let n = sample.len() as f64;
    let mut k = DMatrix::zeros(dim, dim);
    for a in sample {
        k += veronese_rp(a);
    }
    k /= n;
    let eig = sym_eigen(&k)?;
    let top = eig.values[dim - 1];
    let gap = top - eig.values[dim - 2];
    if gap <= FOCAL_GAP_TOL * top.max(1.0) {
        return Err(Error::FocalMean { gap });
    }
    let m_top: DVector<f64> = eig.vectors.column(dim - 1).into();
    let mut g = DMatrix::zeros(dim - 1, dim - 1);
    for x in sample {
        let top_comp = m_top.dot(x.rep());
        for a in 0..dim - 1 {
            let ca = eig.vectors.column(a).dot(x.rep());
            for b in 0..dim - 1 {
                let cb = eig.vectors.column(b).dot(x.rep());
                g[(a, b)] += ca * cb * top_comp * top_comp
                    / ((top - eig.values[a]) * (top - eig.values[b]));
            }
        }
    }
    g /= n;
    Ok(RpCovariance {
        mean_axis: Axis::from_unnormalized(m_top)?,
        eigenvalues: DVector::from_vec(eig.values),
        eigenvectors: eig.vectors,
        gap,
        g,
    })
}

/// The Veronese-Whitney embedding of RP^{N-1} into the symmetric N×N
/// matrices (flattened row-major, Frobenius inner product).
pub struct VeroneseRp {
    pub n: usize,
}

fn flatten(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows();
    DVector::from_fn(n * n, |i, _| m[(i / n, i % n)])
}

fn unflatten(v: &DVector<f64>, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |r, c| v[r * n + c])
}

impl Embedding for VeroneseRp {
    type Point = Axis;

    fn ambient_dim(&self) -> usize {
        self.n * self.n
    }

    fn manifold_dim(&self) -> usize {
        self.n - 1
    }

    fn embed(&self, p: &Self::Point) -> DVector<f64> {
        flatten(&veronese_rp(p))
    }

    fn project(&self, ambient: &DVector<f64>) -> Result<(Self::Point, f64)> {
        let m = unflatten(ambient, self.n);
        let sym = (&m + m.transpose()) * 0.5;
        let p = rp_project(&sym)?;
        Ok((p.axis, p.gap))
    }

    fn frame_at(&self, p: &Self::Point) -> Vec<DVector<f64>> {
        let x = p.rep();
        crate::sphere::tangent_basis(x)
            .into_iter()
            .map(|f| flatten(&((&f * x.transpose() + x * f.transpose()) * 0.5)))
            .collect()
    }

    /// First-order eigenvector perturbation of the top eigenprojection.
    fn d_project(&self, base: &DVector<f64>, dir: &DVector<f64>) -> Result<DVector<f64>> {
        let m = unflatten(base, self.n);
        let sym = (&m + m.transpose()) * 0.5;
        let eig = sym_eigen(&sym)?;
        let top_i = self.n - 1;
        let top = eig.values[top_i];
        let gap = top - eig.values[top_i - 1];
        if gap <= FOCAL_GAP_TOL * top.max(1.0) {
            return Err(Error::FocalMean { gap });
        }
        let c = unflatten(dir, self.n);
        let c = (&c + c.transpose()) * 0.5;
        let m_top: DVector<f64> = eig.vectors.column(top_i).into();
        let mut dm = DVector::zeros(self.n);
        for a in 0..top_i {
            let ma: DVector<f64> = eig.vectors.column(a).into();
            let coeff = (ma.transpose() * &c * &m_top)[(0, 0)] / (top - eig.values[a]);
            dm += ma * coeff;
        }
        Ok(flatten(&(&dm * m_top.transpose() + &m_top * dm.transpose())))
    }
}

/// Result of an axis hypothesis test.
#[derive(Debug, Clone)]
pub struct AxisTest {
    pub statistic: f64,
    pub df: u32,
    pub p: f64,
}

/// T statistic for the hypothesis that the extrinsic mean axis is
/// `hypothesized`, chi-square with N-1 degrees of freedom.
pub fn rp_t_stat(sample: &[Axis], hypothesized: &Axis, variant: FrameVariant) -> Result<AxisTest> {
    let dim = sample[0].rep().len();
    let e = VeroneseRp { n: dim };
    let summary = extrinsic_mean(sample, &e)?;
    let statistic = match variant {
        FrameVariant::Population => t_stat_population_frame(&e, &summary, hypothesized)?,
        FrameVariant::Sample => t_stat_sample_frame(&e, &summary, hypothesized)?,
    };
    let df = (dim - 1) as u32;
    Ok(AxisTest {
        statistic,
        df,
        p: t_stat_p_value(df, statistic),
    })
}
