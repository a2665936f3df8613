//! Planar shape space CP^{k-2}: landmark-to-preshape reduction, the
//! Procrustes (extrinsic) mean as a top eigenvector, the complex tangential
//! covariance, the chi-square shape test and its bootstrap calibration, and
//! affine coordinates with simultaneous confidence rectangles.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::extrinsic::Embedding;
use crate::frechet::empirical_quantile;
use crate::stat_kernel::{chi2_cdf, herm_eigen, ResamplePlan};
use crate::{Error, Result};

/// Relative eigengap below which K is treated as focal.
pub const FOCAL_GAP_TOL: f64 = 1e-9;

const ZERO_TOL: f64 = 1e-12;

/// A shape [z] as a unit complex (k-1)-vector with canonical phase: the last
/// coordinate of magnitude above 1e-12 is real and positive.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarShapeVector(DVector<Complex64>);

impl PlanarShapeVector {
    pub fn new(rep: DVector<Complex64>) -> Result<Self> {
        let norm = rep.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("shape vector has norm {norm}")));
        }
        canonicalize(rep)
    }

    pub fn from_unnormalized(rep: DVector<Complex64>) -> Result<Self> {
        let norm = rep.norm();
        if norm < 1e-12 {
            return Err(Error::InvalidArgument("cannot normalize zero vector".into()));
        }
        canonicalize(rep / Complex64::new(norm, 0.0))
    }

    pub fn rep(&self) -> &DVector<Complex64> {
        &self.0
    }

    /// Number of landmarks k of the underlying configuration.
    pub fn landmark_count(&self) -> usize {
        self.0.len() + 1
    }
}

fn canonicalize(rep: DVector<Complex64>) -> Result<PlanarShapeVector> {
    let pivot = rep
        .iter()
        .rposition(|c| c.norm() > ZERO_TOL)
        .ok_or_else(|| Error::InvalidArgument("zero shape vector".into()))?;
    let phase = rep[pivot] / rep[pivot].norm();
    Ok(PlanarShapeVector(rep * phase.conj()))
}

/// Multiplication by the (k-1)×k Helmert submatrix: rows orthonormal and
/// orthogonal to the constant vector, so translations vanish.
fn helmert(config: &[Complex64]) -> DVector<Complex64> {
    let k = config.len();
    DVector::from_fn(k - 1, |i, _| {
        let i1 = i + 1; // row index 1..k-1
        let c = 1.0 / ((i1 * (i1 + 1)) as f64).sqrt();
        let mut acc = Complex64::new(0.0, 0.0);
        for item in config.iter().take(i1) {
            acc += item * c;
        }
        acc - config[i1] * (i1 as f64 * c)
    })
}

/// Shape of an ordered landmark configuration: Helmertize, normalize,
/// canonicalize the phase.
pub fn preshape_from_landmarks(config: &[Complex64]) -> Result<PlanarShapeVector> {
    if config.len() < 3 {
        return Err(Error::InvalidArgument(
            "a planar shape needs at least 3 landmarks".into(),
        ));
    }
    let h = helmert(config);
    let scale: f64 = config.iter().map(|c| c.norm()).sum::<f64>().max(1.0);
    if h.norm() <= 1e-12 * scale {
        return Err(Error::InvalidArgument("all landmarks identical".into()));
    }
    PlanarShapeVector::from_unnormalized(h)
}

/// The Procrustes mean: the canonicalized top unit eigenvector of
/// K = n⁻¹ Σ z z*, with K's eigen-data retained for covariance work.
pub struct ProcrustesMean {
    pub mean: PlanarShapeVector,
    pub k_matrix: DMatrix<Complex64>,
    /// Ascending; the associated eigenvectors are the columns of `frame`.
    pub eigenvalues: DVector<f64>,
    pub frame: DMatrix<Complex64>,
    pub gap: f64,
}

pub fn procrustes_mean(shapes: &[PlanarShapeVector]) -> Result<ProcrustesMean> {
    if shapes.is_empty() {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    let p = shapes[0].rep().len();
    let n = shapes.len() as f64;
    let mut k = DMatrix::<Complex64>::zeros(p, p);
    for z in shapes {
        k += z.rep() * z.rep().adjoint();
    }
    k /= Complex64::new(n, 0.0);
    let eig = herm_eigen(&k)?;
    let top = eig.values[p - 1];
    let gap = top - eig.values[p - 2];
    if gap <= FOCAL_GAP_TOL * top.max(1.0) {
        return Err(Error::FocalMean { gap });
    }
    let mean = PlanarShapeVector::from_unnormalized(eig.vectors.column(p - 1).into())?;
    Ok(ProcrustesMean {
        mean,
        k_matrix: k,
        eigenvalues: DVector::from_vec(eig.values),
        frame: eig.vectors,
        gap,
    })
}

/// The complex tangential covariance in the eigenbasis m₁,…,m_{k−2} of K:
/// G_ab = n⁻¹ (η−η_a)⁻¹(η−η_b)⁻¹ Σ (m_a* z)(m_b* z)* |m* z|².
pub struct CpCovariance {
    pub mean: ProcrustesMean,
    pub g: DMatrix<Complex64>,
}

pub fn cp_extrinsic_cov(shapes: &[PlanarShapeVector]) -> Result<CpCovariance> {
    let mean = procrustes_mean(shapes)?;
    let p = shapes[0].rep().len();
    let n = shapes.len() as f64;
    let top = mean.eigenvalues[p - 1];
    let m_top: DVector<Complex64> = mean.frame.column(p - 1).into();
    let mut g = DMatrix::<Complex64>::zeros(p - 1, p - 1);
    for z in shapes {
        let q_top = m_top.dotc(z.rep());
        let w = q_top.norm_sqr();
        for a in 0..p - 1 {
            let qa = mean.frame.column(a).dotc(z.rep());
            for b in 0..p - 1 {
                let qb = mean.frame.column(b).dotc(z.rep());
                g[(a, b)] += qa * qb.conj() * w
                    / Complex64::new((top - mean.eigenvalues[a]) * (top - mean.eigenvalues[b]), 0.0);
            }
        }
    }
    g /= Complex64::new(n, 0.0);
    Ok(CpCovariance { mean, g })
}

fn complex_gram_schmidt(vectors: &[DVector<Complex64>]) -> Vec<DVector<Complex64>> {
    let mut out: Vec<DVector<Complex64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        for b in &out {
            let proj = b.dotc(&w);
            w -= b * proj;
        }
        let norm = w.norm();
        if norm > 1e-12 {
            w /= Complex64::new(norm, 0.0);
            out.push(w);
        }
    }
    out
}

/// Orthonormal complex basis of the orthogonal complement of z.
pub(crate) fn complex_tangent_basis(z: &DVector<Complex64>) -> Vec<DVector<Complex64>> {
    let p = z.len();
    let drop = (0..p)
        .max_by(|&i, &j| z[i].norm().partial_cmp(&z[j].norm()).unwrap())
        .unwrap();
    let mut seed: Vec<DVector<Complex64>> = vec![z.clone()];
    for i in 0..p {
        if i != drop {
            let mut e = DVector::<Complex64>::zeros(p);
            e[i] = Complex64::new(1.0, 0.0);
            seed.push(e);
        }
    }
    let mut basis = complex_gram_schmidt(&seed);
    basis.remove(0); // the z direction itself
    basis
}

/// Inverse of a Hermitian positive-definite matrix, refused when singular at
/// the degeneracy threshold.
fn inv_herm_pd(m: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let eig = herm_eigen(m)?;
    let d = m.nrows();
    let max = eig.values[d - 1];
    let min = eig.values[0];
    if !(min > crate::stat_kernel::DEGENERATE_EIGENGAP * max.max(1e-300)) || min <= 0.0 {
        return Err(Error::SingularCovariance);
    }
    let mut inv = DMatrix::<Complex64>::zeros(d, d);
    for i in 0..d {
        let vi = eig.vectors.column(i);
        inv += (vi * vi.adjoint()) / Complex64::new(eig.values[i], 0.0);
    }
    Ok(inv)
}

/// Result of a shape hypothesis test.
#[derive(Debug, Clone)]
pub struct ShapeTest {
    pub statistic: f64,
    pub df: u32,
    pub p: f64,
}

/// T statistic for the hypothesis that the extrinsic mean shape is
/// `hypothesized`, chi-square with 2(k-2) degrees of freedom. The sample
/// eigenframe is transported onto the hypothesis tangent space by projection
/// and re-orthonormalization; the complex transition carries G.
pub fn cp_t_stat(shapes: &[PlanarShapeVector], hypothesized: &PlanarShapeVector) -> Result<ShapeTest> {
    let cov = cp_extrinsic_cov(shapes)?;
    let p = shapes[0].rep().len();
    let d = p - 1;
    let n = shapes.len() as f64;
    let m_top: DVector<Complex64> = cov.mean.frame.column(p - 1).into();
    let nu = hypothesized.rep();
    // project the sample eigenframe onto the hypothesis tangent space
    let projected: Vec<DVector<Complex64>> = (0..d)
        .map(|a| {
            let ma: DVector<Complex64> = cov.mean.frame.column(a).into();
            &ma - nu * nu.dotc(&ma)
        })
        .collect();
    let f = complex_gram_schmidt(&projected);
    if f.len() != d {
        return Err(Error::SingularCovariance);
    }
    let top_overlap = m_top.dotc(nu);
    let t = DVector::from_fn(d, |a, _| f[a].dotc(&m_top) * top_overlap);
    let df = 2 * d as u32;
    if t.norm() < 1e-14 {
        return Ok(ShapeTest {
            statistic: 0.0,
            df,
            p: 1.0,
        });
    }
    let trans = DMatrix::from_fn(d, d, |a, b| f[a].dotc(&cov.mean.frame.column(b).into_owned()));
    let g_h = &trans * &cov.g * trans.adjoint();
    let inv = inv_herm_pd(&g_h)?;
    // the realified quadratic form doubles the complex one: for a Hermitian
    // form H matching the compressed real covariance, x'S⁻¹x = 2 Re(t*H⁻¹t)
    let statistic = 2.0 * n * (t.adjoint() * inv * &t)[(0, 0)].re;
    Ok(ShapeTest {
        statistic,
        df,
        p: 1.0 - chi2_cdf(df, statistic),
    })
}

/// Bootstrap distribution of the statistic of the resampled mean against
/// the full-sample mean, for calibrating the shape test.
pub fn cp_bootstrap_test(
    shapes: &[PlanarShapeVector],
    plan: &ResamplePlan,
) -> Result<crate::frechet::BootstrapDistribution> {
    let mean = procrustes_mean(shapes)?.mean;
    crate::frechet::collect_bootstrap(plan, |idx| {
        let replicate: Vec<PlanarShapeVector> = idx.iter().map(|&i| shapes[i].clone()).collect();
        Ok(cp_t_stat(&replicate, &mean)?.statistic)
    })
}

/// Affine coordinates (z¹/z^{k−1}, …, z^{k−2}/z^{k−1}).
pub fn affine_coords(shape: &PlanarShapeVector) -> Result<Vec<Complex64>> {
    let rep = shape.rep();
    let p = rep.len();
    let last = rep[p - 1];
    if last.norm() <= 1e-12 {
        return Err(Error::InvalidArgument(
            "shape lies on the hyperplane at infinity".into(),
        ));
    }
    Ok((0..p - 1).map(|i| rep[i] / last).collect())
}

/// A coordinatewise rectangle in the complex plane.
#[derive(Debug, Clone)]
pub struct ComplexInterval {
    pub lo: Complex64,
    pub hi: Complex64,
}

impl ComplexInterval {
    pub fn contains(&self, c: Complex64) -> bool {
        c.re >= self.lo.re && c.re <= self.hi.re && c.im >= self.lo.im && c.im <= self.hi.im
    }
}

pub struct SimultaneousIntervals {
    pub intervals: Vec<ComplexInterval>,
    pub degenerate_count: usize,
    /// Per-margin level after the Bonferroni adjustment.
    pub margin_level: f64,
}

/// Simultaneous confidence rectangles for the affine coordinates: bootstrap
/// the Procrustes mean, take centered symmetric quantiles of each real
/// margin's deviation, Bonferroni-adjusted across the 2(k-2) margins.
pub fn simultaneous_complex_intervals(
    shapes: &[PlanarShapeVector],
    plan: &ResamplePlan,
    level: f64,
) -> Result<SimultaneousIntervals> {
    let mean = procrustes_mean(shapes)?;
    let center = affine_coords(&mean.mean)?;
    let d = center.len();
    let mut deviations: Vec<Vec<f64>> = vec![Vec::new(); 2 * d];
    let mut degenerate = 0usize;
    for idx in plan.replicates() {
        let replicate: Vec<PlanarShapeVector> = idx.iter().map(|&i| shapes[i].clone()).collect();
        match procrustes_mean(&replicate).and_then(|m| affine_coords(&m.mean)) {
            Ok(coords) => {
                for a in 0..d {
                    deviations[2 * a].push((coords[a].re - center[a].re).abs());
                    deviations[2 * a + 1].push((coords[a].im - center[a].im).abs());
                }
            }
            Err(Error::FocalMean { .. }) | Err(Error::EigenNoConvergence(_))
            | Err(Error::SingularCovariance) => degenerate += 1,
            Err(e) => return Err(e),
        }
    }
    if deviations[0].is_empty() {
        return Err(Error::AllReplicatesDegenerate);
    }
    if degenerate * 5 > plan.b {
        return Err(Error::DegenerateBootstrap {
            degenerate,
            total: plan.b,
        });
    }
    let margin_level = 1.0 - (1.0 - level) / (2.0 * d as f64);
    let intervals = (0..d)
        .map(|a| {
            let mut re_dev = deviations[2 * a].clone();
            let mut im_dev = deviations[2 * a + 1].clone();
            re_dev.sort_by(|x, y| x.partial_cmp(y).unwrap());
            im_dev.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let hr = empirical_quantile(&re_dev, margin_level);
            let hi = empirical_quantile(&im_dev, margin_level);
            ComplexInterval {
                lo: Complex64::new(center[a].re - hr, center[a].im - hi),
                hi: Complex64::new(center[a].re + hr, center[a].im + hi),
            }
        })
        .collect();
    Ok(SimultaneousIntervals {
        intervals,
        degenerate_count: degenerate,
        margin_level,
    })
}

/// The complex Veronese-Whitney embedding [z] ↦ zz*, realified: the
/// Hermitian (k-1)×(k-1) matrices are encoded isometrically as real vectors
/// (diagonal entries, then √2·Re and √2·Im of each upper-triangular entry).
pub struct VeroneseCp {
    /// Complex dimension of the preshape vectors, k-1.
    pub p: usize,
}

fn herm_to_vec(m: &DMatrix<Complex64>) -> DVector<f64> {
    let p = m.nrows();
    let mut out = DVector::zeros(p * p);
    for i in 0..p {
        out[i] = m[(i, i)].re;
    }
    let mut idx = p;
    let r2 = std::f64::consts::SQRT_2;
    for i in 0..p {
        for j in i + 1..p {
            out[idx] = r2 * m[(i, j)].re;
            out[idx + 1] = r2 * m[(i, j)].im;
            idx += 2;
        }
    }
    out
}

fn vec_to_herm(v: &DVector<f64>, p: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::<Complex64>::zeros(p, p);
    for i in 0..p {
        m[(i, i)] = Complex64::new(v[i], 0.0);
    }
    let mut idx = p;
    let r2 = std::f64::consts::SQRT_2;
    for i in 0..p {
        for j in i + 1..p {
            let c = Complex64::new(v[idx] / r2, v[idx + 1] / r2);
            m[(i, j)] = c;
            m[(j, i)] = c.conj();
            idx += 2;
        }
    }
    m
}

impl VeroneseCp {
    fn pullback_frame(z: &DVector<Complex64>, w: &DVector<Complex64>) -> DMatrix<Complex64> {
        (w * z.adjoint() + z * w.adjoint()) * Complex64::new(0.5, 0.0)
    }
}

impl Embedding for VeroneseCp {
    type Point = PlanarShapeVector;

    fn ambient_dim(&self) -> usize {
        self.p * self.p
    }

    fn manifold_dim(&self) -> usize {
        2 * (self.p - 1)
    }

    fn embed(&self, p: &Self::Point) -> DVector<f64> {
        herm_to_vec(&(p.rep() * p.rep().adjoint()))
    }

    fn project(&self, ambient: &DVector<f64>) -> Result<(Self::Point, f64)> {
        let m = vec_to_herm(ambient, self.p);
        let eig = herm_eigen(&m)?;
        let top = eig.values[self.p - 1];
        let gap = top - eig.values[self.p - 2];
        if gap <= FOCAL_GAP_TOL * top.max(1.0) {
            return Err(Error::FocalMean { gap });
        }
        let shape = PlanarShapeVector::from_unnormalized(eig.vectors.column(self.p - 1).into())?;
        Ok((shape, gap))
    }

    /// Real and imaginary frames of each complex tangent direction:
    /// index a holds the real part, index (p-1)+a the imaginary part.
    fn frame_at(&self, p: &Self::Point) -> Vec<DVector<f64>> {
        let z = p.rep();
        let basis = complex_tangent_basis(z);
        let mut out = Vec::with_capacity(2 * basis.len());
        for w in &basis {
            out.push(herm_to_vec(&Self::pullback_frame(z, w)));
        }
        for w in &basis {
            let iw = w * Complex64::new(0.0, 1.0);
            out.push(herm_to_vec(&Self::pullback_frame(z, &iw)));
        }
        out
    }
}
