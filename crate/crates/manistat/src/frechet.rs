//! Chart-coordinate inference for intrinsic means: plug-in covariance
//! estimators, the CLT chi-square confidence region, percentile and pivotal
//! bootstrap regions, and the paired two-sample test.

use nalgebra::{DMatrix, DVector};

use crate::stat_kernel::{chi2_cdf, chi2_quantile, inv_sqrt_pd, sym_eigen, ResamplePlan};
use crate::{Error, Result};

/// A sample pushed into chart coordinates, together with the chart image of
/// its Fréchet mean (zero when the chart is centered there).
#[derive(Debug, Clone)]
pub struct ChartedSample {
    pub chart_id: String,
    pub coords: Vec<DVector<f64>>,
    pub mean_coords: DVector<f64>,
}

impl ChartedSample {
    pub fn new(
        chart_id: impl Into<String>,
        coords: Vec<DVector<f64>>,
        mean_coords: DVector<f64>,
    ) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidArgument("empty charted sample".into()));
        }
        Ok(Self {
            chart_id: chart_id.into(),
            coords,
            mean_coords,
        })
    }

    /// For flat charts, where the Fréchet mean image is the coordinate mean.
    pub fn with_euclidean_mean(chart_id: impl Into<String>, coords: Vec<DVector<f64>>) -> Result<Self> {
        let mean = euclidean_mean(&coords)?;
        Self::new(chart_id, coords, mean)
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn dim(&self) -> usize {
        self.coords[0].len()
    }
}

fn euclidean_mean(coords: &[DVector<f64>]) -> Result<DVector<f64>> {
    if coords.is_empty() {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    let mut acc = DVector::zeros(coords[0].len());
    for u in coords {
        acc += u;
    }
    Ok(acc / coords.len() as f64)
}

/// The gradient values Psi(u_i) = -2 (u_i - mean) of the squared distance in
/// the chart, the influence terms of the intrinsic-mean CLT.
pub fn psi_values(sample: &ChartedSample) -> Vec<DVector<f64>> {
    sample
        .coords
        .iter()
        .map(|u| (u - &sample.mean_coords) * -2.0)
        .collect()
}

/// The plug-in estimators: the Hessian average, the Psi covariance, and
/// their sandwich product.
#[derive(Debug, Clone)]
pub struct CovarianceTriple {
    pub lambda_hat: DMatrix<f64>,
    pub c_hat: DMatrix<f64>,
    pub gamma_hat: DMatrix<f64>,
}

impl CovarianceTriple {
    pub fn new(lambda: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let gamma = gamma_hat(&lambda, &c)?;
        Ok(Self {
            lambda_hat: lambda,
            c_hat: c,
            gamma_hat: gamma,
        })
    }
}

/// Empirical covariance (divisor n) of the Psi values.
pub fn c_hat(psi: &[DVector<f64>]) -> DMatrix<f64> {
    let n = psi.len() as f64;
    let d = psi[0].len();
    let mut mean = DVector::zeros(d);
    for v in psi {
        mean += v;
    }
    mean /= n;
    let mut c = DMatrix::zeros(d, d);
    for v in psi {
        let dev = v - &mean;
        c += &dev * dev.transpose();
    }
    c / n
}

/// Inverse of a symmetric positive-definite matrix via its eigensystem,
/// rejecting matrices singular at the degeneracy threshold.
pub fn inv_pd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = sym_eigen(m)?;
    let d = m.nrows();
    let max = eig.values[d - 1];
    let min = eig.values[0];
    if !(min > crate::stat_kernel::DEGENERATE_EIGENGAP * max.max(1e-300)) || min <= 0.0 {
        return Err(Error::SingularCovariance);
    }
    let mut inv = DMatrix::zeros(d, d);
    for i in 0..d {
        let vi = eig.vectors.column(i);
        inv += vi * vi.transpose() / eig.values[i];
    }
    Ok(inv)
}

/// The sandwich Lambda^-1 C Lambda^-T, symmetrized against roundoff (the
/// asymmetry must already be below 1e-10 relative).
pub fn gamma_hat(lambda: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = sym_eigen(lambda)?;
    let d = lambda.nrows();
    let max_abs = eig.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let min_abs = eig.values.iter().fold(f64::INFINITY, |m, &v| m.min(v.abs()));
    if min_abs <= crate::stat_kernel::DEGENERATE_EIGENGAP * max_abs.max(1e-300) {
        return Err(Error::SingularCovariance);
    }
    let mut lam_inv = DMatrix::zeros(d, d);
    for i in 0..d {
        let vi = eig.vectors.column(i);
        lam_inv += vi * vi.transpose() / eig.values[i];
    }
    let g = &lam_inv * c * lam_inv.transpose();
    let asym = (&g - g.transpose()).norm();
    debug_assert!(asym <= 1e-10 * (1.0 + g.norm()));
    Ok((&g + g.transpose()) * 0.5)
}

/// An ellipsoidal region {v : n (center - v)^T form (center - v) <= threshold}.
#[derive(Debug, Clone)]
pub struct ConfidenceRegion {
    pub center: DVector<f64>,
    pub form: DMatrix<f64>,
    pub threshold: f64,
    pub level: f64,
    pub n: usize,
    pub chart_id: String,
}

impl ConfidenceRegion {
    pub fn statistic(&self, v: &DVector<f64>) -> f64 {
        let dev = &self.center - v;
        self.n as f64 * (dev.transpose() * &self.form * &dev)[(0, 0)]
    }

    pub fn contains(&self, v: &DVector<f64>) -> bool {
        self.statistic(v) <= self.threshold
    }
}

/// The CLT region: center mu_n, form Gamma-hat inverse, chi-square threshold.
pub fn clt_region(sample: &ChartedSample, cov: &CovarianceTriple, level: f64) -> Result<ConfidenceRegion> {
    let d = sample.dim() as u32;
    let form = inv_pd(&cov.gamma_hat)?;
    Ok(ConfidenceRegion {
        center: sample.mean_coords.clone(),
        form,
        threshold: chi2_quantile(d, level)?,
        level,
        n: sample.n(),
        chart_id: sample.chart_id.clone(),
    })
}

/// Angularly uniform samples of the boundary ellipse of a 2-d region.
pub fn region_boundary_polyline(region: &ConfidenceRegion, points: usize) -> Result<Vec<DVector<f64>>> {
    if region.center.len() != 2 {
        return Err(Error::InvalidArgument(
            "boundary polyline requires a 2-d region".into(),
        ));
    }
    let half = inv_sqrt_pd(&region.form)?;
    let scale = (region.threshold / region.n as f64).sqrt();
    Ok((0..points)
        .map(|i| {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / points as f64;
            let circ = DVector::from_vec(vec![theta.cos(), theta.sin()]);
            &region.center + &half * circ * scale
        })
        .collect())
}

/// Sorted bootstrap statistic values with bookkeeping of skipped replicates.
#[derive(Debug, Clone)]
pub struct BootstrapDistribution {
    pub values: Vec<f64>,
    pub b: usize,
    pub seed: u64,
    pub degenerate_count: usize,
}

impl BootstrapDistribution {
    /// Order statistic at ceil(p * m), 1-based.
    pub fn quantile(&self, p: f64) -> f64 {
        empirical_quantile(&self.values, p)
    }
}

/// Order-statistic quantile of an ascending-sorted slice: index ceil(p*m),
/// 1-based, clamped.
pub fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    let m = sorted.len();
    assert!(m > 0);
    let idx = ((p * m as f64).ceil() as usize).clamp(1, m);
    sorted[idx - 1]
}

fn is_degenerate(e: &Error) -> bool {
    matches!(
        e,
        Error::SingularCovariance
            | Error::FocalMean { .. }
            | Error::NotPositiveDefinite { .. }
            | Error::NoConvergence(_)
            | Error::CutLocus
    )
}

/// Collects replicate statistics from a plan, skipping and counting
/// degenerate replicates, refusing when more than 20% degenerate.
pub fn collect_bootstrap(
    plan: &ResamplePlan,
    mut stat: impl FnMut(&[usize]) -> Result<f64>,
) -> Result<BootstrapDistribution> {
    let mut values = Vec::with_capacity(plan.b);
    let mut degenerate = 0usize;
    for idx in plan.replicates() {
        match stat(idx) {
            Ok(v) => values.push(v),
            Err(e) if is_degenerate(&e) => degenerate += 1,
            Err(e) => return Err(e),
        }
    }
    if values.is_empty() {
        return Err(Error::AllReplicatesDegenerate);
    }
    if degenerate * 5 > plan.b {
        return Err(Error::DegenerateBootstrap {
            degenerate,
            total: plan.b,
        });
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(BootstrapDistribution {
        values,
        b: plan.b,
        seed: plan.seed,
        degenerate_count: degenerate,
    })
}

/// Percentile bootstrap region: the chart ball around mu_n of radius the
/// (level) quantile of the replicate mean deviations.
#[derive(Debug, Clone)]
pub struct PercentileRegion {
    pub center: DVector<f64>,
    pub radius: f64,
    pub boot: BootstrapDistribution,
}

impl PercentileRegion {
    pub fn contains(&self, v: &DVector<f64>) -> bool {
        (&self.center - v).norm() <= self.radius
    }
}

/// `estimator` maps a replicate's index set to the replicate mean in chart
/// coordinates.
pub fn percentile_bootstrap_region(
    sample: &ChartedSample,
    estimator: impl FnMut(&[usize]) -> Result<DVector<f64>>,
    plan: &ResamplePlan,
    level: f64,
) -> Result<PercentileRegion> {
    let mut estimator = estimator;
    let center = sample.mean_coords.clone();
    let boot = collect_bootstrap(plan, |idx| {
        let m = estimator(idx)?;
        Ok((m - &center).norm())
    })?;
    let radius = boot.quantile(level);
    Ok(PercentileRegion {
        center,
        radius,
        boot,
    })
}

/// Pivotal bootstrap region: the CLT ellipsoid with the chi-square threshold
/// replaced by the bootstrap quantile of the studentized replicate statistic.
pub struct PivotalRegion {
    pub region: ConfidenceRegion,
    pub boot: BootstrapDistribution,
}

/// `estimator` maps replicate indices to the replicate mean; `cov` maps
/// (replicate indices, replicate mean) to the replicate Gamma-hat.
pub fn pivotal_bootstrap_region(
    sample: &ChartedSample,
    cov: &CovarianceTriple,
    mut estimator: impl FnMut(&[usize]) -> Result<DVector<f64>>,
    mut replicate_cov: impl FnMut(&[usize], &DVector<f64>) -> Result<DMatrix<f64>>,
    plan: &ResamplePlan,
    level: f64,
) -> Result<PivotalRegion> {
    let n = sample.n() as f64;
    let center = sample.mean_coords.clone();
    let boot = collect_bootstrap(plan, |idx| {
        let m = estimator(idx)?;
        let gamma_star = replicate_cov(idx, &m)?;
        let inv = inv_pd(&gamma_star)?;
        let dev = &m - &center;
        Ok(n * (dev.transpose() * inv * &dev)[(0, 0)])
    })?;
    let threshold = boot.quantile(level);
    Ok(PivotalRegion {
        region: ConfidenceRegion {
            center,
            form: inv_pd(&cov.gamma_hat)?,
            threshold,
            level,
            n: sample.n(),
            chart_id: sample.chart_id.clone(),
        },
        boot,
    })
}

/// Paired two-sample test of equal means in a common chart convention.
#[derive(Debug, Clone)]
pub struct PairedTestResult {
    pub gamma_n: DVector<f64>,
    pub statistic: f64,
    pub df: u32,
    pub p_clt: f64,
    pub p_boot: f64,
    pub boot: BootstrapDistribution,
}

fn paired_gamma(
    x: &[DVector<f64>],
    y: &[DVector<f64>],
    mu: &DVector<f64>,
    nu: &DVector<f64>,
    lambda_x_inv: &DMatrix<f64>,
    lambda_y_inv: &DMatrix<f64>,
) -> DMatrix<f64> {
    let diffs: Vec<DVector<f64>> = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| {
            let psi_x = (xi - mu) * -2.0;
            let psi_y = (yi - nu) * -2.0;
            lambda_x_inv * psi_x - lambda_y_inv * psi_y
        })
        .collect();
    c_hat(&diffs)
}

/// Tests mu = nu from paired observations: the studentized statistic on
/// gamma_n = mu_n - nu_n, a chi-square p-value, and a bootstrap p-value from
/// resampled pairs recentered at gamma_n.
pub fn paired_test(
    x: &ChartedSample,
    y: &ChartedSample,
    lambda_x: &DMatrix<f64>,
    lambda_y: &DMatrix<f64>,
    plan: &ResamplePlan,
) -> Result<PairedTestResult> {
    if x.n() != y.n() {
        return Err(Error::LengthMismatch(x.n(), y.n()));
    }
    let n = x.n();
    let d = x.dim();
    let lambda_x_inv = inv_pd(lambda_x)?;
    let lambda_y_inv = inv_pd(lambda_y)?;
    let gamma_n = &x.mean_coords - &y.mean_coords;
    let gamma_cov = paired_gamma(
        &x.coords,
        &y.coords,
        &x.mean_coords,
        &y.mean_coords,
        &lambda_x_inv,
        &lambda_y_inv,
    );
    // identical pairs make Gamma singular with a zero numerator; the
    // statistic is 0 by convention rather than a refusal
    let statistic = match inv_pd(&gamma_cov) {
        Ok(inv) => n as f64 * (gamma_n.transpose() * inv * &gamma_n)[(0, 0)],
        Err(Error::SingularCovariance) if gamma_n.norm() < 1e-14 => 0.0,
        Err(e) => return Err(e),
    };
    let boot = collect_bootstrap(plan, |idx| {
        let xs: Vec<DVector<f64>> = idx.iter().map(|&i| x.coords[i].clone()).collect();
        let ys: Vec<DVector<f64>> = idx.iter().map(|&i| y.coords[i].clone()).collect();
        let mu_star = euclidean_mean(&xs)?;
        let nu_star = euclidean_mean(&ys)?;
        let gamma_star = &mu_star - &nu_star;
        let cov_star = paired_gamma(&xs, &ys, &mu_star, &nu_star, &lambda_x_inv, &lambda_y_inv);
        let dev = &gamma_star - &gamma_n;
        match inv_pd(&cov_star) {
            Ok(inv) => Ok(n as f64 * (dev.transpose() * inv * &dev)[(0, 0)]),
            Err(Error::SingularCovariance) if dev.norm() < 1e-14 => Ok(0.0),
            Err(e) => Err(e),
        }
    })?;
    let exceed = boot.values.iter().filter(|&&v| v >= statistic).count();
    let p_boot = exceed as f64 / boot.values.len() as f64;
    Ok(PairedTestResult {
        gamma_n,
        statistic,
        df: d as u32,
        p_clt: 1.0 - chi2_cdf(d as u32, statistic),
        p_boot,
        boot,
    })
}
