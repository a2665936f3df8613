//! Acceptance suite: one test per criterion, each printing a single
//! `criterion N: pass` / `criterion N: fail` line.
//!
//! 1.  exp/log roundtrips on S^2 and S^4
//! 2.  analytic Hessian of the squared geodesic distance vs finite differences
//! 3.  chi-square quantile reference values
//! 4.  generic extrinsic covariance vs the closed forms (sphere, RP, CP)
//! 5.  chi-square calibration of the studentized extrinsic statistic
//! 6.  Monte Carlo coverage of the CLT and pivotal bootstrap regions
//! 7.  isometry equivariance of extrinsic means on RP^2 and CP^2
//! 8.  similarity invariance of Bookstein coordinates
//! 9.  level of the paired bootstrap shape-change test
//! 10. reproduction of published results (conditional on external datasets)
//! 11. byte-identical reports from repeated seeded CLI runs

use std::path::{Path, PathBuf};
use std::process::Command;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use manistat::axial::{rp_extrinsic_cov, rp_t_stat, Axis, VeroneseRp};
use manistat::bookstein::{bookstein_coords, paired_shape_change_test, Tetrad};
use manistat::extrinsic::{
    extrinsic_cov, extrinsic_mean, t_stat_sample_frame, Embedding, FrameVariant, SphereInclusion,
};
use manistat::frechet::{
    c_hat, clt_region, pivotal_bootstrap_region, psi_values, ChartedSample, CovarianceTriple,
};
use manistat::manifold::intrinsic_mean;
use manistat::shape::{
    affine_coords, cp_extrinsic_cov, preshape_from_landmarks, procrustes_mean, PlanarShapeVector,
    VeroneseCp,
};
use manistat::sphere::{
    self, exp_map, geodesic_distance, hessian_entry, lambda_hat, log_chart_s2, log_coords,
    log_map, tangent_basis, tangent_frame_s2, UnitVector,
};
use manistat::stat_kernel::{chi2_cdf, chi2_quantile, resample_plan, ReplicateRng};

/// Prints the criterion verdict: `pass` on explicit completion, `fail` if the
/// test panics first.
struct Criterion {
    n: usize,
    done: bool,
}

impl Criterion {
    fn start(n: usize) -> Self {
        Self { n, done: false }
    }

    fn pass(mut self) {
        self.done = true;
        println!("criterion {}: pass", self.n);
    }

    fn pass_with(mut self, note: &str) {
        self.done = true;
        println!("criterion {}: pass ({note})", self.n);
    }
}

impl Drop for Criterion {
    fn drop(&mut self) {
        if !self.done {
            println!("criterion {}: fail", self.n);
        }
    }
}

fn normal(rng: &mut ReplicateRng) -> f64 {
    let u1 = rng.next_f64().max(1e-12);
    let u2 = rng.next_f64();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn random_unit(rng: &mut ReplicateRng, k: usize) -> UnitVector {
    loop {
        let v = DVector::from_fn(k, |_, _| 2.0 * rng.next_f64() - 1.0);
        if v.norm() > 1e-3 {
            return UnitVector::from_unnormalized(v).unwrap();
        }
    }
}

fn random_tangent(rng: &mut ReplicateRng, p: &UnitVector, max_norm: f64) -> DVector<f64> {
    let k = p.coords().len();
    let mut v = DVector::from_fn(k, |_, _| 2.0 * rng.next_f64() - 1.0);
    let c = p.coords().dot(&v);
    v -= p.coords() * c;
    let norm = v.norm().max(1e-12);
    let target = rng.next_f64() * max_norm;
    v * (target / norm)
}

#[test]
fn criterion_1_exp_log_roundtrips() {
    let crit = Criterion::start(1);
    for (dim, seed) in [(3usize, 101u64), (5, 102)] {
        let mut rng = ReplicateRng::new(seed, 0);
        for i in 0..10_000 {
            let p = random_unit(&mut rng, dim);
            let v = random_tangent(&mut rng, &p, std::f64::consts::PI - 0.1);
            let x = exp_map(&p, &v);
            let back = log_map(&p, &x).unwrap();
            assert!(
                (&back - &v).norm() < 1e-10,
                "dim {dim} trial {i}: residual {}",
                (&back - &v).norm()
            );
        }
    }
    crit.pass();
}

#[test]
fn criterion_2_hessian_vs_finite_differences() {
    let crit = Criterion::start(2);
    // Oracle: the squared geodesic distance theta -> d(Exp_p(theta.e), x)^2
    // evaluated directly on the sphere, differentiated by 4-point central
    // differences at theta = 0.
    let p = UnitVector::from_unnormalized(DVector::from_vec(vec![0.3, 0.4, 0.87])).unwrap();
    let (e1, e2) = tangent_frame_s2(&p).unwrap();
    let sq_dist = |theta: [f64; 2], x: &UnitVector| -> f64 {
        let q = exp_map(&p, &(&e1 * theta[0] + &e2 * theta[1]));
        geodesic_distance(&q, x).powi(2)
    };
    let h = 1e-5;
    let mut checked = 0usize;
    for i in 0..10 {
        let norm = 0.1 + 1.35 * i as f64 / 9.0;
        for j in 0..10 {
            let angle = 2.0 * std::f64::consts::PI * j as f64 / 10.0;
            let u = [norm * angle.cos(), norm * angle.sin()];
            let x = exp_map(&p, &(&e1 * u[0] + &e2 * u[1]));
            for r in 0..2 {
                for s in 0..2 {
                    let analytic = hessian_entry(u, r, s).unwrap();
                    let mut er = [0.0; 2];
                    er[r] = h;
                    let mut es = [0.0; 2];
                    es[s] = h;
                    let fd = (sq_dist([er[0] + es[0], er[1] + es[1]], &x)
                        - sq_dist([er[0] - es[0], er[1] - es[1]], &x)
                        - sq_dist([-er[0] + es[0], -er[1] + es[1]], &x)
                        + sq_dist([-er[0] - es[0], -er[1] - es[1]], &x))
                        / (4.0 * h * h);
                    assert!(
                        (analytic - fd).abs() <= 1e-5 * (1.0 + analytic.abs()),
                        "u={u:?} ({r},{s}): {analytic} vs {fd}"
                    );
                }
            }
            checked += 1;
        }
    }
    assert_eq!(checked, 100);
    crit.pass();
}

#[test]
fn criterion_3_chi2_quantiles() {
    let crit = Criterion::start(3);
    assert!((chi2_quantile(2, 0.95).unwrap() - 5.99146).abs() < 1e-4);
    assert!((chi2_quantile(2, 0.5).unwrap() - 2.0 * std::f64::consts::LN_2).abs() < 1e-8);
    crit.pass();
}

fn cap_sample(center: &UnitVector, radius: f64, n: usize, seed: u64) -> Vec<UnitVector> {
    let mut rng = ReplicateRng::new(seed, 0);
    let basis = tangent_basis(center.coords());
    (0..n)
        .map(|_| {
            let r = radius * rng.next_f64();
            let a = 2.0 * std::f64::consts::PI * rng.next_f64();
            let v = &basis[0] * (r * a.cos()) + &basis[1] * (r * a.sin());
            exp_map(center, &v)
        })
        .collect()
}

fn cap_axes(center: &DVector<f64>, radius: f64, n: usize, seed: u64) -> Vec<Axis> {
    let mut rng = ReplicateRng::new(seed, 0);
    let basis = tangent_basis(center);
    (0..n)
        .map(|_| {
            let mut v = center.clone();
            for b in &basis {
                v += b * (radius * (2.0 * rng.next_f64() - 1.0));
            }
            Axis::from_unnormalized(v).unwrap()
        })
        .collect()
}

fn square_cfg() -> Vec<Complex64> {
    vec![
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(1.0, 1.0),
        Complex64::new(0.0, 1.0),
    ]
}

fn shape_cluster(center_cfg: &[Complex64], spread: f64, n: usize, seed: u64) -> Vec<PlanarShapeVector> {
    let mut rng = ReplicateRng::new(seed, 0);
    (0..n)
        .map(|_| {
            let cfg: Vec<Complex64> = center_cfg
                .iter()
                .map(|l| {
                    l + Complex64::new(
                        spread * (rng.next_f64() - 0.5),
                        spread * (rng.next_f64() - 0.5),
                    )
                })
                .collect();
            preshape_from_landmarks(&cfg).unwrap()
        })
        .collect()
}

/// Hermitian p x p matrices encoded isometrically as real p^2-vectors:
/// diagonal entries first, then sqrt(2).Re and sqrt(2).Im of each
/// upper-triangular entry, row-major. Reimplemented here from the documented
/// convention so the comparison is independent of the library's encoder.
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

/// Pullback frame of the complex Veronese map along the tangent direction w
/// at z: (w z* + z w*)/2.
fn cp_pullback(z: &DVector<Complex64>, w: &DVector<Complex64>) -> DMatrix<Complex64> {
    (w * z.adjoint() + z * w.adjoint()) * Complex64::new(0.5, 0.0)
}

#[test]
fn criterion_4_covariance_equivalences() {
    let crit = Criterion::start(4);

    // (a) generic plug-in covariance vs the sphere closed form
    let incl = SphereInclusion { ambient: 3 };
    for seed in [401u64, 402, 403, 404, 405] {
        let center =
            UnitVector::from_unnormalized(DVector::from_vec(vec![0.2, -0.3, 0.93])).unwrap();
        let sample = cap_sample(&center, 0.5, 20, seed);
        let summary = extrinsic_mean(&sample, &incl).unwrap();
        let closed = sphere::sphere_extrinsic_cov(&sample, &summary.ambient_mean).unwrap();
        assert!(
            (&summary.g_hat - &closed).norm() < 1e-10 * (1.0 + closed.norm()),
            "sphere seed {seed}"
        );
    }

    // (b) generic covariance with the finite-difference projection Jacobian
    // vs the RP^2 closed form, frames aligned by the rotation between the
    // canonical tangent basis and the eigenbasis of K
    struct Numeric(VeroneseRp);
    impl Embedding for Numeric {
        type Point = Axis;
        fn ambient_dim(&self) -> usize {
            self.0.ambient_dim()
        }
        fn manifold_dim(&self) -> usize {
            self.0.manifold_dim()
        }
        fn embed(&self, p: &Axis) -> DVector<f64> {
            self.0.embed(p)
        }
        fn project(&self, a: &DVector<f64>) -> manistat::Result<(Axis, f64)> {
            self.0.project(a)
        }
        fn frame_at(&self, p: &Axis) -> Vec<DVector<f64>> {
            self.0.frame_at(p)
        }
    }
    for seed in [411u64, 412, 413, 414, 415] {
        let sample = cap_axes(&DVector::from_vec(vec![0.1, -0.2, 0.97]), 0.25, 20, seed);
        let e = VeroneseRp { n: 3 };
        let summary = extrinsic_mean(&sample, &e).unwrap();
        let g_gen = extrinsic_cov(&Numeric(VeroneseRp { n: 3 }), &summary).unwrap();
        let closed = rp_extrinsic_cov(&sample).unwrap();
        let m = closed.mean_axis.rep();
        let sphere_frame = tangent_basis(m);
        let mut r = DMatrix::zeros(2, 2);
        for a in 0..2 {
            for b in 0..2 {
                let mut mb: DVector<f64> = closed.eigenvectors.column(b).into();
                if summary.mean_point.rep().dot(m) < 0.0 {
                    mb = -mb;
                }
                r[(a, b)] = sphere_frame[a].dot(&mb);
            }
        }
        let aligned = &r * &closed.g * r.transpose();
        assert!(
            (&g_gen - &aligned).norm() < 1e-6 * (1.0 + aligned.norm()),
            "axial seed {seed}: {g_gen} vs {aligned}"
        );
    }

    // (c) complex closed-form covariance vs the complex compression of the
    // generic realified covariance, in the eigenbasis of K
    struct EigenFramed {
        inner: VeroneseCp,
        basis: Vec<DVector<Complex64>>,
        z: DVector<Complex64>,
    }
    impl Embedding for EigenFramed {
        type Point = PlanarShapeVector;
        fn ambient_dim(&self) -> usize {
            self.inner.ambient_dim()
        }
        fn manifold_dim(&self) -> usize {
            self.inner.manifold_dim()
        }
        fn embed(&self, p: &Self::Point) -> DVector<f64> {
            herm_to_vec(&(p.rep() * p.rep().adjoint()))
        }
        fn project(&self, a: &DVector<f64>) -> manistat::Result<(Self::Point, f64)> {
            self.inner.project(a)
        }
        fn frame_at(&self, _p: &Self::Point) -> Vec<DVector<f64>> {
            let mut out = Vec::new();
            for w in &self.basis {
                out.push(herm_to_vec(&cp_pullback(&self.z, w)));
            }
            for w in &self.basis {
                let iw = w * Complex64::new(0.0, 1.0);
                out.push(herm_to_vec(&cp_pullback(&self.z, &iw)));
            }
            out
        }
    }
    for seed in [421u64, 422, 423, 424, 425] {
        let shapes = shape_cluster(&square_cfg(), 0.15, 20, seed);
        let closed = cp_extrinsic_cov(&shapes).unwrap();
        let p = 3usize;
        let d = p - 1;
        let z: DVector<Complex64> = closed.mean.frame.column(p - 1).into();
        let basis: Vec<DVector<Complex64>> =
            (0..d).map(|a| closed.mean.frame.column(a).into()).collect();
        let e = EigenFramed {
            inner: VeroneseCp { p },
            basis,
            z,
        };
        let summary = extrinsic_mean(&shapes, &e).unwrap();
        let gr = &summary.g_hat; // real block 0..d, imaginary block d..2d
        let mut compressed = DMatrix::<Complex64>::zeros(d, d);
        for a in 0..d {
            for b in 0..d {
                compressed[(a, b)] = Complex64::new(
                    gr[(a, b)] + gr[(a + d, b + d)],
                    gr[(a + d, b)] - gr[(a, b + d)],
                );
            }
        }
        assert!(
            (&compressed - &closed.g).norm() < 1e-8 * (1.0 + closed.g.norm()),
            "shape seed {seed}: {compressed} vs {}",
            closed.g
        );
    }

    crit.pass();
}

/// Kolmogorov-Smirnov distance of a sample to the chi-square(df) law.
fn ks_to_chi2(values: &mut [f64], df: u32) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = values.len() as f64;
    let mut d = 0.0f64;
    for (i, &v) in values.iter().enumerate() {
        let f = chi2_cdf(df, v);
        d = d.max((f - (i + 1) as f64 / m).abs()).max((f - i as f64 / m).abs());
    }
    d
}

#[test]
fn criterion_5_statistic_calibration() {
    let crit = Criterion::start(5);

    // RP^2: axes around [e3] with isotropic Gaussian tangent noise, whose
    // symmetry makes [e3] the population extrinsic mean exactly
    let e3 = DVector::from_vec(vec![0.0, 0.0, 1.0]);
    let basis = tangent_basis(&e3);
    let true_axis = Axis::new(e3.clone()).unwrap();
    let mut stats = Vec::with_capacity(1000);
    for rep in 0..1000u64 {
        let mut rng = ReplicateRng::new(500, rep);
        let sample: Vec<Axis> = (0..300)
            .map(|_| {
                let v = &e3 + &basis[0] * (0.08 * normal(&mut rng)) + &basis[1] * (0.08 * normal(&mut rng));
                Axis::from_unnormalized(v).unwrap()
            })
            .collect();
        stats.push(
            rp_t_stat(&sample, &true_axis, FrameVariant::Sample)
                .unwrap()
                .statistic,
        );
    }
    let d_rp = ks_to_chi2(&mut stats, 2);
    assert!(d_rp <= 0.06, "RP^2 KS distance {d_rp}");

    // CP^1: preshapes around z0 with isotropic complex Gaussian noise; the
    // phase symmetry of the noise makes [z0] the population extrinsic mean
    let z0 = DVector::from_vec(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
    let true_shape = PlanarShapeVector::new(z0.clone()).unwrap();
    let e = VeroneseCp { p: 2 };
    let mut stats = Vec::with_capacity(1000);
    for rep in 0..1000u64 {
        let mut rng = ReplicateRng::new(501, rep);
        let sample: Vec<PlanarShapeVector> = (0..500)
            .map(|_| {
                let noise = DVector::from_fn(2, |_, _| {
                    Complex64::new(0.08 * normal(&mut rng), 0.08 * normal(&mut rng))
                });
                PlanarShapeVector::from_unnormalized(&z0 + noise).unwrap()
            })
            .collect();
        let summary = extrinsic_mean(&sample, &e).unwrap();
        stats.push(t_stat_sample_frame(&e, &summary, &true_shape).unwrap());
    }
    let d_cp = ks_to_chi2(&mut stats, 2);
    assert!(d_cp <= 0.06, "CP^1 KS distance {d_cp}");

    crit.pass_with(&format!("KS distances: RP^2 {d_rp:.4}, CP^1 {d_cp:.4}"));
}

#[test]
fn criterion_6_region_coverage() {
    let crit = Criterion::start(6);
    let center = UnitVector::from_unnormalized(DVector::from_vec(vec![0.2, 0.1, 0.97])).unwrap();
    let incl = SphereInclusion { ambient: 3 };
    let reps = 200usize;
    let n = 100usize;
    let mut clt_hits = 0usize;
    let mut piv_hits = 0usize;
    for rep in 0..reps {
        let sample = cap_sample(&center, 0.3, n, 600 + rep as u64);
        let ext = extrinsic_mean(&sample, &incl).unwrap();
        let karcher = intrinsic_mean(
            &sample,
            exp_map,
            |p, x| log_map(p, x),
            &ext.mean_point,
            1e-10,
            1000,
        )
        .unwrap();
        let chart = log_chart_s2(karcher.clone()).unwrap();
        let coords: Vec<DVector<f64>> =
            sample.iter().map(|x| chart.to_coords(x).unwrap()).collect();
        let pairs: Vec<[f64; 2]> = coords.iter().map(|u| [u[0], u[1]]).collect();
        let charted = ChartedSample::new("s2-log", coords, DVector::zeros(2)).unwrap();
        let lambda = lambda_hat(&pairs).unwrap();
        let cov = CovarianceTriple::new(lambda, c_hat(&psi_values(&charted))).unwrap();
        let truth = chart.to_coords(&center).unwrap();

        let region = clt_region(&charted, &cov, 0.95).unwrap();
        if region.contains(&truth) {
            clt_hits += 1;
        }

        let plan = resample_plan(700 + rep as u64, 300, n).unwrap();
        let estimator = |idx: &[usize]| -> manistat::Result<DVector<f64>> {
            let rep_points: Vec<UnitVector> = idx.iter().map(|&i| sample[i].clone()).collect();
            let init = extrinsic_mean(&rep_points, &incl)?.mean_point;
            let m = intrinsic_mean(&rep_points, exp_map, |p, x| log_map(p, x), &init, 1e-10, 1000)?;
            chart.to_coords(&m)
        };
        // replicate sandwich covariance from the chart coordinates recentered
        // at the replicate mean
        let replicate_cov =
            |idx: &[usize], m: &DVector<f64>| -> manistat::Result<DMatrix<f64>> {
                let recentered: Vec<[f64; 2]> = idx
                    .iter()
                    .map(|&i| [pairs[i][0] - m[0], pairs[i][1] - m[1]])
                    .collect();
                let lam = lambda_hat(&recentered)?;
                let psi: Vec<DVector<f64>> = recentered
                    .iter()
                    .map(|u| DVector::from_vec(vec![-2.0 * u[0], -2.0 * u[1]]))
                    .collect();
                Ok(CovarianceTriple::new(lam, c_hat(&psi))?.gamma_hat)
            };
        let piv = pivotal_bootstrap_region(&charted, &cov, estimator, replicate_cov, &plan, 0.95)
            .unwrap();
        if piv.region.contains(&truth) {
            piv_hits += 1;
        }
    }
    let clt_cov = clt_hits as f64 / reps as f64;
    let piv_cov = piv_hits as f64 / reps as f64;
    assert!(
        (0.90..=0.99).contains(&clt_cov),
        "CLT coverage {clt_cov} outside [0.90, 0.99]"
    );
    assert!(
        (0.90..=0.99).contains(&piv_cov),
        "pivotal coverage {piv_cov} outside [0.90, 0.99]"
    );
    crit.pass_with(&format!("coverage: CLT {clt_cov:.3}, pivotal {piv_cov:.3}"));
}

fn random_rotation(rng: &mut ReplicateRng, k: usize) -> DMatrix<f64> {
    loop {
        let mut cols: Vec<DVector<f64>> = Vec::new();
        for _ in 0..k {
            let mut v = DVector::from_fn(k, |_, _| 2.0 * rng.next_f64() - 1.0);
            for c in &cols {
                let proj = c.dot(&v);
                v -= c * proj;
            }
            if v.norm() < 1e-6 {
                cols.clear();
                break;
            }
            cols.push(v.normalize());
        }
        if cols.len() != k {
            continue;
        }
        let mut r = DMatrix::zeros(k, k);
        for (i, c) in cols.iter().enumerate() {
            r.set_column(i, c);
        }
        if r.determinant() < 0.0 {
            let flipped: DVector<f64> = -r.column(0);
            r.set_column(0, &flipped);
        }
        return r;
    }
}

fn random_unitary(rng: &mut ReplicateRng, p: usize) -> DMatrix<Complex64> {
    loop {
        let mut cols: Vec<DVector<Complex64>> = Vec::new();
        for _ in 0..p {
            let mut v = DVector::from_fn(p, |_, _| {
                Complex64::new(2.0 * rng.next_f64() - 1.0, 2.0 * rng.next_f64() - 1.0)
            });
            for c in &cols {
                let proj = c.dotc(&v);
                v -= c * proj;
            }
            if v.norm() < 1e-6 {
                cols.clear();
                break;
            }
            let norm = v.norm();
            cols.push(v / Complex64::new(norm, 0.0));
        }
        if cols.len() != p {
            continue;
        }
        let mut u = DMatrix::<Complex64>::zeros(p, p);
        for (i, c) in cols.iter().enumerate() {
            u.set_column(i, c);
        }
        return u;
    }
}

#[test]
fn criterion_7_mean_equivariance() {
    let crit = Criterion::start(7);

    // RP^2 under rotations, canonicalized via the Axis sign convention
    let mut rng = ReplicateRng::new(700, 0);
    for trial in 0..100 {
        let sample = cap_axes(&DVector::from_vec(vec![0.1, 0.3, 0.95]), 0.3, 20, 710 + trial);
        let mean = rp_extrinsic_cov(&sample).unwrap().mean_axis;
        let r = random_rotation(&mut rng, 3);
        let moved: Vec<Axis> = sample
            .iter()
            .map(|a| Axis::from_unnormalized(&r * a.rep()).unwrap())
            .collect();
        let moved_mean = rp_extrinsic_cov(&moved).unwrap().mean_axis;
        let expected = Axis::from_unnormalized(&r * mean.rep()).unwrap();
        assert!(
            (moved_mean.rep() - expected.rep()).norm() < 1e-9,
            "RP^2 trial {trial}"
        );
    }

    // CP^2 (quadrilateral shapes: k = 4 landmarks, preshapes in C^3) under
    // unitaries, canonicalized via the phase convention
    let mut rng = ReplicateRng::new(701, 0);
    for trial in 0..100 {
        let shapes = shape_cluster(&square_cfg(), 0.15, 20, 720 + trial);
        let mean = procrustes_mean(&shapes).unwrap().mean;
        let u = random_unitary(&mut rng, 3);
        let moved: Vec<PlanarShapeVector> = shapes
            .iter()
            .map(|s| PlanarShapeVector::from_unnormalized(&u * s.rep()).unwrap())
            .collect();
        let moved_mean = procrustes_mean(&moved).unwrap().mean;
        let expected = PlanarShapeVector::from_unnormalized(&u * mean.rep()).unwrap();
        assert!(
            (moved_mean.rep() - expected.rep()).norm() < 1e-9,
            "CP^2 trial {trial}"
        );
    }

    crit.pass();
}

fn reference_tetrad() -> Tetrad {
    Tetrad::new([
        [0.0, 0.0, 0.0],
        [2.0, 0.0, 0.0],
        [1.0, 1.0, 0.0],
        [1.0, 0.0, 1.0],
    ])
    .unwrap()
}

fn random_tetrad(rng: &mut ReplicateRng) -> Tetrad {
    loop {
        let mut l = [[0.0f64; 3]; 4];
        for lm in &mut l {
            for c in lm.iter_mut() {
                *c = 2.0 * rng.next_f64() - 1.0;
            }
        }
        if let Ok(t) = Tetrad::new(l) {
            if bookstein_coords(&t).is_ok() {
                return t;
            }
        }
    }
}

#[test]
fn criterion_8_bookstein_invariance() {
    let crit = Criterion::start(8);

    let reference = bookstein_coords(&reference_tetrad()).unwrap();
    let expected = [0.0, 0.5, 0.0, 0.0, 0.5];
    for (got, want) in reference.v.iter().zip(expected) {
        assert!((got - want).abs() < 1e-12, "{:?}", reference.v);
    }

    let mut rng = ReplicateRng::new(800, 0);
    for trial in 0..100 {
        let t = random_tetrad(&mut rng);
        let base = bookstein_coords(&t).unwrap();
        let r = random_rotation(&mut rng, 3);
        let scale = 0.5 + 1.5 * rng.next_f64();
        let shift = [
            2.0 * rng.next_f64() - 1.0,
            2.0 * rng.next_f64() - 1.0,
            2.0 * rng.next_f64() - 1.0,
        ];
        let mut moved = [[0.0f64; 3]; 4];
        for (src, dst) in t.landmarks.iter().zip(moved.iter_mut()) {
            let v = DVector::from_vec(src.to_vec());
            let w = &r * v * scale;
            for c in 0..3 {
                dst[c] = w[c] + shift[c];
            }
        }
        let transformed = bookstein_coords(&Tetrad::new(moved).unwrap()).unwrap();
        for (a, b) in base.v.iter().zip(transformed.v) {
            assert!((a - b).abs() < 1e-9, "trial {trial}: {:?} vs {b}", base.v);
        }
    }

    crit.pass();
}

fn jittered_tetrad(base: &Tetrad, rng: &mut ReplicateRng, sigma: f64) -> Tetrad {
    let mut l = base.landmarks;
    for lm in &mut l {
        for c in lm.iter_mut() {
            *c += sigma * normal(rng);
        }
    }
    Tetrad::new(l).unwrap()
}

#[test]
fn criterion_9_paired_test_level() {
    let crit = Criterion::start(9);
    let base = reference_tetrad();
    let reps = 500usize;
    let n = 30usize;
    let mut rejections = 0usize;
    for rep in 0..reps {
        let mut rng = ReplicateRng::new(900, rep as u64);
        // exchangeable pairs: before and after drawn independently from the
        // same distribution, so the null of equal means holds
        let before: Vec<Tetrad> = (0..n).map(|_| jittered_tetrad(&base, &mut rng, 0.05)).collect();
        let after: Vec<Tetrad> = (0..n).map(|_| jittered_tetrad(&base, &mut rng, 0.05)).collect();
        let plan = resample_plan(901 + rep as u64, 300, n).unwrap();
        let out = paired_shape_change_test(&before, &after, &plan, 0.95).unwrap();
        if out.test.p_boot < 0.05 {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / reps as f64;
    assert!(
        (0.03..=0.08).contains(&rate),
        "rejection rate {rate} outside [0.03, 0.08]"
    );
    crit.pass_with(&format!("rejection rate {rate:.3}"));
}

fn data_file(name: &str) -> Option<PathBuf> {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.pop();
    p.pop();
    p.push("data");
    p.push(name);
    p.exists().then_some(p)
}

#[test]
fn criterion_10_published_reproductions() {
    let crit = Criterion::start(10);
    let mut notes: Vec<String> = Vec::new();

    // published magnetic-pole study (supply data/fle1987.csv as lat,lon
    // degree rows)
    if let Some(path) = data_file("fle1987.csv") {
        let sample = manistat::dataset::parse_directions(
            &path,
            manistat::dataset::DirectionConvention::LatLonDeg,
        )
        .unwrap();
        let incl = SphereInclusion { ambient: 3 };
        let ext = extrinsic_mean(&sample, &incl).unwrap();
        let expected_ext = DVector::from_vec(vec![0.0105208, 0.199101, 0.979922]);
        assert!(
            (ext.mean_point.coords() - &expected_ext).norm() < 1e-4,
            "extrinsic mean {:?}",
            ext.mean_point.coords()
        );
        let karcher = intrinsic_mean(
            &sample,
            exp_map,
            |p, x| log_map(p, x),
            &ext.mean_point,
            1e-10,
            1000,
        )
        .unwrap();
        let expected_int = DVector::from_vec(vec![0.004392, 0.183800, 0.982954]);
        assert!(
            (karcher.coords() - &expected_int).norm() < 1e-4,
            "intrinsic mean {:?}",
            karcher.coords()
        );
        let pairs: Vec<[f64; 2]> = sample
            .iter()
            .map(|x| log_coords(&karcher, x).unwrap())
            .collect();
        let coords: Vec<DVector<f64>> = pairs
            .iter()
            .map(|u| DVector::from_vec(vec![u[0], u[1]]))
            .collect();
        let charted = ChartedSample::new("s2-log", coords, DVector::zeros(2)).unwrap();
        let lambda = lambda_hat(&pairs).unwrap();
        let cov = CovarianceTriple::new(lambda, c_hat(&psi_values(&charted))).unwrap();
        let region = clt_region(&charted, &cov, 0.95).unwrap();
        let n = sample.len() as f64;
        let form = &region.form * n;
        let printed = [16.6786, -2.9806, 10.2180];
        let computed = [form[(0, 0)], 2.0 * form[(0, 1)], form[(1, 1)]];
        for (c, p) in computed.iter().zip(printed) {
            assert!((c - p).abs() < 5e-3 * (1.0 + p.abs()), "region coefficients {computed:?}");
        }
        notes.push("magnetic-pole study reproduced".into());
    } else {
        notes.push("magnetic-pole study skipped: data/fle1987.csv not supplied".into());
    }

    // published skull-landmark study (supply
    // data/university_school.csv as x1,y1,...,x8,y8 rows)
    if let Some(path) = data_file("university_school.csv") {
        let rows = manistat::dataset::parse_planar_landmarks(&path, 8).unwrap();
        let shapes: Vec<PlanarShapeVector> = rows
            .iter()
            .map(|cfg| preshape_from_landmarks(cfg).unwrap())
            .collect();
        let mean = procrustes_mean(&shapes).unwrap().mean;
        let w = affine_coords(&mean).unwrap();
        let expected = Complex64::new(-0.67151, 0.66823);
        assert!(
            (w[0] - expected).norm() < 1e-4,
            "first affine coordinate {:?}",
            w[0]
        );
        notes.push("skull-landmark study reproduced".into());
    } else {
        notes.push("skull-landmark study skipped: data/university_school.csv not supplied".into());
    }

    // published glaucoma study (supply data/glaucoma_before.csv and
    // data/glaucoma_after.csv as paired 12-field tetrad rows)
    if let (Some(before), Some(after)) =
        (data_file("glaucoma_before.csv"), data_file("glaucoma_after.csv"))
    {
        let (b, a) = manistat::dataset::parse_paired_tetrads(&before, &after).unwrap();
        let plan = resample_plan(1, 3000, b.len()).unwrap();
        let out = paired_shape_change_test(&b, &a, &plan, 0.95).unwrap();
        assert!(
            (out.test.p_boot - 0.058).abs() < 0.02,
            "bootstrap p {}",
            out.test.p_boot
        );
        let (lo, hi) = out.intervals[0];
        assert!((lo - -0.0377073).abs() < 5e-3 && (hi - -0.0058545).abs() < 5e-3);
        notes.push("glaucoma study reproduced".into());
    } else {
        notes.push("glaucoma study skipped: glaucoma tetrad files not supplied".into());
    }

    crit.pass_with(&notes.join("; "));
}

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_manistat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .display()
        .to_string()
}

#[test]
fn criterion_11_seeded_determinism() {
    let crit = Criterion::start(11);
    let axes = fixture("axes.csv");
    let tetrads = fixture("tetrads_before.csv");
    let tetrads_after = fixture("tetrads_after.csv");
    let commands: Vec<Vec<&str>> = vec![
        vec![
            "boot-region", "--manifold", "axial", "--method", "pivotal", "--B", "200", "--seed",
            "42", "--in", &axes,
        ],
        vec![
            "test-paired", "--manifold", "shape3d", "--B", "200", "--seed", "42", "--in",
            &tetrads, "--in2", &tetrads_after,
        ],
    ];
    for args in &commands {
        let first = run_cli(args);
        let second = run_cli(args);
        assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
        assert_eq!(first.stdout, second.stdout, "reports differ for {args:?}");
        assert!(!first.stdout.is_empty());
    }
    crit.pass();
}
