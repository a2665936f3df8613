use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{Error, Result};

use super::DEGENERATE_EIGENGAP;

/// Eigendecomposition of a real symmetric matrix.
///
/// Eigenvalues are ascending; `vectors` holds the matching orthonormal
/// eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Eigendecomposition of a complex Hermitian matrix: real ascending
/// eigenvalues and a unitary set of eigenvector columns.
#[derive(Debug, Clone)]
pub struct HermEigenResult {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

const MAX_SWEEPS: usize = 100;
const OFFDIAG_TOL: f64 = 1e-13;

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Eigendecomposition of a real symmetric matrix by cyclic Jacobi sweeps.
pub fn sym_eigen(m: &DMatrix<f64>) -> Result<EigenResult> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::InvalidArgument(format!(
            "matrix is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = max_abs(m).max(f64::MIN_POSITIVE);
    let asym = max_abs(&(m - m.transpose())) / scale;
    if asym > 1e-12 {
        return Err(Error::NotSymmetric(asym));
    }
    let mut a = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let mut v = DMatrix::<f64>::identity(n, n);
    let norm = a.norm().max(f64::MIN_POSITIVE);

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * a[(i, j)] * a[(i, j)];
            }
        }
        if off.sqrt() <= OFFDIAG_TOL * norm {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= OFFDIAG_TOL * norm / (n as f64) {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::EigenNoConvergence(MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(EigenResult { values, vectors })
}

/// Eigendecomposition of a complex Hermitian matrix.
///
/// Realifies `M = A + iB` to the 2Nx2N symmetric matrix `[[A, -B], [B, A]]`,
/// whose spectrum is that of `M` with doubled multiplicity, then recovers one
/// complex eigenvector per pair by Gram-Schmidt over the real eigenvectors.
pub fn herm_eigen(m: &DMatrix<Complex64>) -> Result<HermEigenResult> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::InvalidArgument(format!(
            "matrix is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.norm()))
        .max(f64::MIN_POSITIVE);
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            asym = asym.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    if asym / scale > 1e-12 {
        return Err(Error::NotHermitian(asym / scale));
    }

    let mut real = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            real[(i, j)] = z.re;
            real[(i + n, j + n)] = z.re;
            real[(i, j + n)] = -z.im;
            real[(i + n, j)] = z.im;
        }
    }
    let eig = sym_eigen(&real)?;

    let mut values = Vec::with_capacity(n);
    let mut vectors = DMatrix::<Complex64>::zeros(n, n);
    let mut accepted: Vec<nalgebra::DVector<Complex64>> = Vec::with_capacity(n);
    for idx in 0..2 * n {
        if accepted.len() == n {
            break;
        }
        let col = eig.vectors.column(idx);
        let mut z = nalgebra::DVector::<Complex64>::from_fn(n, |i, _| {
            Complex64::new(col[i], col[i + n])
        });
        // Each eigenvalue appears twice in the realified spectrum; the second
        // real eigenvector of a pair maps to i times the first and dies here.
        for prev in &accepted {
            let proj: Complex64 = prev.iter().zip(z.iter()).map(|(p, x)| p.conj() * x).sum();
            z.zip_apply(prev, |x, p| *x -= proj * p);
        }
        let norm = z.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            z /= Complex64::new(norm, 0.0);
            values.push(eig.values[idx]);
            accepted.push(z);
        }
    }
    if accepted.len() != n {
        return Err(Error::EigenNoConvergence(MAX_SWEEPS));
    }
    for (j, z) in accepted.iter().enumerate() {
        vectors.set_column(j, z);
    }
    Ok(HermEigenResult { values, vectors })
}

/// Inverse square root of a symmetric positive definite matrix: returns `R`
/// with `R M R = I`.
pub fn inv_sqrt_pd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = sym_eigen(m)?;
    let max = eig.values.last().copied().unwrap_or(0.0);
    let min = eig.values.first().copied().unwrap_or(0.0);
    if !(min > DEGENERATE_EIGENGAP * max.max(f64::MIN_POSITIVE)) {
        return Err(Error::NotPositiveDefinite { min, max });
    }
    let n = m.nrows();
    let mut out = DMatrix::<f64>::zeros(n, n);
    for a in 0..n {
        let w = 1.0 / eig.values[a].sqrt();
        let va = eig.vectors.column(a);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += w * va[i] * va[j];
            }
        }
    }
    Ok(out)
}
