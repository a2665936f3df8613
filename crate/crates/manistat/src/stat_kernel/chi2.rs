use crate::{Error, Result};

// Lanczos coefficients (g = 7, n = 9).
const LANCZOS: [f64; 9] = [
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
];

fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS[0];
        for (i, c) in LANCZOS.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + 7.5;
        0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
    }
}

/// Regularized lower incomplete gamma P(a, x), by series for x < a + 1 and
/// continued fraction otherwise.
fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let ln_prefix = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        // series expansion
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..500 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        sum * ln_prefix.exp()
    } else {
        // Lentz continued fraction for Q(a, x)
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        1.0 - ln_prefix.exp() * h
    }
}

/// CDF of the chi-square distribution with `df` degrees of freedom.
pub fn chi2_cdf(df: u32, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        gamma_p(df as f64 / 2.0, x / 2.0)
    }
}

fn chi2_pdf(df: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let a = df as f64 / 2.0;
    ((a - 1.0) * x.ln() - x / 2.0 - a * 2.0f64.ln() - ln_gamma(a)).exp()
}

/// Quantile of the chi-square distribution: the value `q` with
/// `chi2_cdf(df, q) = p`, found by a bisection/Newton hybrid.
pub fn chi2_quantile(df: u32, p: f64) -> Result<f64> {
    if df < 1 {
        return Err(Error::InvalidArgument("df must be >= 1".into()));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "quantile probability must lie in (0,1), got {p}"
        )));
    }
    let mut lo = 0.0f64;
    let mut hi = df as f64 + 10.0;
    while chi2_cdf(df, hi) < p {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::NoConvergence(0));
        }
    }
    let mut x = df as f64; // start near the mean
    for _ in 0..200 {
        let f = chi2_cdf(df, x) - p;
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let deriv = chi2_pdf(df, x);
        let mut next = if deriv > 0.0 { x - f / deriv } else { 0.5 * (lo + hi) };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-10 * x.max(1.0) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}
