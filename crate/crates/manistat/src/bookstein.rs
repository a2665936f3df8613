//! Three-dimensional shape analysis of tetrads in Bookstein coordinates:
//! the five similarity-invariant coordinates, degeneracy detection, and the
//! paired shape-change test in the flat chart.

use nalgebra::{DMatrix, DVector};

use crate::frechet::{empirical_quantile, paired_test, ChartedSample, PairedTestResult};
use crate::stat_kernel::ResamplePlan;
use crate::{Error, Result};

/// Four labeled landmarks in R^3; the first two must be distinct.
#[derive(Debug, Clone)]
pub struct Tetrad {
    pub landmarks: [[f64; 3]; 4],
}

impl Tetrad {
    pub fn new(landmarks: [[f64; 3]; 4]) -> Result<Self> {
        let t = Self { landmarks };
        let scale = t.rms_size().max(1e-300);
        let d12: f64 = (0..3)
            .map(|r| (landmarks[0][r] - landmarks[1][r]).powi(2))
            .sum::<f64>()
            .sqrt();
        if d12 <= 1e-12 * scale {
            return Err(Error::DegenerateTetrad(
                "landmarks 1 and 2 coincide".into(),
            ));
        }
        Ok(t)
    }

    /// RMS landmark distance from the centroid, the scale for degeneracy
    /// tolerances.
    pub fn rms_size(&self) -> f64 {
        let mut centroid = [0.0; 3];
        for l in &self.landmarks {
            for r in 0..3 {
                centroid[r] += l[r] / 4.0;
            }
        }
        let ss: f64 = self
            .landmarks
            .iter()
            .map(|l| (0..3).map(|r| (l[r] - centroid[r]).powi(2)).sum::<f64>())
            .sum();
        (ss / 4.0).sqrt()
    }
}

/// The five Bookstein coordinates of a nondegenerate tetrad.
#[derive(Debug, Clone, PartialEq)]
pub struct BooksteinCoords {
    pub v: [f64; 5],
}

impl BooksteinCoords {
    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_row_slice(&self.v)
    }
}

/// Landmarks 2, 3, 4 recentered at the midpoint of landmarks 1 and 2:
/// w[r][i] = x_{i+2}^{r+1} - (x_1^{r+1} + x_2^{r+1})/2, r coordinate,
/// i landmark offset.
pub fn centered_w(t: &Tetrad) -> [[f64; 3]; 3] {
    let mut w = [[0.0; 3]; 3];
    for r in 0..3 {
        let mid = (t.landmarks[0][r] + t.landmarks[1][r]) / 2.0;
        for i in 0..3 {
            w[r][i] = t.landmarks[i + 1][r] - mid;
        }
    }
    w
}

pub fn bookstein_coords(t: &Tetrad) -> Result<BooksteinCoords> {
    let ws = centered_w(t);
    // 1-based closure indices: coordinate r in 1..3, landmark i in 2..4
    let w = |r: usize, i: usize| ws[r - 1][i - 2];
    let scale = t.rms_size().max(1e-300);

    let a = 2.0 * (w(1, 2).powi(2) + w(2, 2).powi(2) + w(3, 2).powi(2));
    if a <= 1e-12 * scale * scale {
        return Err(Error::DegenerateTetrad(
            "landmarks 1 and 2 coincide".into(),
        ));
    }
    let b = w(1, 2).powi(2) * w(2, 3).powi(2) + w(1, 2).powi(2) * w(3, 3).powi(2)
        - 2.0 * w(1, 2) * w(1, 3) * w(2, 2) * w(2, 3)
        + w(1, 3).powi(2) * w(2, 2).powi(2)
        + w(1, 3).powi(2) * w(3, 2).powi(2)
        - 2.0 * w(1, 2) * w(1, 3) * w(3, 2) * w(3, 3)
        + w(3, 3).powi(2) * w(2, 2).powi(2)
        + w(2, 3).powi(2) * w(3, 2).powi(2)
        - 2.0 * w(2, 2) * w(3, 2) * w(2, 3) * w(3, 3);
    if b <= 1e-18 * scale.powi(4) {
        return Err(Error::DegenerateTetrad(
            "landmarks 1, 2 and 3 are collinear".into(),
        ));
    }

    let v1 = (w(1, 2) * w(1, 3) + w(2, 2) * w(2, 3) + w(3, 2) * w(3, 3)) / a;
    let v2 = ((w(1, 2) * w(2, 3) - w(2, 2) * w(1, 3)).powi(2)
        + (w(1, 2) * w(3, 3) - w(3, 2) * w(1, 3)).powi(2)
        + (w(2, 2) * w(3, 3) - w(2, 3) * w(3, 2)).powi(2))
    .sqrt()
        / a;
    let v3 = (w(1, 2) * w(1, 4) + w(2, 2) * w(2, 4) + w(3, 2) * w(3, 4)) / a;
    let v4 = (w(1, 2).powi(2) * (w(2, 3) * w(2, 4) + w(3, 3) * w(3, 4))
        + w(2, 2).powi(2) * (w(1, 3) * w(1, 4) + w(3, 3) * w(3, 4))
        + w(3, 2).powi(2) * (w(1, 3) * w(1, 4) + w(2, 3) * w(2, 4))
        - w(1, 2) * w(1, 3) * (w(2, 2) * w(2, 4) + w(3, 2) * w(3, 4))
        - w(2, 2) * w(3, 2) * (w(2, 3) * w(3, 4) + w(3, 3) * w(2, 4))
        - w(1, 2) * w(1, 4) * (w(2, 2) * w(2, 3) + w(3, 2) * w(3, 3)))
        / (a * b.sqrt());
    let v5 = (w(1, 2) * w(2, 3) * w(3, 4) - w(1, 2) * w(3, 3) * w(2, 4)
        - w(1, 3) * w(2, 2) * w(3, 4)
        + w(1, 3) * w(3, 2) * w(2, 4)
        + w(2, 2) * w(3, 3) * w(1, 4)
        - w(3, 2) * w(2, 3) * w(1, 4))
        / (2.0 * a * b).sqrt();

    Ok(BooksteinCoords {
        v: [v1, v2, v3, v4, v5],
    })
}

/// Paired shape-change test on tetrads, performed in the flat Bookstein
/// chart where the Hessian of the squared distance is 2I exactly.
#[derive(Debug, Clone)]
pub struct ShapeChangeTest {
    pub test: PairedTestResult,
    /// Per-coordinate percentile intervals of the bootstrap mean difference,
    /// Bonferroni-adjusted across the five coordinates.
    pub intervals: [(f64, f64); 5],
    pub bonferroni_note: String,
}

pub fn paired_shape_change_test(
    before: &[Tetrad],
    after: &[Tetrad],
    plan: &ResamplePlan,
    level: f64,
) -> Result<ShapeChangeTest> {
    if before.len() != after.len() {
        return Err(Error::LengthMismatch(before.len(), after.len()));
    }
    let coords = |ts: &[Tetrad]| -> Result<Vec<DVector<f64>>> {
        ts.iter()
            .map(|t| Ok(bookstein_coords(t)?.to_vector()))
            .collect()
    };
    let x = ChartedSample::with_euclidean_mean("bookstein", coords(before)?)?;
    let y = ChartedSample::with_euclidean_mean("bookstein", coords(after)?)?;
    let lambda = 2.0 * DMatrix::identity(5, 5);
    let test = paired_test(&x, &y, &lambda, &lambda, plan)?;

    // percentile intervals of the replicate mean differences
    let n = x.n() as f64;
    let mut per_coord: [Vec<f64>; 5] = Default::default();
    for idx in plan.replicates() {
        let mut gamma = DVector::zeros(5);
        for &i in idx {
            gamma += &x.coords[i] - &y.coords[i];
        }
        gamma /= n;
        for r in 0..5 {
            per_coord[r].push(gamma[r]);
        }
    }
    let alpha_adj = (1.0 - level) / 5.0;
    let mut intervals = [(0.0, 0.0); 5];
    for r in 0..5 {
        per_coord[r].sort_by(|a, b| a.partial_cmp(b).unwrap());
        intervals[r] = (
            empirical_quantile(&per_coord[r], alpha_adj / 2.0),
            empirical_quantile(&per_coord[r], 1.0 - alpha_adj / 2.0),
        );
    }
    let bonferroni_note = format!(
        "per-coordinate level {:.5} (Bonferroni over 5 coordinates for simultaneous level {level})",
        1.0 - alpha_adj
    );
    Ok(ShapeChangeTest {
        test,
        intervals,
        bonferroni_note,
    })
}
