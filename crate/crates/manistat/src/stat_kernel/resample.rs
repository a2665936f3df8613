use crate::{Error, Result};

/// Deterministic counter-based stream keyed on (seed, replicate index), so a
/// replicate's draws are independent of execution order. SplitMix64 core.
#[derive(Debug, Clone)]
pub struct ReplicateRng {
    state: u64,
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

impl ReplicateRng {
    pub fn new(seed: u64, replicate: u64) -> Self {
        let state = mix64(seed ^ mix64(replicate.wrapping_add(0x9e3779b97f4a7c15)));
        Self { state }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        mix64(self.state)
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Unbiased uniform integer in [0, bound).
    pub fn next_bounded(&mut self, bound: usize) -> usize {
        assert!(bound > 0);
        let bound = bound as u64;
        let zone = u64::MAX - u64::MAX % bound;
        loop {
            let v = self.next_u64();
            if v < zone {
                return (v % bound) as usize;
            }
        }
    }
}

/// A fully materialized resampling plan: `b` replicates of `n` indices drawn
/// i.i.d. uniformly with replacement from [0, n).
#[derive(Debug, Clone)]
pub struct ResamplePlan {
    pub seed: u64,
    pub b: usize,
    pub n: usize,
    indices: Vec<Vec<usize>>,
}

impl ResamplePlan {
    pub fn replicate(&self, r: usize) -> &[usize] {
        &self.indices[r]
    }

    pub fn replicates(&self) -> impl Iterator<Item = &[usize]> {
        self.indices.iter().map(|v| v.as_slice())
    }
}

/// Builds a [`ResamplePlan`]. Replicate `r` depends only on `(seed, r)`.
pub fn resample_plan(seed: u64, b: usize, n: usize) -> Result<ResamplePlan> {
    if b < 1 || n < 1 {
        return Err(Error::InvalidArgument(
            "resample_plan requires B >= 1 and n >= 1".into(),
        ));
    }
    let indices = (0..b)
        .map(|r| {
            let mut rng = ReplicateRng::new(seed, r as u64);
            (0..n).map(|_| rng.next_bounded(n)).collect()
        })
        .collect();
    Ok(ResamplePlan { seed, b, n, indices })
}
