//! Reproducible synthetic sparse classification problems.
//!
//! Feature frequencies are heavy tailed, as in bag-of-words data: a few
//! columns are dense and most are rare. Draw order from a single
//! `ChaCha8Rng` seeded with `seed_from_u64(seed)`:
//!
//! 1. `m` shared factors `u_i ~ N(0, 1)`.
//! 2. A random permutation assigns each feature a rank; feature `j` gets
//!    nonzero rate `min(1, s/(rank_j + 1))`, with `s` set so the mean rate is
//!    `density`.
//! 3. For each feature `j` (outer) and sample `i` (inner): a uniform draw
//!    below the rate makes `x_ij = √ρ·u_i + √(1-ρ)·e_ij` with a fresh
//!    `e_ij ~ N(0, 1)`, so co-occurring nonzeros have correlation `ρ`.
//! 4. The `min(5, p)` lowest-rank features are informative, each with a
//!    weight `±1` of random sign.
//! 5. Scores `s_i = Σ w_j x_ij + σ·n_i` with `n_i ~ N(0, 1)` and `σ` the
//!    signal standard deviation `√(Σ rate_j)` over informative features.
//! 6. The `⌊m/2⌋` highest scores are labelled `+1` (ties broken by lower
//!    sample index), the rest `-1`, so `|m⁺ - m⁻| ≤ 1`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{CscMatrix, Dataset};
use crate::error::{Error, Result};

/// Parameters of [`synthesize`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub m: usize,
    pub p: usize,
    pub density: f64,
    pub correlation: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn generate(&self) -> Result<Dataset> {
        synthesize(self.m, self.p, self.density, self.correlation, self.seed)
    }
}

/// Zipf exponent of the per-feature nonzero rates.
const ZIPF: f64 = 1.0;
/// Number of features that drive the labels.
const INFORMATIVE: usize = 5;
/// Label noise relative to the signal standard deviation.
const NOISE: f64 = 1.0;

/// Rates `min(1, s / (rank + 1)^ZIPF)` with `s` chosen by bisection so the
/// mean rate equals `density`.
fn feature_rates(rank: &[usize], density: f64) -> Vec<f64> {
    let p = rank.len() as f64;
    let weights: Vec<f64> = rank.iter().map(|&r| (r as f64 + 1.0).powf(-ZIPF)).collect();
    let mean = |s: f64| weights.iter().map(|w| (s * w).min(1.0)).sum::<f64>() / p;
    let (mut lo, mut hi) = (0.0, 1.0);
    while mean(hi) < density {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean(mid) < density {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    weights.iter().map(|w| (hi * w).min(1.0)).collect()
}

pub fn synthesize(
    m: usize,
    p: usize,
    density: f64,
    correlation: f64,
    seed: u64,
) -> Result<Dataset> {
    if m < 4 {
        return Err(Error::InvalidParameter(format!(
            "m = {m}, need at least 4 samples"
        )));
    }
    if p < 1 {
        return Err(Error::InvalidParameter("p must be at least 1".into()));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "density {density} not in (0, 1]"
        )));
    }
    if !(0.0..1.0).contains(&correlation) {
        return Err(Error::InvalidParameter(format!(
            "correlation {correlation} not in [0, 1)"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shared: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
    let (a, c) = (correlation.sqrt(), (1.0 - correlation).sqrt());

    let mut rank: Vec<usize> = (0..p).collect();
    rank.shuffle(&mut rng);
    let rates = feature_rates(&rank, density);

    let mut triplets = Vec::with_capacity((m as f64 * p as f64 * density * 1.1) as usize);
    for (j, &rate) in rates.iter().enumerate() {
        for (i, &u) in shared.iter().enumerate() {
            if rng.random::<f64>() < rate {
                let e: f64 = rng.sample(StandardNormal);
                triplets.push((i, j, a * u + c * e));
            }
        }
    }
    let raw = CscMatrix::from_triplets(m, p, &triplets);

    let k = INFORMATIVE.min(p);
    let mut informative = vec![0; k];
    for (j, &r) in rank.iter().enumerate() {
        if r < k {
            informative[r] = j;
        }
    }
    let mut scores = vec![0.0; m];
    let mut signal = 0.0;
    for &j in &informative {
        let w = if rng.random::<bool>() { 1.0 } else { -1.0 };
        raw.col(j).axpy(w, &mut scores);
        signal += rates[j];
    }
    let sigma = NOISE * signal.sqrt();
    for s in scores.iter_mut() {
        let n: f64 = rng.sample(StandardNormal);
        *s += sigma * n;
    }

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&x, &y| scores[y].total_cmp(&scores[x]).then(x.cmp(&y)));
    let mut labels = vec![-1.0; m];
    for &i in &order[..m / 2] {
        labels[i] = 1.0;
    }
    Dataset::new(labels, raw)
}
