//! Sampling schemes for Ω and the measurement corruption models.
//!
//! All randomness flows from an explicit `seed`; identical seeds reproduce
//! identical masks, noise and outliers.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::{Edm, Error, Result, SampleMask, SamplingScheme, WeightMatrix};

pub(crate) fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `η = 10 / ln 10`, the dB-to-neper scale of the path-loss model.
pub fn path_loss_eta() -> f64 {
    10.0 / std::f64::consts::LN_10
}

/// Unit-ball rule: `(i, j) ∈ Ω ⇔ d_ij < r`, plus the clique over `anchors`
/// when `anchor_clique` is set.
pub fn sample_unit_ball(
    d: &Edm,
    radius: f64,
    anchors: &[usize],
    anchor_clique: bool,
) -> Result<SampleMask> {
    if !(radius >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "radius must be ≥ 0, got {radius}"
        )));
    }
    let n = d.n();
    let r2 = radius * radius;
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if d.get(i, j) < r2 {
                pairs.push((i, j));
            }
        }
    }
    if anchor_clique {
        for (k, &a) in anchors.iter().enumerate() {
            for &b in &anchors[k + 1..] {
                pairs.push((a, b));
            }
        }
    }
    SampleMask::new(n, pairs, SamplingScheme::UnitBall { radius }, anchor_clique)
}

/// Bernoulli rule: every pair `i < j` enters Ω independently with probability `p`.
pub fn sample_bernoulli(n: usize, p: f64, seed: u64) -> Result<SampleMask> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "probability must lie in [0, 1], got {p}"
        )));
    }
    let mut rng = rng_from(seed);
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < p {
                pairs.push((i, j));
            }
        }
    }
    SampleMask::new(n, pairs, SamplingScheme::Bernoulli { p }, false)
}

/// Bernoulli rule on the ordered index set `[n]²`: entries `(i, j)` and
/// `(j, i)` are drawn independently with probability `p`, and a pair is
/// observed when either is. Pairs enter with probability `1 − (1 − p)²`.
pub fn sample_bernoulli_entries(n: usize, p: f64, seed: u64) -> Result<SampleMask> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "probability must lie in [0, 1], got {p}"
        )));
    }
    let mut rng = rng_from(seed);
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b): (f64, f64) = (rng.gen(), rng.gen());
            if a < p || b < p {
                pairs.push((i, j));
            }
        }
    }
    SampleMask::new(n, pairs, SamplingScheme::BernoulliEntries { p }, false)
}

/// Log-normal path-loss noise on distances:
/// `dᵉ = d·exp(−X/(ηγ) − σ²/(2η²γ²))`, `X ~ N(0, σ²)`.
/// Each upper-triangle entry is perturbed once, mirrored, and stored squared.
pub fn apply_rssi_noise(d: &Edm, sigma: f64, gamma: f64, seed: u64) -> Result<Edm> {
    if !(sigma >= 0.0) || !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need sigma ≥ 0 and gamma > 0, got sigma = {sigma}, gamma = {gamma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(d.clone());
    }
    let eta = path_loss_eta();
    let scale = eta * gamma;
    let bias = sigma * sigma / (2.0 * scale * scale);
    let normal = Normal::new(0.0, sigma).expect("sigma is finite and positive");
    let mut rng = rng_from(seed);
    let mut out = d.matrix().clone();
    let n = d.n();
    for i in 0..n {
        for j in (i + 1)..n {
            let x: f64 = normal.sample(&mut rng);
            let dist = d.get(i, j).sqrt() * (-x / scale - bias).exp();
            out[(i, j)] = dist * dist;
            out[(j, i)] = dist * dist;
        }
    }
    Ok(Edm::new_unchecked(out))
}

/// Adds `⌊p_out·|Ω|⌋` outliers drawn from `U[1, 1 + v_out]` to distinct
/// observed squared distances (both triangles). The diagonal is untouched.
pub fn inject_outliers(
    de: &Edm,
    mask: &SampleMask,
    p_out: f64,
    v_out: f64,
    seed: u64,
) -> Result<Edm> {
    if !(0.0..=1.0).contains(&p_out) {
        return Err(Error::InvalidArgument(format!(
            "outlier ratio must lie in [0, 1], got {p_out}"
        )));
    }
    if !(v_out > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "outlier magnitude must be > 0, got {v_out}"
        )));
    }
    let count = (p_out * mask.len() as f64).floor() as usize;
    let mut out = de.matrix().clone();
    if count == 0 {
        return Ok(de.clone());
    }
    let mut rng = rng_from(seed);
    let chosen = index::sample(&mut rng, mask.len(), count);
    for k in chosen.iter() {
        let (i, j) = mask.pairs()[k];
        let s = 1.0 + v_out * rng.gen::<f64>();
        out[(i, j)] += s;
        out[(j, i)] += s;
    }
    Ok(Edm::new_unchecked(out))
}

/// `w_ij = exp(−|dᵉ_ij − d_ij|^{1/4})` on distances (square roots of the
/// stored squared entries).
pub fn build_weights(de: &Edm, truth: &Edm) -> Result<WeightMatrix> {
    if de.n() != truth.n() {
        return Err(Error::Shape("measured and true EDMs differ in size".into()));
    }
    let n = de.n();
    let w = crate::Mat::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            let gap = (de.get(i, j).sqrt() - truth.get(i, j).sqrt()).abs();
            (-gap.powf(0.25)).exp()
        }
    });
    WeightMatrix::new(w)
}
