//! Randomized generic rigidity and global rigidity tests.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Mat, PointSet, Result, SampleMask};

/// Relative singular-value threshold of the rank tests.
pub const RANK_THRESHOLD: f64 = 1e-8;
/// Seed of the generic perturbation and the random stress.
pub const PROBE_SEED: u64 = 0x0019_1d17;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidityReport {
    pub rigidity_rank: usize,
    pub required_rank: usize,
    pub generically_rigid: bool,
    /// Nullity of the sampled stress matrix; `d + 1` for global rigidity.
    pub stress_nullity: usize,
    pub generically_globally_rigid: bool,
}

fn numerical_rank(s: impl Iterator<Item = f64>) -> (usize, Vec<f64>) {
    let v: Vec<f64> = s.collect();
    let smax = v.iter().fold(0.0f64, |a, &b| a.max(b));
    let rank = v.iter().filter(|&&x| x > RANK_THRESHOLD * smax).count();
    (rank, v)
}

/// Tests the graph of `mask` at a generic perturbation of `y`.
///
/// Generic rigidity: the rigidity matrix has rank `nd − d(d+1)/2`.
/// Global rigidity: a random equilibrium stress (sampled from the left null
/// space of the rigidity matrix) has a stress matrix of nullity `d + 1`.
pub fn rigidity_probe(mask: &SampleMask, y: &PointSet) -> Result<RigidityReport> {
    let (n, d) = (y.n(), y.dim());
    if mask.n() != n {
        return Err(Error::Shape("mask and configuration disagree on n".into()));
    }
    let required = (n * d).saturating_sub(d * (d + 1) / 2);
    let mut report = RigidityReport {
        rigidity_rank: 0,
        required_rank: required,
        generically_rigid: false,
        stress_nullity: n,
        generically_globally_rigid: false,
    };
    let m = mask.len();
    if m < required || n <= d {
        return Ok(report);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    let scale = 1e-6 * y.matrix().amax().max(1.0);
    let p = Mat::from_fn(n, d, |i, k| {
        let z: f64 = StandardNormal.sample(&mut rng);
        y.matrix()[(i, k)] + scale * z
    });

    let mut r = Mat::zeros(m, n * d);
    for (e, &(i, j)) in mask.pairs().iter().enumerate() {
        for k in 0..d {
            let diff = p[(i, k)] - p[(j, k)];
            r[(e, i * d + k)] = diff;
            r[(e, j * d + k)] = -diff;
        }
    }
    let (rank, _) = numerical_rank(r.clone().singular_values().iter().copied());
    report.rigidity_rank = rank;
    report.generically_rigid = rank == required;
    if !report.generically_rigid {
        return Ok(report);
    }

    // Random vector projected onto the left null space of R.
    let v = nalgebra::DVector::from_fn(m, |_, _| StandardNormal.sample(&mut rng));
    let rt = r.transpose();
    let rtr = &rt * &r;
    let tol = RANK_THRESHOLD * rtr.amax();
    let pinv = rtr
        .pseudo_inverse(tol)
        .map_err(|e| Error::Solver(e.to_string()))?;
    let omega = &v - &r * (pinv * (&rt * &v));

    let mut stress = Mat::zeros(n, n);
    for (e, &(i, j)) in mask.pairs().iter().enumerate() {
        let w = omega[e];
        stress[(i, j)] -= w;
        stress[(j, i)] -= w;
        stress[(i, i)] += w;
        stress[(j, j)] += w;
    }
    let eig = stress.symmetric_eigenvalues();
    let (rank, _) = numerical_rank(eig.iter().map(|x| x.abs()));
    report.stress_nullity = n - rank;
    report.generically_globally_rigid = report.stress_nullity == d + 1;
    Ok(report)
}
