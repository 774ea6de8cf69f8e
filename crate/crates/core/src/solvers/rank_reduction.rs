use super::init::init_from_pairs;
use super::{rcg, SolveReport, SolverConfig};
use crate::manifold::Metric;
use crate::sstress::SstressProblem;
use crate::{Error, Mat, PointSet, Result};

/// `r = argmax_i (s_i − s_{i+1})/s_i` over `i ∈ [1, k−1]` (1-based, smallest
/// index on ties), clamped to `r ≥ d`. `s` must be sorted in decreasing order.
pub fn singular_gap_index(s: &[f64], d: usize) -> usize {
    let mut best = (0.0f64, 1usize);
    let mut found = false;
    for i in 0..s.len().saturating_sub(1) {
        if s[i] <= 0.0 {
            break;
        }
        let gap = (s[i] - s[i + 1]) / s[i];
        if !found || gap > best.0 {
            best = (gap, i + 1);
            found = true;
        }
    }
    best.1.max(d)
}

/// Rank reduction: start at rank `d + 2` (SVD-MDS unless `start` is given),
/// run g²-RCG for `n1` iterations, cut the factor at the largest relative
/// singular-value gap, repeat until rank `d`, then finish with g¹-RCG for
/// `n2` iterations.
pub fn rank_reduction(
    problem: &SstressProblem,
    d: usize,
    cfg: &SolverConfig,
    start: Option<&PointSet>,
) -> Result<SolveReport> {
    cfg.validate()?;
    let n = problem.n();
    let mut y = match start {
        Some(s) => {
            if s.n() != n || s.dim() < d {
                return Err(Error::Shape("start point does not match problem".into()));
            }
            s.matrix().clone()
        }
        None => {
            let k = (d + 2).min(n);
            let terms = problem.terms().iter().map(|t| (t.i, t.j, t.t));
            init_from_pairs(n, terms, d, k)?.points.into_matrix()
        }
    };
    let mut k = y.ncols();
    let mut rank_trace = vec![k];
    let mut trace: Vec<f64> = Vec::new();
    let mut iters = 0;
    let mut restarts = 0;
    let mut regularized = 0;

    let g2 = SolverConfig {
        metric: Metric::G2,
        imax: cfg.n1,
        ..*cfg
    };
    while k > d {
        let r = rcg(problem, &PointSet::new(y)?, &g2)?;
        absorb(&mut trace, &r.cost_trace);
        iters += r.iters;
        restarts += r.restarts;
        regularized += r.regularized_steps;
        let (u, s) = sorted_svd(&r.y);
        let next = singular_gap_index(&s, d).min(k - 1);
        y = Mat::from_fn(n, next, |i, c| u[(i, c)] * s[c]);
        k = next;
        rank_trace.push(k);
    }

    let g1 = SolverConfig {
        metric: Metric::G1,
        imax: cfg.n2,
        ..*cfg
    };
    let mut last = rcg(problem, &PointSet::new(y)?, &g1)?;
    absorb(&mut trace, &last.cost_trace);
    last.iters += iters;
    last.restarts += restarts;
    last.regularized_steps += regularized;
    last.cost_trace = trace;
    last.rank_trace = rank_trace;
    Ok(last)
}

fn absorb(trace: &mut Vec<f64>, stage: &[f64]) {
    // Each stage starts where the previous one ended; skip its first entry
    // unless the trace is still empty.
    let skip = usize::from(!trace.is_empty());
    trace.extend_from_slice(&stage[skip.min(stage.len())..]);
}

/// Thin SVD with singular values sorted in decreasing order.
pub(crate) fn sorted_svd(y: &Mat) -> (Mat, Vec<f64>) {
    let svd = y.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let s = order.iter().map(|&c| svd.singular_values[c]).collect();
    let us = Mat::from_fn(u.nrows(), order.len(), |i, c| u[(i, order[c])]);
    (us, s)
}
