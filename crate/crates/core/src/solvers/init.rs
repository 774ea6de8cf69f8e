use crate::edm::{double_center, sorted_eigen};
use crate::types::center_columns;
use crate::{Edm, Error, Mat, PointSet, Result, SampleMask};

#[derive(Clone, Debug)]
pub struct InitResult {
    pub points: PointSet,
    /// Fewer than `k` positive eigenvalues were available; trailing columns are zero.
    pub padded: bool,
}

/// Spectral start `Y₀ = JQΛ^{1/2}` from `D̂ = T_{d+2}((1/p)P_Ω(D_e))`, with `k`
/// columns. `p` counts both triangles of Ω plus the diagonal, which is
/// known to be zero.
pub fn svd_mds_init(de: &Edm, mask: &SampleMask, d: usize, k: usize) -> Result<InitResult> {
    let n = de.n();
    if mask.n() != n {
        return Err(Error::Shape("mask and EDM disagree on n".into()));
    }
    let targets = mask.pairs().iter().map(|&(i, j)| (i, j, de.get(i, j)));
    init_from_pairs(n, targets, d, k)
}

pub(crate) fn init_from_pairs(
    n: usize,
    pairs: impl Iterator<Item = (usize, usize, f64)>,
    d: usize,
    k: usize,
) -> Result<InitResult> {
    if d == 0 || k < d || k > n {
        return Err(Error::InvalidArgument(format!(
            "invalid ranks d = {d}, k = {k} for n = {n}"
        )));
    }
    let mut m = Mat::zeros(n, n);
    let mut count = n;
    for (i, j, v) in pairs {
        m[(i, j)] = v;
        m[(j, i)] = v;
        count += 2;
    }
    if count == n {
        return Err(Error::InvalidArgument("empty sample mask".into()));
    }
    let p = count as f64 / (n * n) as f64;
    m /= p;

    let (vals, vecs) = sorted_eigen(&m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[b].abs().total_cmp(&vals[a].abs()));
    let keep = (d + 2).min(n);
    let mut dhat = Mat::zeros(n, n);
    for &c in &order[..keep] {
        let v = vecs.column(c);
        dhat += v * v.transpose() * vals[c];
    }

    let g = double_center(&dhat);
    let (gvals, gvecs) = sorted_eigen(&g);
    let tol = 1e-12 * gvals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut y = Mat::zeros(n, k);
    let mut padded = false;
    for c in 0..k {
        if gvals[c] <= tol {
            padded = true;
            continue;
        }
        let s = gvals[c].sqrt();
        for i in 0..n {
            y[(i, c)] = gvecs[(i, c)] * s;
        }
    }
    Ok(InitResult {
        points: PointSet::new(center_columns(&y))?,
        padded,
    })
}
