//! Domain types shared by every module.

use serde::{Deserialize, Serialize};

use crate::{Error, Mat, Result};

/// Relative threshold on σ_min/σ_max below which a factor counts as rank deficient.
pub const RANK_TOL: f64 = 1e-12;

/// An n×d configuration. Rows are node positions.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet(Mat);

impl PointSet {
    /// Wraps a matrix; requires at least one column and `n ≥ d`.
    pub fn new(data: Mat) -> Result<Self> {
        if data.ncols() == 0 {
            return Err(Error::Shape("point set needs d ≥ 1".into()));
        }
        if data.nrows() < data.ncols() {
            return Err(Error::Shape(format!(
                "point set needs n ≥ d, got {}×{}",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(Self(data))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Shape("ragged position rows".into()));
        }
        Self::new(Mat::from_fn(n, d, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &Mat {
        &self.0
    }

    pub fn into_matrix(self) -> Mat {
        self.0
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n())
            .map(|i| self.0.row(i).iter().copied().collect())
            .collect()
    }

    /// Copy with every column shifted to zero mean.
    pub fn centered(&self) -> Self {
        Self(center_columns(&self.0))
    }

    pub fn is_centered(&self) -> bool {
        let tol = 1e-10 * self.n() as f64;
        self.0
            .column_iter()
            .all(|c| c.sum().abs() <= tol * (1.0 + c.amax()))
    }

    /// Full column rank test: σ_min > `RANK_TOL`·σ_max.
    pub fn is_full_rank(&self) -> bool {
        rank_ratio(&self.0) > RANK_TOL
    }

    pub fn gram(&self) -> GramMatrix {
        GramMatrix(&self.0 * self.0.transpose())
    }
}

/// σ_min/σ_max of a tall matrix (0 for the zero matrix).
pub fn rank_ratio(y: &Mat) -> f64 {
    let sv = y.clone().singular_values();
    let max = sv.max();
    if max <= 0.0 {
        return 0.0;
    }
    sv.min() / max
}

pub(crate) fn center_columns(y: &Mat) -> Mat {
    let mut out = y.clone();
    let n = y.nrows() as f64;
    for mut col in out.column_iter_mut() {
        let mean = col.sum() / n;
        col.add_scalar_mut(-mean);
    }
    out
}

/// Hollow symmetric matrix of squared distances.
#[derive(Clone, Debug, PartialEq)]
pub struct Edm(Mat);

impl Edm {
    /// Validates squareness, symmetry (1e-12 relative), a zero diagonal and
    /// nonnegative entries.
    pub fn new(data: Mat) -> Result<Self> {
        if !data.is_square() {
            return Err(Error::Shape(format!(
                "EDM must be square, got {}×{}",
                data.nrows(),
                data.ncols()
            )));
        }
        let scale = 1.0 + data.amax();
        let n = data.nrows();
        for i in 0..n {
            if data[(i, i)].abs() > 1e-12 * scale {
                return Err(Error::InvalidArgument(format!(
                    "EDM diagonal entry {i} is nonzero"
                )));
            }
            for j in (i + 1)..n {
                if (data[(i, j)] - data[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidArgument(format!(
                        "EDM not symmetric at ({i},{j})"
                    )));
                }
                if data[(i, j)] < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "negative squared distance at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self(data))
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn new_unchecked(data: Mat) -> Self {
        Self(data)
    }

    pub fn from_points(y: &PointSet) -> Self {
        Self(crate::edm::gram_to_edm_mat(&y.gram().0))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Mat {
        &self.0
    }

    pub fn into_matrix(self) -> Mat {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }
}

/// Symmetric n×n Gram matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix(pub Mat);

impl GramMatrix {
    pub fn matrix(&self) -> &Mat {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplingScheme {
    UnitBall { radius: f64 },
    Bernoulli { p: f64 },
    BernoulliEntries { p: f64 },
    Explicit,
}

/// Observed index set Ω. Stores each unordered pair once as `(i, j)` with
/// `i < j`; operators mirror it onto both triangles.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleMask {
    n: usize,
    pairs: Vec<(usize, usize)>,
    pub scheme: SamplingScheme,
    pub anchor_clique: bool,
}

impl SampleMask {
    /// Normalizes orientation, sorts and deduplicates. Rejects diagonal or
    /// out-of-range pairs.
    pub fn new(
        n: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
        scheme: SamplingScheme,
        anchor_clique: bool,
    ) -> Result<Self> {
        let mut out = Vec::new();
        for (i, j) in pairs {
            if i == j {
                return Err(Error::InvalidArgument(format!(
                    "diagonal pair ({i},{i}) in mask"
                )));
            }
            if i >= n || j >= n {
                return Err(Error::InvalidArgument(format!(
                    "pair ({i},{j}) out of range for n = {n}"
                )));
            }
            out.push((i.min(j), i.max(j)));
        }
        out.sort_unstable();
        out.dedup();
        Ok(Self {
            n,
            pairs: out,
            scheme,
            anchor_clique,
        })
    }

    pub fn complete(n: usize) -> Self {
        let pairs = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        Self {
            n,
            pairs,
            scheme: SamplingScheme::Explicit,
            anchor_clique: false,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.pairs.binary_search(&(i.min(j), i.max(j))).is_ok()
    }

    /// Fraction of the n² entries observed, counting both triangles.
    pub fn symmetric_density(&self) -> f64 {
        2.0 * self.pairs.len() as f64 / (self.n * self.n) as f64
    }

    /// 0/1 indicator of Ω over the full matrix.
    pub fn indicator(&self) -> Mat {
        let mut m = Mat::zeros(self.n, self.n);
        for &(i, j) in &self.pairs {
            m[(i, j)] = 1.0;
            m[(j, i)] = 1.0;
        }
        m
    }
}

/// Entrywise weights W. Cost functions consult only entries on Ω.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix(Mat);

impl WeightMatrix {
    pub fn new(data: Mat) -> Result<Self> {
        if !data.is_square() {
            return Err(Error::Shape("weight matrix must be square".into()));
        }
        if data.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::InvalidArgument("weights must lie in [0, 1]".into()));
        }
        let n = data.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                if (data[(i, j)] - data[(j, i)]).abs() > 1e-12 {
                    return Err(Error::InvalidArgument("weight matrix not symmetric".into()));
                }
            }
        }
        Ok(Self(data))
    }

    pub fn ones(n: usize) -> Self {
        Self(Mat::from_element(n, n, 1.0))
    }

    pub fn matrix(&self) -> &Mat {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }
}

/// Ground-truth layout: all node positions plus the anchor rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub positions: PointSet,
    pub anchor_indices: Vec<usize>,
    pub side: f64,
    pub seed: u64,
}

impl Scene {
    pub fn new(
        positions: PointSet,
        anchor_indices: Vec<usize>,
        side: f64,
        seed: u64,
    ) -> Result<Self> {
        let n = positions.n();
        let mut sorted = anchor_indices.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != anchor_indices.len() {
            return Err(Error::InvalidArgument("duplicate anchor index".into()));
        }
        if anchor_indices.iter().any(|&a| a >= n) {
            return Err(Error::InvalidArgument("anchor index out of range".into()));
        }
        Ok(Self {
            positions,
            anchor_indices,
            side,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.positions.n()
    }

    pub fn dim(&self) -> usize {
        self.positions.dim()
    }

    pub fn edm(&self) -> Edm {
        Edm::from_points(&self.positions)
    }

    /// Indices of the non-anchor (sensor) rows.
    pub fn sensor_indices(&self) -> Vec<usize> {
        (0..self.n())
            .filter(|i| !self.anchor_indices.contains(i))
            .collect()
    }
}
