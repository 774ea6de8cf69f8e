//! Linear maps between Gram matrices and EDMs, and classical MDS.

use nalgebra::SymmetricEigen;

use crate::types::center_columns;
use crate::{Edm, Error, GramMatrix, Mat, PointSet, Result};

/// Relative eigenvalue tolerance used by the MDS diagnostics.
const SPECTRAL_TOL: f64 = 1e-8;

fn require_square(m: &Mat, what: &str) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::Shape(format!(
            "{what} must be square, got {}×{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

/// `g(G) = diag(G)1ᵀ + 1diag(G)ᵀ − 2G`.
pub fn gram_to_edm(g: &GramMatrix) -> Result<Edm> {
    require_square(g.matrix(), "Gram matrix")?;
    Ok(Edm::new_unchecked(gram_to_edm_mat(g.matrix())))
}

pub(crate) fn gram_to_edm_mat(g: &Mat) -> Mat {
    let n = g.nrows();
    Mat::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            g[(i, i)] + g[(j, j)] - 2.0 * g[(i, j)]
        }
    })
}

/// `g` applied to an arbitrary square matrix (no symmetry assumed).
pub fn g_map(m: &Mat) -> Result<Mat> {
    require_square(m, "argument of g")?;
    let n = m.nrows();
    Ok(Mat::from_fn(n, n, |i, j| {
        m[(i, i)] + m[(j, j)] - 2.0 * m[(i, j)]
    }))
}

/// Adjoint of `g` under the trace inner product: `g*(D) = 2(diag(D1) − D)`.
pub fn g_adjoint(d: &Mat) -> Result<Mat> {
    require_square(d, "argument of g*")?;
    let mut out = d * -2.0;
    for i in 0..d.nrows() {
        out[(i, i)] += 2.0 * d.row(i).sum();
    }
    Ok(out)
}

/// Geometric centering matrix `J = I − 11ᵀ/n`.
pub fn centering(n: usize) -> Mat {
    let mut j = Mat::from_element(n, n, -1.0 / n as f64);
    for i in 0..n {
        j[(i, i)] += 1.0;
    }
    j
}

/// `Ĝ = −½ J D J`, computed by double centering.
pub fn edm_to_gram(d: &Edm) -> GramMatrix {
    GramMatrix(double_center(d.matrix()))
}

pub(crate) fn double_center(d: &Mat) -> Mat {
    let n = d.nrows();
    let nf = n as f64;
    let row_means: Vec<f64> = (0..n).map(|i| d.row(i).sum() / nf).collect();
    let col_means: Vec<f64> = (0..n).map(|j| d.column(j).sum() / nf).collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    Mat::from_fn(n, n, |i, j| {
        -0.5 * (d[(i, j)] - row_means[i] - col_means[j] + grand)
    })
}

/// Spectral summary of a classical-MDS embedding.
#[derive(Clone, Debug, PartialEq)]
pub struct MdsDiagnostics {
    /// The `d` leading eigenvalues of the centered Gram matrix.
    pub leading: Vec<f64>,
    /// Positive spectral mass discarded by truncation, relative to all positive mass.
    pub truncated_mass: f64,
    /// Magnitude of the most negative eigenvalue relative to the largest.
    pub negative_mass: f64,
    /// False when a leading eigenvalue is negative beyond tolerance.
    pub embeddable: bool,
    /// True when the discarded positive mass exceeds tolerance.
    pub truncated: bool,
}

#[derive(Clone, Debug)]
pub struct MdsResult {
    pub points: PointSet,
    pub diagnostics: MdsDiagnostics,
}

/// Eigenpairs of a symmetric matrix sorted by decreasing eigenvalue.
pub(crate) fn sorted_eigen(m: &Mat) -> (Vec<f64>, Mat) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = Mat::from_fn(m.nrows(), m.nrows(), |i, c| eig.eigenvectors[(i, order[c])]);
    (values, vectors)
}

/// Classical MDS: `Ŷ = U√Λ` from the `d` leading eigenpairs of `−½JDJ`.
/// Negative leading eigenvalues are clamped to zero and reported.
pub fn classical_mds(d: &Edm, dim: usize) -> Result<MdsResult> {
    let n = d.n();
    if dim == 0 || dim > n {
        return Err(Error::InvalidArgument(format!(
            "embedding dimension {dim} invalid for n = {n}"
        )));
    }
    let g = double_center(d.matrix());
    let (values, vectors) = sorted_eigen(&g);
    let lmax = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tol = SPECTRAL_TOL * lmax.max(f64::MIN_POSITIVE);
    let leading: Vec<f64> = values[..dim].to_vec();
    let embeddable = leading.iter().all(|&l| l >= -tol);
    let positive_total: f64 = values.iter().filter(|&&v| v > 0.0).sum();
    let tail: f64 = values[dim..].iter().filter(|&&v| v > 0.0).sum();
    let truncated_mass = if positive_total > 0.0 {
        tail / positive_total
    } else {
        0.0
    };
    let most_negative = values.last().copied().unwrap_or(0.0).min(0.0);
    let negative_mass = if lmax > 0.0 {
        -most_negative / lmax
    } else {
        0.0
    };

    let mut y = Mat::zeros(n, dim);
    for c in 0..dim {
        let s = leading[c].max(0.0).sqrt();
        for i in 0..n {
            y[(i, c)] = vectors[(i, c)] * s;
        }
    }
    let y = center_columns(&y);
    Ok(MdsResult {
        points: PointSet::new(y)?,
        diagnostics: MdsDiagnostics {
            leading,
            truncated_mass,
            negative_mass,
            embeddable,
            truncated: truncated_mass > SPECTRAL_TOL,
        },
    })
}

/// Trace inner product ⟨A, B⟩ = tr(AᵀB).
pub fn frob_inner(a: &Mat, b: &Mat) -> f64 {
    a.dot(b)
}
