//! Orthogonal Procrustes alignment between two configurations.

use crate::{Error, Mat, PointSet, Result};

/// Optimal orthogonal factor and the residual it leaves.
#[derive(Clone, Debug)]
pub struct Alignment {
    /// ψ* ∈ O(d) minimizing ‖Y − Y*ψ‖_F.
    pub psi: Mat,
    /// Δ = Y − Y*ψ*.
    pub delta: Mat,
    /// The cross-Gram Y*ᵀY is rank deficient, so ψ* is not unique.
    pub degenerate: bool,
}

/// Solves `min_{ψ ∈ O(d)} ‖Y − Y*ψ‖_F` via the SVD `Y*ᵀY = ADBᵀ`, `ψ* = ABᵀ`.
pub fn procrustes(y: &PointSet, y_star: &PointSet) -> Result<Alignment> {
    procrustes_mat(y.matrix(), y_star.matrix())
}

pub(crate) fn procrustes_mat(y: &Mat, y_star: &Mat) -> Result<Alignment> {
    if y.shape() != y_star.shape() {
        return Err(Error::Shape(format!(
            "Procrustes needs equal shapes, got {:?} and {:?}",
            y.shape(),
            y_star.shape()
        )));
    }
    let cross = y_star.transpose() * y;
    let svd = cross.svd(true, true);
    let (u, v_t) = (svd.u.expect("requested U"), svd.v_t.expect("requested Vᵀ"));
    let psi = u * v_t;
    let smax = svd.singular_values.max();
    let degenerate = smax <= 0.0 || svd.singular_values.min() <= 1e-12 * smax;
    let delta = y - y_star * &psi;
    Ok(Alignment {
        psi,
        delta,
        degenerate,
    })
}

/// Rigid motion (orthogonal factor plus translation) mapping `source` rows
/// onto `target` rows in the least-squares sense. Reflections are allowed.
#[derive(Clone, Debug)]
pub struct RigidTransform {
    pub rotation: Mat,
    pub source_centroid: Vec<f64>,
    pub target_centroid: Vec<f64>,
}

impl RigidTransform {
    pub fn fit(source: &Mat, target: &Mat) -> Result<Self> {
        if source.shape() != target.shape() || source.nrows() == 0 {
            return Err(Error::Shape(
                "rigid fit needs equal, non-empty row sets".into(),
            ));
        }
        let sc = centroid(source);
        let tc = centroid(target);
        let s0 = subtract_row(source, &sc);
        let t0 = subtract_row(target, &tc);
        let a = procrustes_mat(&t0, &s0)?;
        Ok(Self {
            rotation: a.psi,
            source_centroid: sc,
            target_centroid: tc,
        })
    }

    pub fn apply(&self, y: &Mat) -> Mat {
        let mut out = subtract_row(y, &self.source_centroid) * &self.rotation;
        for mut row in out.row_iter_mut() {
            for (k, c) in self.target_centroid.iter().enumerate() {
                row[k] += c;
            }
        }
        out
    }
}

fn centroid(y: &Mat) -> Vec<f64> {
    let n = y.nrows() as f64;
    y.column_iter().map(|c| c.sum() / n).collect()
}

fn subtract_row(y: &Mat, c: &[f64]) -> Mat {
    Mat::from_fn(y.nrows(), y.ncols(), |i, j| y[(i, j)] - c[j])
}

pub(crate) fn select_rows(y: &Mat, rows: &[usize]) -> Mat {
    Mat::from_fn(rows.len(), y.ncols(), |i, j| y[(rows[i], j)])
}
