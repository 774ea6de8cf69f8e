//! Recovery error metrics.

use serde::{Deserialize, Serialize};

use crate::edm::gram_to_edm_mat;
use crate::procrustes::{select_rows, RigidTransform};
use crate::{Edm, Error, PointSet, Result, Scene};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryMetrics {
    /// ‖g(ŶŶᵀ) − D*‖_F / ‖D*‖_F.
    pub re: f64,
    /// ‖Ŷ_s − Y*_s‖_F / n_s over sensor rows after anchor-based rigid alignment.
    pub msle: f64,
}

/// EDM recovery rate of an estimate against the true EDM.
pub fn relative_edm_error(y_hat: &PointSet, d_star: &Edm) -> Result<f64> {
    if y_hat.n() != d_star.n() {
        return Err(Error::Shape(
            "estimate and reference EDM sizes differ".into(),
        ));
    }
    let denom = d_star.matrix().norm();
    if denom == 0.0 {
        return Err(Error::ZeroReference);
    }
    let rec = gram_to_edm_mat(&y_hat.gram().0);
    Ok((rec - d_star.matrix()).norm() / denom)
}

/// RE and MSLE for an estimate of `scene`.
///
/// The rigid transform (rotation, reflection, translation) is fitted on the
/// anchor rows and applied to every row. Scenes with fewer than `d + 1`
/// anchors are aligned on all rows and averaged over all rows instead.
pub fn recovery_metrics(y_hat: &PointSet, scene: &Scene, d_star: &Edm) -> Result<RecoveryMetrics> {
    let y_true = scene.positions.matrix();
    if y_hat.matrix().shape() != y_true.shape() {
        return Err(Error::Shape(format!(
            "estimate is {:?} but scene is {:?}",
            y_hat.matrix().shape(),
            y_true.shape()
        )));
    }
    let re = relative_edm_error(y_hat, d_star)?;
    let (fit_rows, eval_rows) = if scene.anchor_indices.len() > scene.dim() {
        (scene.anchor_indices.clone(), scene.sensor_indices())
    } else {
        let all: Vec<usize> = (0..scene.n()).collect();
        (all.clone(), all)
    };
    let transform = RigidTransform::fit(
        &select_rows(y_hat.matrix(), &fit_rows),
        &select_rows(y_true, &fit_rows),
    )?;
    let aligned = transform.apply(y_hat.matrix());
    let err = select_rows(&aligned, &eval_rows) - select_rows(y_true, &eval_rows);
    let msle = err.norm() / eval_rows.len().max(1) as f64;
    Ok(RecoveryMetrics { re, msle })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Mat;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn corner_scene(seed: u64) -> Scene {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut y = Mat::from_fn(104, 2, |_, _| rng.gen_range(-0.5..0.5));
        let corners = [(-0.5, -0.5), (-0.5, 0.5), (0.5, 0.5), (0.5, -0.5)];
        for (k, (a, b)) in corners.iter().enumerate() {
            y[(k, 0)] = *a;
            y[(k, 1)] = *b;
        }
        Scene::new(PointSet::new(y).unwrap(), vec![0, 1, 2, 3], 1.0, seed).unwrap()
    }

    #[test]
    fn exact_estimate_has_zero_error() {
        let s = corner_scene(1);
        let m = recovery_metrics(&s.positions, &s, &s.edm()).unwrap();
        assert!(m.re < 1e-14 && m.msle < 1e-14);
    }

    #[test]
    fn rigid_motion_is_invisible() {
        let s = corner_scene(2);
        let t = 0.7f64;
        let q = Mat::from_row_slice(2, 2, &[t.cos(), -t.sin(), -t.sin(), -t.cos()]);
        let mut moved = s.positions.matrix() * q;
        for mut r in moved.row_iter_mut() {
            r[0] += 2.0;
            r[1] += -4.0;
        }
        let m = recovery_metrics(&PointSet::new(moved).unwrap(), &s, &s.edm()).unwrap();
        assert!(m.re < 1e-12, "{}", m.re);
        assert!(m.msle < 1e-12, "{}", m.msle);
    }

    #[test]
    fn single_sensor_perturbation() {
        let s = corner_scene(3);
        let eps = 1e-3;
        let mut y = s.positions.matrix().clone();
        y[(50, 0)] += eps;
        let m = recovery_metrics(&PointSet::new(y).unwrap(), &s, &s.edm()).unwrap();
        let expected = eps / 100.0;
        assert!(
            m.msle >= 0.9 * expected && m.msle <= 1.1 * expected,
            "{}",
            m.msle
        );
    }

    #[test]
    fn zero_reference_is_an_error() {
        let y = PointSet::new(Mat::zeros(3, 1)).unwrap();
        let d = Edm::new(Mat::zeros(3, 3)).unwrap();
        assert!(matches!(
            relative_edm_error(&y, &d),
            Err(Error::ZeroReference)
        ));
    }
}
