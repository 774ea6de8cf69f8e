//! Geometry of the quotient `ℝ*^{n×d}/O(d)`: metrics, vertical/horizontal
//! projections, Riemannian gradients, retraction and vector transport.

use nalgebra::linalg::LU;
use serde::{Deserialize, Serialize};

use crate::{Error, Mat, PointSet, Result};

/// σ_min/σ_max below which `YᵀY` is regularized.
pub const REGULARIZE_RATIO: f64 = 1e-10;

/// Riemannian metric on the total space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// `g¹_Y(Z₁, Z₂) = tr(Z₁ᵀZ₂)`.
    G1,
    /// `g²_Y(Z₁, Z₂) = tr((YᵀY)Z₁ᵀZ₂)`.
    G2,
}

/// Per-point cache of `A = YᵀY` and its inverse.
#[derive(Clone, Debug)]
pub struct Geometry {
    pub metric: Metric,
    gram: Mat,
    gram_inv: Option<Mat>,
    /// `YᵀY` was shifted by `εI` because `Y` is close to rank deficient.
    pub regularized: bool,
}

impl Geometry {
    /// Builds the cache at `y`. Under `G2` (and for the `G1` Sylvester solve)
    /// a near-singular `YᵀY` is replaced by `YᵀY + εI`, `ε = 1e-12·tr(YᵀY)/d`.
    pub fn at(y: &Mat, metric: Metric) -> Result<Self> {
        let d = y.ncols();
        let svd = y.clone().svd(false, metric == Metric::G2);
        let sv = &svd.singular_values;
        let (smin, smax) = (sv.min(), sv.max());
        if !(smax > 0.0) || !smax.is_finite() {
            return Err(Error::Singular);
        }
        let mut gram = y.transpose() * y;
        let mut shift = 0.0;
        if smin / smax < REGULARIZE_RATIO {
            shift = 1e-12 * gram.trace() / d as f64;
            for k in 0..d {
                gram[(k, k)] += shift;
            }
        }
        // The inverse comes from the SVD of Y; inverting YᵀY directly loses
        // all accuracy once cond(Y) passes ~1e8.
        let gram_inv = match metric {
            Metric::G1 => None,
            Metric::G2 => {
                let v_t = svd.v_t.as_ref().expect("right singular vectors");
                let inv = Mat::from_diagonal(&sv.map(|s| 1.0 / (s * s + shift)));
                Some(v_t.transpose() * inv * v_t)
            }
        };
        Ok(Self {
            metric,
            gram,
            gram_inv,
            regularized: shift > 0.0,
        })
    }

    pub fn gram(&self) -> &Mat {
        &self.gram
    }

    pub fn inner(&self, z1: &Mat, z2: &Mat) -> f64 {
        match self.metric {
            Metric::G1 => z1.dot(z2),
            Metric::G2 => (&self.gram * (z1.transpose() * z2)).trace(),
        }
    }

    pub fn norm(&self, z: &Mat) -> f64 {
        self.inner(z, z).max(0.0).sqrt()
    }

    /// Skew `Ω` with `P_V(Z) = YΩ`.
    pub fn vertical_generator(&self, y: &Mat, z: &Mat) -> Mat {
        match self.metric {
            Metric::G1 => {
                let ytz = y.transpose() * z;
                sylvester_skew(&self.gram, &(&ytz - ytz.transpose()))
            }
            Metric::G2 => {
                let m = self.gram_inv.as_ref().expect("G2 cache") * (y.transpose() * z);
                (&m - m.transpose()) * 0.5
            }
        }
    }

    pub fn project_vertical(&self, y: &Mat, z: &Mat) -> Mat {
        y * self.vertical_generator(y, z)
    }

    pub fn project_horizontal(&self, y: &Mat, z: &Mat) -> Mat {
        z - self.project_vertical(y, z)
    }

    /// Riemannian gradient from the Euclidean one.
    pub fn gradient(&self, egrad: &Mat) -> Mat {
        match self.metric {
            Metric::G1 => egrad.clone(),
            Metric::G2 => egrad * self.gram_inv.as_ref().expect("G2 cache"),
        }
    }
}

/// Solves `ΩA + AΩ = B` for skew `Ω` given SPD `A` and skew `B` by
/// vectorizing over the basis `e_k e_lᵀ − e_l e_kᵀ`, `k < l`.
pub(crate) fn sylvester_skew(a: &Mat, b: &Mat) -> Mat {
    let d = a.nrows();
    let basis: Vec<(usize, usize)> = (0..d)
        .flat_map(|k| ((k + 1)..d).map(move |l| (k, l)))
        .collect();
    let m = basis.len();
    if m == 0 {
        return Mat::zeros(d, d);
    }
    let mut sys = Mat::zeros(m, m);
    let mut rhs = nalgebra::DVector::zeros(m);
    for (col, &(k, l)) in basis.iter().enumerate() {
        let mut e = Mat::zeros(d, d);
        e[(k, l)] = 1.0;
        e[(l, k)] = -1.0;
        let img = &e * a + a * &e;
        for (row, &(p, q)) in basis.iter().enumerate() {
            sys[(row, col)] = img[(p, q)];
        }
    }
    for (row, &(p, q)) in basis.iter().enumerate() {
        rhs[row] = b[(p, q)];
    }
    let coef = LU::new(sys)
        .solve(&rhs)
        .unwrap_or_else(|| nalgebra::DVector::zeros(m));
    let mut omega = Mat::zeros(d, d);
    for (idx, &(k, l)) in basis.iter().enumerate() {
        omega[(k, l)] = coef[idx];
        omega[(l, k)] = -coef[idx];
    }
    omega
}

/// A tangent representative in the horizontal space at `base`.
#[derive(Clone, Debug)]
pub struct HorizontalVector {
    pub base: PointSet,
    pub dir: Mat,
    pub metric: Metric,
}

impl HorizontalVector {
    /// Relative violation of the horizontal-space condition.
    pub fn horizontality_defect(&self) -> Result<f64> {
        let y = self.base.matrix();
        let ytz = y.transpose() * &self.dir;
        let m = match self.metric {
            Metric::G1 => ytz,
            Metric::G2 => Geometry::at(y, Metric::G2)?.gram_inv.expect("G2 cache") * ytz,
        };
        let scale = (y.norm() * self.dir.norm()).max(f64::MIN_POSITIVE);
        Ok((&m - m.transpose()).norm() / scale)
    }
}

fn check_shapes(y: &PointSet, z: &Mat) -> Result<()> {
    if y.matrix().shape() != z.shape() {
        return Err(Error::Shape(format!(
            "tangent {:?} does not match point {:?}",
            z.shape(),
            y.matrix().shape()
        )));
    }
    Ok(())
}

fn geometry_checked(y: &PointSet, metric: Metric) -> Result<Geometry> {
    if !y.is_full_rank() {
        return Err(Error::Singular);
    }
    Geometry::at(y.matrix(), metric)
}

pub fn inner(y: &PointSet, z1: &Mat, z2: &Mat, metric: Metric) -> Result<f64> {
    check_shapes(y, z1)?;
    check_shapes(y, z2)?;
    match metric {
        Metric::G1 => Ok(z1.dot(z2)),
        Metric::G2 => Ok(geometry_checked(y, metric)?.inner(z1, z2)),
    }
}

/// Skew `Ω` solving `Ω YᵀY + YᵀY Ω = YᵀZ − ZᵀY`.
pub fn solve_sylvester_skew(y: &PointSet, z: &Mat) -> Result<Mat> {
    check_shapes(y, z)?;
    let g = geometry_checked(y, Metric::G1)?;
    Ok(g.vertical_generator(y.matrix(), z))
}

pub fn project_vertical(y: &PointSet, z: &Mat, metric: Metric) -> Result<Mat> {
    check_shapes(y, z)?;
    Ok(geometry_checked(y, metric)?.project_vertical(y.matrix(), z))
}

pub fn project_horizontal(y: &PointSet, z: &Mat, metric: Metric) -> Result<HorizontalVector> {
    check_shapes(y, z)?;
    let dir = geometry_checked(y, metric)?.project_horizontal(y.matrix(), z);
    Ok(HorizontalVector {
        base: y.clone(),
        dir,
        metric,
    })
}

pub fn riemannian_gradient(y: &PointSet, egrad: &Mat, metric: Metric) -> Result<HorizontalVector> {
    check_shapes(y, egrad)?;
    let dir = geometry_checked(y, metric)?.gradient(egrad);
    Ok(HorizontalVector {
        base: y.clone(),
        dir,
        metric,
    })
}

/// Result of `R̄_Y(tη) = Y + tη`.
#[derive(Clone, Debug)]
pub struct Retraction {
    pub point: PointSet,
    /// The new point lost full column rank.
    pub rank_deficient: bool,
}

pub fn retract(y: &PointSet, eta: &HorizontalVector, t: f64) -> Result<Retraction> {
    check_shapes(y, &eta.dir)?;
    let point = PointSet::new(y.matrix() + &eta.dir * t)?;
    let rank_deficient = !point.is_full_rank();
    Ok(Retraction {
        point,
        rank_deficient,
    })
}

/// Transport by horizontal projection at the target point.
pub fn transport(
    y_to: &PointSet,
    xi: &HorizontalVector,
    metric: Metric,
) -> Result<HorizontalVector> {
    if xi.metric != metric {
        return Err(Error::MetricMismatch {
            expected: metric,
            found: xi.metric,
        });
    }
    project_horizontal(y_to, &xi.dir, metric)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_mat(r: usize, c: usize, rng: &mut impl Rng) -> Mat {
        Mat::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn rand_skew(d: usize, rng: &mut impl Rng) -> Mat {
        let a = rand_mat(d, d, rng);
        &a - a.transpose()
    }

    fn point(r: usize, c: usize, rng: &mut impl Rng) -> PointSet {
        PointSet::new(rand_mat(r, c, rng)).unwrap()
    }

    #[test]
    fn inner_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = point(10, 3, &mut rng);
        let z = Mat::zeros(10, 3);
        assert_eq!(inner(&y, &z, &z, Metric::G2).unwrap(), 0.0);

        let q = rand_mat(10, 3, &mut rng).qr().q();
        let yq = PointSet::new(q).unwrap();
        let (a, b) = (rand_mat(10, 3, &mut rng), rand_mat(10, 3, &mut rng));
        let g1 = inner(&yq, &a, &b, Metric::G1).unwrap();
        let g2 = inner(&yq, &a, &b, Metric::G2).unwrap();
        assert!((g1 - g2).abs() < 1e-12);

        // Elementwise double-loop oracle for tr((YᵀY)Z₁ᵀZ₂).
        let ym = y.matrix();
        let mut oracle = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let aij: f64 = (0..10).map(|k| ym[(k, i)] * ym[(k, j)]).sum();
                let mji: f64 = (0..10).map(|k| a[(k, j)] * b[(k, i)]).sum();
                oracle += aij * mji;
            }
        }
        assert!(
            (inner(&y, &a, &b, Metric::G2).unwrap() - oracle).abs() < 1e-12 * (1.0 + oracle.abs())
        );
    }

    #[test]
    fn sylvester_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let y = point(8, 3, &mut rng);
        // YᵀZ symmetric: Z = Y(YᵀY)⁻¹S with S symmetric.
        let s = rand_mat(3, 3, &mut rng);
        let a_inv = (y.matrix().transpose() * y.matrix()).try_inverse().unwrap();
        let z = y.matrix() * a_inv * (&s + s.transpose());
        assert!(solve_sylvester_skew(&y, &z).unwrap().amax() < 1e-12);

        let y1 = point(5, 1, &mut rng);
        let z1 = rand_mat(5, 1, &mut rng);
        assert_eq!(solve_sylvester_skew(&y1, &z1).unwrap(), Mat::zeros(1, 1));

        // Kronecker-vectorization oracle over all 9 entries, restricted to skew.
        let z = rand_mat(8, 3, &mut rng);
        let omega = solve_sylvester_skew(&y, &z).unwrap();
        let a = y.matrix().transpose() * y.matrix();
        let ytz = y.matrix().transpose() * &z;
        let rhs = &ytz - ytz.transpose();
        let id = Mat::identity(3, 3);
        let kron = a.kronecker(&id) + id.kronecker(&a);
        // vec(ΩA + AΩ) = (Aᵀ ⊗ I + I ⊗ A) vec(Ω) for column-major vec.
        let vec_rhs = nalgebra::DVector::from_iterator(9, rhs.iter().copied());
        let sol = kron.lu().solve(&vec_rhs).unwrap();
        let oracle = Mat::from_iterator(3, 3, sol.iter().copied());
        assert!((&omega - &oracle).amax() < 1e-10);
        assert!((&omega + omega.transpose()).amax() < 1e-12);
        let res = &omega * &a + &a * &omega - &rhs;
        assert!(res.norm() <= 1e-10 * ytz.norm());
    }

    #[test]
    fn projections_both_metrics() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for metric in [Metric::G1, Metric::G2] {
            for d in [1, 2, 3, 5] {
                for _ in 0..25 {
                    let y = point(12, d, &mut rng);
                    let z = rand_mat(12, d, &mut rng);
                    let zp = rand_mat(12, d, &mut rng);
                    let pv = project_vertical(&y, &z, metric).unwrap();
                    let ph = project_horizontal(&y, &z, metric).unwrap();
                    assert!((&pv + &ph.dir - &z).amax() < 1e-14);
                    let php = project_horizontal(&y, &zp, metric).unwrap();
                    assert!(inner(&y, &pv, &php.dir, metric).unwrap().abs() < 1e-10);
                    let again = project_horizontal(&y, &ph.dir, metric).unwrap();
                    assert!((&again.dir - &ph.dir).amax() < 1e-10);
                    let vv = project_vertical(&y, &pv, metric).unwrap();
                    assert!((&vv - &pv).amax() < 1e-10);
                    assert!(ph.horizontality_defect().unwrap() < 1e-10);

                    let om = rand_skew(d, &mut rng);
                    let vert = y.matrix() * &om;
                    assert!(project_horizontal(&y, &vert, metric).unwrap().dir.amax() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn gradient_conversion() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let y = point(9, 2, &mut rng);
        let zero = Mat::zeros(9, 2);
        assert_eq!(
            riemannian_gradient(&y, &zero, Metric::G2).unwrap().dir,
            zero
        );
        let e = rand_mat(9, 2, &mut rng);
        assert_eq!(riemannian_gradient(&y, &e, Metric::G1).unwrap().dir, e);
        let g2 = riemannian_gradient(&y, &e, Metric::G2).unwrap();
        let back = &g2.dir * (y.matrix().transpose() * y.matrix());
        assert!((back - &e).amax() < 1e-10);
        // g²(grad², Z) = g¹(∇f, Z).
        let z = rand_mat(9, 2, &mut rng);
        let lhs = inner(&y, &g2.dir, &z, Metric::G2).unwrap();
        assert!((lhs - e.dot(&z)).abs() < 1e-10);
    }

    #[test]
    fn retraction_and_transport() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y = point(7, 2, &mut rng);
        let eta = project_horizontal(&y, &rand_mat(7, 2, &mut rng), Metric::G1).unwrap();
        assert_eq!(retract(&y, &eta, 0.0).unwrap().point, y);
        let neg = HorizontalVector {
            base: y.clone(),
            dir: -y.matrix(),
            metric: Metric::G1,
        };
        assert!(retract(&y, &neg, 1.0).unwrap().rank_deficient);

        let y_to = point(7, 2, &mut rng);
        let h = project_horizontal(&y_to, &rand_mat(7, 2, &mut rng), Metric::G2).unwrap();
        let t = transport(&y_to, &h, Metric::G2).unwrap();
        assert!((&t.dir - &h.dir).amax() < 1e-10);
        let vert = HorizontalVector {
            base: y.clone(),
            dir: y_to.matrix() * rand_skew(2, &mut rng),
            metric: Metric::G2,
        };
        assert!(transport(&y_to, &vert, Metric::G2).unwrap().dir.amax() < 1e-10);
        let r = transport(&y_to, &eta, Metric::G1).unwrap();
        assert!(r.horizontality_defect().unwrap() < 1e-10);
        assert!(matches!(
            transport(&y_to, &eta, Metric::G2),
            Err(Error::MetricMismatch { .. })
        ));
    }
}
