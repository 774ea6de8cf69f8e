//! Weighted s-stress `f(Y) = ½‖W ⊙ P_Ω(g(YYᵀ) − D_e)‖²_F` and its derivatives.
//!
//! The norm runs over the full symmetric matrix, so every observed pair
//! contributes twice. Evaluation uses the pair list directly; the dense
//! formulas serve as test oracles.

use crate::manifold::HorizontalVector;
use crate::{Edm, Error, Mat, PointSet, Result, SampleMask, WeightMatrix};

/// Largest `n` for which the dense `nd×nd` Hessian is assembled.
pub const DENSE_HESSIAN_MAX_N: usize = 500;

/// One observed pair with effective weight `h = w²` and target `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Term {
    pub i: usize,
    pub j: usize,
    pub h: f64,
    pub t: f64,
}

/// Data of the s-stress problem. Immutable after construction.
#[derive(Clone, Debug)]
pub struct SstressProblem {
    n: usize,
    terms: Vec<Term>,
}

impl SstressProblem {
    /// Caches `H = P_Ω(W ⊙ W)` and the observed targets on the pair list.
    pub fn new(de: &Edm, mask: &SampleMask, w: &WeightMatrix) -> Result<Self> {
        let n = de.n();
        if mask.n() != n || w.matrix().nrows() != n {
            return Err(Error::Shape("EDM, mask and weights disagree on n".into()));
        }
        let terms = mask
            .pairs()
            .iter()
            .map(|&(i, j)| Term {
                i,
                j,
                h: w.get(i, j).powi(2),
                t: de.get(i, j),
            })
            .collect();
        Ok(Self { n, terms })
    }

    /// Unweighted problem (`W = 11ᵀ`).
    pub fn unweighted(de: &Edm, mask: &SampleMask) -> Result<Self> {
        Self::new(de, mask, &WeightMatrix::ones(de.n()))
    }

    pub(crate) fn from_terms(n: usize, terms: Vec<Term>) -> Self {
        Self { n, terms }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub(crate) fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn num_pairs(&self) -> usize {
        self.terms.len()
    }

    /// Dense `H = P_Ω(W ⊙ W)`.
    pub fn h_matrix(&self) -> Mat {
        let mut h = Mat::zeros(self.n, self.n);
        for t in &self.terms {
            h[(t.i, t.j)] = t.h;
            h[(t.j, t.i)] = t.h;
        }
        h
    }

    /// Dense `P_Ω(D_e)`.
    pub fn target_matrix(&self) -> Mat {
        let mut d = Mat::zeros(self.n, self.n);
        for t in &self.terms {
            d[(t.i, t.j)] = t.t;
            d[(t.j, t.i)] = t.t;
        }
        d
    }

    fn check(&self, y: &Mat) -> Result<()> {
        if y.nrows() != self.n {
            return Err(Error::Shape(format!(
                "factor has {} rows, problem has n = {}",
                y.nrows(),
                self.n
            )));
        }
        Ok(())
    }

    pub fn cost(&self, y: &PointSet) -> Result<f64> {
        self.check(y.matrix())?;
        Ok(self.cost_mat(y.matrix()))
    }

    pub fn egrad(&self, y: &PointSet) -> Result<Mat> {
        self.check(y.matrix())?;
        Ok(self.cost_grad_mat(y.matrix()).1)
    }

    /// `∇²f(Y)[Z] = 2g*(S₁)Z + 2g*(S₂)Y`.
    pub fn ehess_apply(&self, y: &PointSet, z: &Mat) -> Result<Mat> {
        self.check(y.matrix())?;
        if z.shape() != y.matrix().shape() {
            return Err(Error::Shape("direction does not match factor".into()));
        }
        let (y, d) = (y.matrix(), y.dim());
        let mut out = Mat::zeros(self.n, d);
        for t in &self.terms {
            let r = sqdist(y, t.i, t.j) - t.t;
            let dz: f64 = (0..d)
                .map(|k| (y[(t.i, k)] - y[(t.j, k)]) * (z[(t.i, k)] - z[(t.j, k)]))
                .sum();
            for k in 0..d {
                let v = 4.0
                    * t.h
                    * (r * (z[(t.i, k)] - z[(t.j, k)]) + 2.0 * dz * (y[(t.i, k)] - y[(t.j, k)]));
                out[(t.i, k)] += v;
                out[(t.j, k)] -= v;
            }
        }
        Ok(out)
    }

    /// Dense blocked Hessian in the ordering `vec(Yᵀ)`: block `(k, i)` is
    /// the d×d matrix `∂²f/∂p_k∂p_i`.
    pub fn hessian_blocks(&self, y: &PointSet) -> Result<Mat> {
        self.check(y.matrix())?;
        if self.n > DENSE_HESSIAN_MAX_N {
            return Err(Error::InvalidArgument(format!(
                "dense Hessian limited to n ≤ {DENSE_HESSIAN_MAX_N}"
            )));
        }
        let (ym, d) = (y.matrix(), y.dim());
        let mut hess = Mat::zeros(self.n * d, self.n * d);
        for t in &self.terms {
            let f = sqdist(ym, t.i, t.j) - t.t;
            let p: Vec<f64> = (0..d).map(|k| ym[(t.i, k)] - ym[(t.j, k)]).collect();
            for a in 0..d {
                for b in 0..d {
                    let mut v = 8.0 * p[a] * p[b];
                    if a == b {
                        v += 4.0 * f;
                    }
                    v *= t.h;
                    hess[(t.i * d + a, t.i * d + b)] += v;
                    hess[(t.j * d + a, t.j * d + b)] += v;
                    hess[(t.i * d + a, t.j * d + b)] -= v;
                    hess[(t.j * d + a, t.i * d + b)] -= v;
                }
            }
        }
        Ok(hess)
    }

    /// Value and slope of `φ(α) = f(Y + αη)`; the slope is `⟨∇f(Y + αη), η⟩_F`
    /// under either metric.
    pub fn ls_scalars(
        &self,
        y: &PointSet,
        eta: &HorizontalVector,
        alpha: f64,
    ) -> Result<(f64, f64)> {
        self.check(y.matrix())?;
        let moved = y.matrix() + &eta.dir * alpha;
        let (f, g) = self.cost_grad_mat(&moved);
        Ok((f, g.dot(&eta.dir)))
    }

    /// Coefficients `[c₀, …, c₄]` of the quartic `α ↦ f(Y + αη)`.
    pub fn ray_quartic(&self, y: &PointSet, eta: &Mat) -> Result<[f64; 5]> {
        self.check(y.matrix())?;
        Ok(self.quartic_mat(y.matrix(), eta))
    }

    pub(crate) fn cost_mat(&self, y: &Mat) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let r = sqdist(y, t.i, t.j) - t.t;
                t.h * r * r
            })
            .sum()
    }

    pub(crate) fn cost_grad_mat(&self, y: &Mat) -> (f64, Mat) {
        let d = y.ncols();
        let mut g = Mat::zeros(self.n, d);
        let mut f = 0.0;
        for t in &self.terms {
            let r = sqdist(y, t.i, t.j) - t.t;
            f += t.h * r * r;
            let s = 4.0 * t.h * r;
            for k in 0..d {
                let v = s * (y[(t.i, k)] - y[(t.j, k)]);
                g[(t.i, k)] += v;
                g[(t.j, k)] -= v;
            }
        }
        (f, g)
    }

    pub(crate) fn quartic_mat(&self, y: &Mat, eta: &Mat) -> [f64; 5] {
        let d = y.ncols();
        let mut c = [0.0; 5];
        for t in &self.terms {
            let (mut dd, mut de, mut ee) = (0.0, 0.0, 0.0);
            for k in 0..d {
                let a = y[(t.i, k)] - y[(t.j, k)];
                let b = eta[(t.i, k)] - eta[(t.j, k)];
                dd += a * a;
                de += a * b;
                ee += b * b;
            }
            // r(α) = a0 + a1 α + a2 α²
            let (a0, a1, a2) = (dd - t.t, 2.0 * de, ee);
            c[0] += t.h * a0 * a0;
            c[1] += t.h * 2.0 * a0 * a1;
            c[2] += t.h * (a1 * a1 + 2.0 * a0 * a2);
            c[3] += t.h * 2.0 * a1 * a2;
            c[4] += t.h * a2 * a2;
        }
        c
    }
}

fn sqdist(y: &Mat, i: usize, j: usize) -> f64 {
    (0..y.ncols())
        .map(|k| (y[(i, k)] - y[(j, k)]).powi(2))
        .sum()
}

/// True iff `λ_min ≥ −tol·max(λ_max, 0)`.
pub fn hessian_is_psd(hess: &Mat, tol: f64) -> bool {
    let eig = hess.clone().symmetric_eigenvalues();
    let (lmin, lmax) = (eig.min(), eig.max());
    lmin >= -tol * lmax.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edm::{g_adjoint, g_map};
    use crate::manifold::Metric;
    use crate::SamplingScheme;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_mat(r: usize, c: usize, rng: &mut impl Rng) -> Mat {
        Mat::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn random_problem(n: usize, d: usize, rng: &mut impl Rng) -> (SstressProblem, Mat) {
        let ys = rand_mat(n, d, rng);
        let de = Edm::from_points(&PointSet::new(ys.clone()).unwrap());
        let pairs: Vec<_> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .filter(|_| rng.gen_bool(0.6))
            .collect();
        let mask = SampleMask::new(n, pairs, SamplingScheme::Explicit, false).unwrap();
        let w = Mat::from_fn(n, n, |i, j| {
            0.5 + 0.5 * (((i * 7 + j * 7) % 5) as f64) / 5.0
        });
        let w = WeightMatrix::new(w).unwrap();
        (SstressProblem::new(&de, &mask, &w).unwrap(), ys)
    }

    fn dense_grad(p: &SstressProblem, y: &Mat) -> Mat {
        let s1 = p
            .h_matrix()
            .component_mul(&(g_map(&(y * y.transpose())).unwrap() - p.target_matrix()));
        g_adjoint(&s1).unwrap() * y * 2.0
    }

    fn dense_hess(p: &SstressProblem, y: &Mat, z: &Mat) -> Mat {
        let h = p.h_matrix();
        let s1 = h.component_mul(&(g_map(&(y * y.transpose())).unwrap() - p.target_matrix()));
        let s2 = h.component_mul(&g_map(&(y * z.transpose() + z * y.transpose())).unwrap());
        g_adjoint(&s1).unwrap() * z * 2.0 + g_adjoint(&s2).unwrap() * y * 2.0
    }

    fn toy() -> SstressProblem {
        let y = PointSet::new(Mat::from_row_slice(3, 1, &[0.0, 1.0, 5.0])).unwrap();
        SstressProblem::unweighted(&Edm::from_points(&y), &SampleMask::complete(3)).unwrap()
    }

    #[test]
    fn toy_cost_values() {
        let p = toy();
        let y = PointSet::new(Mat::from_row_slice(3, 1, &[0.0, 1.0, 5.0])).unwrap();
        assert_eq!(p.cost(&y).unwrap(), 0.0);
        let z = PointSet::new(Mat::zeros(3, 1)).unwrap();
        // Enumerate both triangles: ½·2·(1² + 25² + 16²).
        let oracle = 0.5 * 2.0 * (1.0f64 + 625.0 + 256.0);
        assert_eq!(p.cost(&z).unwrap(), oracle);
    }

    #[test]
    fn invariances() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (p, _) = random_problem(12, 2, &mut rng);
        let y = PointSet::new(rand_mat(12, 2, &mut rng)).unwrap();
        let q = rand_mat(2, 2, &mut rng).qr().q();
        let yq = PointSet::new(y.matrix() * &q).unwrap();
        let f = p.cost(&y).unwrap();
        assert!((p.cost(&yq).unwrap() - f).abs() < 1e-10 * (1.0 + f));
        let gq = p.egrad(&yq).unwrap();
        assert!((gq - p.egrad(&y).unwrap() * &q).amax() < 1e-10);
        let mut shifted = y.matrix().clone();
        for mut r in shifted.row_iter_mut() {
            r[0] += 3.0;
            r[1] -= 2.0;
        }
        let fs = p.cost(&PointSet::new(shifted).unwrap()).unwrap();
        assert!((fs - f).abs() < 1e-9 * (1.0 + f));
        // O(d)-invariant cost ⇒ the gradient is g¹-horizontal.
        let g = p.egrad(&y).unwrap();
        let m = y.matrix().transpose() * &g;
        assert!((&m - m.transpose()).norm() <= 1e-9 * (1.0 + y.matrix().norm() * g.norm()));
    }

    #[test]
    fn gradient_matches_dense_and_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let (p, _) = random_problem(15, 3, &mut rng);
            let y = rand_mat(15, 3, &mut rng);
            let g = p.egrad(&PointSet::new(y.clone()).unwrap()).unwrap();
            assert!((&g - dense_grad(&p, &y)).amax() < 1e-10 * (1.0 + g.amax()));
            let h = 1e-5 * (1.0 + y.norm());
            let mut fd = Mat::zeros(15, 3);
            for i in 0..15 {
                for k in 0..3 {
                    let mut yp = y.clone();
                    yp[(i, k)] += h;
                    let mut ym = y.clone();
                    ym[(i, k)] -= h;
                    fd[(i, k)] = (p.cost_mat(&yp) - p.cost_mat(&ym)) / (2.0 * h);
                }
            }
            assert!((&fd - &g).norm() <= 1e-6 * g.norm());
        }
    }

    #[test]
    fn global_minimizer_has_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ys = rand_mat(10, 2, &mut rng);
        let y = PointSet::new(ys).unwrap();
        let p =
            SstressProblem::unweighted(&Edm::from_points(&y), &SampleMask::complete(10)).unwrap();
        assert!(p.egrad(&y).unwrap().norm() <= 1e-10 * (1.0 + y.matrix().norm()));
    }

    #[test]
    fn hessian_apply_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (p, _) = random_problem(11, 2, &mut rng);
        let y = rand_mat(11, 2, &mut rng);
        let yp = PointSet::new(y.clone()).unwrap();
        assert_eq!(
            p.ehess_apply(&yp, &Mat::zeros(11, 2)).unwrap(),
            Mat::zeros(11, 2)
        );
        for _ in 0..10 {
            let z1 = rand_mat(11, 2, &mut rng);
            let z2 = rand_mat(11, 2, &mut rng);
            let h1 = p.ehess_apply(&yp, &z1).unwrap();
            let h2 = p.ehess_apply(&yp, &z2).unwrap();
            assert!((z2.dot(&h1) - z1.dot(&h2)).abs() < 1e-10 * (1.0 + h1.norm() * z2.norm()));
            assert!((&h1 - dense_hess(&p, &y, &z1)).amax() < 1e-10 * (1.0 + h1.amax()));
            let h = 1e-6;
            let gp = p.cost_grad_mat(&(&y + &z1 * h)).1;
            let gm = p.cost_grad_mat(&(&y - &z1 * h)).1;
            let fd = (gp - gm) / (2.0 * h);
            assert!((fd - &h1).norm() <= 1e-5 * h1.norm());
        }
    }

    #[test]
    fn blocked_hessian_quadratic_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (p, _) = random_problem(9, 3, &mut rng);
        let y = PointSet::new(rand_mat(9, 3, &mut rng)).unwrap();
        let hess = p.hessian_blocks(&y).unwrap();
        assert!((&hess - hess.transpose()).amax() < 1e-12);
        for _ in 0..20 {
            let z = rand_mat(9, 3, &mut rng);
            let hz = p.ehess_apply(&y, &z).unwrap();
            let v = nalgebra::DVector::from_iterator(27, z.transpose().iter().copied());
            let quad = (v.transpose() * &hess * &v)[(0, 0)];
            let lhs = z.dot(&hz);
            assert!((lhs - quad).abs() <= 1e-8 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn toy_hessian_psd_at_minimum_and_not_near_origin() {
        let p = toy();
        let ystar = PointSet::new(Mat::from_row_slice(3, 1, &[0.0, 1.0, 5.0])).unwrap();
        let hess = p.hessian_blocks(&ystar).unwrap();
        assert!(hess.clone().symmetric_eigenvalues().min() >= -1e-8);
        assert!(hessian_is_psd(&hess, 1e-8));
        let near0 = PointSet::new(Mat::from_row_slice(3, 1, &[0.01, -0.02, 0.015])).unwrap();
        let h0 = p.hessian_blocks(&near0).unwrap();
        assert!(h0.clone().symmetric_eigenvalues().min() < 0.0);
        assert!(!hessian_is_psd(&h0, 1e-8));
    }

    #[test]
    fn psd_predicate() {
        assert!(hessian_is_psd(&Mat::identity(3, 3), 1e-8));
        assert!(!hessian_is_psd(
            &Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
            1e-8
        ));
    }

    #[test]
    fn line_search_scalars() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (p, _) = random_problem(10, 2, &mut rng);
        let y = PointSet::new(rand_mat(10, 2, &mut rng)).unwrap();
        let g = p.egrad(&y).unwrap();
        let eta = HorizontalVector {
            base: y.clone(),
            dir: -&g,
            metric: Metric::G1,
        };
        let (_, s0) = p.ls_scalars(&y, &eta, 0.0).unwrap();
        assert!((s0 + g.norm_squared()).abs() < 1e-10 * g.norm_squared());

        let alpha = 0.01;
        let h = 1e-6;
        let (_, s) = p.ls_scalars(&y, &eta, alpha).unwrap();
        let fd = (p.ls_scalars(&y, &eta, alpha + h).unwrap().0
            - p.ls_scalars(&y, &eta, alpha - h).unwrap().0)
            / (2.0 * h);
        assert!((fd - s).abs() <= 1e-6 * s.abs().max(1.0));

        // Five-point polynomial fit reproduces a sixth point.
        let xs: [f64; 5] = [0.0, 0.1, 0.2, 0.3, 0.4];
        let vand = Mat::from_fn(5, 5, |i, k| xs[i].powi(k as i32));
        let vals = nalgebra::DVector::from_iterator(
            5,
            xs.iter().map(|&a| p.ls_scalars(&y, &eta, a).unwrap().0),
        );
        let coef = vand.lu().solve(&vals).unwrap();
        let x6: f64 = 0.37;
        let fit: f64 = (0..5).map(|k| coef[k] * x6.powi(k as i32)).sum();
        let actual = p.ls_scalars(&y, &eta, x6).unwrap().0;
        assert!((fit - actual).abs() <= 1e-8 * (1.0 + actual.abs()));
        let q = p.ray_quartic(&y, &eta.dir).unwrap();
        for k in 0..5 {
            assert!((q[k] - coef[k]).abs() <= 1e-6 * (1.0 + q[k].abs()));
        }
    }
}
