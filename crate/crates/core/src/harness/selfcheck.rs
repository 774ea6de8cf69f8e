//! Fast randomized invariant suite behind the `selfcheck` command.

use rand::Rng;
use serde::Serialize;

use crate::edm::{edm_to_gram, frob_inner, g_adjoint, g_map, gram_to_edm};
use crate::linesearch::{
    approx_wolfe_check, hz_search, wolfe_check, LineSearchParams, SearchStatus, WolfeMode,
};
use crate::manifold::{Geometry, Metric};
use crate::sampling::{rng_from, sample_bernoulli};
use crate::solvers::{rank_reduction, SolverConfig};
use crate::sstress::SstressProblem;
use crate::types::center_columns;
use crate::{Edm, GramMatrix, Mat, PointSet, Result, SampleMask};

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed error (or failure count) against `tolerance`.
    pub worst: f64,
    pub tolerance: f64,
}

fn check(name: &'static str, worst: f64, tolerance: f64) -> CheckResult {
    CheckResult {
        name,
        passed: worst <= tolerance,
        worst,
        tolerance,
    }
}

fn rand_mat(rng: &mut impl Rng, r: usize, c: usize) -> Mat {
    Mat::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
}

fn sym(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

fn operator_checks(rng: &mut impl Rng) -> Result<Vec<CheckResult>> {
    let (mut adj, mut round) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let n = rng.gen_range(3..15);
        let g = sym(&rand_mat(rng, n, n));
        let d = sym(&rand_mat(rng, n, n));
        let lhs = frob_inner(&g_map(&g)?, &d);
        let rhs = frob_inner(&g, &g_adjoint(&d)?);
        adj = adj.max((lhs - rhs).abs() / (1.0 + lhs.abs()));

        let y = center_columns(&rand_mat(rng, n, 2));
        let gram = &y * y.transpose();
        let back = edm_to_gram(&gram_to_edm(&GramMatrix(gram.clone()))?);
        round = round.max((back.matrix() - &gram).amax());
    }
    Ok(vec![
        check("adjoint identity", adj, 1e-10),
        check("edm round trip", round, 1e-10),
    ])
}

fn derivative_checks(rng: &mut impl Rng) -> Result<Vec<CheckResult>> {
    let (mut grad, mut hess) = (0.0f64, 0.0f64);
    for k in 0..10 {
        let (n, d) = (rng.gen_range(5..20), rng.gen_range(1..4));
        let truth = PointSet::new(rand_mat(rng, n, d))?;
        let mask = sample_bernoulli(n, 0.6, k)?;
        let problem = SstressProblem::unweighted(&Edm::from_points(&truth), &mask)?;
        let y = PointSet::new(rand_mat(rng, n, d))?;
        let z = rand_mat(rng, n, d);
        let h = 1e-6;
        let plus = PointSet::new(y.matrix() + &z * h)?;
        let minus = PointSet::new(y.matrix() - &z * h)?;
        let fd = (problem.cost(&plus)? - problem.cost(&minus)?) / (2.0 * h);
        let an = problem.egrad(&y)?.dot(&z);
        grad = grad.max((fd - an).abs() / (1.0 + an.abs()));
        let fd_h = (problem.egrad(&plus)? - problem.egrad(&minus)?) / (2.0 * h);
        let an_h = problem.ehess_apply(&y, &z)?;
        hess = hess.max((fd_h - &an_h).norm() / (1.0 + an_h.norm()));
    }
    Ok(vec![
        check("gradient vs finite differences", grad, 1e-6),
        check("hessian vs finite differences", hess, 1e-5),
    ])
}

fn manifold_checks(rng: &mut impl Rng) -> Result<Vec<CheckResult>> {
    let mut worst = 0.0f64;
    for d in [1usize, 2, 3, 5] {
        for metric in [Metric::G1, Metric::G2] {
            let y = rand_mat(rng, 12, d);
            let z = rand_mat(rng, 12, d);
            let geom = Geometry::at(&y, metric)?;
            let v = geom.project_vertical(&y, &z);
            let hz = geom.project_horizontal(&y, &z);
            let complete = (&v + &hz - &z).amax();
            let idem = (geom.project_horizontal(&y, &hz) - &hz).amax();
            let orth = geom.inner(&v, &hz).abs() / (1.0 + geom.norm(&z).powi(2));
            worst = worst.max(complete).max(idem).max(orth);
        }
    }
    Ok(vec![check("projection identities", worst, 1e-10)])
}

fn linesearch_checks(rng: &mut impl Rng) -> Result<Vec<CheckResult>> {
    let params = LineSearchParams::default();
    let mut violations = 0.0;
    for _ in 0..100 {
        let c: [f64; 5] = [
            rng.gen_range(0.5..2.0),
            -rng.gen_range(0.1..3.0),
            rng.gen_range(-1.0..2.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(0.05..1.0),
        ];
        let phi = |a: f64| {
            let v = c[0] + a * (c[1] + a * (c[2] + a * (c[3] + a * c[4])));
            let dv = c[1] + a * (2.0 * c[2] + a * (3.0 * c[3] + a * 4.0 * c[4]));
            (v, dv)
        };
        for mode in [WolfeMode::Standard, WolfeMode::Approx] {
            let o = hz_search(phi, c[0], c[1], 1.0, &params, c[0], mode)?;
            if o.status != SearchStatus::Converged {
                continue;
            }
            let ok = match mode {
                WolfeMode::Standard => wolfe_check(c[0], c[1], o.alpha, o.value, o.slope, &params)?,
                WolfeMode::Approx => approx_wolfe_check(
                    c[1],
                    o.slope,
                    o.value,
                    c[0],
                    params.eps * c[0].abs(),
                    &params,
                ),
            };
            if !ok {
                violations += 1.0;
            }
        }
    }
    Ok(vec![check("line search acceptance", violations, 0.0)])
}

fn toy_checks(rng: &mut impl Rng) -> Result<Vec<CheckResult>> {
    let truth = PointSet::new(Mat::from_column_slice(3, 1, &[0.0, 1.0, 5.0]))?;
    let problem = SstressProblem::unweighted(&Edm::from_points(&truth), &SampleMask::complete(3))?;
    let mut misses = 0.0;
    for _ in 0..20 {
        let start = PointSet::new(Mat::from_fn(3, 2, |_, _| rng.gen_range(-5.0..5.0)))?;
        let out = rank_reduction(&problem, 1, &SolverConfig::noiseless(), Some(&start))?;
        if problem.cost(&PointSet::new(out.y)?)? > 1e-12 {
            misses += 1.0;
        }
    }
    Ok(vec![check("toy rank reduction misses", misses, 1.0)])
}

/// Runs every check; errors inside a check propagate.
pub fn selfcheck(seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = rng_from(seed);
    let mut out = operator_checks(&mut rng)?;
    out.extend(derivative_checks(&mut rng)?);
    out.extend(manifold_checks(&mut rng)?);
    out.extend(linesearch_checks(&mut rng)?);
    out.extend(toy_checks(&mut rng)?);
    Ok(out)
}
