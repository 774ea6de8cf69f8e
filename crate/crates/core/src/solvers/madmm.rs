use super::{rcg, AdmmConfig, LsPolicy, SolveReport, SolveStatus, SolverConfig};
use crate::edm::gram_to_edm_mat;
use crate::manifold::Metric;
use crate::sstress::{SstressProblem, Term};
use crate::{Error, Mat, PointSet, Result};

/// `S_κ(x) = sgn(x)·max(|x| − κ, 0)`.
pub fn soft_threshold(x: f64, kappa: f64) -> f64 {
    x.signum() * (x.abs() - kappa).max(0.0)
}

/// Robust localization by ADMM on
/// `‖P_Ω(Z − D_e)‖₁ + λ/2‖P_Ω̄(g(YYᵀ))‖² s.t. g(YYᵀ) = Z`.
///
/// The observed pairs and targets come from `problem`; its weights are not
/// used. Each Y-subproblem runs `inner_iters` pure-HZ g¹-RCG iterations.
pub fn madmm(
    problem: &SstressProblem,
    y0: &PointSet,
    cfg: &AdmmConfig,
    scfg: &SolverConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    scfg.validate()?;
    let n = problem.n();
    if y0.n() != n {
        return Err(Error::Shape("start point does not match problem".into()));
    }
    let mut observed = vec![false; n * n];
    let mut de = Mat::zeros(n, n);
    for t in problem.terms() {
        observed[t.i * n + t.j] = true;
        observed[t.j * n + t.i] = true;
        de[(t.i, t.j)] = t.t;
        de[(t.j, t.i)] = t.t;
    }
    let on = |i: usize, j: usize| observed[i * n + j];

    let inner = SolverConfig {
        metric: Metric::G1,
        policy: LsPolicy::PureHz,
        imax: cfg.inner_iters,
        ..*scfg
    };

    let mut y = y0.matrix().clone();
    let mut g = gram_to_edm_mat(&(&y * y.transpose()));
    let mut rho = cfg.rho0;
    let mut u = Mat::from_fn(n, n, |i, j| {
        if on(i, j) {
            (de[(i, j)] - g[(i, j)]) / rho
        } else {
            0.0
        }
    });
    let mut z = Mat::from_fn(n, n, |i, j| if on(i, j) { de[(i, j)] } else { g[(i, j)] });

    let objective = |g: &Mat| {
        let mut l1 = 0.0;
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                if on(i, j) {
                    l1 += (g[(i, j)] - de[(i, j)]).abs();
                } else {
                    off += g[(i, j)].powi(2);
                }
            }
        }
        l1 + 0.5 * cfg.lambda * off
    };

    let mut report = SolveReport {
        y: Mat::zeros(0, 0),
        iters: 0,
        cost_trace: vec![objective(&g)],
        final_grad_norm: 0.0,
        status: SolveStatus::MaxIter,
        restarts: 0,
        regularized_steps: 0,
        switched_at: None,
        rank_trace: vec![],
    };
    let mut primal_history: Vec<f64> = Vec::new();

    for k in 0..cfg.n_outer {
        let kappa = 1.0 / rho;
        for i in 0..n {
            for j in 0..n {
                z[(i, j)] = if i == j {
                    0.0
                } else if on(i, j) {
                    soft_threshold(g[(i, j)] - de[(i, j)] + u[(i, j)], kappa) + de[(i, j)]
                } else {
                    g[(i, j)] + u[(i, j)]
                };
            }
        }

        // λ/2‖P_Ω̄ g‖² + ρ/2‖g − (Z − U)‖² as a weighted pair fit.
        let mut terms = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                let target = z[(i, j)] - u[(i, j)];
                let h = if on(i, j) { rho } else { rho + cfg.lambda };
                terms.push(Term {
                    i,
                    j,
                    h,
                    t: rho * target / h,
                });
            }
        }
        let sub = SstressProblem::from_terms(n, terms);
        let r = rcg(&sub, &PointSet::new(y)?, &inner)?;
        report.restarts += r.restarts;
        report.regularized_steps += r.regularized_steps;
        y = r.y;

        let g_new = gram_to_edm_mat(&(&y * y.transpose()));
        let primal = &g_new - &z;
        u += &primal;
        let dual = (&g - &g_new) * rho;
        g = g_new;
        report.cost_trace.push(objective(&g));
        report.iters = k + 1;

        let rn = primal.norm();
        let primal_ok = rn <= cfg.eps_tol * z.norm().max(g.norm());
        let dual_ok = dual.norm() <= cfg.eps_tol * (&u * rho).norm();
        if primal_ok && dual_ok {
            report.status = SolveStatus::ResidualTol;
            break;
        }
        primal_history.push(rn);
        if k >= cfg.divergence_window {
            let past = primal_history[k - cfg.divergence_window];
            if rn > cfg.divergence_factor * past && past > 0.0 {
                report.status = SolveStatus::Diverged;
                break;
            }
        }
        if k % cfg.t_f == 0 && rho < cfg.rho_max {
            rho *= cfg.tau;
            u /= cfg.tau;
        }
    }
    report.final_grad_norm = problem.cost_grad_mat(&y).1.norm();
    report.y = y;
    Ok(report)
}
