use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{LsPolicy, SolveReport, SolveStatus, SolverConfig};
use crate::linesearch::{
    armijo_backtrack, hz_search, initial_quartic_step, LsFlag, SearchStatus, SwitchState, WolfeMode,
};
use crate::manifold::Geometry;
use crate::sstress::SstressProblem;
use crate::types::rank_ratio;
use crate::{Error, Mat, PointSet, Result};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Conjugate,
    Steepest,
}

/// Riemannian conjugate gradient with the HZ+ update.
pub fn rcg(problem: &SstressProblem, y0: &PointSet, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    check(problem, y0)?;
    run(problem, y0.matrix().clone(), cfg, Direction::Conjugate)
}

/// Riemannian gradient descent: [`rcg`] with `ξ = −p` every iteration.
pub fn gd(problem: &SstressProblem, y0: &PointSet, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    check(problem, y0)?;
    run(problem, y0.matrix().clone(), cfg, Direction::Steepest)
}

fn check(problem: &SstressProblem, y0: &PointSet) -> Result<()> {
    if y0.n() != problem.n() {
        return Err(Error::Shape(format!(
            "start has {} rows, problem has n = {}",
            y0.n(),
            problem.n()
        )));
    }
    Ok(())
}

/// `β = max(β^HZ, −1/(‖ξ‖·min(η̄, ‖p_old‖)))`, with every inner product taken
/// in `geom`. `p_old` and `xi` must already be transported. A vanishing
/// `⟨ξ, y⟩` yields 0.
pub fn beta_hz_plus(geom: &Geometry, p_new: &Mat, p_old: &Mat, xi: &Mat, eta_bar: f64) -> f64 {
    let yk = p_new - p_old;
    let dy = geom.inner(xi, &yk);
    let dn = geom.norm(xi);
    let yn = geom.norm(&yk);
    if !(dy.abs() > 1e-300 && dy.abs() > 1e-14 * dn * yn) || !dy.is_finite() {
        return 0.0;
    }
    let yy = geom.inner(&yk, &yk);
    let beta = (geom.inner(&yk, p_new) - 2.0 * yy / dy * geom.inner(xi, p_new)) / dy;
    let floor = -1.0 / (dn * eta_bar.min(geom.norm(p_old)));
    let b = if floor.is_finite() {
        beta.max(floor)
    } else {
        beta
    };
    if b.is_finite() {
        b
    } else {
        0.0
    }
}

pub(crate) fn perturb_if_deficient(y: Mat, seed: u64) -> Mat {
    if rank_ratio(&y) > crate::types::RANK_TOL {
        return y;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1e-10 * y.amax().max(1.0);
    let noise = Mat::from_fn(y.nrows(), y.ncols(), |_, _| {
        let v: f64 = StandardNormal.sample(&mut rng);
        v * scale
    });
    y + noise
}

fn run(
    problem: &SstressProblem,
    y0: Mat,
    cfg: &SolverConfig,
    dir: Direction,
) -> Result<SolveReport> {
    let metric = cfg.metric;
    let mut y = perturb_if_deficient(y0, cfg.perturb_seed);
    let (mut f, mut egrad) = problem.cost_grad_mat(&y);
    let geom0 = Geometry::at(&y, metric)?;
    let mut p = geom0.gradient(&egrad);
    let mut xi = -&p;
    let mut sw = SwitchState::new(
        cfg.omega,
        cfg.delta,
        match cfg.policy {
            LsPolicy::Switching => LsFlag::Armijo,
            LsPolicy::PureHz => LsFlag::Hz,
        },
    );
    let mut approx = false;
    let mut report = SolveReport {
        y: Mat::zeros(0, 0),
        iters: 0,
        cost_trace: vec![f],
        final_grad_norm: 0.0,
        status: SolveStatus::MaxIter,
        restarts: 0,
        regularized_steps: usize::from(geom0.regularized),
        switched_at: None,
        rank_trace: vec![],
    };
    let mut ascents = 0usize;

    for k in 0..cfg.imax {
        if p.norm() <= cfg.grad_tol {
            report.status = SolveStatus::GradTol;
            break;
        }
        let mut slope = egrad.dot(&xi);
        if !(slope < 0.0) {
            xi = -&p;
            slope = egrad.dot(&xi);
            report.restarts += 1;
            if !(slope < 0.0) {
                report.status = SolveStatus::GradTol;
                break;
            }
        }
        let alpha0 = initial_quartic_step(&problem.quartic_mat(&y, &xi)).map_or(1.0, |(a, _)| a);

        let mut armijo_ok = true;
        let mut step = None;
        if sw.flag == LsFlag::Armijo {
            let o = armijo_backtrack(
                |a| problem.cost_mat(&(&y + &xi * a)),
                f,
                slope,
                alpha0,
                cfg.armijo_c1,
                cfg.armijo_max_halvings,
            );
            if o.success {
                step = Some(o.alpha);
            } else {
                armijo_ok = false;
                sw.flag = LsFlag::Hz;
                approx = true;
                report.switched_at.get_or_insert(k);
            }
        }
        let alpha = match step {
            Some(a) => a,
            None => {
                let mode = if approx {
                    WolfeMode::Approx
                } else {
                    WolfeMode::Standard
                };
                let o = hz_search(
                    |a| {
                        let (fa, ga) = problem.cost_grad_mat(&(&y + &xi * a));
                        (fa, ga.dot(&xi))
                    },
                    f,
                    slope,
                    alpha0,
                    &cfg.ls,
                    f,
                    mode,
                )?;
                let usable = match o.status {
                    SearchStatus::Converged => true,
                    SearchStatus::MaxIterations | SearchStatus::StepCap => {
                        o.alpha > 0.0 && o.value < f
                    }
                    SearchStatus::NonFinite => false,
                };
                if !usable {
                    report.status = SolveStatus::LineSearchFailed;
                    break;
                }
                o.alpha
            }
        };

        let y_new = &y + &xi * alpha;
        let (f_new, g_new) = problem.cost_grad_mat(&y_new);
        if sw.update(f, f_new, armijo_ok) {
            approx = true;
            report.switched_at.get_or_insert(k);
        }
        let step_len = alpha * xi.norm();
        let geom_new = Geometry::at(&y_new, metric)?;
        if geom_new.regularized {
            report.regularized_steps += 1;
        }
        let p_new = geom_new.gradient(&g_new);
        let df = f_new - f;
        xi = match dir {
            Direction::Steepest => -&p_new,
            Direction::Conjugate => {
                let xi_t = geom_new.project_horizontal(&y_new, &xi);
                let p_t = geom_new.project_horizontal(&y_new, &p);
                let beta = beta_hz_plus(&geom_new, &p_new, &p_t, &xi_t, cfg.beta_eta);
                -&p_new + xi_t * beta
            }
        };
        y = y_new;
        f = f_new;
        egrad = g_new;
        p = p_new;
        report.cost_trace.push(f);
        report.iters = k + 1;

        if step_len <= cfg.step_tol {
            report.status = SolveStatus::StepTol;
            break;
        }
        if dir == Direction::Steepest {
            if df > 0.0 {
                ascents += 1;
                if ascents >= cfg.gd_max_ascents {
                    report.status = SolveStatus::AscentAbort;
                    break;
                }
            }
            if df.abs() <= cfg.gd_cost_tol {
                report.status = SolveStatus::CostStall;
                break;
            }
        }
    }
    if report.status == SolveStatus::MaxIter && p.norm() <= cfg.grad_tol {
        report.status = SolveStatus::GradTol;
    }
    report.final_grad_norm = p.norm();
    report.y = y;
    Ok(report)
}
