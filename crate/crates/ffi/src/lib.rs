//! C ABI over `edmc`.
//!
//! Problems and solutions are opaque handles owned by the caller and released
//! with the matching `*_free` function. Every fallible call returns an
//! [`EdmcStatus`]; on failure [`edmc_last_error`] holds a message for the
//! calling thread. Positions are exchanged row-major (`n * dim` doubles).

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use edmc::solvers::{
    gd, madmm, rank_reduction, rcg, svd_mds_init, AdmmConfig, SolveReport, SolveStatus,
    SolverConfig,
};
use edmc::sstress::SstressProblem;
use edmc::{Edm, Error, Mat, PointSet, SampleMask, SamplingScheme, WeightMatrix};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdmcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Shape = 3,
    Singular = 4,
    SolverFailed = 5,
    BufferTooSmall = 6,
    Panic = 7,
    Internal = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdmcSolver {
    RankReduction = 0,
    Rcg = 1,
    Gd = 2,
    Madmm = 3,
}

/// How a solver run ended.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdmcStop {
    GradTol = 0,
    StepTol = 1,
    CostStall = 2,
    MaxIter = 3,
    AscentAbort = 4,
    LineSearchFailed = 5,
    ResidualTol = 6,
    Diverged = 7,
}

/// Tunables for [`edmc_solve`]. Start from [`edmc_options_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct EdmcOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub step_tol: f64,
    /// ℓ₁ weight of the MADMM outlier term.
    pub lambda: f64,
}

/// Observed squared distances over `n` points.
pub struct EdmcProblem {
    problem: SstressProblem,
    edm: Edm,
    mask: SampleMask,
}

pub struct EdmcSolution {
    y: Mat,
    iters: usize,
    grad_norm: f64,
    stop: EdmcStop,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(code: EdmcStatus, msg: &str) -> EdmcStatus {
    set_error(msg);
    code
}

fn code_of(e: &Error) -> EdmcStatus {
    match e {
        Error::Shape(_) => EdmcStatus::Shape,
        Error::InvalidArgument(_) | Error::Parse(_) | Error::ZeroReference => {
            EdmcStatus::InvalidArgument
        }
        Error::Singular => EdmcStatus::Singular,
        Error::Solver(_) | Error::NonDescent(_) => EdmcStatus::SolverFailed,
        _ => EdmcStatus::Internal,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (EdmcStatus, String)>) -> EdmcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EdmcStatus::Ok,
        Ok(Err((code, msg))) => fail(code, &msg),
        Err(_) => fail(EdmcStatus::Panic, "panic inside edmc"),
    }
}

fn lift(e: Error) -> (EdmcStatus, String) {
    (code_of(&e), e.to_string())
}

fn stop_of(s: SolveStatus) -> EdmcStop {
    match s {
        SolveStatus::GradTol => EdmcStop::GradTol,
        SolveStatus::StepTol => EdmcStop::StepTol,
        SolveStatus::CostStall => EdmcStop::CostStall,
        SolveStatus::MaxIter => EdmcStop::MaxIter,
        SolveStatus::AscentAbort => EdmcStop::AscentAbort,
        SolveStatus::LineSearchFailed => EdmcStop::LineSearchFailed,
        SolveStatus::ResidualTol => EdmcStop::ResidualTol,
        SolveStatus::Diverged => EdmcStop::Diverged,
    }
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn edmc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

fn options_from(c: SolverConfig) -> EdmcOptions {
    EdmcOptions {
        max_iters: c.imax,
        grad_tol: c.grad_tol,
        step_tol: c.step_tol,
        lambda: AdmmConfig::default().lambda,
    }
}

/// Tolerances for exact distances.
#[no_mangle]
pub extern "C" fn edmc_options_default() -> EdmcOptions {
    options_from(SolverConfig::noiseless())
}

/// Looser tolerances for noisy distances.
#[no_mangle]
pub extern "C" fn edmc_options_noisy() -> EdmcOptions {
    options_from(SolverConfig::noisy())
}

/// Builds a problem from `m` observations `(i[k], j[k], d2[k])`. Pairs are
/// unordered; a repeated pair keeps its last value.
///
/// # Safety
/// `i`, `j` and `d2` must each point to `m` readable elements and `out` to
/// writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn edmc_problem_new(
    n: usize,
    i: *const usize,
    j: *const usize,
    d2: *const f64,
    m: usize,
    out: *mut *mut EdmcProblem,
) -> EdmcStatus {
    if out.is_null() || (m > 0 && (i.is_null() || j.is_null() || d2.is_null())) {
        return fail(EdmcStatus::NullPointer, "null argument to edmc_problem_new");
    }
    *out = ptr::null_mut();
    let (is, js, vs) = if m == 0 {
        (&[][..], &[][..], &[][..])
    } else {
        (
            slice::from_raw_parts(i, m),
            slice::from_raw_parts(j, m),
            slice::from_raw_parts(d2, m),
        )
    };
    guard(|| {
        if n < 2 {
            return Err((
                EdmcStatus::InvalidArgument,
                "need at least two points".into(),
            ));
        }
        let mut d = Mat::zeros(n, n);
        for k in 0..m {
            let (a, b, v) = (is[k], js[k], vs[k]);
            if a >= n || b >= n || a == b {
                return Err((EdmcStatus::InvalidArgument, format!("bad pair ({a},{b})")));
            }
            if !v.is_finite() || v < 0.0 {
                return Err((
                    EdmcStatus::InvalidArgument,
                    format!("bad squared distance {v} at ({a},{b})"),
                ));
            }
            d[(a, b)] = v;
            d[(b, a)] = v;
        }
        let mask = SampleMask::new(
            n,
            is.iter().zip(js).map(|(&a, &b)| (a, b)),
            SamplingScheme::Explicit,
            false,
        )
        .map_err(lift)?;
        let edm = Edm::new(d).map_err(lift)?;
        let problem = SstressProblem::new(&edm, &mask, &WeightMatrix::ones(n)).map_err(lift)?;
        *out = Box::into_raw(Box::new(EdmcProblem { problem, edm, mask }));
        Ok(())
    })
}

/// # Safety
/// `p` must be NULL or a handle from [`edmc_problem_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn edmc_problem_free(p: *mut EdmcProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of distinct observed pairs.
///
/// # Safety
/// `p` must be NULL or a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn edmc_problem_observed(p: *const EdmcProblem) -> usize {
    p.as_ref().map_or(0, |p| p.mask.len())
}

fn run(
    p: &EdmcProblem,
    solver: EdmcSolver,
    dim: usize,
    opts: &EdmcOptions,
) -> edmc::Result<SolveReport> {
    let cfg = SolverConfig {
        imax: opts.max_iters,
        grad_tol: opts.grad_tol,
        step_tol: opts.step_tol,
        ..SolverConfig::noiseless()
    };
    let init = || svd_mds_init(&p.edm, &p.mask, dim, dim).map(|r| r.points);
    match solver {
        EdmcSolver::RankReduction => rank_reduction(&p.problem, dim, &cfg, None),
        EdmcSolver::Rcg => rcg(&p.problem, &init()?, &cfg),
        EdmcSolver::Gd => gd(&p.problem, &init()?, &cfg),
        EdmcSolver::Madmm => {
            let warm = rank_reduction(&p.problem, dim, &cfg, None)?;
            let admm = AdmmConfig {
                lambda: opts.lambda,
                ..AdmmConfig::default()
            };
            madmm(&p.problem, &PointSet::new(warm.y)?, &admm, &cfg)
        }
    }
}

/// Solves for a `dim`-dimensional configuration. `opts` may be NULL for the
/// defaults. A run that stops with a failing status still yields a solution
/// and returns [`EdmcStatus::SolverFailed`].
///
/// # Safety
/// `p` must be a live problem handle, `opts` NULL or readable, and `out`
/// writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn edmc_solve(
    p: *const EdmcProblem,
    solver: EdmcSolver,
    dim: usize,
    opts: *const EdmcOptions,
    out: *mut *mut EdmcSolution,
) -> EdmcStatus {
    let (Some(p), false) = (p.as_ref(), out.is_null()) else {
        return fail(EdmcStatus::NullPointer, "null argument to edmc_solve");
    };
    *out = ptr::null_mut();
    let opts = opts
        .as_ref()
        .copied()
        .unwrap_or_else(|| edmc_options_default());
    let mut failed = None;
    let code = guard(|| {
        if dim == 0 || dim >= p.problem.n() {
            return Err((
                EdmcStatus::InvalidArgument,
                format!("dimension {dim} out of range"),
            ));
        }
        let r = run(p, solver, dim, &opts).map_err(lift)?;
        if r.status.is_failure() {
            failed = Some(r.status);
        }
        *out = Box::into_raw(Box::new(EdmcSolution {
            stop: stop_of(r.status),
            iters: r.iters,
            grad_norm: r.final_grad_norm,
            y: r.y,
        }));
        Ok(())
    });
    match (code, failed) {
        (EdmcStatus::Ok, Some(s)) => fail(
            EdmcStatus::SolverFailed,
            &format!("solver stopped with {s:?}"),
        ),
        (c, _) => c,
    }
}

/// # Safety
/// `s` must be NULL or a handle from [`edmc_solve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn edmc_solution_free(s: *mut EdmcSolution) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// # Safety
/// `s` must be NULL or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn edmc_solution_n(s: *const EdmcSolution) -> usize {
    s.as_ref().map_or(0, |s| s.y.nrows())
}

/// # Safety
/// `s` must be NULL or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn edmc_solution_dim(s: *const EdmcSolution) -> usize {
    s.as_ref().map_or(0, |s| s.y.ncols())
}

/// # Safety
/// `s` must be NULL or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn edmc_solution_iters(s: *const EdmcSolution) -> usize {
    s.as_ref().map_or(0, |s| s.iters)
}

/// # Safety
/// `s` must be NULL or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn edmc_solution_grad_norm(s: *const EdmcSolution) -> f64 {
    s.as_ref().map_or(f64::NAN, |s| s.grad_norm)
}

/// # Safety
/// `s` must be a live solution handle and `stop` writable.
#[no_mangle]
pub unsafe extern "C" fn edmc_solution_stop(
    s: *const EdmcSolution,
    stop: *mut EdmcStop,
) -> EdmcStatus {
    match (s.as_ref(), stop.as_mut()) {
        (Some(s), Some(out)) => {
            *out = s.stop;
            EdmcStatus::Ok
        }
        _ => fail(
            EdmcStatus::NullPointer,
            "null argument to edmc_solution_stop",
        ),
    }
}

/// Copies the centered positions row-major into `buf` (`len >= n * dim`).
///
/// # Safety
/// `s` must be a live solution handle and `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn edmc_solution_positions(
    s: *const EdmcSolution,
    buf: *mut f64,
    len: usize,
) -> EdmcStatus {
    let (Some(s), false) = (s.as_ref(), buf.is_null()) else {
        return fail(
            EdmcStatus::NullPointer,
            "null argument to edmc_solution_positions",
        );
    };
    let (n, d) = s.y.shape();
    if len < n * d {
        return fail(
            EdmcStatus::BufferTooSmall,
            &format!("need {} doubles, got {len}", n * d),
        );
    }
    let dst = slice::from_raw_parts_mut(buf, n * d);
    for r in 0..n {
        for c in 0..d {
            dst[r * d + c] = s.y[(r, c)];
        }
    }
    EdmcStatus::Ok
}
