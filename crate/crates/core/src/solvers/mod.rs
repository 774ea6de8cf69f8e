//! The localization solvers and their configuration.

mod config;
mod init;
mod madmm;
mod rank_reduction;
mod rcg;

pub use config::{AdmmConfig, LsPolicy, SolverConfig};
pub use init::{svd_mds_init, InitResult};
pub use madmm::{madmm, soft_threshold};
pub use rank_reduction::{rank_reduction, singular_gap_index};
pub use rcg::{beta_hz_plus, gd, rcg};

use serde::{Deserialize, Serialize};

use crate::Mat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    GradTol,
    StepTol,
    /// GD only: cost change fell below the stall threshold.
    CostStall,
    MaxIter,
    /// GD only: too many cost-ascent events.
    AscentAbort,
    LineSearchFailed,
    /// MADMM only: both residual tests passed.
    ResidualTol,
    /// MADMM only: the primal residual blew up.
    Diverged,
}

impl SolveStatus {
    pub fn is_failure(self) -> bool {
        matches!(
            self,
            Self::LineSearchFailed | Self::Diverged | Self::AscentAbort
        )
    }
}

/// Output of one solver run.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub y: Mat,
    pub iters: usize,
    /// Objective value at the start and after every iteration.
    pub cost_trace: Vec<f64>,
    /// Frobenius norm of the Riemannian gradient at the returned point.
    pub final_grad_norm: f64,
    pub status: SolveStatus,
    /// Steepest-descent restarts triggered by a non-descent direction.
    pub restarts: usize,
    /// Iterations at which `YᵀY` had to be regularized.
    pub regularized_steps: usize,
    /// Iteration at which the line search switched to HZ, if it did.
    pub switched_at: Option<usize>,
    /// Factor ranks visited (rank reduction only).
    pub rank_trace: Vec<usize>,
}
