use serde::{Deserialize, Serialize};

use crate::linesearch::{LineSearchParams, WolfeMode};
use crate::manifold::Metric;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LsPolicy {
    /// Armijo steps from the exact quartic minimizer until the switch fires,
    /// then approximate-Wolfe HZ steps.
    Switching,
    /// HZ from the first iteration (standard Wolfe until the switch fires).
    PureHz,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub imax: usize,
    pub grad_tol: f64,
    pub step_tol: f64,
    pub metric: Metric,
    pub ls: LineSearchParams,
    pub policy: LsPolicy,
    pub armijo_c1: f64,
    pub armijo_max_halvings: usize,
    pub omega: f64,
    pub delta: f64,
    /// Iteration caps of the rank-reduction stages.
    pub n1: usize,
    pub n2: usize,
    /// Truncation constant η̄ of the HZ+ update.
    pub beta_eta: f64,
    pub gd_cost_tol: f64,
    pub gd_max_ascents: usize,
    /// Seed of the perturbation applied to rank-deficient starting points.
    pub perturb_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::noiseless()
    }
}

impl SolverConfig {
    pub fn noiseless() -> Self {
        Self {
            imax: 600,
            grad_tol: 1e-15,
            step_tol: 1e-14,
            metric: Metric::G1,
            ls: LineSearchParams::default(),
            policy: LsPolicy::Switching,
            armijo_c1: 0.5,
            armijo_max_halvings: 10,
            omega: 0.005,
            delta: 0.7,
            n1: 300,
            n2: 300,
            beta_eta: 0.01,
            gd_cost_tol: 1e-10,
            gd_max_ascents: 10,
            perturb_seed: 0x5eed,
        }
    }

    pub fn noisy() -> Self {
        Self {
            grad_tol: 1e-6,
            step_tol: 1e-10,
            ..Self::noiseless()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ls.validate(WolfeMode::Standard)?;
        if !(self.armijo_c1 > 0.0 && self.armijo_c1 < 1.0) {
            return Err(Error::InvalidArgument(
                "armijo_c1 must lie in (0, 1)".into(),
            ));
        }
        if !(self.delta >= 0.0 && self.delta <= 1.0 && self.omega >= 0.0) {
            return Err(Error::InvalidArgument(
                "switch parameters out of range".into(),
            ));
        }
        if self.grad_tol < 0.0 || self.step_tol < 0.0 || self.beta_eta <= 0.0 {
            return Err(Error::InvalidArgument(
                "tolerances must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdmmConfig {
    pub rho0: f64,
    pub lambda: f64,
    pub tau: f64,
    pub rho_max: f64,
    pub t_f: usize,
    pub eps_tol: f64,
    pub n_outer: usize,
    /// RCG iterations per Y-subproblem.
    pub inner_iters: usize,
    /// Growth factor of the primal residual over `divergence_window` steps
    /// that aborts the run.
    pub divergence_factor: f64,
    pub divergence_window: usize,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            rho0: 1e-3,
            lambda: 1e-6,
            tau: 1.05,
            rho_max: 100.0,
            t_f: 2,
            eps_tol: 0.02,
            n_outer: 600,
            inner_iters: 2,
            divergence_factor: 10.0,
            divergence_window: 50,
        }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho0 > 0.0
            && self.lambda >= 0.0
            && self.tau >= 1.0
            && self.rho_max > 0.0
            && self.t_f > 0)
        {
            return Err(Error::InvalidArgument(
                "ADMM continuation parameters out of range".into(),
            ));
        }
        if !(self.eps_tol > 0.0 && self.inner_iters > 0) {
            return Err(Error::InvalidArgument(
                "ADMM tolerances out of range".into(),
            ));
        }
        Ok(())
    }
}
