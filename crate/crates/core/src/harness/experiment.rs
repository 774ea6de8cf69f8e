use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::derive_seed;
use super::scene::{gen_scene, SceneSpec};
use crate::metrics::recovery_metrics;
use crate::sampling::{
    apply_rssi_noise, build_weights, inject_outliers, sample_bernoulli, sample_bernoulli_entries,
    sample_unit_ball,
};
use crate::solvers::{
    gd, madmm, rank_reduction, rcg, svd_mds_init, AdmmConfig, SolveReport, SolveStatus,
    SolverConfig,
};
use crate::sstress::{hessian_is_psd, SstressProblem, DENSE_HESSIAN_MAX_N};
use crate::{Edm, Error, PointSet, Result, SampleMask, Scene, WeightMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    /// SVD-MDS start at rank d, then g¹-RCG.
    Rcg,
    RankReduction,
    /// SVD-MDS start at rank d, then g¹ gradient descent.
    Gd,
    /// Rank reduction output refined by robust ADMM.
    Madmm,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Rcg => "rcg",
            Self::RankReduction => "rank-reduction",
            Self::Gd => "gd",
            Self::Madmm => "madmm",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rcg" => Ok(Self::Rcg),
            "rank-reduction" => Ok(Self::RankReduction),
            "gd" => Ok(Self::Gd),
            "madmm" => Ok(Self::Madmm),
            other => Err(Error::InvalidArgument(format!("unknown solver '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskScheme {
    UnitBall,
    /// Each pair `i < j` independently with probability `p`.
    Bernoulli,
    /// Each ordered entry of `[n]²` independently with probability `p`.
    BernoulliEntries,
}

pub(crate) fn bernoulli_mask(
    scheme: MaskScheme,
    n: usize,
    p: f64,
    seed: u64,
) -> Result<SampleMask> {
    match scheme {
        MaskScheme::Bernoulli => sample_bernoulli(n, p, seed),
        MaskScheme::BernoulliEntries => sample_bernoulli_entries(n, p, seed),
        MaskScheme::UnitBall => Err(Error::InvalidArgument("expected a Bernoulli scheme".into())),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasurementSpec {
    pub scheme: MaskScheme,
    pub radius: f64,
    /// Bernoulli rate; ignored when `p_log_factor` is set.
    pub p: f64,
    /// Sets `p = factor·ln n / n` when present.
    pub p_log_factor: Option<f64>,
    pub sigma: f64,
    pub gamma: f64,
    pub p_out: f64,
    pub v_out: f64,
    pub anchor_clique: bool,
    /// Weighted s-stress; defaults to on whenever the data are corrupted.
    pub weighted: Option<bool>,
}

impl Default for MeasurementSpec {
    fn default() -> Self {
        Self {
            scheme: MaskScheme::UnitBall,
            radius: 0.4,
            p: 0.5,
            p_log_factor: None,
            sigma: 0.0,
            gamma: 2.0,
            p_out: 0.0,
            v_out: 0.5,
            anchor_clique: true,
            weighted: None,
        }
    }
}

impl MeasurementSpec {
    pub fn is_noisy(&self) -> bool {
        self.sigma > 0.0 || self.p_out > 0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Radius,
    Sigma,
    P,
    PLogFactor,
    POut,
    VOut,
    Sensors,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub re_exact: f64,
    pub re_loose: f64,
    /// Which threshold defines success in sweep tables.
    pub use_loose: bool,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            re_exact: 1e-5,
            re_loose: 1e-3,
            use_loose: false,
        }
    }
}

impl Thresholds {
    pub fn success(&self, re: f64) -> bool {
        re < if self.use_loose {
            self.re_loose
        } else {
            self.re_exact
        }
    }
}

/// One experiment as read from a TOML config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub master_seed: u64,
    pub trials: usize,
    pub solvers: Vec<SolverKind>,
    pub hessian_check: bool,
    pub scene: SceneSpec,
    pub measurement: MeasurementSpec,
    pub sweep: Option<SweepSpec>,
    /// Solver settings; the noiseless or noisy defaults apply when absent.
    pub solver: Option<SolverConfig>,
    pub admm: AdmmConfig,
    pub thresholds: Thresholds,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            master_seed: 1,
            trials: 50,
            solvers: vec![SolverKind::RankReduction],
            scene: SceneSpec::default(),
            measurement: MeasurementSpec::default(),
            sweep: None,
            solver: None,
            admm: AdmmConfig::default(),
            thresholds: Thresholds::default(),
            hessian_check: true,
        }
    }
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be ≥ 1".into()));
        }
        if self.solvers.is_empty() {
            return Err(Error::InvalidArgument("no solvers configured".into()));
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() || s.values.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidArgument(
                    "sweep values must be non-empty and strictly increasing".into(),
                ));
            }
        }
        self.solver_config().validate()?;
        self.admm.validate()
    }

    pub fn solver_config(&self) -> SolverConfig {
        self.solver.unwrap_or_else(|| {
            if self.measurement.is_noisy() {
                SolverConfig::noisy()
            } else {
                SolverConfig::noiseless()
            }
        })
    }

    /// Sweep values, or a single `NaN` placeholder when there is no sweep.
    pub fn sweep_values(&self) -> Vec<f64> {
        self.sweep
            .as_ref()
            .map_or(vec![f64::NAN], |s| s.values.clone())
    }

    /// Copy of the spec with the sweep axis set to `value`.
    pub fn at(&self, value: f64) -> Self {
        let mut s = self.clone();
        if let Some(sw) = &self.sweep {
            let m = &mut s.measurement;
            match sw.axis {
                SweepAxis::Radius => m.radius = value,
                SweepAxis::Sigma => m.sigma = value,
                SweepAxis::P => {
                    m.p = value;
                    m.p_log_factor = None;
                }
                SweepAxis::PLogFactor => m.p_log_factor = Some(value),
                SweepAxis::POut => m.p_out = value,
                SweepAxis::VOut => m.v_out = value,
                SweepAxis::Sensors => s.scene.sensors = value.round() as usize,
            }
        }
        s
    }
}

/// Everything a solver sees for one trial, plus the ground truth.
#[derive(Clone, Debug)]
pub struct Instance {
    pub scene: Scene,
    pub d_star: Edm,
    pub measured: Edm,
    pub mask: SampleMask,
    pub weights: WeightMatrix,
    pub problem: SstressProblem,
    pub seed: u64,
}

/// Scene, mask, noise and outliers for one trial, all derived from `seed`.
/// Anchor-to-anchor distances stay exact.
pub fn build_instance(spec: &ExperimentSpec, seed: u64) -> Result<Instance> {
    let scene = gen_scene(&spec.scene, derive_seed(seed, 1))?;
    let d_star = scene.edm();
    let m = &spec.measurement;
    let n = scene.n();
    let mask = match m.scheme {
        MaskScheme::UnitBall => {
            sample_unit_ball(&d_star, m.radius, &scene.anchor_indices, m.anchor_clique)?
        }
        scheme => {
            let p = m
                .p_log_factor
                .map_or(m.p, |c| (c * (n as f64).ln() / n as f64).min(1.0));
            bernoulli_mask(scheme, n, p, derive_seed(seed, 2))?
        }
    };
    let noisy = if m.sigma > 0.0 {
        apply_rssi_noise(&d_star, m.sigma, m.gamma, derive_seed(seed, 3))?
    } else {
        d_star.clone()
    };
    let corrupted = if m.p_out > 0.0 {
        inject_outliers(&noisy, &mask, m.p_out, m.v_out, derive_seed(seed, 4))?
    } else {
        noisy
    };
    let mut data = corrupted.into_matrix();
    for &a in &scene.anchor_indices {
        for &b in &scene.anchor_indices {
            data[(a, b)] = d_star.get(a, b);
        }
    }
    let measured = Edm::new_unchecked(data);
    let weights = if m.weighted.unwrap_or_else(|| m.is_noisy()) {
        build_weights(&measured, &d_star)?
    } else {
        WeightMatrix::ones(n)
    };
    let problem = SstressProblem::new(&measured, &mask, &weights)?;
    Ok(Instance {
        scene,
        d_star,
        measured,
        mask,
        weights,
        problem,
        seed,
    })
}

/// Per-trial output, serialized as the `solve` command's JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub solver: String,
    pub seed: u64,
    pub re: f64,
    pub msle: f64,
    pub iters: usize,
    pub final_grad_norm: f64,
    pub hessian_psd: Option<bool>,
    pub wall_ms: f64,
    pub status: SolveStatus,
}

fn solve(inst: &Instance, kind: SolverKind, spec: &ExperimentSpec) -> Result<SolveReport> {
    let cfg = spec.solver_config();
    let d = inst.scene.dim();
    let spectral =
        || -> Result<PointSet> { Ok(svd_mds_init(&inst.measured, &inst.mask, d, d)?.points) };
    match kind {
        SolverKind::Rcg => rcg(&inst.problem, &spectral()?, &cfg),
        SolverKind::Gd => gd(&inst.problem, &spectral()?, &cfg),
        SolverKind::RankReduction => rank_reduction(&inst.problem, d, &cfg, None),
        SolverKind::Madmm => {
            let warm = rank_reduction(&inst.problem, d, &cfg, None)?;
            let mut out = madmm(&inst.problem, &PointSet::new(warm.y)?, &spec.admm, &cfg)?;
            out.iters += warm.iters;
            Ok(out)
        }
    }
}

/// Runs one solver pipeline on `inst` and scores it against the ground truth.
/// The wall time covers the solver only.
pub fn run_trial(inst: &Instance, kind: SolverKind, spec: &ExperimentSpec) -> Result<TrialReport> {
    let start = Instant::now();
    let out = solve(inst, kind, spec)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let y_hat = PointSet::new(out.y)?;
    let metrics = recovery_metrics(&y_hat, &inst.scene, &inst.d_star)?;
    let hessian_psd = if spec.hessian_check && inst.scene.n() <= DENSE_HESSIAN_MAX_N {
        Some(hessian_is_psd(&inst.problem.hessian_blocks(&y_hat)?, 1e-8))
    } else {
        None
    };
    Ok(TrialReport {
        solver: kind.name().into(),
        seed: inst.seed,
        re: metrics.re,
        msle: metrics.msle,
        iters: out.iters,
        final_grad_norm: out.final_grad_norm,
        hessian_psd,
        wall_ms,
        status: out.status,
    })
}
