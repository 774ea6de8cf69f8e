//! Landscape and sample-complexity probes.

use log::warn;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::derive_seed;
use super::experiment::{bernoulli_mask, build_instance, ExperimentSpec, MaskScheme};
use super::scene::{gen_scene, SceneKind, SceneSpec};
use super::sweep::{quantile, trial_seed};
use crate::manifold::{Geometry, Metric};
use crate::metrics::relative_edm_error;
use crate::procrustes::procrustes_mat;
use crate::rigidity::rigidity_probe;
use crate::sampling::{rng_from, sample_bernoulli};
use crate::solvers::{gd, svd_mds_init, SolverConfig};
use crate::sstress::SstressProblem;
use crate::types::center_columns;
use crate::{Edm, Error, Mat, PointSet, Result, WeightMatrix};

/// Frobenius radius of region B is `√(σ*_d / FROB_DIVISOR)`.
pub const FROB_DIVISOR: f64 = 120.0;
/// Row-norm cap of region B is `σ*_d / (ROW_DIVISOR·n)`.
pub const ROW_DIVISOR: f64 = 80.0;
/// Constant of the restricted convexity bound in the proof.
pub const REFERENCE_CONVEXITY_CONSTANT: f64 = 2.3;
const MAX_REJECTS: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl RatioSummary {
    fn of(v: &[f64]) -> Self {
        Self {
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            median: quantile(v, 0.5),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasinReport {
    pub n: usize,
    pub d: usize,
    pub p: f64,
    pub draws: usize,
    pub sigma_1: f64,
    pub sigma_d: f64,
    pub mu: f64,
    pub kappa: f64,
    /// ⟨∇f̄(Y), Δ⟩ / (p σ*_d ‖Δ‖²_F).
    pub convexity: RatioSummary,
    /// ‖∇f̄(Y)‖_F / (p μ d σ*₁ ‖Δ‖_F).
    pub smoothness: RatioSummary,
    pub reference_constant: f64,
    pub min_delta_norm: f64,
    pub rejections: usize,
    /// Set when rejection sampling stalled and the row cap was doubled.
    pub widened_row_cap: bool,
}

fn row_norm2_max(m: &Mat) -> f64 {
    m.row_iter().map(|r| r.norm_squared()).fold(0.0, f64::max)
}

/// Samples Δ in region B around a centered Gaussian Y* and evaluates the
/// restricted convexity and smoothness ratios of the s-stress gradient.
pub fn basin_probe(n: usize, d: usize, p: f64, n_draws: usize, seed: u64) -> Result<BasinReport> {
    if n_draws == 0 || !(0.0..=1.0).contains(&p) || p == 0.0 {
        return Err(Error::InvalidArgument(
            "basin probe needs draws ≥ 1 and p in (0, 1]".into(),
        ));
    }
    let mut rng = rng_from(derive_seed(seed, 1));
    let y_star = center_columns(&Mat::from_fn(n, d, |_, _| {
        rng.sample::<f64, _>(StandardNormal)
    }));
    let svd = y_star.clone().svd(true, false);
    let mut s: Vec<f64> = svd.singular_values.iter().map(|x| x * x).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    let (sigma_1, sigma_d) = (s[0], s[d - 1]);
    if sigma_d <= 0.0 {
        return Err(Error::InvalidArgument(
            "ground truth is rank deficient".into(),
        ));
    }
    let u = svd.u.as_ref().expect("left singular vectors");
    let mu = (n as f64 * row_norm2_max(u) / d as f64)
        .max(n as f64 * row_norm2_max(&y_star) / (d as f64 * sigma_1));
    let kappa = sigma_1 / sigma_d;

    let truth = PointSet::new(y_star.clone())?;
    let mask = sample_bernoulli(n, p, derive_seed(seed, 2))?;
    let problem = SstressProblem::new(&Edm::from_points(&truth), &mask, &WeightMatrix::ones(n))?;

    let geom = Geometry::at(&y_star, Metric::G1)?;
    let frob = (sigma_d / FROB_DIVISOR).sqrt();
    let mut row_cap = sigma_d / (ROW_DIVISOR * n as f64);
    let (mut rejections, mut stalled, mut widened) = (0, 0, false);
    let (mut conv, mut smooth) = (Vec::with_capacity(n_draws), Vec::with_capacity(n_draws));
    let mut min_delta_norm = f64::INFINITY;
    while conv.len() < n_draws {
        let raw = center_columns(&Mat::from_fn(n, d, |_, _| {
            rng.sample::<f64, _>(StandardNormal)
        }));
        // Horizontal at Y*, so the optimal alignment of Y* + Δ is the identity.
        let dir = geom.project_horizontal(&y_star, &raw);
        let radius = frob * 10f64.powf(-3.0 * rng.gen::<f64>());
        let delta = dir.scale(radius / dir.norm());
        if row_norm2_max(&delta) > row_cap {
            rejections += 1;
            stalled += 1;
            if stalled > MAX_REJECTS {
                warn!("basin probe: {MAX_REJECTS} consecutive rejections, doubling the row cap");
                row_cap *= 2.0;
                widened = true;
                stalled = 0;
            }
            continue;
        }
        stalled = 0;
        let y = &y_star + &delta;
        let align = procrustes_mat(&y, &y_star)?;
        let delta = align.delta;
        let g = problem.egrad(&PointSet::new(y)?)?;
        let dn = delta.norm();
        min_delta_norm = min_delta_norm.min(dn);
        conv.push(g.dot(&delta) / (p * sigma_d * dn * dn));
        smooth.push(g.norm() / (p * mu * d as f64 * sigma_1 * dn));
    }
    Ok(BasinReport {
        n,
        d,
        p,
        draws: n_draws,
        sigma_1,
        sigma_d,
        mu,
        kappa,
        convexity: RatioSummary::of(&conv),
        smoothness: RatioSummary::of(&smooth),
        reference_constant: REFERENCE_CONVEXITY_CONSTANT,
        min_delta_norm,
        rejections,
        widened_row_cap: widened,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridAxis {
    /// Rows over n at fixed dimension.
    NByP {
        dim: usize,
        sizes: Vec<usize>,
        rates: Vec<f64>,
    },
    /// Rows over d at fixed n.
    DByP {
        n: usize,
        dims: Vec<usize>,
        rates: Vec<f64>,
    },
}

impl GridAxis {
    fn cells(&self) -> Vec<(usize, usize, f64)> {
        match self {
            Self::NByP { dim, sizes, rates } => sizes
                .iter()
                .flat_map(|&n| rates.iter().map(move |&p| (n, *dim, p)))
                .collect(),
            Self::DByP { n, dims, rates } => dims
                .iter()
                .flat_map(|&d| rates.iter().map(move |&p| (*n, d, p)))
                .collect(),
        }
    }
}

/// Phase-grid experiment as read from a TOML config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseGridSpec {
    pub name: String,
    pub master_seed: u64,
    pub trials: usize,
    #[serde(default = "default_scheme")]
    pub scheme: MaskScheme,
    #[serde(default = "default_re_tol")]
    pub re_tol: f64,
    pub axis: GridAxis,
}

fn default_scheme() -> MaskScheme {
    MaskScheme::Bernoulli
}

fn default_re_tol() -> f64 {
    1e-3
}

impl PhaseGridSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text)?;
        if spec.scheme == MaskScheme::UnitBall {
            return Err(Error::InvalidArgument(
                "phase grids use a Bernoulli scheme".into(),
            ));
        }
        Ok(spec)
    }

    pub fn run(&self) -> Result<Vec<PhaseCell>> {
        phase_grid(
            &self.axis,
            self.scheme,
            self.trials,
            self.master_seed,
            self.re_tol,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub n: usize,
    pub d: usize,
    pub p: f64,
    pub trials: usize,
    pub successes: usize,
    pub fraction: f64,
}

/// Gradient descent settings of the phase-transition study: stop at
/// `‖p‖ ≤ 1e-6`, `α‖ξ‖ ≤ 1e-10`, `|Δf| ≤ 1e-10`, 10 ascents or 600 iterations.
pub fn phase_gd_config() -> SolverConfig {
    SolverConfig {
        metric: Metric::G1,
        imax: 600,
        grad_tol: 1e-6,
        step_tol: 1e-10,
        gd_cost_tol: 1e-10,
        gd_max_ascents: 10,
        ..SolverConfig::noiseless()
    }
}

/// Relative EDM error of SVD-MDS followed by gradient descent on one
/// Gaussian-cloud instance.
pub fn spectral_gd_trial(
    n: usize,
    d: usize,
    p: f64,
    scheme: MaskScheme,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<f64> {
    let spec = SceneSpec {
        kind: SceneKind::GaussianCloud,
        sensors: n,
        dim: d,
        ..SceneSpec::default()
    };
    let scene = gen_scene(&spec, derive_seed(seed, 1))?;
    let d_star = scene.edm();
    let mask = bernoulli_mask(scheme, n, p, derive_seed(seed, 2))?;
    let problem = SstressProblem::new(&d_star, &mask, &WeightMatrix::ones(n))?;
    let y0 = svd_mds_init(&d_star, &mask, d, d)?.points;
    let out = gd(&problem, &y0, cfg)?;
    relative_edm_error(&PointSet::new(out.y)?, &d_star)
}

/// Success fraction (RE below `re_tol`) of spectral-init GD per grid cell.
/// Failed trials count as misses.
pub fn phase_grid(
    axis: &GridAxis,
    scheme: MaskScheme,
    trials: usize,
    seed: u64,
    re_tol: f64,
) -> Result<Vec<PhaseCell>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("phase grid needs trials ≥ 1".into()));
    }
    let cfg = phase_gd_config();
    let cells = axis.cells();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..trials).map(move |t| (c, t)))
        .collect();
    let hits: Vec<(usize, bool)> = jobs
        .par_iter()
        .map(|&(c, t)| {
            let (n, d, p) = cells[c];
            let ok = spectral_gd_trial(n, d, p, scheme, trial_seed(seed, c, t), &cfg)
                .is_ok_and(|re| re < re_tol);
            (c, ok)
        })
        .collect();
    Ok(cells
        .iter()
        .enumerate()
        .map(|(c, &(n, d, p))| {
            let successes = hits.iter().filter(|&&(k, ok)| k == c && ok).count();
            PhaseCell {
                n,
                d,
                p,
                trials,
                successes,
                fraction: successes as f64 / trials as f64,
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidityPoint {
    pub radius: f64,
    pub trials: usize,
    pub rigid_rate: f64,
    pub globally_rigid_rate: f64,
}

/// Fraction of unit-ball graphs that are generically (globally) rigid, per
/// radius. Trial seeds match `run_sweep` on the same spec.
pub fn rigidity_curve(spec: &ExperimentSpec, radii: &[f64]) -> Result<Vec<RigidityPoint>> {
    radii
        .iter()
        .enumerate()
        .map(|(idx, &radius)| {
            let mut s = spec.clone();
            s.measurement.radius = radius;
            let reports: Vec<_> = (0..spec.trials)
                .into_par_iter()
                .map(|t| {
                    let inst = build_instance(&s, trial_seed(spec.master_seed, idx, t))?;
                    rigidity_probe(&inst.mask, &inst.scene.positions)
                })
                .collect::<Result<_>>()?;
            let k = reports.len() as f64;
            Ok(RigidityPoint {
                radius,
                trials: reports.len(),
                rigid_rate: reports.iter().filter(|r| r.generically_rigid).count() as f64 / k,
                globally_rigid_rate: reports
                    .iter()
                    .filter(|r| r.generically_globally_rigid)
                    .count() as f64
                    / k,
            })
        })
        .collect()
}
