use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::experiment::{build_instance, run_trial, ExperimentSpec, TrialReport};
use super::mix;
use crate::{Error, Result};

/// `hash(master, sweep_index, trial_index)`; distinct trials get unrelated streams.
pub fn trial_seed(master: u64, sweep_index: usize, trial_index: usize) -> u64 {
    mix(mix(mix(master) ^ sweep_index as u64) ^ trial_index as u64)
}

/// Quantile `q ∈ [0, 1]` with linear interpolation between order statistics.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub sweep_index: usize,
    pub value: f64,
    pub trial: usize,
    pub solver: String,
    pub seed: u64,
    /// `None` when the trial itself errored.
    pub report: Option<TrialReport>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub solver: String,
    pub re_q85: f64,
    pub msle_q85: f64,
    pub re_mean: f64,
    pub msle_mean: f64,
    pub success: f64,
    pub wall_ms: f64,
    pub grad_vanish_rate: f64,
    pub hessian_psd_rate: f64,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub trials: Vec<TrialRecord>,
}

/// Runs every (sweep value, trial, solver) combination on the current rayon
/// pool. Failed trials are recorded, never fatal.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepResult> {
    spec.validate()?;
    let values = spec.sweep_values();
    let jobs: Vec<(usize, usize)> = (0..values.len())
        .flat_map(|s| (0..spec.trials).map(move |t| (s, t)))
        .collect();
    let mut trials: Vec<TrialRecord> = jobs
        .par_iter()
        .flat_map_iter(|&(s, t)| {
            let value = values[s];
            let local = spec.at(value);
            let seed = trial_seed(spec.master_seed, s, t);
            let inst = build_instance(&local, seed);
            local.solvers.clone().into_iter().map(move |kind| {
                let outcome = inst
                    .as_ref()
                    .map_err(|e| e.to_string())
                    .and_then(|i| run_trial(i, kind, &local).map_err(|e| e.to_string()));
                let (report, error) = match outcome {
                    Ok(r) => (Some(r), None),
                    Err(e) => (None, Some(e)),
                };
                TrialRecord {
                    sweep_index: s,
                    value,
                    trial: t,
                    solver: kind.name().into(),
                    seed,
                    report,
                    error,
                }
            })
        })
        .collect();
    trials.sort_by_key(|t| (t.sweep_index, t.trial));

    let mut rows = Vec::new();
    for (s, &value) in values.iter().enumerate() {
        for kind in &spec.solvers {
            let name = kind.name();
            let group: Vec<&TrialRecord> = trials
                .iter()
                .filter(|r| r.sweep_index == s && r.solver == name)
                .collect();
            let ok: Vec<&TrialReport> = group.iter().filter_map(|r| r.report.as_ref()).collect();
            let total = group.len().max(1) as f64;
            let re: Vec<f64> = ok.iter().map(|r| r.re).collect();
            let msle: Vec<f64> = ok.iter().map(|r| r.msle).collect();
            let mean = |v: &[f64]| {
                if v.is_empty() {
                    f64::NAN
                } else {
                    v.iter().sum::<f64>() / v.len() as f64
                }
            };
            let grad_tol = spec.solver_config().grad_tol.max(1e-6);
            rows.push(SweepRow {
                value,
                solver: name.into(),
                re_q85: quantile(&re, 0.85),
                msle_q85: quantile(&msle, 0.85),
                re_mean: mean(&re),
                msle_mean: mean(&msle),
                success: ok.iter().filter(|r| spec.thresholds.success(r.re)).count() as f64 / total,
                wall_ms: mean(&ok.iter().map(|r| r.wall_ms).collect::<Vec<_>>()),
                grad_vanish_rate: ok.iter().filter(|r| r.final_grad_norm <= grad_tol).count()
                    as f64
                    / total,
                hessian_psd_rate: ok.iter().filter(|r| r.hessian_psd == Some(true)).count() as f64
                    / total,
                failures: group.len() - ok.len(),
            });
        }
    }
    Ok(SweepResult { rows, trials })
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

impl SweepResult {
    /// CSV with header `value,solver,re_q85,msle_q85,success,wall_ms`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "value", "solver", "re_q85", "msle_q85", "success", "wall_ms",
        ])?;
        for r in &self.rows {
            w.write_record([
                fmt(r.value),
                r.solver.clone(),
                fmt(r.re_q85),
                fmt(r.msle_q85),
                fmt(r.success),
                format!("{:.3}", r.wall_ms),
            ])?;
        }
        w.flush().map_err(Error::from)
    }

    /// One row per trial and solver, sorted by (sweep index, trial).
    pub fn write_trials_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "sweep_index",
            "value",
            "trial",
            "solver",
            "seed",
            "re",
            "msle",
            "iters",
            "final_grad_norm",
            "hessian_psd",
            "status",
            "wall_ms",
            "error",
        ])?;
        for t in &self.trials {
            let mut rec = vec![
                t.sweep_index.to_string(),
                fmt(t.value),
                t.trial.to_string(),
                t.solver.clone(),
                t.seed.to_string(),
            ];
            match &t.report {
                Some(r) => rec.extend([
                    fmt(r.re),
                    fmt(r.msle),
                    r.iters.to_string(),
                    fmt(r.final_grad_norm),
                    r.hessian_psd.map_or(String::new(), |b| b.to_string()),
                    serde_json::to_value(r.status)?
                        .as_str()
                        .unwrap_or_default()
                        .to_string(),
                    format!("{:.3}", r.wall_ms),
                    String::new(),
                ]),
                None => {
                    rec.extend(std::iter::repeat_n(String::new(), 7));
                    rec.push(t.error.clone().unwrap_or_default());
                }
            }
            w.write_record(rec)?;
        }
        w.flush().map_err(Error::from)
    }
}
