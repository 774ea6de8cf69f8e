use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use edmc::harness::{
    basin_probe, build_instance, read_measurements, rigidity_curve, run_sweep, run_trial,
    selfcheck, write_measurements_csv, write_measurements_json, write_scene, ExperimentSpec,
    MeasurementFile, PhaseGridSpec, SolverKind, SweepAxis,
};
use edmc::solvers::{gd, madmm, rank_reduction, rcg, svd_mds_init};
use edmc::{Error, PointSet};

#[derive(Parser)]
#[command(
    name = "edmc",
    version,
    about = "Sensor network localization by EDM completion"
)]
struct Cli {
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (directory for `simulate`); stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// TOML experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for trial-parallel commands.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Per-trial CSV dump for `sweep`.
    #[arg(long, global = true)]
    dump_trials: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one scene and its measurements.
    Simulate,
    /// Solve one instance and print the trial report as JSON.
    Solve {
        #[arg(long, default_value = "rank-reduction")]
        solver: String,
        /// Solve a measurement file instead of a simulated instance; prints
        /// the estimated positions.
        #[arg(long)]
        measurements: Option<PathBuf>,
        /// Embedding dimension for `--measurements`.
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },
    /// Run the configured sweep and write the aggregate CSV.
    Sweep,
    /// Probe restricted convexity and smoothness around a Gaussian cloud.
    BasinProbe {
        #[arg(long, default_value_t = 300)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, default_value_t = 100)]
        draws: usize,
    },
    /// Success fractions of spectral-init gradient descent over a grid.
    PhaseGrid,
    /// Generic (global) rigidity rates over the sweep radii of the config.
    RigidityCurve,
    /// Run the invariant suite.
    Selfcheck,
}

fn load_spec(cli: &Cli) -> edmc::Result<ExperimentSpec> {
    let mut spec = match &cli.config {
        Some(p) => ExperimentSpec::from_toml(&fs::read_to_string(p)?)?,
        None => ExperimentSpec::default(),
    };
    if let Some(s) = cli.seed {
        spec.master_seed = s;
    }
    Ok(spec)
}

fn sink(out: &Option<PathBuf>) -> edmc::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(fs::File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit_json<T: Serialize>(out: &Option<PathBuf>, value: &T) -> edmc::Result<()> {
    let mut w = sink(out)?;
    writeln!(w, "{}", serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn emit_csv<T: Serialize>(out: &Option<PathBuf>, rows: &[T]) -> edmc::Result<()> {
    let mut w = csv::Writer::from_writer(sink(out)?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Failure<'a, T: Serialize> {
    error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<&'a T>,
}

#[derive(Serialize)]
struct Estimate {
    solver: String,
    iters: usize,
    final_grad_norm: f64,
    status: edmc::solvers::SolveStatus,
    positions: Vec<Vec<f64>>,
}

fn solve_file(
    path: &Path,
    kind: SolverKind,
    dim: usize,
    spec: &ExperimentSpec,
) -> edmc::Result<(Estimate, bool)> {
    let file = read_measurements(path)?;
    let problem = file.problem()?;
    let (edm, mask) = (file.edm()?, file.mask()?);
    let cfg = spec.solver_config();
    let out = match kind {
        SolverKind::Rcg => rcg(&problem, &svd_mds_init(&edm, &mask, dim, dim)?.points, &cfg)?,
        SolverKind::Gd => gd(&problem, &svd_mds_init(&edm, &mask, dim, dim)?.points, &cfg)?,
        SolverKind::RankReduction => rank_reduction(&problem, dim, &cfg, None)?,
        SolverKind::Madmm => {
            let warm = rank_reduction(&problem, dim, &cfg, None)?;
            madmm(&problem, &PointSet::new(warm.y)?, &spec.admm, &cfg)?
        }
    };
    let failed = out.status.is_failure();
    let est = Estimate {
        solver: kind.name().into(),
        iters: out.iters,
        final_grad_norm: out.final_grad_norm,
        status: out.status,
        positions: PointSet::new(out.y)?.rows(),
    };
    Ok((est, failed))
}

fn run(cli: &Cli) -> edmc::Result<ExitCode> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    match &cli.command {
        Command::Simulate => {
            let base = load_spec(cli)?;
            let spec = base.at(base.sweep_values()[0]);
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
            fs::create_dir_all(&dir)?;
            let inst = build_instance(&spec, spec.master_seed)?;
            let m = &spec.measurement;
            let file = MeasurementFile::from_instance(&inst, m.sigma, m.gamma, m.p_out, m.v_out);
            write_scene(&dir.join("scene.json"), &inst.scene)?;
            write_measurements_csv(&dir.join("measurements.csv"), &file)?;
            write_measurements_json(&dir.join("measurements.json"), &file)?;
        }
        Command::Solve {
            solver,
            measurements,
            dim,
        } => {
            let kind = SolverKind::parse(solver)?;
            let spec = load_spec(cli)?;
            if let Some(path) = measurements {
                let (est, failed) = solve_file(path, kind, *dim, &spec)?;
                if failed {
                    let f = Failure {
                        error: format!("solver stopped with status {:?}", est.status),
                        report: Some(&est),
                    };
                    emit_json(&cli.out, &f)?;
                    return Ok(ExitCode::from(1));
                }
                emit_json(&cli.out, &est)?;
            } else {
                let inst = build_instance(&spec, spec.master_seed)?;
                let report = run_trial(&inst, kind, &spec)?;
                if report.status.is_failure() {
                    let f = Failure {
                        error: format!("solver stopped with status {:?}", report.status),
                        report: Some(&report),
                    };
                    emit_json(&cli.out, &f)?;
                    return Ok(ExitCode::from(1));
                }
                emit_json(&cli.out, &report)?;
            }
        }
        Command::Sweep => {
            let spec = load_spec(cli)?;
            let result = run_sweep(&spec)?;
            result.write_csv(sink(&cli.out)?)?;
            if let Some(p) = &cli.dump_trials {
                result.write_trials_csv(fs::File::create(p)?)?;
            }
        }
        Command::BasinProbe { n, d, p, draws } => {
            let report = basin_probe(*n, *d, *p, *draws, cli.seed.unwrap_or(1))?;
            emit_json(&cli.out, &report)?;
        }
        Command::PhaseGrid => {
            let path = cli
                .config
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("phase-grid needs --config".into()))?;
            let mut spec = PhaseGridSpec::from_toml(&fs::read_to_string(path)?)?;
            if let Some(s) = cli.seed {
                spec.master_seed = s;
            }
            emit_csv(&cli.out, &spec.run()?)?;
        }
        Command::RigidityCurve => {
            let spec = load_spec(cli)?;
            let radii = match &spec.sweep {
                Some(s) if s.axis == SweepAxis::Radius => s.values.clone(),
                _ => vec![spec.measurement.radius],
            };
            emit_csv(&cli.out, &rigidity_curve(&spec, &radii)?)?;
        }
        Command::Selfcheck => {
            let results = selfcheck(cli.seed.unwrap_or(1))?;
            let mut w = sink(&cli.out)?;
            let mut ok = true;
            for r in &results {
                ok &= r.passed;
                writeln!(
                    w,
                    "{} {}: worst {:e} (tolerance {:e})",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    r.worst,
                    r.tolerance
                )?;
            }
            if !ok {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            let f: Failure<()> = Failure {
                error: e.to_string(),
                report: None,
            };
            let text =
                serde_json::to_string(&f).unwrap_or_else(|_| format!("{{\"error\":\"{e}\"}}"));
            let _ = writeln!(io::stdout(), "{text}");
            ExitCode::from(1)
        }
    }
}
