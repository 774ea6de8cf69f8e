//! Simulation harness: scenes, measurement pipelines, sweeps and probes.

mod experiment;
mod io;
mod probes;
mod scene;
mod selfcheck;
mod sweep;

pub use experiment::{
    build_instance, run_trial, ExperimentSpec, Instance, MaskScheme, MeasurementSpec, SolverKind,
    SweepAxis, SweepSpec, Thresholds, TrialReport,
};
pub use io::{
    read_measurements, read_scene, write_measurements_csv, write_measurements_json, write_scene,
    MeasurementFile, SceneFile,
};
pub use probes::{
    basin_probe, phase_gd_config, phase_grid, rigidity_curve, spectral_gd_trial, BasinReport,
    GridAxis, PhaseCell, PhaseGridSpec, RatioSummary, RigidityPoint,
};
pub use scene::{gen_scene, SceneKind, SceneSpec};
pub use selfcheck::{selfcheck, CheckResult};
pub use sweep::{quantile, run_sweep, trial_seed, SweepResult, SweepRow, TrialRecord};

/// SplitMix64 finalizer.
pub(crate) fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn derive_seed(base: u64, stream: u64) -> u64 {
    mix(base ^ mix(stream))
}
