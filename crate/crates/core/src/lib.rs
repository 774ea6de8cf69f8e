//! Sensor network localization posed as Euclidean distance matrix completion.
//!
//! The unknown configuration is a factor `Y` (n×d) living on the quotient
//! `ℝ*^{n×d}/O(d)`. The crate provides the EDM operators, the weighted s-stress
//! objective with its derivatives, the quotient geometry (two metrics), a
//! Hager–Zhang line search, and three solvers built on them:
//!
//! * [`solvers::rcg`]: Riemannian conjugate gradient with an Armijo phase that
//!   switches permanently to Hager–Zhang steps,
//! * [`solvers::rank_reduction`]: over-parameterized start at rank `d+2` that
//!   shrinks at the largest relative singular-value gap,
//! * [`solvers::madmm`]: an ADMM variant with an ℓ₁ data term for outliers.
//!
//! The [`harness`] module reproduces the simulation studies (scenes, sweeps,
//! basin probes, phase grids, rigidity curves) and backs the `edmc` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod edm;
pub mod error;
pub mod harness;
pub mod linesearch;
pub mod manifold;
pub mod metrics;
pub mod procrustes;
pub mod rigidity;
pub mod sampling;
pub mod solvers;
pub mod sstress;
pub mod types;

pub use error::{Error, Result};
pub use types::{Edm, GramMatrix, PointSet, SampleMask, SamplingScheme, Scene, WeightMatrix};

/// Dense real matrix used throughout the crate.
pub type Mat = nalgebra::DMatrix<f64>;
