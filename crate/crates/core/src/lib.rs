//! Simulation and drift estimation for Ornstein-Uhlenbeck processes driven
//! by Rosenblatt noise with a periodic mean.
//!
//! * [`kernel`]: the fBm-type kernel and calibration of its constants.
//! * [`lattice`], [`rosenblatt`]: Brownian lattices and Rosenblatt paths.
//! * [`model`]: periodic drift, the SDE and its deterministic limits.
//! * [`estimators`]: least-squares and simulable alternative estimators.
//! * [`montecarlo`]: replicated experiments and their reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod kernel;
pub mod lattice;
pub mod model;
pub mod montecarlo;
pub mod rng;
pub mod rosenblatt;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use kernel::{calibrate_constants, kernel_dk, kernel_k, HurstParams, KernelConstants};
pub use lattice::{generate_brownian, BrownianLattice};
pub use rosenblatt::{
    covariance_oracle, lattice_covariance, rosenblatt_path_bruteforce, rosenblatt_path_fast,
    wiener_rosenblatt_integral, RosenblattGenerator, RosenblattPath,
};
pub use estimators::{EstimateResult, EstimatorKind};
pub use model::{Assumption, DriftSpec, ModelParams, SamplePath, TrigBasisFunction};
pub use montecarlo::{ExperimentConfig, ExperimentKind, ExperimentReport, Manifest};
