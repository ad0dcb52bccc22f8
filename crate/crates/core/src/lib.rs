//! Kernel density estimation for dyadic (network edge) data with jackknife
//! empirical likelihood inference.
//!
//! The crate covers complete networks and networks whose edges are missing
//! at random:
//!
//! * [`sample`]: edge-valued undirected networks with an observation mask.
//! * [`estimator`]: the dyadic KDE, its leave-one-out and leave-two-out
//!   versions, and rule-of-thumb bandwidths.
//! * [`inference`]: JEL, modified JEL and modified-jackknife Wald intervals.
//! * [`montecarlo`]: simulation designs and coverage experiments.
//! * [`cli`]: the `dyadkde` command-line front end.

pub mod cli;
pub mod el;
pub mod error;
pub mod estimator;
pub mod inference;
pub mod kernel;
pub mod montecarlo;
pub mod rng;
pub mod sample;
pub mod stats;

pub use el::{el_log_ratio, ElRatio};
pub use error::{Error, Result};
pub use estimator::{BandwidthRule, EstimationPath, KernelSums, LeaveOutEstimates};
pub use inference::{InferenceResult, JackknifeEl, Method, PseudoValueSet};
pub use kernel::{KernelFamily, KernelSpec};
pub use montecarlo::{CoverageReport, SimulationConfig};
pub use sample::{AggregateStat, DyadicSample, EdgeRecord};
