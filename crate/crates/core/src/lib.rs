//! Simulation of observational and interventional count data from causal DAGs.
//!
//! The central model ([`regnet`]) draws negative-binomial counts whose means
//! are modulated multiplicatively by a calibrated sigmoid of the parents'
//! mean-normalised expression. Two reference simulators live in
//! [`baselines`] (linear Gaussian ANM and a chemical-Langevin simulator with
//! Hill regulation), [`metrics`] scores generated data, and [`fit`] derives
//! per-node parameters from empirical count vectors.

pub mod baselines;
pub mod data;
pub mod error;
pub mod fit;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod regnet;
pub mod rng;

pub use data::SampleMatrix;
pub use error::{Error, Result};
pub use graph::{Dag, InterventionSpec, WeightedDag};
pub use regnet::{NodeParams, RegNetModel};
