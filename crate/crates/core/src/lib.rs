//! Coherent Ising machine (CIM) simulation for l0-regularised compressed sensing.
//!
//! The support vector of a sparse signal is estimated by one of three
//! stochastic models of a CIM (open-loop Wigner, amplitude-controlled Wigner,
//! amplitude-controlled Positive-P), the signal on that support is estimated
//! by a classical linear solver, and the two alternate until the threshold
//! schedule is exhausted. Simulated annealing and LASSO baselines and an MRI
//! reconstruction pipeline live alongside.

pub mod altmin;
pub mod baselines;
pub mod cdp;
mod error;
pub mod harness;
pub mod instance;
pub mod linalg;
pub mod mri;
pub mod qubo;
pub mod rng;
pub mod sde;
pub mod support;

pub use error::{CimError, Result};
pub use instance::{gen_instance, Instance, InstanceParams, Metrics};
pub use qubo::{EnergyReport, QuboProblem};
pub use support::Support;
