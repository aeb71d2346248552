//! Numerical laboratory for gamma = 3 supersonic flow past an obstacle near
//! cavitation: gas charts, the regular and singular entropy kernels of the
//! Tricomi-Keldysh generator equation, Loewner-Morawetz entropy pairs, and a
//! vanishing-viscosity solver with its invariant-region and compactness
//! diagnostics.

pub mod artifacts;
pub mod asymptotics;
pub mod basis;
pub mod chart;
pub mod cheb;
pub mod config;
pub mod constants;
pub mod diagnostics;
pub mod entropy;
pub mod error;
pub mod jet;
pub mod kernel;
pub mod linalg;
pub mod mesh;
pub mod solver;
pub mod quad;

pub use basis::{BasisIndex, FourierBasisEval};
pub use artifacts::{run_sweep, ArtifactStore, RunOutcome};
pub use chart::{ConservedState, GasChart, GasConstants, StatePolar};
pub use config::RunConfig;
pub use error::{CavError, Result};
pub use entropy::{Generator, GenJet, KernelGenerator, SpecialGenerator};
