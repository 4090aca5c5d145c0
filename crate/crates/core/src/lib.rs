//! Simulation and analysis of a post-selected two-qubit non-local
//! conversion gate for polarization qubits.
//!
//! The crate covers the gate operator and its cluster-state conversions,
//! Choi-matrix channels, simulated coincidence-count tomography with
//! maximum-likelihood reconstruction, the usual figures of merit, simple
//! noise models, and end-to-end report pipelines.

pub mod error;
pub mod gate;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod noise;
pub mod pipeline;
pub mod seed;
pub mod state;
pub mod tomography;

pub use error::{Error, Result};
pub use gate::{GateCoefficients, GateSettings, PresetName};
pub use linalg::CMatrix;
pub use state::{ChoiProcess, DensityMatrix, PureState};

/// Version string recorded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
