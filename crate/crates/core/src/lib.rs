//! Stationary states of a boundary-driven, dephased spinless-fermion chain.
//!
//! The chain carries nearest-neighbour hopping and density-density
//! interaction, is pumped at its two ends by Lindblad reservoirs with bias
//! `f`, and is dephased uniformly at rate `γ`. The crate provides
//!
//! * builders for the Hamiltonian, jump and measurement operators ([`model`]),
//! * an exact solver on the vectorized Liouville space ([`exact`]),
//! * a matrix-product-operator time evolution for longer chains ([`mpo`]),
//! * the few-level toy model of the bound domain state ([`toy`]),
//! * closed-form reference results ([`predictions`]),
//! * sweeps, optimal-dephasing search and fits ([`analysis`]).
//!
//! The occupation basis convention lives in [`basis`].

pub mod analysis;
pub mod basis;
pub mod error;
pub mod exact;
pub mod linalg;
pub mod model;
pub mod mpo;
pub mod predictions;
pub mod sparse;
pub mod toy;

pub use error::{Error, Result};
pub use exact::{ConvergenceReport, DensityMatrix, ObservableRecord, SparseSuperoperator};
pub use model::{ChainParameters, OperatorMatrix};
pub use mpo::{MpoState, TruncationPolicy};
pub use toy::ToyParameters;

/// Crate version embedded in output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
