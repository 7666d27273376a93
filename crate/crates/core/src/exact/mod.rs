//! Exact treatment of the full Liouville space: vectorized generator, time
//! evolution, stationary solves, observables and sector spectra.

pub mod density;
pub mod krylov;
pub mod ness;
pub mod observables;
pub mod precond;
pub mod spectrum;
pub mod superop;

pub use density::DensityMatrix;
pub use ness::{
    chain_evolve, chain_ness, chain_ness_with, default_step, evolve_to_ness, ness_nullspace,
    ness_nullspace_with, ConvergenceReport, EvolveOptions, ExactSolveOptions, NullspaceOptions,
    PreconditionerChoice, DEFAULT_NULLSPACE_CAP,
};
pub use observables::{measure, operator_schmidt_entropy, ObservableRecord};
pub use spectrum::{dark_state, sector_spectrum, DarkState, SectorSpectrum};
pub use superop::{
    chain_superoperator, vectorize, vectorize_in, Layout, LiouvilleSpace, SparseSuperoperator,
    DEFAULT_VECTORIZE_CAP,
};
