//! Measurement-induced entanglement dynamics of a monitored hard-core
//! Bose-Hubbard chain.
//!
//! The crate builds the fixed-filling Fock space and its projective
//! occupation jumps ([`fock`]), integrates single-copy master equations
//! ([`master`]) and the doubled EPR-paired equation whose swap trace gives
//! the trajectory-weighted Rényi-2 entropy ([`doubled`]), unravels the
//! doubled equation into quantum trajectories ([`trajectories`]), and
//! evaluates the competing entropy functionals on explicit outcome
//! ensembles ([`entropy`]).

pub mod doubled;
pub mod entropy;
pub mod error;
pub mod fock;
pub mod master;
pub mod operator;
pub mod parallel;
pub mod trajectories;

pub use doubled::{
    evolve_doubled, evolve_doubled_multi, swap_renyi_entropy, tensor_square, DoubledDensityMatrix, DoubledLindblad,
    DoubledRun, EntropySeries,
};
pub use entropy::{s_new, s_old, s_total, OutcomeEnsemble};
pub use error::{Error, Invariant, Result};
pub use fock::{
    build_basis, build_hamiltonian, build_jump_operators, parse_product_state, Boundary, FockBasis, HamiltonianParams,
    JumpOperatorSet,
};
pub use master::{
    evolve, partial_trace, renyi2, DensityMatrix, EvolutionConfig, SingleCopyEquation, SubsystemMask, Tolerances,
};
pub use operator::{Operator, C64};
pub use parallel::Execution;
pub use trajectories::{
    ensemble_entropy, run_trajectory, EnsembleEntropy, NoJumpScheme, Representation, TrajectoryConfig,
    TrajectoryRecord, Unraveling,
};
