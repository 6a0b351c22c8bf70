//! Cumulative K-moment subspace eigensolver for Hamiltonians written as sums
//! of Pauli strings.
//!
//! A reference state `|ψ⟩` is expanded into the states `P|ψ⟩` for every
//! distinct product `P` of up to `K` Hamiltonian strings. The overlap matrices
//! of that basis are built from Pauli expectations and the lowest generalized
//! eigenvalue is taken as the ground-energy estimate.

pub mod backend;
pub mod error;
pub mod grouping;
pub mod linalg;
pub mod models;
pub mod moments;
pub mod oracles;
pub mod overlap;
pub mod pauli;
pub mod solver;

pub use backend::{
    expectation_exact, expectation_product, expectation_sampled, expectation_statevector, prepare_hardware_efficient,
    prepare_qaoa, Axis, Backend, Gate, Mixer, ParametricCircuit, QaoaPreparer, ReferenceState, ShotModel,
};
pub use error::{Error, Result};
pub use grouping::{plan, validate, MeasurementPlan};
pub use linalg::{hermitian_eig, CMatrix, CVector, HermitianEigen};
pub use models::ModelSpec;
pub use moments::{BasisElement, MomentBasis};
pub use overlap::{reduce_entry, unique_string_count, OverlapSet};
pub use pauli::{Letter, PauliHamiltonian, PauliTerm};
pub use solver::{
    hybrid_gradient, iterate, iterate_detailed, solve, sweep, GroundStateSolution, SolverConfig, TraceEntry,
};

pub use num_complex::Complex64;
