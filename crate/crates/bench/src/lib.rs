//! Fixtures shared by the criterion benches.

use iqae_core::models::{ising, random_pauli};
use iqae_core::{MomentBasis, PauliHamiltonian, PauliTerm, ReferenceState};

/// Periodic transverse Ising chain at `h = 1/2` with its moment basis at order `k`.
pub fn ising_fixture(n: usize, k: usize) -> (PauliHamiltonian, MomentBasis, ReferenceState) {
    let h = ising(n, 1.0, 0.5, true).expect("valid chain");
    let basis = MomentBasis::build(h.strings(), k, None).expect("valid generators");
    let state = ReferenceState::zero(n).expect("valid width");
    (h, basis, state)
}

/// Wide random Pauli model with a capped basis over `|0…0⟩`.
pub fn random_fixture(n: usize, r: usize, cap: usize) -> (PauliHamiltonian, MomentBasis, ReferenceState) {
    let h = random_pauli(n, r, 7).expect("valid model");
    let basis = MomentBasis::build(h.strings(), r, Some(cap)).expect("valid generators");
    let state = ReferenceState::zero(n).expect("valid width");
    (h, basis, state)
}

/// Pairs of random strings for multiplication benches.
pub fn string_pairs(n: usize, count: usize) -> Vec<(PauliTerm, PauliTerm)> {
    let h = random_pauli(n, 2 * count, 3).expect("enough strings");
    let s = h.strings();
    s.chunks(2).map(|c| (c[0].clone(), c[1].clone())).collect()
}
