//! Cumulative K-moment basis: all distinct Pauli words of length ≤ K over the
//! Hamiltonian's strings, applied to a fixed reference state.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{PauliKey, PauliTerm};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisElement {
    /// Phase-normalized product `U_{i_k} ··· U_{i_1}`.
    pub term: PauliTerm,
    /// Generator indices `i_1 … i_k`, applied right to left.
    pub word: Vec<usize>,
    /// Moment at which the element first appeared.
    pub level: usize,
}

/// Ordered, deduplicated moment basis. Elements are sorted by
/// `(level, word)`, so a prefix of length `M` is the first `M` states.
#[derive(Clone, Debug)]
pub struct MomentBasis {
    generators: Vec<PauliTerm>,
    elements: Vec<BasisElement>,
    seen: HashSet<PauliKey>,
    /// Start index of the most recent level.
    frontier: usize,
    level: usize,
    closure: Option<usize>,
    capped: bool,
}

impl MomentBasis {
    /// Basis containing only the reference state.
    pub fn new(generators: Vec<PauliTerm>) -> Result<Self> {
        let first = generators
            .first()
            .ok_or_else(|| Error::InvalidModel("moment basis needs at least one generator".into()))?;
        let n = first.n_qubits();
        for g in &generators {
            if g.n_qubits() != n {
                return Err(Error::SizeMismatch {
                    expected: n,
                    found: g.n_qubits(),
                });
            }
            if !g.is_hermitian() {
                return Err(Error::NonHermitian(g.to_string()));
            }
        }
        let generators: Vec<PauliTerm> = generators.iter().map(PauliTerm::without_phase).collect();
        let id = PauliTerm::identity(n);
        let mut seen = HashSet::new();
        seen.insert(id.key());
        Ok(MomentBasis {
            generators,
            elements: vec![BasisElement {
                term: id,
                word: Vec::new(),
                level: 0,
            }],
            seen,
            frontier: 0,
            level: 0,
            closure: None,
            capped: false,
        })
    }

    /// Breadth-first expansion up to moment `k_max`, optionally stopping after `cap` elements.
    pub fn build(generators: Vec<PauliTerm>, k_max: usize, cap: Option<usize>) -> Result<Self> {
        if cap == Some(0) {
            return Err(Error::InvalidModel("basis cap must be positive".into()));
        }
        let mut basis = MomentBasis::new(generators)?;
        if cap == Some(1) {
            basis.capped = true;
            return Ok(basis);
        }
        while basis.level < k_max && basis.closure.is_none() && !basis.capped {
            basis.extend_level(cap);
        }
        Ok(basis)
    }

    /// Adds the next moment level and returns how many elements were new.
    /// Records closure when a level produces nothing new.
    pub fn extend_level(&mut self, cap: Option<usize>) -> usize {
        if self.closure.is_some() || self.capped {
            return 0;
        }
        let start = self.elements.len();
        let next = self.level + 1;
        'outer: for parent in self.frontier..start {
            for (g, gen) in self.generators.iter().enumerate() {
                if cap.is_some_and(|m| self.elements.len() >= m) {
                    self.capped = true;
                    break 'outer;
                }
                let product = gen.mul_same_width(&self.elements[parent].term).without_phase();
                if self.seen.insert(product.key()) {
                    let mut word = self.elements[parent].word.clone();
                    word.push(g);
                    self.elements.push(BasisElement {
                        term: product,
                        word,
                        level: next,
                    });
                }
            }
        }
        if cap.is_some_and(|m| self.elements.len() >= m) {
            self.capped = true;
        }
        let added = self.elements.len() - start;
        if added == 0 && !self.capped {
            self.closure = Some(self.level);
        } else {
            self.frontier = start;
            self.level = next;
        }
        added
    }

    pub fn generators(&self) -> &[PauliTerm] {
        &self.generators
    }

    pub fn elements(&self) -> &[BasisElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn n_qubits(&self) -> usize {
        self.generators[0].n_qubits()
    }

    /// Highest level reached.
    pub fn k(&self) -> usize {
        self.level
    }

    /// Smallest `k` whose successor level produced nothing new, if seen.
    pub fn closure_order(&self) -> Option<usize> {
        self.closure
    }

    pub fn is_capped(&self) -> bool {
        self.capped
    }

    /// First `m` elements.
    pub fn prefix(&self, m: usize) -> MomentBasis {
        self.select(&(0..m.min(self.len())).collect::<Vec<_>>())
            .expect("prefix indices are in range")
    }

    /// Explicit subset override, in the given order. Index 0 must be included
    /// first so that the reference state stays at position 0.
    pub fn select(&self, indices: &[usize]) -> Result<MomentBasis> {
        if indices.first() != Some(&0) {
            return Err(Error::InvalidModel(
                "a basis selection must start with the reference state (index 0)".into(),
            ));
        }
        let mut seen = HashSet::new();
        let mut elements = Vec::with_capacity(indices.len());
        for &i in indices {
            let e = self.elements.get(i).ok_or_else(|| {
                Error::DimensionMismatch(format!("basis index {i} out of range {}", self.len()))
            })?;
            if !seen.insert(e.term.key()) {
                return Err(Error::InvalidModel(format!("basis index {i} selected twice")));
            }
            elements.push(e.clone());
        }
        let level = elements.iter().map(|e| e.level).max().unwrap_or(0);
        Ok(MomentBasis {
            generators: self.generators.clone(),
            frontier: elements.len(),
            elements,
            seen,
            level,
            closure: None,
            capped: true,
        })
    }

    /// JSON-friendly listing: `{label, word, level}` per element.
    pub fn export(&self) -> Vec<ExportedElement> {
        self.elements
            .iter()
            .map(|e| ExportedElement {
                label: e.term.to_string(),
                word: e.word.clone(),
                level: e.level,
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExportedElement {
    pub label: String,
    pub word: Vec<usize>,
    pub level: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn terms(labels: &[&str]) -> Vec<PauliTerm> {
        labels.iter().map(|s| s.parse().unwrap()).collect()
    }

    #[test]
    fn h2_first_moment() {
        let b = MomentBasis::build(terms(&["ZI", "IZ", "XX"]), 1, None).unwrap();
        let labels: Vec<String> = b.elements().iter().map(|e| e.term.to_string()).collect();
        assert_eq!(labels, ["II", "ZI", "IZ", "XX"]);
        assert_eq!(b.elements()[3].word, vec![2]);
    }

    #[test]
    fn square_collapses_to_identity() {
        let b = MomentBasis::build(terms(&["ZZ"]), 2, None).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b.closure_order(), Some(1));
    }

    #[test]
    fn h2_closure_matches_group_enumeration() {
        let b = MomentBasis::build(terms(&["ZI", "IZ", "XX"]), 10, None).unwrap();
        // group generated by {Z1, Z2, X1X2} modulo phase: {I, Z1, Z2, Z1Z2} x {I, X1X2}
        assert_eq!(b.len(), 8);
        assert_eq!(b.closure_order(), Some(3));
    }

    #[test]
    fn zero_moment_has_no_closure() {
        let b = MomentBasis::build(terms(&["ZZ"]), 0, None).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.closure_order(), None);
    }

    #[test]
    fn cap_stops_expansion() {
        let full = MomentBasis::build(terms(&["XI", "IX", "ZZ"]), 4, None).unwrap();
        let capped = MomentBasis::build(terms(&["XI", "IX", "ZZ"]), 4, Some(5)).unwrap();
        assert_eq!(capped.len(), 5);
        for (a, b) in capped.elements().iter().zip(full.elements()) {
            assert_eq!(a, b);
        }
        assert!(MomentBasis::build(terms(&["XI"]), 4, Some(0)).is_err());
    }

    #[test]
    fn words_are_lexicographic_within_level() {
        let b = MomentBasis::build(terms(&["XII", "IYI", "IIZ", "ZZI"]), 3, None).unwrap();
        for w in b.elements().windows(2) {
            assert!((w[0].level, &w[0].word) < (w[1].level, &w[1].word));
        }
    }

    #[test]
    fn rejects_bad_generators() {
        assert!(MomentBasis::build(vec![], 1, None).is_err());
        assert!(MomentBasis::build(terms(&["XX", "X"]), 1, None).is_err());
        assert!(MomentBasis::build(terms(&["iXX"]), 1, None).is_err());
    }

    #[test]
    fn select_requires_reference_first() {
        let b = MomentBasis::build(terms(&["ZI", "IZ", "XX"]), 1, None).unwrap();
        assert!(b.select(&[1, 0]).is_err());
        assert!(b.select(&[0, 3, 3]).is_err());
        let s = b.select(&[0, 3]).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.elements()[1].term.to_string(), "XX");
    }
}
