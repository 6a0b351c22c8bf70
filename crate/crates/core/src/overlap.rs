//! Overlap matrices `E[n,m] = ⟨ψ|P_n† P_m|ψ⟩` and `D_k[n,m] = ⟨ψ|P_n† U_k P_m|ψ⟩`.
//!
//! Every entry is a phase `i^s` times the expectation of one Hermitian Pauli
//! string, so each distinct string is evaluated once and shared by all entries
//! that reduce to it. `D` stays factored per Hamiltonian term, which lets any
//! coefficient vector be recombined without touching the backend again.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::backend::{i_pow, Backend, ReferenceState};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::moments::{BasisElement, MomentBasis};
use crate::pauli::{PauliHamiltonian, PauliKey, PauliTerm};

/// `left† · mid · right` split into a prefactor in `{±1, ±i}` and a phase-free
/// Hermitian string.
pub fn reduce_entry(
    left: &PauliTerm,
    mid: Option<&PauliTerm>,
    right: &PauliTerm,
) -> Result<(Complex64, PauliTerm)> {
    let l = left.adjoint();
    let product = match mid {
        Some(m) => l.multiply(m)?.multiply(right)?,
        None => l.multiply(right)?,
    };
    Ok((i_pow(product.phase_exp() as u32), product.without_phase()))
}

/// Upper-triangle nonzero entries of a Hermitian matrix.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseUpper {
    pub dim: usize,
    pub entries: Vec<SparseEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseEntry {
    pub row: u32,
    pub col: u32,
    pub value: Complex64,
}

impl SparseUpper {
    fn from_dense(a: &CMatrix) -> Self {
        let mut entries = Vec::new();
        for col in 0..a.ncols() {
            for row in 0..=col {
                let value = a[(row, col)];
                if value != Complex64::new(0.0, 0.0) {
                    entries.push(SparseEntry {
                        row: row as u32,
                        col: col as u32,
                        value,
                    });
                }
            }
        }
        SparseUpper {
            dim: a.nrows(),
            entries,
        }
    }

    /// Adds `scale · A` into a dense Hermitian target.
    fn add_scaled_into(&self, scale: f64, target: &mut CMatrix) {
        for e in &self.entries {
            let (r, c) = (e.row as usize, e.col as usize);
            let v = e.value * scale;
            target[(r, c)] += v;
            if r != c {
                target[(c, r)] += v.conj();
            }
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        self.add_scaled_into(1.0, &mut m);
        m
    }

    fn truncated(&self, m: usize) -> SparseUpper {
        SparseUpper {
            dim: m,
            entries: self
                .entries
                .iter()
                .filter(|e| (e.col as usize) < m)
                .copied()
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub backend: Backend,
    pub n_qubits: usize,
    /// Hamiltonian the `D` factors belong to, with its assembly coefficients.
    pub terms: Vec<(f64, PauliTerm)>,
    /// Distinct strings sent to the backend.
    pub evaluated_strings: usize,
    /// Number of batched backend invocations.
    pub backend_calls: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CachedValue {
    pub string: PauliTerm,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct OverlapSet {
    basis: Vec<BasisElement>,
    e: CMatrix,
    d_terms: Vec<SparseUpper>,
    cache: HashMap<PauliKey, f64>,
    provenance: Provenance,
}

/// Serialized form: `{basis, E, D_terms, cache, provenance}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OverlapDocument {
    pub basis: Vec<BasisElement>,
    #[serde(rename = "E")]
    pub e: SparseUpper,
    #[serde(rename = "D_terms")]
    pub d_terms: Vec<SparseUpper>,
    pub cache: Vec<CachedValue>,
    pub provenance: Provenance,
}

struct RowFactors {
    /// `P_n† U_k` for `k = 0` (no middle factor) and every Hamiltonian term.
    left: Vec<PauliTerm>,
}

impl OverlapSet {
    /// Builds `E` and every `D_k` for the basis applied to `state`.
    pub fn assemble(
        basis: &MomentBasis,
        h: &PauliHamiltonian,
        state: &ReferenceState,
        backend: &Backend,
    ) -> Result<Self> {
        let mut set = OverlapSet {
            basis: Vec::new(),
            e: CMatrix::zeros(0, 0),
            d_terms: vec![SparseUpper::default(); h.len()],
            cache: HashMap::new(),
            provenance: Provenance {
                backend: *backend,
                n_qubits: h.n_qubits(),
                terms: h.terms().to_vec(),
                evaluated_strings: 0,
                backend_calls: 0,
            },
        };
        set.extend(basis, state, backend)?;
        Ok(set)
    }

    /// Adds the rows and columns of basis elements beyond the current size.
    /// The stored elements must be a prefix of `basis`.
    pub fn extend(&mut self, basis: &MomentBasis, state: &ReferenceState, backend: &Backend) -> Result<()> {
        let old = self.basis.len();
        let elements = basis.elements();
        if elements.len() < old || elements[..old] != self.basis[..] {
            return Err(Error::DimensionMismatch(
                "extension basis does not start with the assembled elements".into(),
            ));
        }
        if *backend != self.provenance.backend {
            return Err(Error::InvalidState("extension must reuse the assembly backend".into()));
        }
        let n = self.provenance.n_qubits;
        if basis.n_qubits() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                found: basis.n_qubits(),
            });
        }
        if state.n_qubits() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                found: state.n_qubits(),
            });
        }
        let dim = elements.len();
        if dim == old {
            return Ok(());
        }
        let mids: Vec<PauliTerm> = self.provenance.terms.iter().map(|(_, t)| t.clone()).collect();
        let rows: Vec<RowFactors> = elements
            .iter()
            .map(|el| {
                let adj = el.term.adjoint();
                let mut left = Vec::with_capacity(mids.len() + 1);
                left.push(adj.clone());
                left.extend(mids.iter().map(|m| adj.mul_same_width(m)));
                RowFactors { left }
            })
            .collect();

        // pass 1: distinct strings not yet cached, with the first entry needing each
        let mut pending: HashMap<PauliKey, usize> = HashMap::new();
        let mut strings: Vec<PauliTerm> = Vec::new();
        let mut first_use: Vec<(usize, usize)> = Vec::new();
        for col in old..dim {
            let right = &elements[col].term;
            for (row, factors) in rows.iter().enumerate().take(col + 1) {
                for l in &factors.left {
                    let key = l.mul_same_width(right).without_phase();
                    let k = key.key();
                    if !self.cache.contains_key(&k) && !pending.contains_key(&k) {
                        pending.insert(k, strings.len());
                        strings.push(key);
                        first_use.push((row, col));
                    }
                }
            }
        }
        drop(pending);
        if !strings.is_empty() {
            let values = evaluate(backend, state, &strings, &first_use)?;
            self.provenance.backend_calls += 1;
            self.provenance.evaluated_strings += strings.len();
            for (s, v) in strings.into_iter().zip(values) {
                self.cache.insert(s.key(), v);
            }
        }

        // pass 2: fill the new columns
        let mut e = CMatrix::zeros(dim, dim);
        e.view_mut((0, 0), (old, old)).copy_from(&self.e);
        for col in old..dim {
            let right = &elements[col].term;
            for (row, factors) in rows.iter().enumerate().take(col + 1) {
                for (slot, l) in factors.left.iter().enumerate() {
                    let product = l.mul_same_width(right);
                    let value = self.cache[&product.key()];
                    let mut entry = i_pow(product.phase_exp() as u32) * value;
                    if row == col {
                        entry.im = 0.0;
                    }
                    if slot == 0 {
                        e[(row, col)] = entry;
                        e[(col, row)] = entry.conj();
                    } else if entry != Complex64::new(0.0, 0.0) {
                        self.d_terms[slot - 1].entries.push(SparseEntry {
                            row: row as u32,
                            col: col as u32,
                            value: entry,
                        });
                    }
                }
            }
        }
        for d in &mut self.d_terms {
            d.dim = dim;
        }
        self.e = e;
        self.basis = elements.to_vec();
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[BasisElement] {
        &self.basis
    }

    pub fn e(&self) -> &CMatrix {
        &self.e
    }

    pub fn d_terms(&self) -> &[SparseUpper] {
        &self.d_terms
    }

    pub fn d_term_dense(&self, k: usize) -> CMatrix {
        self.d_terms[k].to_dense()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Assembly coefficients of the Hamiltonian.
    pub fn beta(&self) -> Vec<f64> {
        self.provenance.terms.iter().map(|(b, _)| *b).collect()
    }

    pub fn cache(&self) -> &HashMap<PauliKey, f64> {
        &self.cache
    }

    pub fn cache_len(&self) -> usize {
        self.cache.len()
    }

    /// Cached expectation of a string, if it was needed by some entry.
    pub fn cached(&self, p: &PauliTerm) -> Option<f64> {
        self.cache.get(&p.key()).copied()
    }

    /// Distinct cached strings in key order.
    pub fn cached_strings(&self) -> Vec<PauliTerm> {
        let mut keys: Vec<&PauliKey> = self.cache.keys().collect();
        keys.sort();
        keys.into_iter()
            .map(|k| PauliTerm::from_masks(self.provenance.n_qubits, k.x.clone(), k.z.clone(), 0).expect("cached masks are valid"))
            .collect()
    }

    /// `D(β) = Σ_k β_k D_k`.
    pub fn d_matrix(&self, beta: &[f64]) -> Result<CMatrix> {
        if beta.len() != self.d_terms.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for {} terms",
                beta.len(),
                self.d_terms.len()
            )));
        }
        let mut d = CMatrix::zeros(self.dim(), self.dim());
        for (b, term) in beta.iter().zip(&self.d_terms) {
            if *b != 0.0 {
                term.add_scaled_into(*b, &mut d);
            }
        }
        Ok(d)
    }

    /// `(D(β), E)` without any backend access.
    pub fn recombine(&self, beta: &[f64]) -> Result<(CMatrix, &CMatrix)> {
        Ok((self.d_matrix(beta)?, &self.e))
    }

    /// Overlaps of the first `m` basis elements.
    pub fn truncated(&self, m: usize) -> OverlapSet {
        let m = m.min(self.dim());
        let basis = self.basis[..m].to_vec();
        let d_terms: Vec<SparseUpper> = self.d_terms.iter().map(|d| d.truncated(m)).collect();
        let mut cache = HashMap::new();
        let terms: Vec<&PauliTerm> = self.provenance.terms.iter().map(|(_, t)| t).collect();
        for col in 0..m {
            for row in 0..=col {
                let adj = basis[row].term.adjoint();
                let e_key = adj.mul_same_width(&basis[col].term);
                let k = e_key.key();
                cache.insert(k.clone(), self.cache[&k]);
                for t in &terms {
                    let k = adj.mul_same_width(t).mul_same_width(&basis[col].term).key();
                    let v = self.cache[&k];
                    cache.insert(k, v);
                }
            }
        }
        OverlapSet {
            basis,
            e: self.e.view((0, 0), (m, m)).into_owned(),
            d_terms,
            cache,
            provenance: self.provenance.clone(),
        }
    }

    pub fn to_document(&self) -> OverlapDocument {
        let mut cache: Vec<CachedValue> = self
            .cached_strings()
            .into_iter()
            .map(|s| CachedValue {
                value: self.cache[&s.key()],
                string: s,
            })
            .collect();
        cache.sort_by(|a, b| a.string.key().cmp(&b.string.key()));
        OverlapDocument {
            basis: self.basis.clone(),
            e: SparseUpper::from_dense(&self.e),
            d_terms: self.d_terms.clone(),
            cache,
            provenance: self.provenance.clone(),
        }
    }

    pub fn from_document(doc: OverlapDocument) -> Result<Self> {
        let dim = doc.basis.len();
        if doc.e.dim != dim || doc.d_terms.iter().any(|d| d.dim != dim) {
            return Err(Error::DimensionMismatch("overlap document sizes disagree".into()));
        }
        if doc.d_terms.len() != doc.provenance.terms.len() {
            return Err(Error::DimensionMismatch("one D factor per Hamiltonian term expected".into()));
        }
        let in_range = |s: &SparseUpper| s.entries.iter().all(|e| e.row <= e.col && (e.col as usize) < dim);
        if !in_range(&doc.e) || !doc.d_terms.iter().all(in_range) {
            return Err(Error::DimensionMismatch("sparse entry outside the upper triangle".into()));
        }
        Ok(OverlapSet {
            e: doc.e.to_dense(),
            cache: doc.cache.into_iter().map(|c| (c.string.key(), c.value)).collect(),
            basis: doc.basis,
            d_terms: doc.d_terms,
            provenance: doc.provenance,
        })
    }
}

fn evaluate(
    backend: &Backend,
    state: &ReferenceState,
    strings: &[PauliTerm],
    first_use: &[(usize, usize)],
) -> Result<Vec<f64>> {
    match backend {
        Backend::Sampled(model) => {
            model.validate()?;
            backend.evaluate(state, strings).map_err(|e| {
                let (r, c) = first_use[0];
                e.at(r, c)
            })
        }
        _ => strings
            .iter()
            .zip(first_use)
            .map(|(s, &(r, c))| {
                backend
                    .evaluate(state, std::slice::from_ref(s))
                    .map(|v| v[0])
                    .map_err(|e| e.at(r, c))
            })
            .collect(),
    }
}

/// Number of distinct reduced strings an assembly would evaluate.
pub fn unique_string_count(basis: &MomentBasis, h: &PauliHamiltonian) -> Result<usize> {
    if basis.n_qubits() != h.n_qubits() {
        return Err(Error::SizeMismatch {
            expected: h.n_qubits(),
            found: basis.n_qubits(),
        });
    }
    let elements = basis.elements();
    let mut seen = std::collections::HashSet::new();
    for (col, right) in elements.iter().enumerate() {
        for left in &elements[..=col] {
            let adj = left.term.adjoint();
            seen.insert(adj.mul_same_width(&right.term).key());
            for (_, t) in h.terms() {
                seen.insert(adj.mul_same_width(t).mul_same_width(&right.term).key());
            }
        }
    }
    Ok(seen.len())
}
