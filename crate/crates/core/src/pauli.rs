//! Phase-tracking N-qubit Pauli strings in symplectic form.
//!
//! A [`PauliTerm`] stores the operator `i^phase · σ_0 ⊗ σ_1 ⊗ … ⊗ σ_{n-1}` where
//! each letter `σ_q ∈ {I, X, Y, Z}` is encoded by one bit of `x` (X or Y) and one
//! bit of `z` (Z or Y). `Y` is the Hermitian Pauli matrix, so the `i` that appears
//! in `Y = i·X·Z` is never part of `phase`: a freshly parsed Hermitian label
//! always has `phase == 0` and a term is Hermitian iff `phase ∈ {0, 2}`.
//!
//! Qubit 0 is the leftmost label character and the lowest bit of the masks.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use smallvec::{smallvec, SmallVec};

use crate::error::{Error, Result};

/// Packed qubit mask. Up to 64 qubits live inline; wider masks spill to the heap.
pub type Mask = SmallVec<[u64; 1]>;

fn words_for(n_qubits: usize) -> usize {
    n_qubits.div_ceil(64).max(1)
}

#[inline]
fn popcount_and(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(p, q)| (p & q).count_ones()).sum()
}

#[inline]
fn bit(mask: &[u64], q: usize) -> bool {
    mask[q / 64] >> (q % 64) & 1 == 1
}

/// Single-qubit Pauli letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }
}

/// Phase-blind identity of a Pauli string: the `(x, z)` mask pair.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliKey {
    pub x: Mask,
    pub z: Mask,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliTerm {
    n_qubits: usize,
    x: Mask,
    z: Mask,
    phase: u8,
}

impl PauliTerm {
    pub fn identity(n_qubits: usize) -> Self {
        let w = words_for(n_qubits);
        PauliTerm {
            n_qubits,
            x: smallvec![0; w],
            z: smallvec![0; w],
            phase: 0,
        }
    }

    /// Builds a term from packed masks. Bits above `n_qubits` must be clear.
    pub fn from_masks(n_qubits: usize, x: Mask, z: Mask, phase: u8) -> Result<Self> {
        let w = words_for(n_qubits);
        if x.len() != w || z.len() != w {
            return Err(Error::DimensionMismatch(format!(
                "masks for {n_qubits} qubits need {w} words, got {} and {}",
                x.len(),
                z.len()
            )));
        }
        let tail = n_qubits % 64;
        if tail != 0 && n_qubits > 0 {
            let spill = !((1u64 << tail) - 1);
            if x[w - 1] & spill != 0 || z[w - 1] & spill != 0 {
                return Err(Error::DimensionMismatch(format!(
                    "mask bits set beyond qubit {}",
                    n_qubits - 1
                )));
            }
        }
        Ok(PauliTerm {
            n_qubits,
            x,
            z,
            phase: phase % 4,
        })
    }

    pub fn from_letters(letters: &[Letter]) -> Self {
        let mut t = PauliTerm::identity(letters.len());
        for (q, &l) in letters.iter().enumerate() {
            t.set_letter(q, l);
        }
        t
    }

    /// `letter` on the listed qubits, identity elsewhere.
    pub fn on_qubits(n_qubits: usize, ops: &[(usize, Letter)]) -> Result<Self> {
        let mut t = PauliTerm::identity(n_qubits);
        for &(q, l) in ops {
            if q >= n_qubits {
                return Err(Error::SizeMismatch {
                    expected: n_qubits,
                    found: q + 1,
                });
            }
            t.set_letter(q, l);
        }
        Ok(t)
    }

    fn set_letter(&mut self, q: usize, l: Letter) {
        let (bx, bz) = l.bits();
        let (w, b) = (q / 64, 1u64 << (q % 64));
        if bx {
            self.x[w] |= b;
        } else {
            self.x[w] &= !b;
        }
        if bz {
            self.z[w] |= b;
        } else {
            self.z[w] &= !b;
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_mask(&self) -> &[u64] {
        &self.x
    }

    pub fn z_mask(&self) -> &[u64] {
        &self.z
    }

    /// Exponent `p` of the global factor `i^p`.
    pub fn phase_exp(&self) -> u8 {
        self.phase
    }

    pub fn letter(&self, q: usize) -> Letter {
        Letter::from_bits(bit(&self.x, q), bit(&self.z, q))
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        (0..self.n_qubits).map(move |q| self.letter(q))
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase % 2 == 0
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().all(|&w| w == 0) && self.z.iter().all(|&w| w == 0)
    }

    /// Number of non-identity factors.
    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    pub fn key(&self) -> PauliKey {
        PauliKey {
            x: self.x.clone(),
            z: self.z.clone(),
        }
    }

    /// Same masks with the phase dropped.
    pub fn without_phase(&self) -> PauliTerm {
        PauliTerm {
            phase: 0,
            ..self.clone()
        }
    }

    pub fn with_phase(mut self, phase: u8) -> PauliTerm {
        self.phase = phase % 4;
        self
    }

    fn check_width(&self, other: &PauliTerm) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::SizeMismatch {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        Ok(())
    }

    /// Operator product `self · other`, phase included.
    pub fn multiply(&self, other: &PauliTerm) -> Result<PauliTerm> {
        self.check_width(other)?;
        Ok(self.mul_same_width(other))
    }

    pub(crate) fn mul_same_width(&self, other: &PauliTerm) -> PauliTerm {
        // i^{|x&z|} X^x Z^z per factor; moving Z^{z_a} past X^{x_b} costs (-1)^{|z_a & x_b|}.
        let mut acc = self.phase as u32
            + other.phase as u32
            + popcount_and(&self.x, &self.z)
            + popcount_and(&other.x, &other.z)
            + 2 * popcount_and(&self.z, &other.x);
        let x: Mask = self.x.iter().zip(&other.x).map(|(a, b)| a ^ b).collect();
        let z: Mask = self.z.iter().zip(&other.z).map(|(a, b)| a ^ b).collect();
        acc += 4 * 64 * x.len() as u32 - popcount_and(&x, &z);
        PauliTerm {
            n_qubits: self.n_qubits,
            x,
            z,
            phase: (acc % 4) as u8,
        }
    }

    pub fn adjoint(&self) -> PauliTerm {
        PauliTerm {
            phase: (4 - self.phase) % 4,
            ..self.clone()
        }
    }

    /// Qubit-wise commutativity: on every qubit the factors agree or one is identity.
    pub fn commutes_qubitwise(&self, other: &PauliTerm) -> Result<bool> {
        self.check_width(other)?;
        Ok(self.qubitwise_compatible(other))
    }

    pub(crate) fn qubitwise_compatible(&self, other: &PauliTerm) -> bool {
        self.x
            .iter()
            .zip(&self.z)
            .zip(other.x.iter().zip(&other.z))
            .all(|((xa, za), (xb, zb))| {
                let both = (xa | za) & (xb | zb);
                ((xa ^ xb) | (za ^ zb)) & both == 0
            })
    }

    /// Full (operator) commutativity.
    pub fn commutes(&self, other: &PauliTerm) -> Result<bool> {
        self.check_width(other)?;
        let s = popcount_and(&self.x, &other.z) + popcount_and(&self.z, &other.x);
        Ok(s % 2 == 0)
    }

    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.phase {
            0 => "",
            1 => "i",
            2 => "-",
            _ => "-i",
        })?;
        for l in self.letters() {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliTerm {
    type Err = Error;

    /// Grammar: `[+|-][i]? [IXYZ]{n}`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |position, reason| Error::MalformedLabel {
            label: s.to_string(),
            position,
            reason,
        };
        let chars: Vec<char> = s.chars().collect();
        let mut pos = 0;
        let mut phase = 0u8;
        match chars.first() {
            Some('+') => pos = 1,
            Some('-') => {
                phase = 2;
                pos = 1;
            }
            _ => {}
        }
        if chars.get(pos) == Some(&'i') {
            phase = (phase + 1) % 4;
            pos += 1;
        }
        let body = &chars[pos..];
        if body.is_empty() {
            return Err(bad(pos, "expected at least one Pauli letter"));
        }
        let mut letters = Vec::with_capacity(body.len());
        for (k, c) in body.iter().enumerate() {
            letters.push(match c {
                'I' => Letter::I,
                'X' => Letter::X,
                'Y' => Letter::Y,
                'Z' => Letter::Z,
                _ => return Err(bad(pos + k, "expected one of I, X, Y, Z")),
            });
        }
        Ok(PauliTerm::from_letters(&letters).with_phase(phase))
    }
}

impl Serialize for PauliTerm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliTerm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `H = Σ_k β_k P_k` with real coefficients and phase-free, pairwise distinct strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliHamiltonian {
    n_qubits: usize,
    terms: Vec<(f64, PauliTerm)>,
}

impl PauliHamiltonian {
    /// Validates widths and Hermiticity; duplicate strings are merged by summing
    /// their coefficients, keeping the position of the first occurrence.
    /// A term with phase `-1` has its sign folded into the coefficient.
    pub fn new(n_qubits: usize, terms: impl IntoIterator<Item = (f64, PauliTerm)>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidModel("Hamiltonian needs at least one qubit".into()));
        }
        let mut merged: Vec<(f64, PauliTerm)> = Vec::new();
        let mut index: HashMap<PauliKey, usize> = HashMap::new();
        for (beta, term) in terms {
            if term.n_qubits() != n_qubits {
                return Err(Error::SizeMismatch {
                    expected: n_qubits,
                    found: term.n_qubits(),
                });
            }
            if !term.is_hermitian() {
                return Err(Error::NonHermitian(term.to_string()));
            }
            if !beta.is_finite() {
                return Err(Error::InvalidModel(format!("non-finite coefficient for {term}")));
            }
            let beta = if term.phase_exp() == 2 { -beta } else { beta };
            let term = term.without_phase();
            match index.get(&term.key()) {
                Some(&k) => merged[k].0 += beta,
                None => {
                    index.insert(term.key(), merged.len());
                    merged.push((beta, term));
                }
            }
        }
        Ok(PauliHamiltonian {
            n_qubits,
            terms: merged,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[(f64, PauliTerm)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficients(&self) -> Vec<f64> {
        self.terms.iter().map(|(b, _)| *b).collect()
    }

    pub fn strings(&self) -> Vec<PauliTerm> {
        self.terms.iter().map(|(_, t)| t.clone()).collect()
    }

    /// Same strings, new coefficients.
    pub fn with_coefficients(&self, beta: &[f64]) -> Result<Self> {
        if beta.len() != self.terms.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for {} terms",
                beta.len(),
                self.terms.len()
            )));
        }
        Ok(PauliHamiltonian {
            n_qubits: self.n_qubits,
            terms: beta
                .iter()
                .zip(&self.terms)
                .map(|(&b, (_, t))| (b, t.clone()))
                .collect(),
        })
    }

    /// Coefficients of `other` laid out in this Hamiltonian's term order.
    /// Strings absent from `other` get zero; strings of `other` that do not
    /// appear here are an error.
    pub fn coefficients_of(&self, other: &PauliHamiltonian) -> Result<Vec<f64>> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::SizeMismatch {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        let index: HashMap<PauliKey, usize> = self
            .terms
            .iter()
            .enumerate()
            .map(|(k, (_, t))| (t.key(), k))
            .collect();
        let mut beta = vec![0.0; self.terms.len()];
        for (b, t) in &other.terms {
            match index.get(&t.key()) {
                Some(&k) => beta[k] = *b,
                None => {
                    return Err(Error::DimensionMismatch(format!(
                        "term {t} is not part of the reference term set"
                    )))
                }
            }
        }
        Ok(beta)
    }

    /// Sum of `|β_k|`, an upper bound on the spectral norm.
    pub fn l1_norm(&self) -> f64 {
        self.terms.iter().map(|(b, _)| b.abs()).sum()
    }

    /// One `<float> <label>` line per term.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (b, t) in &self.terms {
            out.push_str(&format!("{b:?} {t}\n"));
        }
        out
    }

    /// Parses the line format written by [`PauliHamiltonian::to_text`]; `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let mut width = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: i + 1,
                message,
            };
            let mut parts = line.split_whitespace();
            let (Some(c), Some(l), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(err("expected `<coefficient> <label>`".into()));
            };
            let beta: f64 = c
                .parse()
                .map_err(|_| err(format!("bad coefficient {c:?}")))?;
            let term: PauliTerm = l.parse().map_err(|e: Error| err(e.to_string()))?;
            match width {
                None => width = Some(term.n_qubits()),
                Some(n) if n != term.n_qubits() => {
                    return Err(err(format!("label has {} qubits, expected {n}", term.n_qubits())))
                }
                _ => {}
            }
            if !term.is_hermitian() {
                return Err(err(format!("label {l} is not Hermitian")));
            }
            terms.push((beta, term));
        }
        let n = width.ok_or(Error::Parse {
            line: 0,
            message: "no terms".into(),
        })?;
        PauliHamiltonian::new(n, terms)
    }
}
