//! Hamiltonian families and named reference states.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::backend::{Axis, Gate, ParametricCircuit};
use crate::error::{Error, Result};
use crate::pauli::{Letter, Mask, PauliHamiltonian, PauliTerm};

fn need(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidModel(msg.into()))
    }
}

fn pair(n: usize, i: usize, j: usize, l: Letter) -> PauliTerm {
    PauliTerm::on_qubits(n, &[(i, l), (j, l)]).expect("qubits in range")
}

fn single(n: usize, i: usize, l: Letter) -> PauliTerm {
    PauliTerm::on_qubits(n, &[(i, l)]).expect("qubit in range")
}

fn bonds(n: usize, periodic: bool) -> Vec<(usize, usize)> {
    let mut b: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    // two sites share one bond either way
    if periodic && n > 2 {
        b.push((n - 1, 0));
    }
    b
}

/// `(J/2) Σ X_i X_{i+1} - h Σ Z_i`. Zero-coefficient groups are left out.
pub fn ising(n: usize, j: f64, h: f64, periodic: bool) -> Result<PauliHamiltonian> {
    need(n >= 2, format!("ising needs at least 2 qubits, got {n}"))?;
    let mut terms = Vec::new();
    if j != 0.0 {
        terms.extend(bonds(n, periodic).into_iter().map(|(a, b)| (j / 2.0, pair(n, a, b, Letter::X))));
    }
    if h != 0.0 {
        terms.extend((0..n).map(|i| (-h, single(n, i, Letter::Z))));
    }
    PauliHamiltonian::new(n, terms)
}

/// `½ Σ (1 - Z_i Z_{i+1})` on a ring; the constant is an identity term.
pub fn ring_of_disagrees(n: usize) -> Result<PauliHamiltonian> {
    need(n >= 3, format!("ring of disagrees needs at least 3 qubits, got {n}"))?;
    let mut terms = vec![(n as f64 / 2.0, PauliTerm::identity(n))];
    terms.extend(bonds(n, true).into_iter().map(|(a, b)| (-0.5, pair(n, a, b, Letter::Z))));
    PauliHamiltonian::new(n, terms)
}

/// `½ Σ (X_i X_{i+1} + Y_i Y_{i+1} + Δ Z_i Z_{i+1})` on a ring.
pub fn xxz(n: usize, delta: f64) -> Result<PauliHamiltonian> {
    need(n >= 2, format!("xxz needs at least 2 qubits, got {n}"))?;
    let mut terms = Vec::new();
    for (a, b) in bonds(n, true) {
        terms.push((0.5, pair(n, a, b, Letter::X)));
        terms.push((0.5, pair(n, a, b, Letter::Y)));
        if delta != 0.0 {
            terms.push((0.5 * delta, pair(n, a, b, Letter::Z)));
        }
    }
    PauliHamiltonian::new(n, terms)
}

/// Two-qubit hydrogen model `0.4 Z_1 + 0.4 Z_2 + 0.2 X_1 X_2`.
pub fn h2() -> PauliHamiltonian {
    PauliHamiltonian::new(
        2,
        vec![
            (0.4, single(2, 0, Letter::Z)),
            (0.4, single(2, 1, Letter::Z)),
            (0.2, pair(2, 0, 1, Letter::X)),
        ],
    )
    .expect("fixed model is valid")
}

/// `r` distinct random non-identity strings with coefficients uniform on `[-1, 1]`.
pub fn random_pauli(n: usize, r: usize, seed: u64) -> Result<PauliHamiltonian> {
    need(n >= 1 && r >= 1, "random_pauli needs n >= 1 and r >= 1")?;
    if n < 32 {
        let available = 4u64.pow(n as u32) - 1;
        need(
            (r as u64) <= available,
            format!("{r} distinct strings requested but only {available} exist on {n} qubits"),
        )?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words = n.div_ceil(64);
    let tail = n % 64;
    let mut seen = HashSet::new();
    let mut terms = Vec::with_capacity(r);
    while terms.len() < r {
        let mut x: Mask = (0..words).map(|_| rng.random::<u64>()).collect();
        let mut z: Mask = (0..words).map(|_| rng.random::<u64>()).collect();
        if tail != 0 {
            let keep = (1u64 << tail) - 1;
            x[words - 1] &= keep;
            z[words - 1] &= keep;
        }
        let t = PauliTerm::from_masks(n, x, z, 0)?;
        if t.is_identity() || !seen.insert(t.key()) {
            continue;
        }
        let beta = rng.random_range(-1.0..=1.0);
        terms.push((beta, t));
    }
    PauliHamiltonian::new(n, terms)
}

/// `Z_1 Z_2` embedded in `n` qubits.
pub fn barren_plateau_toy(n: usize) -> Result<PauliHamiltonian> {
    need(n >= 2, format!("barren plateau toy needs at least 2 qubits, got {n}"))?;
    PauliHamiltonian::new(n, vec![(1.0, pair(n, 0, 1, Letter::Z))])
}

/// Two-parameter hardware-efficient circuit for the hydrogen model:
/// `Ry(θ₂)⊗Ry(θ₂) · CNOT · Ry(θ₁)⊗Ry(θ₁) |00⟩`.
pub fn h2_ansatz_gates(theta1: f64, theta2: f64) -> Vec<Gate> {
    let ry = |qubit, angle| Gate::Rotation {
        axis: Axis::Y,
        qubit,
        angle,
    };
    vec![
        ry(0, theta1),
        ry(1, theta1),
        Gate::Cnot {
            control: 0,
            target: 1,
        },
        ry(0, theta2),
        ry(1, theta2),
    ]
}

/// Four independent angles: `Ry(θ₃)⊗Ry(θ₄) · CNOT · Ry(θ₁)⊗Ry(θ₂) |00⟩`.
pub fn h2_parametric_circuit() -> ParametricCircuit {
    ParametricCircuit::new(2)
        .rotation(Axis::Y, 0)
        .rotation(Axis::Y, 1)
        .fixed(Gate::Cnot {
            control: 0,
            target: 1,
        })
        .rotation(Axis::Y, 0)
        .rotation(Axis::Y, 1)
}

/// Named model with its parameters, as written in run configurations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Ising {
        n: usize,
        #[serde(default = "one")]
        j: f64,
        h: f64,
        #[serde(default = "yes")]
        periodic: bool,
    },
    RingOfDisagrees {
        n: usize,
    },
    Xxz {
        n: usize,
        delta: f64,
    },
    H2,
    RandomPauli {
        n: usize,
        r: usize,
        seed: u64,
    },
    BarrenPlateauToy {
        n: usize,
    },
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

impl ModelSpec {
    pub fn build(&self) -> Result<PauliHamiltonian> {
        match *self {
            ModelSpec::Ising { n, j, h, periodic } => ising(n, j, h, periodic),
            ModelSpec::RingOfDisagrees { n } => ring_of_disagrees(n),
            ModelSpec::Xxz { n, delta } => xxz(n, delta),
            ModelSpec::H2 => Ok(h2()),
            ModelSpec::RandomPauli { n, r, seed } => random_pauli(n, r, seed),
            ModelSpec::BarrenPlateauToy { n } => barren_plateau_toy(n),
        }
    }

    pub fn n_qubits(&self) -> usize {
        match *self {
            ModelSpec::Ising { n, .. }
            | ModelSpec::RingOfDisagrees { n }
            | ModelSpec::Xxz { n, .. }
            | ModelSpec::RandomPauli { n, .. }
            | ModelSpec::BarrenPlateauToy { n } => n,
            ModelSpec::H2 => 2,
        }
    }
}
