//! Reference states and Pauli expectation engines.
//!
//! Three engines evaluate `⟨ψ|P|ψ⟩` for a Hermitian Pauli string `P`:
//! an analytic product-state formula, a dense statevector, and a
//! shot-noise wrapper that draws Bernoulli outcomes around either.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grouping::MeasurementPlan;
use crate::linalg::{hermitian_eig, CMatrix, HermitianEigen};
use crate::pauli::{PauliHamiltonian, PauliTerm};

pub const DEFAULT_STATEVECTOR_LIMIT: usize = 14;

const BLOCH_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

/// `exp(-i t H)` for a fixed Hamiltonian, diagonalized on first use.
pub struct Evolution {
    hamiltonian: PauliHamiltonian,
    eigen: OnceLock<HermitianEigen>,
}

impl Evolution {
    pub fn new(hamiltonian: PauliHamiltonian) -> Arc<Self> {
        Arc::new(Evolution {
            hamiltonian,
            eigen: OnceLock::new(),
        })
    }

    pub fn hamiltonian(&self) -> &PauliHamiltonian {
        &self.hamiltonian
    }

    fn eigen(&self) -> Result<&HermitianEigen> {
        if let Some(e) = self.eigen.get() {
            return Ok(e);
        }
        let e = hermitian_eig(&dense_hamiltonian(&self.hamiltonian)?)?;
        Ok(self.eigen.get_or_init(|| e))
    }

    fn apply(&self, amps: &mut [Complex64], time: f64) -> Result<()> {
        let eig = self.eigen()?;
        let n = amps.len();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let col = eig.vectors.column(k);
            let overlap: Complex64 = col.iter().zip(amps.iter()).map(|(v, a)| v.conj() * a).sum();
            *c = overlap * Complex64::from_polar(1.0, -time * eig.values[k]);
        }
        for (i, a) in amps.iter_mut().enumerate() {
            *a = (0..n).map(|k| eig.vectors[(i, k)] * coeffs[k]).sum();
        }
        Ok(())
    }
}

impl fmt::Debug for Evolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Evolution")
            .field("terms", &self.hamiltonian.len())
            .finish()
    }
}

#[derive(Clone, Debug)]
pub enum Gate {
    /// `exp(-i θ σ/2)` on one qubit.
    Rotation { axis: Axis, qubit: usize, angle: f64 },
    Hadamard(usize),
    Cz(usize, usize),
    Cnot { control: usize, target: usize },
    /// `exp(-i t H)` realized through the dense eigenbasis of `H`.
    Evolve { evolution: Arc<Evolution>, time: f64 },
}

impl Gate {
    fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::Rotation { qubit, .. } | Gate::Hadamard(qubit) => vec![*qubit],
            Gate::Cz(a, b) => vec![*a, *b],
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::Evolve { .. } => vec![],
        }
    }
}

#[derive(Clone, Debug)]
pub enum StateKind {
    /// One unit Bloch vector `(b_x, b_y, b_z)` per qubit.
    Product(Vec<[f64; 3]>),
    /// Gates applied in order to `|0…0⟩`.
    Circuit(Vec<Gate>),
    /// Explicit normalized amplitudes.
    Amplitudes,
}

#[derive(Clone, Debug)]
pub struct ReferenceState {
    n_qubits: usize,
    kind: StateKind,
    amplitudes: Option<Arc<Vec<Complex64>>>,
}

impl ReferenceState {
    pub fn product(bloch: Vec<[f64; 3]>) -> Result<Self> {
        if bloch.is_empty() {
            return Err(Error::InvalidState("product state needs at least one qubit".into()));
        }
        for (q, b) in bloch.iter().enumerate() {
            let norm = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
            if (norm - 1.0).abs() > BLOCH_TOL {
                return Err(Error::InvalidState(format!(
                    "Bloch vector of qubit {q} has norm {norm}"
                )));
            }
        }
        Ok(ReferenceState {
            n_qubits: bloch.len(),
            kind: StateKind::Product(bloch),
            amplitudes: None,
        })
    }

    /// `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::product(vec![[0.0, 0.0, 1.0]; n_qubits])
    }

    /// `|+⟩^⊗n`.
    pub fn plus(n_qubits: usize) -> Result<Self> {
        Self::product(vec![[1.0, 0.0, 0.0]; n_qubits])
    }

    /// Computational basis state with the listed qubits in `|1⟩`.
    pub fn basis_state(n_qubits: usize, excited: &[usize]) -> Result<Self> {
        let mut bloch = vec![[0.0, 0.0, 1.0]; n_qubits];
        for &q in excited {
            let slot = bloch.get_mut(q).ok_or_else(|| {
                Error::InvalidState(format!("qubit {q} out of range for {n_qubits} qubits"))
            })?;
            *slot = [0.0, 0.0, -1.0];
        }
        Self::product(bloch)
    }

    pub fn circuit(n_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        Self::circuit_with_limit(n_qubits, gates, DEFAULT_STATEVECTOR_LIMIT)
    }

    pub fn circuit_with_limit(n_qubits: usize, gates: Vec<Gate>, limit: usize) -> Result<Self> {
        check_limit(n_qubits, limit)?;
        if n_qubits == 0 {
            return Err(Error::InvalidState("circuit needs at least one qubit".into()));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        for gate in &gates {
            if gate.qubits().iter().any(|&q| q >= n_qubits) {
                return Err(Error::InvalidState(format!("{gate:?} acts outside {n_qubits} qubits")));
            }
            apply_gate(&mut amps, gate)?;
        }
        Ok(ReferenceState {
            n_qubits,
            kind: StateKind::Circuit(gates),
            amplitudes: Some(Arc::new(amps)),
        })
    }

    /// Wraps an explicit statevector; it is normalized here.
    pub fn from_amplitudes(n_qubits: usize, mut amps: Vec<Complex64>) -> Result<Self> {
        check_limit(n_qubits, DEFAULT_STATEVECTOR_LIMIT)?;
        if amps.len() != 1 << n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for {n_qubits} qubits",
                amps.len()
            )));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(ReferenceState {
            n_qubits,
            kind: StateKind::Amplitudes,
            amplitudes: Some(Arc::new(amps)),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn kind(&self) -> &StateKind {
        &self.kind
    }

    pub fn is_product(&self) -> bool {
        matches!(self.kind, StateKind::Product(_))
    }

    /// Dense amplitudes, index bit `q` holding qubit `q`.
    pub fn amplitudes(&self) -> Result<Arc<Vec<Complex64>>> {
        if let Some(a) = &self.amplitudes {
            return Ok(a.clone());
        }
        let StateKind::Product(bloch) = &self.kind else {
            unreachable!("non-product states are materialized at construction")
        };
        check_limit(self.n_qubits, DEFAULT_STATEVECTOR_LIMIT)?;
        let mut amps = vec![Complex64::new(1.0, 0.0)];
        for b in bloch {
            let theta = b[2].clamp(-1.0, 1.0).acos();
            let phi = b[1].atan2(b[0]);
            let up = Complex64::new((theta / 2.0).cos(), 0.0);
            let down = Complex64::from_polar((theta / 2.0).sin(), phi);
            // new qubit is the next-higher bit
            let mut next = Vec::with_capacity(amps.len() * 2);
            next.extend(amps.iter().map(|a| a * up));
            next.extend(amps.iter().map(|a| a * down));
            amps = next;
        }
        Ok(Arc::new(amps))
    }

    /// Exact `⟨ψ|H|ψ⟩`.
    pub fn energy(&self, h: &PauliHamiltonian) -> Result<f64> {
        h.terms()
            .iter()
            .map(|(b, t)| expectation_exact(self, t).map(|e| b * e))
            .sum()
    }
}

fn check_limit(n_qubits: usize, limit: usize) -> Result<()> {
    if n_qubits > limit {
        return Err(Error::StatevectorLimit { n_qubits, limit });
    }
    Ok(())
}

fn apply_gate(amps: &mut [Complex64], gate: &Gate) -> Result<()> {
    match gate {
        Gate::Rotation { axis, qubit, angle } => {
            let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
            let m = match axis {
                Axis::X => [
                    [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
                    [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
                ],
                Axis::Y => [
                    [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
                    [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
                ],
                Axis::Z => [
                    [Complex64::new(c, -s), Complex64::new(0.0, 0.0)],
                    [Complex64::new(0.0, 0.0), Complex64::new(c, s)],
                ],
            };
            apply_single(amps, *qubit, m);
        }
        Gate::Hadamard(q) => {
            let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            apply_single(amps, *q, [[h, h], [h, -h]]);
        }
        Gate::Cz(a, b) => {
            let mask = (1usize << a) | (1usize << b);
            for (i, amp) in amps.iter_mut().enumerate() {
                if i & mask == mask {
                    *amp = -*amp;
                }
            }
        }
        Gate::Cnot { control, target } => {
            let (cm, tm) = (1usize << control, 1usize << target);
            for i in 0..amps.len() {
                if i & cm != 0 && i & tm == 0 {
                    amps.swap(i, i | tm);
                }
            }
        }
        Gate::Evolve { evolution, time } => evolution.apply(amps, *time)?,
    }
    Ok(())
}

fn apply_single(amps: &mut [Complex64], q: usize, m: [[Complex64; 2]; 2]) {
    let bit = 1usize << q;
    for i in 0..amps.len() {
        if i & bit == 0 {
            let (a0, a1) = (amps[i], amps[i | bit]);
            amps[i] = m[0][0] * a0 + m[0][1] * a1;
            amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
        }
    }
}

/// `i^k` for `k mod 4`.
pub(crate) fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// `⟨ψ|P|ψ⟩` on a dense vector, for any (not necessarily Hermitian) `P`.
pub(crate) fn statevector_expectation(amps: &[Complex64], p: &PauliTerm) -> Complex64 {
    let x = p.x_mask()[0] as usize;
    let z = p.z_mask()[0] as usize;
    let mut acc = Complex64::new(0.0, 0.0);
    for (b, a) in amps.iter().enumerate() {
        let v = amps[b ^ x].conj() * a;
        if (z & b).count_ones() % 2 == 1 {
            acc -= v;
        } else {
            acc += v;
        }
    }
    acc * i_pow(p.phase_exp() as u32 + (x & z).count_ones())
}

fn product_expectation(bloch: &[[f64; 3]], p: &PauliTerm) -> f64 {
    let mut value = if p.phase_exp() == 2 { -1.0 } else { 1.0 };
    for (w, (&xw, &zw)) in p.x_mask().iter().zip(p.z_mask()).enumerate() {
        let mut support = xw | zw;
        while support != 0 {
            let b = support.trailing_zeros() as usize;
            support &= support - 1;
            let q = w * 64 + b;
            let comp = match (xw >> b & 1, zw >> b & 1) {
                (1, 0) => bloch[q][0],
                (1, 1) => bloch[q][1],
                _ => bloch[q][2],
            };
            if comp == 0.0 {
                return 0.0;
            }
            value *= comp;
        }
    }
    value
}

fn check_term(state: &ReferenceState, p: &PauliTerm) -> Result<()> {
    if p.n_qubits() != state.n_qubits() {
        return Err(Error::SizeMismatch {
            expected: state.n_qubits(),
            found: p.n_qubits(),
        });
    }
    if !p.is_hermitian() {
        return Err(Error::NonHermitian(p.to_string()));
    }
    Ok(())
}

/// Exact `⟨ψ|P|ψ⟩` for Hermitian `P`, analytic for product states and dense otherwise.
pub fn expectation_exact(state: &ReferenceState, p: &PauliTerm) -> Result<f64> {
    check_term(state, p)?;
    match &state.kind {
        StateKind::Product(bloch) => Ok(product_expectation(bloch, p)),
        _ => expectation_statevector(state, p),
    }
}

/// Analytic product-state engine only; rejects other state kinds.
pub fn expectation_product(state: &ReferenceState, p: &PauliTerm) -> Result<f64> {
    check_term(state, p)?;
    match &state.kind {
        StateKind::Product(bloch) => Ok(product_expectation(bloch, p)),
        _ => Err(Error::InvalidState(
            "the product backend needs a product reference state".into(),
        )),
    }
}

/// Dense statevector engine only.
pub fn expectation_statevector(state: &ReferenceState, p: &PauliTerm) -> Result<f64> {
    check_term(state, p)?;
    // states are normalized on construction
    if p.is_identity() {
        return Ok(1.0);
    }
    let amps = state.amplitudes()?;
    Ok(statevector_expectation(&amps, p).re.clamp(-1.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotModel {
    pub shots_per_setting: u64,
    pub seed: u64,
    /// Share one measurement setting among qubit-wise commuting strings.
    pub grouping: bool,
}

impl ShotModel {
    pub fn new(shots_per_setting: u64, seed: u64, grouping: bool) -> Result<Self> {
        let m = ShotModel {
            shots_per_setting,
            seed,
            grouping,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots_per_setting == 0 {
            return Err(Error::InvalidShotModel("shots_per_setting must be positive".into()));
        }
        Ok(())
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stream_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x243f_6a88_85a3_08d3, |h, &p| splitmix(h ^ splitmix(p)))
}

fn string_stream(seed: u64, p: &PauliTerm) -> u64 {
    let mut parts = vec![seed, 0x5354_5249_4e47, p.n_qubits() as u64];
    parts.extend_from_slice(p.x_mask());
    parts.extend_from_slice(p.z_mask());
    stream_seed(&parts)
}

fn sample_mean(exact: f64, shots: u64, stream: u64) -> f64 {
    let prob = ((1.0 + exact) / 2.0).clamp(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    let ups = Binomial::new(shots, prob)
        .expect("probability clamped to [0, 1]")
        .sample(&mut rng);
    2.0 * ups as f64 / shots as f64 - 1.0
}

/// Shot-noise estimate of `⟨P⟩` from `shots_per_setting` ±1 outcomes.
/// The random stream is derived from the seed and the string itself.
pub fn expectation_sampled(state: &ReferenceState, p: &PauliTerm, model: &ShotModel) -> Result<f64> {
    model.validate()?;
    let exact = expectation_exact(state, p)?;
    Ok(sample_mean(exact, model.shots_per_setting, string_stream(model.seed, p)))
}

/// Samples every string of a measurement plan. Strings in group `g` share the
/// setting's shot budget; string `j` of that group draws from stream `(seed, g, j)`.
pub fn sample_plan(
    state: &ReferenceState,
    strings: &[PauliTerm],
    plan: &MeasurementPlan,
    model: &ShotModel,
) -> Result<Vec<f64>> {
    model.validate()?;
    let mut out = vec![f64::NAN; strings.len()];
    for (g, group) in plan.groups.iter().enumerate() {
        for (j, &idx) in group.iter().enumerate() {
            let p = strings.get(idx).ok_or_else(|| {
                Error::DimensionMismatch(format!("plan index {idx} out of range"))
            })?;
            let exact = expectation_exact(state, p)?;
            out[idx] = sample_mean(
                exact,
                model.shots_per_setting,
                stream_seed(&[model.seed, g as u64, j as u64]),
            );
        }
    }
    if out.iter().any(|v| v.is_nan()) {
        return Err(Error::DimensionMismatch("plan does not cover every string".into()));
    }
    Ok(out)
}

/// Which engine turns reduced Pauli strings into numbers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Backend {
    /// Product formula for product states, dense statevector otherwise.
    Exact,
    /// Product formula only.
    Product,
    /// Exact value plus binomial shot noise.
    Sampled(ShotModel),
}

impl Backend {
    pub fn is_exact(&self) -> bool {
        !matches!(self, Backend::Sampled(_))
    }

    /// Evaluates a batch of distinct Hermitian strings.
    pub fn evaluate(&self, state: &ReferenceState, strings: &[PauliTerm]) -> Result<Vec<f64>> {
        match self {
            Backend::Exact => strings.iter().map(|p| expectation_exact(state, p)).collect(),
            Backend::Product => strings.iter().map(|p| expectation_product(state, p)).collect(),
            Backend::Sampled(model) if model.grouping => {
                let plan = crate::grouping::plan(strings)?;
                sample_plan(state, strings, &plan, model)
            }
            Backend::Sampled(model) => strings
                .iter()
                .map(|p| expectation_sampled(state, p, model))
                .collect(),
        }
    }
}

/// Dense `2^n × 2^n` matrix of a Pauli sum, built column by column from the masks.
pub fn dense_hamiltonian(h: &PauliHamiltonian) -> Result<CMatrix> {
    let n = h.n_qubits();
    check_limit(n, DEFAULT_STATEVECTOR_LIMIT)?;
    let dim = 1usize << n;
    let mut m = CMatrix::zeros(dim, dim);
    for (beta, t) in h.terms() {
        let x = t.x_mask()[0] as usize;
        let z = t.z_mask()[0] as usize;
        let base = i_pow(t.phase_exp() as u32 + (x & z).count_ones()) * *beta;
        for col in 0..dim {
            let sign = if (z & col).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            m[(col ^ x, col)] += base * sign;
        }
    }
    Ok(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mixer {
    /// `|+⟩^⊗N` start, `exp(-iβ Σ σ^x)` mixer.
    X,
    /// `|0⟩^⊗N` start, `exp(-iβ Σ σ^z)` mixer.
    Z,
}

/// QAOA state `Π_k exp(-iβ_k Σ_j σ^x_j) exp(-iγ_k H) |+⟩^⊗N`.
pub fn prepare_qaoa(h: &PauliHamiltonian, angles: &[(f64, f64)]) -> Result<ReferenceState> {
    QaoaPreparer::new(h.clone(), Mixer::X).prepare(angles)
}

/// Reusable QAOA builder: the cost Hamiltonian is diagonalized once.
#[derive(Clone, Debug)]
pub struct QaoaPreparer {
    evolution: Arc<Evolution>,
    mixer: Mixer,
}

impl QaoaPreparer {
    pub fn new(h: PauliHamiltonian, mixer: Mixer) -> Self {
        QaoaPreparer {
            evolution: Evolution::new(h),
            mixer,
        }
    }

    pub fn prepare(&self, angles: &[(f64, f64)]) -> Result<ReferenceState> {
        let n = self.evolution.hamiltonian().n_qubits();
        check_limit(n, DEFAULT_STATEVECTOR_LIMIT)?;
        let (start, axis) = match self.mixer {
            Mixer::X => ((0..n).map(Gate::Hadamard).collect::<Vec<_>>(), Axis::X),
            Mixer::Z => (Vec::new(), Axis::Z),
        };
        if angles.is_empty() && self.mixer == Mixer::X {
            return ReferenceState::plus(n);
        }
        if angles.is_empty() {
            return ReferenceState::zero(n);
        }
        let mut gates = start;
        for &(gamma, beta) in angles {
            gates.push(Gate::Evolve {
                evolution: self.evolution.clone(),
                time: gamma,
            });
            // exp(-iβσ) = R(2β)
            gates.extend((0..n).map(|qubit| Gate::Rotation {
                axis,
                qubit,
                angle: 2.0 * beta,
            }));
        }
        ReferenceState::circuit(n, gates)
    }
}

/// Seeded hardware-efficient circuit: each layer applies a random-axis,
/// random-angle rotation to every qubit, then controlled-Z on neighbours.
pub fn hardware_efficient_gates(n_qubits: usize, layers: usize, seed: u64) -> Vec<Gate> {
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(&[seed, 0x4857_4541]));
    let mut gates = Vec::with_capacity(layers * (2 * n_qubits));
    for _ in 0..layers {
        for qubit in 0..n_qubits {
            let axis = [Axis::X, Axis::Y, Axis::Z][rng.random_range(0..3)];
            gates.push(Gate::Rotation {
                axis,
                qubit,
                angle: rng.random_range(0.0..2.0 * PI),
            });
        }
        for q in 0..n_qubits.saturating_sub(1) {
            gates.push(Gate::Cz(q, q + 1));
        }
    }
    gates
}

pub fn prepare_hardware_efficient(n_qubits: usize, layers: usize, seed: u64) -> Result<ReferenceState> {
    check_limit(n_qubits, DEFAULT_STATEVECTOR_LIMIT)?;
    ReferenceState::circuit(n_qubits, hardware_efficient_gates(n_qubits, layers, seed))
}

/// Circuit whose rotation angles are bound from a parameter vector.
/// Every parameter drives exactly one rotation gate.
#[derive(Clone, Debug)]
pub struct ParametricCircuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    /// `slots[k]` is the gate index driven by parameter `k`.
    slots: Vec<usize>,
}

impl ParametricCircuit {
    pub fn new(n_qubits: usize) -> Self {
        ParametricCircuit {
            n_qubits,
            gates: Vec::new(),
            slots: Vec::new(),
        }
    }

    pub fn fixed(mut self, gate: Gate) -> Self {
        self.gates.push(gate);
        self
    }

    /// Appends a rotation driven by the next parameter.
    pub fn rotation(mut self, axis: Axis, qubit: usize) -> Self {
        self.slots.push(self.gates.len());
        self.gates.push(Gate::Rotation {
            axis,
            qubit,
            angle: 0.0,
        });
        self
    }

    pub fn n_params(&self) -> usize {
        self.slots.len()
    }

    pub fn bind(&self, theta: &[f64]) -> Result<ReferenceState> {
        if theta.len() != self.slots.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} angles for {} parameters",
                theta.len(),
                self.slots.len()
            )));
        }
        let mut gates = self.gates.clone();
        for (&slot, &value) in self.slots.iter().zip(theta) {
            if let Gate::Rotation { angle, .. } = &mut gates[slot] {
                *angle = value;
            }
        }
        ReferenceState::circuit(self.n_qubits, gates)
    }

    /// States at `θ ± π/2 e_k`, the two evaluations of the parameter-shift rule.
    pub fn shifted(&self, theta: &[f64], k: usize) -> Result<(ReferenceState, ReferenceState)> {
        if k >= self.slots.len() {
            return Err(Error::DimensionMismatch(format!("parameter {k} out of range")));
        }
        let mut plus = theta.to_vec();
        let mut minus = theta.to_vec();
        plus[k] += PI / 2.0;
        minus[k] -= PI / 2.0;
        Ok((self.bind(&plus)?, self.bind(&minus)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PauliTerm {
        s.parse().unwrap()
    }

    use crate::pauli::Letter;

    #[test]
    fn zero_state_values() {
        let s = ReferenceState::zero(2).unwrap();
        assert_eq!(expectation_exact(&s, &p("ZZ")).unwrap(), 1.0);
        assert_eq!(expectation_exact(&s, &p("XZ")).unwrap(), 0.0);
        assert_eq!(expectation_exact(&s, &p("IY")).unwrap(), 0.0);
        assert_eq!(expectation_exact(&s, &p("-ZI")).unwrap(), -1.0);
        let wide = ReferenceState::zero(300).unwrap();
        let mut t = PauliTerm::on_qubits(300, &[(5, Letter::Z), (250, Letter::X)]).unwrap();
        assert_eq!(expectation_exact(&wide, &t).unwrap(), 0.0);
        t = PauliTerm::on_qubits(300, &[(5, Letter::Z), (250, Letter::Z)]).unwrap();
        assert_eq!(expectation_exact(&wide, &t).unwrap(), 1.0);
    }

    #[test]
    fn plus_state_xx() {
        let s = ReferenceState::plus(2).unwrap();
        assert!((expectation_exact(&s, &p("XX")).unwrap() - 1.0).abs() < 1e-15);
        let sv = ReferenceState::from_amplitudes(2, s.amplitudes().unwrap().to_vec()).unwrap();
        assert!((expectation_exact(&sv, &p("XX")).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = ReferenceState::zero(2).unwrap();
        assert!(matches!(expectation_exact(&s, &p("Z")), Err(Error::SizeMismatch { .. })));
        assert!(matches!(expectation_exact(&s, &p("iZZ")), Err(Error::NonHermitian(_))));
        assert!(ReferenceState::product(vec![[0.5, 0.0, 0.0]]).is_err());
        assert!(matches!(
            ReferenceState::circuit(15, vec![]),
            Err(Error::StatevectorLimit { .. })
        ));
        assert!(ShotModel::new(0, 1, false).is_err());
        let c = ReferenceState::circuit(2, vec![Gate::Hadamard(0)]).unwrap();
        assert!(expectation_product(&c, &p("ZZ")).is_err());
        assert!(ReferenceState::circuit(2, vec![Gate::Hadamard(2)]).is_err());
    }

    #[test]
    fn y_component_convention() {
        // |+i⟩ has Bloch vector (0, 1, 0); Rx(-π/2)|0⟩ = |+i⟩
        let prod = ReferenceState::product(vec![[0.0, 1.0, 0.0]]).unwrap();
        let circ = ReferenceState::circuit(
            1,
            vec![Gate::Rotation {
                axis: Axis::X,
                qubit: 0,
                angle: -PI / 2.0,
            }],
        )
        .unwrap();
        for s in [&prod, &circ] {
            assert!((expectation_exact(s, &p("Y")).unwrap() - 1.0).abs() < 1e-12);
            assert!(expectation_exact(s, &p("X")).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn gates_match_hand_values() {
        // H then CNOT gives a Bell pair: ⟨XX⟩ = ⟨ZZ⟩ = 1, ⟨YY⟩ = -1
        let bell = ReferenceState::circuit(
            2,
            vec![
                Gate::Hadamard(0),
                Gate::Cnot {
                    control: 0,
                    target: 1,
                },
            ],
        )
        .unwrap();
        assert!((expectation_exact(&bell, &p("XX")).unwrap() - 1.0).abs() < 1e-14);
        assert!((expectation_exact(&bell, &p("ZZ")).unwrap() - 1.0).abs() < 1e-14);
        assert!((expectation_exact(&bell, &p("YY")).unwrap() + 1.0).abs() < 1e-14);
        // CZ on |++⟩: ⟨XZ⟩ = 1
        let cz = ReferenceState::circuit(2, vec![Gate::Hadamard(0), Gate::Hadamard(1), Gate::Cz(0, 1)]).unwrap();
        assert!((expectation_exact(&cz, &p("XZ")).unwrap() - 1.0).abs() < 1e-14);
        // Ry(θ)|0⟩: ⟨Z⟩ = cos θ, ⟨X⟩ = sin θ
        let t = 0.7;
        let ry = ReferenceState::circuit(1, vec![Gate::Rotation { axis: Axis::Y, qubit: 0, angle: t }]).unwrap();
        assert!((expectation_exact(&ry, &p("Z")).unwrap() - t.cos()).abs() < 1e-14);
        assert!((expectation_exact(&ry, &p("X")).unwrap() - t.sin()).abs() < 1e-14);
    }

    #[test]
    fn sampled_degenerate_and_deterministic() {
        let s = ReferenceState::zero(3).unwrap();
        let m = ShotModel::new(100, 9, false).unwrap();
        assert_eq!(expectation_sampled(&s, &p("ZZI"), &m).unwrap(), 1.0);
        assert_eq!(expectation_sampled(&s, &p("-ZZI"), &m).unwrap(), -1.0);
        let a = expectation_sampled(&s, &p("XII"), &m).unwrap();
        let b = expectation_sampled(&s, &p("XII"), &m).unwrap();
        assert_eq!(a, b);
        assert!((-1.0..=1.0).contains(&a));
    }

    #[test]
    fn qaoa_trivial_angles() {
        let h = PauliHamiltonian::new(3, vec![(0.5, p("XXI")), (-1.0, p("ZII"))]).unwrap();
        let s0 = prepare_qaoa(&h, &[]).unwrap();
        let s1 = prepare_qaoa(&h, &[(0.0, 0.0)]).unwrap();
        let a0 = s0.amplitudes().unwrap();
        let a1 = s1.amplitudes().unwrap();
        for (x, y) in a0.iter().zip(a1.iter()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn hardware_efficient_is_seeded() {
        let a = prepare_hardware_efficient(4, 5, 3).unwrap();
        let b = prepare_hardware_efficient(4, 5, 3).unwrap();
        assert_eq!(a.amplitudes().unwrap(), b.amplitudes().unwrap());
        let c = prepare_hardware_efficient(4, 5, 4).unwrap();
        assert_ne!(a.amplitudes().unwrap(), c.amplitudes().unwrap());
        let zero = prepare_hardware_efficient(4, 0, 3).unwrap();
        assert_eq!(zero.amplitudes().unwrap()[0], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn dense_matrix_of_y() {
        let m = dense_hamiltonian(&PauliHamiltonian::new(1, vec![(1.0, p("Y"))]).unwrap()).unwrap();
        assert_eq!(m[(0, 1)], Complex64::new(0.0, -1.0));
        assert_eq!(m[(1, 0)], Complex64::new(0.0, 1.0));
    }
}
