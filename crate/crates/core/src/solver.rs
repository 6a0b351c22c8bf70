//! Regularized generalized eigenproblem `Dα = λEα`, the K-iteration loop,
//! coefficient sweeps and the hybrid α-gradient.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::backend::{i_pow, Backend, ParametricCircuit, ReferenceState};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, nonzero_blocks, submatrix, symmetrize, CMatrix, CVector, HermitianEigen};
use crate::moments::MomentBasis;
use crate::overlap::OverlapSet;
use crate::pauli::{PauliHamiltonian, PauliTerm};

pub const DEFAULT_REG_EXACT: f64 = 1e-8;
pub const DEFAULT_REG_SAMPLED: f64 = 1e-1;
pub const DEGENERACY_GAP: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Eigenvalues of `E` below this are discarded.
    pub reg_threshold: f64,
    /// Halt once `|E_K - E_{K-1}|` drops below this.
    pub stop_threshold: f64,
    pub k_max: usize,
    pub cap: Option<usize>,
}

impl SolverConfig {
    pub fn exact(k_max: usize) -> Self {
        SolverConfig {
            reg_threshold: DEFAULT_REG_EXACT,
            stop_threshold: 1e-6,
            k_max,
            cap: None,
        }
    }

    pub fn sampled(k_max: usize) -> Self {
        SolverConfig {
            reg_threshold: DEFAULT_REG_SAMPLED,
            ..Self::exact(k_max)
        }
    }

    /// Defaults matched to the backend's noise level.
    pub fn for_backend(backend: &Backend, k_max: usize) -> Self {
        if backend.is_exact() {
            Self::exact(k_max)
        } else {
            Self::sampled(k_max)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.reg_threshold >= 0.0 && self.reg_threshold.is_finite()) {
            return Err(Error::InvalidModel("reg_threshold must be a nonnegative number".into()));
        }
        if !(self.stop_threshold > 0.0 && self.stop_threshold.is_finite()) {
            return Err(Error::InvalidModel("stop_threshold must be positive".into()));
        }
        if self.cap == Some(0) {
            return Err(Error::InvalidModel("cap must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub k: usize,
    pub energy: f64,
    /// `E_K - E_{K-1}`; absent at the first step.
    pub delta: Option<f64>,
    pub basis_size: usize,
    pub retained_rank: usize,
    /// Smallest two reduced eigenvalues closer than `DEGENERACY_GAP`.
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundStateSolution {
    pub energy: f64,
    /// Coefficients over the basis elements.
    pub alpha: CVector,
    pub retained_rank: usize,
    pub trace: Vec<TraceEntry>,
}

/// Export form: `alpha` as `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionDocument {
    pub energy: f64,
    pub alpha: Vec<[f64; 2]>,
    pub retained_rank: usize,
    pub trace: Vec<TraceEntry>,
}

impl GroundStateSolution {
    pub fn to_document(&self) -> SolutionDocument {
        SolutionDocument {
            energy: self.energy,
            alpha: self.alpha.iter().map(|z| [z.re, z.im]).collect(),
            retained_rank: self.retained_rank,
            trace: self.trace.clone(),
        }
    }

    pub fn degenerate(&self) -> bool {
        self.trace.last().is_some_and(|t| t.degenerate)
    }
}

/// One retained whitened direction `v / √λ`, stored on the support of its block.
#[derive(Clone, Debug)]
struct Column {
    support: Vec<usize>,
    coeffs: Vec<Complex64>,
}

/// Canonical orthogonalization of `E`: retained eigenvectors scaled by `λ^{-1/2}`.
/// Exact zeros in `E` split it into independent blocks that are diagonalized
/// separately.
#[derive(Clone, Debug)]
pub struct Whitening {
    dim: usize,
    columns: Vec<Column>,
    threshold: f64,
}

impl Whitening {
    pub fn new(e: &CMatrix, threshold: f64) -> Result<Self> {
        if !e.is_square() {
            return Err(Error::DimensionMismatch(format!("E is {}x{}", e.nrows(), e.ncols())));
        }
        let dim = e.nrows();
        let mut pairs: Vec<(f64, usize, Column)> = Vec::new();
        for block in nonzero_blocks(e) {
            let HermitianEigen { values, vectors } = hermitian_eig(&submatrix(e, &block, &block))?;
            for (i, &lambda) in values.iter().enumerate() {
                if lambda >= threshold && lambda > 0.0 {
                    let scale = 1.0 / lambda.sqrt();
                    pairs.push((
                        lambda,
                        block[0],
                        Column {
                            support: block.clone(),
                            coeffs: vectors.column(i).iter().map(|z| z * scale).collect(),
                        },
                    ));
                }
            }
        }
        if pairs.is_empty() {
            return Err(Error::AllDiscarded { threshold });
        }
        // deterministic column order: eigenvalue descending, then block position
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        Ok(Whitening {
            dim,
            columns: pairs.into_iter().map(|(_, _, c)| c).collect(),
            threshold,
        })
    }

    pub fn rank(&self) -> usize {
        self.columns.len()
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// `W† A W`.
    pub fn reduce(&self, a: &CMatrix) -> Result<CMatrix> {
        if a.nrows() != self.dim || a.ncols() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, whitening expects {}",
                a.nrows(),
                a.ncols(),
                self.dim
            )));
        }
        let r = self.rank();
        // A W, column by column over each support
        let mut aw = CMatrix::zeros(self.dim, r);
        for (c, col) in self.columns.iter().enumerate() {
            for (&j, &w) in col.support.iter().zip(&col.coeffs) {
                if w == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let src = a.column(j);
                let mut dst = aw.column_mut(c);
                dst.axpy(w, &src, Complex64::new(1.0, 0.0));
            }
        }
        let mut out = CMatrix::zeros(r, r);
        for (c1, col) in self.columns.iter().enumerate() {
            for c2 in 0..r {
                let mut acc = Complex64::new(0.0, 0.0);
                for (&j, &w) in col.support.iter().zip(&col.coeffs) {
                    acc += w.conj() * aw[(j, c2)];
                }
                out[(c1, c2)] = acc;
            }
        }
        Ok(out)
    }

    /// `W y`.
    pub fn lift(&self, y: &CVector) -> CVector {
        let mut alpha = CVector::zeros(self.dim);
        for (col, &yc) in self.columns.iter().zip(y.iter()) {
            for (&j, &w) in col.support.iter().zip(&col.coeffs) {
                alpha[j] += w * yc;
            }
        }
        alpha
    }

    /// `E⁺ v` restricted to the retained directions: `W W† v`.
    pub fn pseudo_inverse_apply(&self, v: &CVector) -> CVector {
        let y = CVector::from_iterator(
            self.rank(),
            self.columns.iter().map(|col| {
                col.support
                    .iter()
                    .zip(&col.coeffs)
                    .map(|(&j, w)| w.conj() * v[j])
                    .sum::<Complex64>()
            }),
        );
        self.lift(&y)
    }

    /// Lowest eigenpair of `W† D W`, lifted back.
    pub fn solve(&self, d: &CMatrix) -> Result<GroundStateSolution> {
        let reduced = symmetrize(&self.reduce(d)?);
        let eig = hermitian_eig(&reduced)?;
        let energy = eig.values[0];
        let degenerate = eig.values.len() > 1 && eig.values[1] - eig.values[0] < DEGENERACY_GAP;
        let alpha = self.lift(&eig.vectors.column(0).into_owned());
        Ok(GroundStateSolution {
            energy,
            alpha,
            retained_rank: self.rank(),
            trace: vec![TraceEntry {
                k: 0,
                energy,
                delta: None,
                basis_size: self.dim,
                retained_rank: self.rank(),
                degenerate,
            }],
        })
    }
}

/// Minimizes `α†Dα` subject to `α†Eα = 1` on the retained subspace of `E`.
pub fn solve(d: &CMatrix, e: &CMatrix, config: &SolverConfig) -> Result<GroundStateSolution> {
    config.validate()?;
    if d.shape() != e.shape() || !d.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "D is {}x{}, E is {}x{}",
            d.nrows(),
            d.ncols(),
            e.nrows(),
            e.ncols()
        )));
    }
    Whitening::new(e, config.reg_threshold)?.solve(d)
}

/// Solves at the assembly coefficients.
pub fn solve_overlaps(set: &OverlapSet, config: &SolverConfig) -> Result<GroundStateSolution> {
    let (d, e) = set.recombine(&set.beta())?;
    solve(&d, e, config)
}

/// One solve per coefficient vector, sharing the whitening of `E`.
pub fn sweep(set: &OverlapSet, beta_grid: &[Vec<f64>], config: &SolverConfig) -> Result<Vec<GroundStateSolution>> {
    config.validate()?;
    let w = Whitening::new(set.e(), config.reg_threshold)?;
    beta_grid
        .iter()
        .map(|beta| w.solve(&set.d_matrix(beta)?))
        .collect()
}

/// Basis, overlaps and solution of a finished K-iteration.
#[derive(Clone, Debug)]
pub struct IterationResult {
    pub solution: GroundStateSolution,
    pub basis: MomentBasis,
    pub overlaps: OverlapSet,
}

/// K = 0, 1, … until `|ΔE_K| < E_c`, `K = K_max`, closure or the cap.
pub fn iterate(
    h: &PauliHamiltonian,
    state: &ReferenceState,
    backend: &Backend,
    config: &SolverConfig,
) -> Result<GroundStateSolution> {
    iterate_detailed(h, state, backend, config).map(|r| r.solution)
}

pub fn iterate_detailed(
    h: &PauliHamiltonian,
    state: &ReferenceState,
    backend: &Backend,
    config: &SolverConfig,
) -> Result<IterationResult> {
    config.validate()?;
    if state.n_qubits() != h.n_qubits() {
        return Err(Error::SizeMismatch {
            expected: h.n_qubits(),
            found: state.n_qubits(),
        });
    }
    let mut basis = MomentBasis::build(h.strings(), 0, config.cap)?;
    let mut overlaps = OverlapSet::assemble(&basis, h, state, backend)?;
    let mut solution = solve_overlaps(&overlaps, config)?;
    let mut trace = solution.trace.clone();
    for k in 1..=config.k_max {
        if basis.extend_level(config.cap) == 0 {
            break;
        }
        overlaps.extend(&basis, state, backend)?;
        let next = solve_overlaps(&overlaps, config)?;
        let delta = next.energy - solution.energy;
        let mut entry = next.trace[0].clone();
        entry.k = k;
        entry.delta = Some(delta);
        trace.push(entry);
        solution = next;
        if delta.abs() < config.stop_threshold || basis.is_capped() {
            break;
        }
    }
    solution.trace = trace;
    Ok(IterationResult {
        solution,
        basis,
        overlaps,
    })
}

/// Energies of the leading `m` basis elements for each `m` in `sizes`.
pub fn prefix_scan(set: &OverlapSet, sizes: &[usize], config: &SolverConfig) -> Result<Vec<GroundStateSolution>> {
    config.validate()?;
    let d = set.d_matrix(&set.beta())?;
    sizes
        .iter()
        .map(|&m| {
            if m == 0 || m > set.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "prefix {m} outside 1..={}",
                    set.dim()
                )));
            }
            let dm = d.view((0, 0), (m, m)).into_owned();
            let em = set.e().view((0, 0), (m, m)).into_owned();
            solve(&dm, &em, config)
        })
        .collect()
}

/// Outputs of the hybrid gradient for one parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridGradient {
    pub dalpha: CVector,
    pub denergy: f64,
}

/// `∂α = -½ E⁺ (∂E) α` and `∂(α†Dα) = α†(∂D)α + 2 Re(∂α† D α)`,
/// with `E⁺` the pseudo-inverse at the regularization threshold.
pub fn hybrid_gradient(
    d: &CMatrix,
    e: &CMatrix,
    de: &CMatrix,
    dd: &CMatrix,
    alpha: &CVector,
    reg_threshold: f64,
) -> Result<HybridGradient> {
    let n = alpha.len();
    for (name, m) in [("D", d), ("E", e), ("dE", de), ("dD", dd)] {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "{name} is {}x{}, alpha has {n} entries",
                m.nrows(),
                m.ncols()
            )));
        }
    }
    let w = Whitening::new(e, reg_threshold)?;
    let dalpha = -w.pseudo_inverse_apply(&(de * alpha)) * Complex64::new(0.5, 0.0);
    let direct = alpha.dotc(&(dd * alpha)).re;
    let response = 2.0 * dalpha.dotc(&(d * alpha)).re;
    Ok(HybridGradient {
        dalpha,
        denergy: direct + response,
    })
}

/// `d(α†Eα)/dθ = α†(∂E)α + 2 Re(∂α† E α)`.
pub fn normalization_drift(e: &CMatrix, de: &CMatrix, alpha: &CVector, dalpha: &CVector) -> f64 {
    alpha.dotc(&(de * alpha)).re + 2.0 * dalpha.dotc(&(e * alpha)).re
}

/// Overlaps at `θ` plus parameter-shift derivatives of `E` and `D(β)` for
/// every circuit parameter.
#[derive(Clone, Debug)]
pub struct ShiftDerivatives {
    pub overlaps: OverlapSet,
    pub d_e: Vec<CMatrix>,
    pub d_d: Vec<CMatrix>,
}

pub fn parameter_shift(
    circuit: &ParametricCircuit,
    theta: &[f64],
    basis: &MomentBasis,
    h: &PauliHamiltonian,
    backend: &Backend,
) -> Result<ShiftDerivatives> {
    let beta = h.coefficients();
    let overlaps = OverlapSet::assemble(basis, h, &circuit.bind(theta)?, backend)?;
    let mut d_e = Vec::with_capacity(circuit.n_params());
    let mut d_d = Vec::with_capacity(circuit.n_params());
    for k in 0..circuit.n_params() {
        let (plus, minus) = circuit.shifted(theta, k)?;
        let sp = OverlapSet::assemble(basis, h, &plus, backend)?;
        let sm = OverlapSet::assemble(basis, h, &minus, backend)?;
        let half = Complex64::new(0.5, 0.0);
        d_e.push((sp.e() - sm.e()) * half);
        d_d.push((sp.d_matrix(&beta)? - sm.d_matrix(&beta)?) * half);
    }
    Ok(ShiftDerivatives { overlaps, d_e, d_d })
}

/// Energy derivative of the regularized solution with respect to every circuit parameter.
pub fn circuit_energy_gradient(
    circuit: &ParametricCircuit,
    theta: &[f64],
    basis: &MomentBasis,
    h: &PauliHamiltonian,
    backend: &Backend,
    config: &SolverConfig,
) -> Result<(GroundStateSolution, Vec<HybridGradient>)> {
    let shifts = parameter_shift(circuit, theta, basis, h, backend)?;
    let d = shifts.overlaps.d_matrix(&h.coefficients())?;
    let e = shifts.overlaps.e();
    let solution = solve(&d, e, config)?;
    let grads = shifts
        .d_e
        .iter()
        .zip(&shifts.d_d)
        .map(|(de, dd)| hybrid_gradient(&d, e, de, dd, &solution.alpha, config.reg_threshold))
        .collect::<Result<Vec<_>>>()?;
    Ok((solution, grads))
}

/// Dense `Σ_n α_n P_n|ψ⟩`.
pub fn reconstruct_state(basis: &[crate::moments::BasisElement], state: &ReferenceState, alpha: &CVector) -> Result<Vec<Complex64>> {
    if basis.len() != alpha.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients for {} basis elements",
            alpha.len(),
            basis.len()
        )));
    }
    let amps = state.amplitudes()?;
    let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
    for (el, &a) in basis.iter().zip(alpha.iter()) {
        if a == Complex64::new(0.0, 0.0) {
            continue;
        }
        apply_pauli_into(&amps, &el.term, a, &mut out);
    }
    Ok(out)
}

/// `out += c · P|ψ⟩`.
fn apply_pauli_into(amps: &[Complex64], p: &PauliTerm, c: Complex64, out: &mut [Complex64]) {
    let x = p.x_mask()[0] as usize;
    let z = p.z_mask()[0] as usize;
    let base = c * i_pow(p.phase_exp() as u32 + (x & z).count_ones());
    for (b, a) in amps.iter().enumerate() {
        let v = base * a;
        if (z & b).count_ones() % 2 == 1 {
            out[b ^ x] -= v;
        } else {
            out[b ^ x] += v;
        }
    }
}

/// `|⟨target|ψ⟩|² / (‖target‖² ‖ψ‖²)`.
pub fn fidelity(target: &[Complex64], psi: &[Complex64]) -> f64 {
    let overlap: Complex64 = target.iter().zip(psi).map(|(t, p)| t.conj() * p).sum();
    let nt: f64 = target.iter().map(|z| z.norm_sqr()).sum();
    let np: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    overlap.norm_sqr() / (nt * np)
}
