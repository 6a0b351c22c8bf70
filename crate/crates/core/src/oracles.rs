//! Dense small-N ground truth. Nothing here goes through the overlap assembler.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, hermitian_defect, max_abs, CMatrix, CVector, HermitianEigen, HERMITIAN_TOL};
use crate::pauli::{Letter, PauliHamiltonian, PauliTerm};
use crate::solver::{solve, GroundStateSolution, SolverConfig};

pub const ORACLE_QUBIT_LIMIT: usize = 12;

fn check_width(n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(Error::StatevectorLimit { n_qubits: n, limit });
    }
    Ok(())
}

/// Dense Hermitian matrix, verified at construction.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    matrix: CMatrix,
}

impl DenseOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let defect = hermitian_defect(&matrix);
        if !matrix.is_square() || defect > HERMITIAN_TOL * max_abs(&matrix).max(1.0) {
            return Err(Error::NonHermitian(format!("dense operator defect {defect:e}")));
        }
        Ok(DenseOperator { matrix })
    }

    pub fn from_hamiltonian(h: &PauliHamiltonian) -> Result<Self> {
        check_width(h.n_qubits(), ORACLE_QUBIT_LIMIT)?;
        let dim = 1usize << h.n_qubits();
        let mut m = CMatrix::zeros(dim, dim);
        for (beta, t) in h.terms() {
            m += pauli_matrix(t) * Complex64::new(*beta, 0.0);
        }
        DenseOperator::new(m)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn eig(&self) -> Result<HermitianEigen> {
        hermitian_eig(&self.matrix)
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> Result<f64> {
        let e = self.eig()?;
        Ok(e.values.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }
}

fn letter_matrix(l: Letter) -> CMatrix {
    let o = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    match l {
        Letter::I => CMatrix::from_row_slice(2, 2, &[one, o, o, one]),
        Letter::X => CMatrix::from_row_slice(2, 2, &[o, one, one, o]),
        Letter::Y => CMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        Letter::Z => CMatrix::from_row_slice(2, 2, &[one, o, o, -one]),
    }
}

/// Kronecker product with qubit 0 as the least significant index bit.
pub fn pauli_matrix(p: &PauliTerm) -> CMatrix {
    let mut m = CMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    for q in 0..p.n_qubits() {
        m = letter_matrix(p.letter(q)).kronecker(&m);
    }
    let phase = match p.phase_exp() {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    m * phase
}

/// `(λ_1, φ_1)`.
pub fn exact_ground(h: &PauliHamiltonian) -> Result<(f64, CVector)> {
    let eig = DenseOperator::from_hamiltonian(h)?.eig()?;
    Ok((eig.values[0], eig.vectors.column(0).into_owned()))
}

/// Dense `⟨ψ|H|ψ⟩`.
pub fn energy(h: &DenseOperator, psi: &CVector) -> f64 {
    psi.dotc(&(h.matrix() * psi)).re / psi.norm_squared()
}

fn check_state(dim: usize, psi: &CVector) -> Result<()> {
    if psi.len() != dim {
        return Err(Error::DimensionMismatch(format!("state of length {} for dimension {dim}", psi.len())));
    }
    if (psi.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidState(format!("state norm {} is not 1", psi.norm())));
    }
    Ok(())
}

/// Normalized `e^{-τH}|ψ₀⟩` by short Taylor steps of matrix-vector products.
/// Products keep exact zeros, so symmetry sectors do not leak into each
/// other through rounding as they would through an eigenbasis.
pub fn ite_evolve(h: &PauliHamiltonian, psi0: &CVector, tau: f64) -> Result<CVector> {
    check_width(h.n_qubits(), ORACLE_QUBIT_LIMIT)?;
    let op = DenseOperator::from_hamiltonian(h)?;
    check_state(op.dim(), psi0)?;
    Propagator::new(&op, h.l1_norm()).advance(psi0, tau)
}

struct Propagator<'a> {
    op: &'a DenseOperator,
    /// Longest step with `‖H‖ dt ≤ 1/2`.
    max_step: f64,
}

impl<'a> Propagator<'a> {
    fn new(op: &'a DenseOperator, norm_bound: f64) -> Self {
        Propagator {
            op,
            max_step: if norm_bound > 0.0 { 0.5 / norm_bound } else { f64::INFINITY },
        }
    }

    fn advance(&self, psi: &CVector, tau: f64) -> Result<CVector> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::InvalidState(format!("imaginary time {tau} must be finite and nonnegative")));
        }
        let steps = (tau / self.max_step).ceil().max(1.0) as usize;
        let dt = tau / steps as f64;
        let mut v = psi.clone();
        for _ in 0..steps {
            let mut term = v.clone();
            let mut sum = v.clone();
            for p in 1..64 {
                term = self.op.matrix() * &term * Complex64::new(-dt / p as f64, 0.0);
                sum += &term;
                if term.norm() <= 1e-17 * sum.norm() {
                    break;
                }
            }
            let norm = sum.norm();
            if norm == 0.0 || !norm.is_finite() {
                return Err(Error::ZeroNorm);
            }
            v = sum.unscale(norm);
        }
        Ok(v)
    }
}

/// ITE energies on a grid of imaginary times, propagating through the sorted grid.
pub fn ite_energies(h: &PauliHamiltonian, psi0: &CVector, taus: &[f64]) -> Result<Vec<f64>> {
    check_width(h.n_qubits(), ORACLE_QUBIT_LIMIT)?;
    let op = DenseOperator::from_hamiltonian(h)?;
    check_state(op.dim(), psi0)?;
    let prop = Propagator::new(&op, h.l1_norm());
    let mut order: Vec<usize> = (0..taus.len()).collect();
    order.sort_by(|&a, &b| taus[a].total_cmp(&taus[b]));
    let mut out = vec![0.0; taus.len()];
    let mut psi = psi0.clone();
    let mut at = 0.0;
    for i in order {
        if !(taus[i] >= 0.0) {
            return Err(Error::InvalidState(format!("imaginary time {} must be nonnegative", taus[i])));
        }
        psi = prop.advance(&psi, taus[i] - at)?;
        at = taus[i];
        out[i] = energy(&op, &psi);
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct TruncatedIte {
    /// Normalized `Σ_{p≤K} (-τH)^p/p! |ψ⟩`.
    pub gamma_k: CVector,
    /// `Σ_{p≤K} (-λ_1τ)^p/p!` over the square root of the double moment sum.
    pub a_k: f64,
    /// `|⟨φ_1|ψ⟩|²`.
    pub a1_sq: f64,
    /// `|⟨φ_1|γ⟩|²` for the untruncated ITE state.
    pub p_ground: f64,
    /// Distance from `γ_K` to the span of the cumulative K-moment states.
    pub containment_residual: f64,
}

impl TruncatedIte {
    /// `|a_1|² |A_K|²`, compared against `p_ground`.
    pub fn truncated_probability(&self) -> f64 {
        self.a1_sq * self.a_k * self.a_k
    }
}

/// Moments `⟨ψ|H^p|ψ⟩` for `p = 0..=p_max`.
pub fn moments(h: &DenseOperator, psi: &CVector, p_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(p_max + 1);
    let mut left = psi.clone();
    let mut right = psi.clone();
    out.push(psi.norm_squared());
    // ⟨ψ|H^p|ψ⟩ = ⟨H^a ψ|H^b ψ⟩ with a + b = p
    for p in 1..=p_max {
        if p % 2 == 1 {
            right = h.matrix() * &right;
        } else {
            left = h.matrix() * &left;
        }
        out.push(left.dotc(&right).re);
    }
    out
}

pub fn truncated_ite_diagnostics(h: &PauliHamiltonian, psi0: &CVector, tau: f64, k: usize) -> Result<TruncatedIte> {
    check_width(h.n_qubits(), 10)?;
    let op = DenseOperator::from_hamiltonian(h)?;
    check_state(op.dim(), psi0)?;
    let eig = op.eig()?;
    let lambda1 = eig.values[0];
    let phi1 = eig.vectors.column(0).into_owned();

    let mut gamma = psi0.clone();
    let mut term = psi0.clone();
    let mut factorial = 1.0;
    for p in 1..=k {
        term = op.matrix() * &term * Complex64::new(-tau, 0.0);
        factorial *= p as f64;
        gamma += &term / Complex64::new(factorial, 0.0);
    }
    let gamma_norm = gamma.norm();
    if gamma_norm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let gamma_k = gamma.unscale(gamma_norm);

    let mom = moments(&op, psi0, 2 * k);
    let fact: Vec<f64> = (0..=2 * k).scan(1.0, |f, p| {
        if p > 0 {
            *f *= p as f64;
        }
        Some(*f)
    }).collect();
    let numerator: f64 = (0..=k).map(|p| (-lambda1 * tau).powi(p as i32) / fact[p]).sum();
    let mut denominator = 0.0;
    for p1 in 0..=k {
        for p2 in 0..=k {
            denominator += (-tau).powi((p1 + p2) as i32) / (fact[p1] * fact[p2]) * mom[p1 + p2];
        }
    }
    let a_k = numerator / denominator.sqrt();
    let a1_sq = phi1.dotc(psi0).norm_sqr();
    let full = Propagator::new(&op, h.l1_norm()).advance(psi0, tau)?;
    let p_ground = phi1.dotc(&full).norm_sqr();

    let generators: Vec<CMatrix> = h.strings().iter().map(pauli_matrix).collect();
    let span = moment_span(&generators, psi0, k);
    let containment_residual = residual_after_projection(&span, &gamma_k);
    Ok(TruncatedIte {
        gamma_k,
        a_k,
        a1_sq,
        p_ground,
        containment_residual,
    })
}

/// Orthonormal basis of `span{U_{i_k}…U_{i_1}|ψ⟩ : k ≤ K}` by brute-force words.
pub fn moment_span(generators: &[CMatrix], psi: &CVector, k: usize) -> Vec<CVector> {
    let mut basis: Vec<CVector> = Vec::new();
    let mut level = vec![psi.clone()];
    add_orthonormal(&mut basis, psi);
    for _ in 0..k {
        let mut next = Vec::with_capacity(level.len() * generators.len());
        for v in &level {
            for g in generators {
                let w = g * v;
                add_orthonormal(&mut basis, &w);
                next.push(w);
            }
        }
        level = next;
        if basis.len() == psi.len() {
            break;
        }
    }
    basis
}

fn add_orthonormal(basis: &mut Vec<CVector>, v: &CVector) {
    let scale = v.norm();
    if scale == 0.0 {
        return;
    }
    let mut w = v.clone();
    for _ in 0..2 {
        for b in basis.iter() {
            let c = b.dotc(&w);
            w -= b * c;
        }
    }
    let n = w.norm();
    if n > 1e-9 * scale {
        basis.push(w.unscale(n));
    }
}

pub fn residual_after_projection(basis: &[CVector], v: &CVector) -> f64 {
    let mut w = v.clone();
    for _ in 0..2 {
        for b in basis {
            let c = b.dotc(&w);
            w -= b * c;
        }
    }
    w.norm()
}

/// Ground energy of `H` restricted to a subspace with the given orthonormal basis.
pub fn subspace_ground(h: &DenseOperator, basis: &[CVector]) -> Result<f64> {
    if basis.is_empty() {
        return Err(Error::AllDiscarded { threshold: 0.0 });
    }
    let q = CMatrix::from_columns(basis);
    let reduced = q.adjoint() * h.matrix() * &q;
    Ok(hermitian_eig(&crate::linalg::symmetrize(&reduced))?.values[0])
}

/// Haar average of `⟨ψ|H|ψ⟩^p` for `p ∈ {1, 2, 3}` from dense traces.
pub fn haar_moment(h: &PauliHamiltonian, p: usize) -> Result<f64> {
    check_width(h.n_qubits(), 10)?;
    if !(1..=3).contains(&p) {
        return Err(Error::UnsupportedMoment(p));
    }
    let op = DenseOperator::from_hamiltonian(h)?;
    let m = op.matrix();
    let n = op.dim() as f64;
    let t1 = m.trace().re;
    let h2 = m * m;
    let t2 = h2.trace().re;
    Ok(match p {
        1 => t1 / n,
        2 => (t1 * t1 + t2) / (n * (n + 1.0)),
        _ => {
            let t3 = (&h2 * m).trace().re;
            (t1 * t1 * t1 + 3.0 * t2 * t1 + 2.0 * t3) / (n * (n + 1.0) * (n + 2.0))
        }
    })
}

/// Regularized QCQP on `{ψ, Hψ, …, H^Kψ}` from Hankel moment matrices.
/// `H` is scaled to unit spectral norm first so high powers stay finite.
pub fn krylov_power_solve(h: &PauliHamiltonian, psi0: &CVector, k: usize, config: &SolverConfig) -> Result<GroundStateSolution> {
    check_width(h.n_qubits(), ORACLE_QUBIT_LIMIT)?;
    let op = DenseOperator::from_hamiltonian(h)?;
    check_state(op.dim(), psi0)?;
    let scale = op.spectral_norm()?.max(f64::MIN_POSITIVE);
    let scaled = DenseOperator {
        matrix: op.matrix().unscale(scale),
    };
    let mom = moments(&scaled, psi0, 2 * k + 1);
    let e = CMatrix::from_fn(k + 1, k + 1, |i, j| Complex64::new(mom[i + j], 0.0));
    let d = CMatrix::from_fn(k + 1, k + 1, |i, j| Complex64::new(mom[i + j + 1], 0.0));
    let mut sol = solve(&d, &e, config)?;
    sol.energy *= scale;
    for t in &mut sol.trace {
        t.energy *= scale;
    }
    Ok(sol)
}
