//! Dense reference constructions and reusable checks for the integration,
//! property and acceptance targets.
#![allow(dead_code)]

use iqae_core::linalg::{hermitian_eig, symmetrize};
use iqae_core::oracles::{exact_ground, krylov_power_solve, pauli_matrix, DenseOperator};
use iqae_core::overlap::OverlapSet;
use iqae_core::solver::solve_overlaps;
use iqae_core::{
    grouping, Backend, CMatrix, CVector, Complex64, Letter, MomentBasis, PauliHamiltonian, PauliTerm, ReferenceState,
    SolverConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn letters_term(letters: &[u8], phase: u8) -> PauliTerm {
    let ls: Vec<Letter> = letters
        .iter()
        .map(|l| match l % 4 {
            0 => Letter::I,
            1 => Letter::X,
            2 => Letter::Y,
            _ => Letter::Z,
        })
        .collect();
    PauliTerm::from_letters(&ls).with_phase(phase)
}

pub fn random_term(n: usize, rng: &mut ChaCha8Rng) -> PauliTerm {
    let letters: Vec<u8> = (0..n).map(|_| rng.random_range(0..4u8)).collect();
    letters_term(&letters, rng.random_range(0..4u8))
}

/// Gaussian complex vector, normalized; Haar distributed.
pub fn random_state(n_qubits: usize, rng: &mut ChaCha8Rng) -> CVector {
    use rand_distr::{Distribution, StandardNormal};
    let dim = 1 << n_qubits;
    let v = CVector::from_iterator(
        dim,
        (0..dim).map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re, im)
        }),
    );
    v.unscale(v.norm())
}

pub fn state_from_vector(n: usize, v: &CVector) -> ReferenceState {
    ReferenceState::from_amplitudes(n, v.iter().copied().collect()).unwrap()
}

/// Random Hamiltonian of `r` terms, optionally with an identity offset.
pub fn random_hamiltonian(n: usize, r: usize, rng: &mut ChaCha8Rng) -> PauliHamiltonian {
    let r = r.min(4usize.pow(n as u32) - 1);
    let seed = rng.random::<u64>();
    iqae_core::models::random_pauli(n, r, seed).unwrap()
}

/// Columns `P_n|ψ⟩` built from Kronecker matrices.
pub fn basis_vectors(basis: &MomentBasis, psi: &CVector) -> Vec<CVector> {
    basis.elements().iter().map(|e| pauli_matrix(&e.term) * psi).collect()
}

/// `(E, D)` from explicit state vectors.
pub fn dense_overlaps(basis: &MomentBasis, h: &PauliHamiltonian, psi: &CVector) -> (CMatrix, CMatrix) {
    let v = CMatrix::from_columns(&basis_vectors(basis, psi));
    let hm = DenseOperator::from_hamiltonian(h).unwrap();
    let e = v.adjoint() * &v;
    let d = v.adjoint() * hm.matrix() * &v;
    (e, d)
}

pub fn max_entry_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Product laws and the dense product for three terms of one width.
pub fn check_group_laws(a: &PauliTerm, b: &PauliTerm, cc: &PauliTerm) -> Result<(), String> {
    let ab = a.multiply(b).unwrap();
    let lhs = ab.multiply(cc).unwrap();
    let rhs = a.multiply(&b.multiply(cc).unwrap()).unwrap();
    if lhs != rhs {
        return Err(format!("associativity fails for {a} {b} {cc}"));
    }
    let id = PauliTerm::identity(a.n_qubits());
    if a.multiply(&id).unwrap() != *a || id.multiply(a).unwrap() != *a {
        return Err(format!("identity law fails for {a}"));
    }
    let aa = a.multiply(&a.adjoint()).unwrap();
    if aa != id {
        return Err(format!("{a} times its adjoint is {aa}"));
    }
    if ab.phase_exp() > 3 {
        return Err("phase out of range".into());
    }
    let dense = pauli_matrix(a) * pauli_matrix(b);
    let diff = max_entry_diff(&dense, &pauli_matrix(&ab));
    if diff > 1e-12 {
        return Err(format!("dense product of {a} and {b} differs by {diff}"));
    }
    if a.is_hermitian() && a.multiply(a).unwrap() != id {
        return Err(format!("Hermitian {a} does not square to identity"));
    }
    let back: PauliTerm = a.to_string().parse().unwrap();
    if back != *a {
        return Err(format!("label round trip fails for {a}"));
    }
    Ok(())
}

/// Assembled `E`, `D(β)` against explicit Gram matrices, plus PSD and Hermiticity.
pub fn check_assembler_vs_dense(h: &PauliHamiltonian, psi: &CVector, k: usize, cap: Option<usize>) -> Result<(), String> {
    let n = h.n_qubits();
    let basis = MomentBasis::build(h.strings(), k, cap).unwrap();
    let state = state_from_vector(n, psi);
    let set = OverlapSet::assemble(&basis, h, &state, &Backend::Exact).map_err(|e| e.to_string())?;
    let (e, d) = dense_overlaps(&basis, h, psi);
    let de = max_entry_diff(set.e(), &e);
    let dd = max_entry_diff(&set.d_matrix(&h.coefficients()).unwrap(), &d);
    if de > 1e-10 || dd > 1e-10 {
        return Err(format!("entrywise mismatch E {de:e}, D {dd:e} (n={n}, k={k}, dim={})", basis.len()));
    }
    if set.e() != &set.e().adjoint() {
        return Err("E not exactly Hermitian".into());
    }
    let dm = set.d_matrix(&h.coefficients()).unwrap();
    if dm != dm.adjoint() {
        return Err("D not exactly Hermitian".into());
    }
    let min = hermitian_eig(&symmetrize(set.e())).unwrap().values[0];
    if min < -1e-10 {
        return Err(format!("E has eigenvalue {min:e}"));
    }
    if (0..set.dim()).any(|i| set.e()[(i, i)] != c(1.0)) {
        return Err("E diagonal is not one".into());
    }
    Ok(())
}

/// IQAE energy bounded below by the exact ground energy and above by the
/// power-Krylov energy at the same order; solution invariants hold.
pub fn check_variational_and_krylov(h: &PauliHamiltonian, psi: &CVector, k: usize) -> Result<(f64, f64, f64), String> {
    let n = h.n_qubits();
    let config = SolverConfig::exact(k);
    let basis = MomentBasis::build(h.strings(), k, None).unwrap();
    let state = state_from_vector(n, psi);
    let set = OverlapSet::assemble(&basis, h, &state, &Backend::Exact).unwrap();
    let sol = solve_overlaps(&set, &config).map_err(|e| e.to_string())?;
    let (lambda, _) = exact_ground(h).unwrap();
    if sol.energy < lambda - 1e-9 {
        return Err(format!("energy {} below ground {lambda}", sol.energy));
    }
    let d = set.d_matrix(&h.coefficients()).unwrap();
    let norm = sol.alpha.dotc(&(set.e() * &sol.alpha)).re;
    let recon = sol.alpha.dotc(&(&d * &sol.alpha)).re;
    if (norm - 1.0).abs() > 1e-10 || (recon - sol.energy).abs() > 1e-10 {
        return Err(format!("invariants: a†Ea = {norm}, a†Da - energy = {:e}", recon - sol.energy));
    }
    let kry = krylov_power_solve(h, psi, k, &config).map_err(|e| e.to_string())?;
    if kry.energy < sol.energy - 1e-9 {
        return Err(format!("Krylov energy {} below moment energy {}", kry.energy, sol.energy));
    }
    Ok((lambda, sol.energy, kry.energy))
}

/// Plan validity, determinism and the greedy degree bound.
pub fn check_grouping(strings: &[PauliTerm]) -> Result<usize, String> {
    let p = grouping::plan(strings).map_err(|e| e.to_string())?;
    if !grouping::validate(&p, strings) {
        return Err("plan fails validation".into());
    }
    if grouping::plan(strings).unwrap() != p {
        return Err("plan not deterministic".into());
    }
    let mut max_degree = 0;
    for (i, a) in strings.iter().enumerate() {
        let deg = strings
            .iter()
            .enumerate()
            .filter(|(j, b)| *j != i && !a.commutes_qubitwise(b).unwrap())
            .count();
        max_degree = max_degree.max(deg);
    }
    if p.settings_count() > max_degree + 1 || p.settings_count() > strings.len() {
        return Err(format!("{} settings exceed bound {}", p.settings_count(), max_degree + 1));
    }
    Ok(p.settings_count())
}

/// Distinct Hermitian strings on `n` qubits.
pub fn distinct_strings(n: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<PauliTerm> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    let limit = count.min(4usize.pow(n as u32));
    while out.len() < limit {
        let t = random_term(n, rng).without_phase();
        if seen.insert(t.key()) {
            out.push(t);
        }
    }
    out
}

/// Sample mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Sample standard deviation.
pub fn std_dev(xs: &[f64]) -> f64 {
    let (_, se) = mean_se(xs);
    se * (xs.len() as f64).sqrt()
}

/// Least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Haar Monte Carlo of `⟨ψ|H|ψ⟩^p` for `p = 1, 2, 3`: `(means, standard errors)`.
pub fn haar_monte_carlo(h: &PauliHamiltonian, samples: usize, seed: u64) -> ([f64; 3], [f64; 3]) {
    let hm = DenseOperator::from_hamiltonian(h).unwrap();
    let m = hm.matrix();
    let mut r = rng(seed);
    let mut vals: [Vec<f64>; 3] = [Vec::with_capacity(samples), Vec::with_capacity(samples), Vec::with_capacity(samples)];
    for _ in 0..samples {
        let psi = random_state(h.n_qubits(), &mut r);
        let e = psi.dotc(&(m * &psi)).re;
        vals[0].push(e);
        vals[1].push(e * e);
        vals[2].push(e * e * e);
    }
    let mut means = [0.0; 3];
    let mut ses = [0.0; 3];
    for p in 0..3 {
        let (a, b) = mean_se(&vals[p]);
        means[p] = a;
        ses[p] = b;
    }
    (means, ses)
}

/// `β` for `(J/2) Σ XX - h Σ Z` in the term order of `base`.
pub fn ising_beta(base: &PauliHamiltonian, j: f64, field: f64) -> Vec<f64> {
    base.terms()
        .iter()
        .map(|(_, t)| if t.x_mask().iter().any(|w| *w != 0) { j / 2.0 } else { -field })
        .collect()
}
