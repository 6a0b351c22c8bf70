//! Dense complex linear algebra helpers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const HERMITIAN_TOL: f64 = 1e-10;

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `i` is the unit eigenvector for `values[i]`.
    pub vectors: CMatrix,
}

/// Largest `|A_ij - conj(A_ji)|`.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// `(A + A†) / 2`.
pub fn symmetrize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).unscale(2.0)
}

pub fn hermitian_eig(a: &CMatrix) -> Result<HermitianEigen> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition of a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    let defect = hermitian_defect(a);
    if defect > HERMITIAN_TOL * max_abs(a).max(1.0) {
        return Err(Error::NonHermitian(format!(
            "matrix deviates from its adjoint by {defect:e}"
        )));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(HermitianEigen {
            values: Vec::new(),
            vectors: CMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::new(symmetrize(a));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(HermitianEigen { values, vectors })
}

/// Connected components of the nonzero pattern of a square matrix, each sorted,
/// ordered by their smallest index.
pub fn nonzero_blocks(a: &CMatrix) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for j in 0..n {
        for i in 0..j {
            if a[(i, j)] != Complex64::new(0.0, 0.0) || a[(j, i)] != Complex64::new(0.0, 0.0) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[r]].push(i);
    }
    blocks
}

pub fn submatrix(a: &CMatrix, rows: &[usize], cols: &[usize]) -> CMatrix {
    CMatrix::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])])
}

/// `x† A y`.
pub fn quadratic_form(x: &CVector, a: &CMatrix, y: &CVector) -> Complex64 {
    x.dotc(&(a * y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn random_hermitian(n: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = CMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        symmetrize(&m)
    }

    #[test]
    fn diagonal_spectrum() {
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![c(3.0), c(-1.0), c(2.0)]));
        let e = hermitian_eig(&a).unwrap();
        assert_eq!(e.values, vec![-1.0, 2.0, 3.0]);
    }

    #[test]
    fn pauli_x_spectrum() {
        let a = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let e = hermitian_eig(&a).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_residuals_and_orthonormality() {
        let a = random_hermitian(50, 11);
        let e = hermitian_eig(&a).unwrap();
        let norm = a.norm();
        for i in 0..50 {
            let v = e.vectors.column(i).into_owned();
            let r = &a * &v - v.scale(e.values[i]);
            assert!(r.norm() < 1e-9 * norm, "residual {}", r.norm());
        }
        let gram = e.vectors.adjoint() * &e.vectors;
        let off = (gram - CMatrix::identity(50, 50)).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        assert!(off < 1e-10);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        // same input, same output
        let again = hermitian_eig(&a).unwrap();
        assert_eq!(again.values, e.values);
        assert_eq!(again.vectors, e.vectors);
    }

    #[test]
    fn rejects_non_hermitian() {
        let a = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        assert!(matches!(hermitian_eig(&a), Err(Error::NonHermitian(_))));
    }

    #[test]
    fn blocks_follow_pattern() {
        let mut a = CMatrix::identity(5, 5);
        a[(0, 3)] = c(0.5);
        a[(3, 0)] = c(0.5);
        a[(4, 2)] = c(0.1);
        a[(2, 4)] = c(0.1);
        assert_eq!(nonzero_blocks(&a), vec![vec![0, 3], vec![1], vec![2, 4]]);
    }
}
