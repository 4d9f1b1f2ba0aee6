//! Dense linear-algebra helpers shared by the simulator and the Fisher routines.
//!
//! All eigendecompositions go through nalgebra's symmetric (Hermitian) solver;
//! results are re-sorted in descending eigenvalue order.

use nalgebra::{Complex, DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type RMatrix = DMatrix<f64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest elementwise deviation `|m_ij - conj(m_ji)|`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest elementwise deviation of `u^dagger u` from the identity.
pub fn unitary_deviation(u: &CMatrix) -> f64 {
    let prod = u.adjoint() * u;
    let n = u.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((prod[(i, j)] - target).norm());
        }
    }
    worst
}

/// Hermitian eigendecomposition, eigenvalues descending, eigenvectors as columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    // Symmetrize first: the solver reads only one triangle.
    let h = (m + m.adjoint()).map(|z| z * 0.5);
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

/// Real symmetric eigendecomposition, eigenvalues descending.
pub fn symmetric_eigen(m: &RMatrix) -> (Vec<f64>, RMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), RMatrix::zeros(0, 0));
    }
    let s = symmetrize(m);
    let eig = SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = RMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

pub fn symmetrize(m: &RMatrix) -> RMatrix {
    (m + m.transpose()) * 0.5
}

/// Smallest eigenvalue of the symmetrized matrix; `+inf` for the empty matrix.
pub fn min_eigenvalue(m: &RMatrix) -> f64 {
    symmetric_eigen(m)
        .0
        .last()
        .copied()
        .unwrap_or(f64::INFINITY)
}

/// Clip negative eigenvalues at zero.
pub fn clip_psd(m: &RMatrix) -> RMatrix {
    let (values, vectors) = symmetric_eigen(m);
    let clipped = RMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        values.len(),
        values.iter().map(|v| v.max(0.0)),
    ));
    &vectors * clipped * vectors.transpose()
}

/// Principal square root of a PSD Hermitian matrix.
///
/// Eigenvalues in `[-1e-9, 0)` are clamped to zero; anything more negative is
/// rejected. Eigenvalues below `1e-14 · λ_max` are round-off and also set to
/// zero, since the square root would amplify them to ~1e-8.
pub fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigen(m);
    if let Some(&lowest) = values.last() {
        if lowest < -1e-9 {
            return Err(Error::InvalidState(format!(
                "matrix is not positive semidefinite (min eigenvalue {lowest:.3e})"
            )));
        }
    }
    let n = values.len();
    let floor = 1e-14 * values.first().copied().unwrap_or(0.0).max(0.0);
    let roots = CMatrix::from_fn(n, n, |i, j| {
        if i == j && values[i] > floor {
            c(values[i].sqrt(), 0.0)
        } else {
            ZERO
        }
    });
    Ok(&vectors * roots * vectors.adjoint())
}

/// Kronecker product with `a` acting on the more significant factor.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Single-qubit Pauli matrix for `I`, `X`, `Y` or `Z`.
pub fn pauli(letter: char) -> Result<CMatrix> {
    let m = match letter.to_ascii_uppercase() {
        'I' => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ONE]),
        'X' => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        'Y' => CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        'Z' => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown Pauli letter '{other}'"
            )))
        }
    };
    Ok(m)
}

/// Tensor product of Pauli letters; the first letter acts on the most
/// significant factor.
pub fn pauli_string(letters: &str) -> Result<CMatrix> {
    let mut out = identity(1);
    for ch in letters.chars() {
        out = kron(&out, &pauli(ch)?);
    }
    Ok(out)
}

pub fn real_part(m: &CMatrix) -> RMatrix {
    m.map(|z| z.re)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().copied().sum()
}
