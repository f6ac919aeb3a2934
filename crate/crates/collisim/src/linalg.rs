//! Dense complex linear algebra for small qubit registers.
//!
//! Everything here operates on [`CMatrix`], a dense square matrix of
//! `Complex<f64>`. Registers in this crate stay below ~8 qubits, so dense
//! storage and full eigendecompositions are the right tool.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix.
pub type CMatrix = DMatrix<Complex64>;

/// Tolerance used for Hermiticity and unitarity checks.
pub const HERM_TOL: f64 = 1e-10;

/// Eigenvalues below this magnitude are treated as exact zeros in entropies.
pub const EIG_CLAMP: f64 = 1e-14;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// 2x2 identity.
pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Kronecker product. The left factor occupies the more significant index
/// block, matching the register convention (leftmost label = most
/// significant bits).
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Max entrywise deviation from Hermiticity, `max |M - M^†|`.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Replace `m` with its Hermitian part `(M + M^†)/2`.
///
/// Applied after every conjugation in the collision loop so that round-off
/// does not accumulate over thousands of steps.
pub fn rehermitize(m: &mut CMatrix) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)] = c(m[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

fn check_hermitian(m: &CMatrix) -> Result<()> {
    let deviation = hermiticity_error(m);
    if deviation > HERM_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Returns eigenvalues in ascending order and the matching unitary of column
/// eigenvectors, so that `M = V diag(λ) V^†`.
pub fn herm_eig(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    check_hermitian(m)?;
    // nalgebra's SymmetricEigen miscomputes complex Hermitian matrices with
    // degenerate spectra (the result is unitary but does not diagonalize the
    // input), so the decomposition is delegated to faer.
    let mut h = m.clone();
    rehermitize(&mut h);
    let n = m.nrows();
    let fm = faer::Mat::from_fn(n, n, |i, j| faer::c64::new(h[(i, j)].re, h[(i, j)].im));
    let eig = fm
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::InvalidState(format!("eigendecomposition failed: {e:?}")))?;
    let values: Vec<f64> = (0..n).map(|i| eig.S()[i].re).collect();
    let mut vectors = CMatrix::zeros(n, n);
    let u = eig.U();
    for col in 0..n {
        for row in 0..n {
            vectors[(row, col)] = c(u[(row, col)].re, u[(row, col)].im);
        }
    }
    // faer returns ascending eigenvalues; assert instead of re-sorting
    debug_assert!(values.windows(2).all(|w| w[0] <= w[1]));
    Ok((values, vectors))
}

/// `U · M · U†` through faer's optimized product. This is the collision
/// loop's hot path; nalgebra multiplies complex matrices with a naive
/// triple loop, which is several times slower at the window sizes the
/// engine works with.
pub fn conjugate_unitary(u: &CMatrix, m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let uf = faer::Mat::from_fn(n, n, |i, j| faer::c64::new(u[(i, j)].re, u[(i, j)].im));
    let mf = faer::Mat::from_fn(n, n, |i, j| faer::c64::new(m[(i, j)].re, m[(i, j)].im));
    let um = &uf * &mf;
    let out = &um * uf.adjoint();
    CMatrix::from_fn(n, n, |i, j| c(out[(i, j)].re, out[(i, j)].im))
}

/// `exp(-i · angle · H)` for Hermitian `H`, via eigendecomposition.
pub fn expm_herm(h: &CMatrix, angle: f64) -> Result<CMatrix> {
    let (values, vectors) = herm_eig(h)?;
    let n = h.nrows();
    let mut phased = vectors.clone();
    for (col, &lambda) in values.iter().enumerate() {
        let phase = c(0.0, -angle * lambda).exp();
        for row in 0..n {
            phased[(row, col)] *= phase;
        }
    }
    Ok(phased * vectors.adjoint())
}

/// Trace norm `||M||_1 = Σ |λ_i|` of a Hermitian matrix.
pub fn trace_norm(m: &CMatrix) -> Result<f64> {
    let (values, _) = herm_eig(m)?;
    Ok(values.iter().map(|v| v.abs()).sum())
}

/// Operator (spectral) norm `max |λ_i|` of a Hermitian matrix.
pub fn operator_norm(m: &CMatrix) -> Result<f64> {
    let (values, _) = herm_eig(m)?;
    Ok(values.iter().fold(0.0, |acc, v| acc.max(v.abs())))
}

/// Max entrywise modulus, handy for closeness assertions.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc: f64, z| acc.max(z.norm()))
}

/// Max entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    let mut worst = 0.0_f64;
    for (x, y) in a.iter().zip(b.iter()) {
        worst = worst.max((x - y).norm());
    }
    worst
}

/// `-Σ λ_i ln λ_i` over the eigenvalues of a Hermitian matrix, with the
/// convention `0 ln 0 = 0`. Eigenvalues below [`EIG_CLAMP`] are clamped to 0.
pub fn spectrum_entropy(m: &CMatrix) -> Result<f64> {
    let (values, _) = herm_eig(m)?;
    Ok(values
        .iter()
        .map(|&v| if v > EIG_CLAMP { -v * v.ln() } else { 0.0 })
        .sum())
}
