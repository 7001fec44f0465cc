//! Dense linear algebra helpers: Kronecker products, the consensus projector,
//! spectral and numerical radii.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, Schur, SymmetricEigen};
use num_traits::Float;

use crate::error::{Error, Result};

const EIG_EPS: f64 = 1e-14;
const EIG_MAX_ITER: usize = 10_000;

/// `(A ⊗ B)[(i, k), (j, l)] = A[i, j] B[k, l]` with row `i * rows(B) + k`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// `Π = I - 11ᵀ/n`, the orthogonal projector onto the disagreement subspace.
pub fn projector(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - 1.0 / n as f64)
}

fn check_square(a: &DMatrix<f64>) -> Result<()> {
    if !a.is_square() {
        return Err(Error::Dimension(format!("{}x{} matrix is not square", a.nrows(), a.ncols())));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    Ok(())
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(a: &DMatrix<f64>) -> Result<f64> {
    check_square(a)?;
    if a.is_empty() {
        return Ok(0.0);
    }
    let schur = Schur::try_new(a.clone(), EIG_EPS, EIG_MAX_ITER)
        .ok_or_else(|| Error::Numeric("Schur decomposition did not converge".into()))?;
    Ok(schur.complex_eigenvalues().iter().map(|z| z.re.hypot(z.im)).fold(0.0, f64::max))
}

/// Eigenvalues of a symmetric matrix (only the lower triangle is read).
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_square(a)?;
    let eig = SymmetricEigen::try_new(a.clone(), EIG_EPS, EIG_MAX_ITER)
        .ok_or_else(|| Error::Numeric("symmetric eigensolver did not converge".into()))?;
    Ok(eig.eigenvalues.iter().copied().collect())
}

/// Spectral norm of a symmetric matrix, `max |λ|`.
pub fn symmetric_norm(a: &DMatrix<f64>) -> Result<f64> {
    Ok(symmetric_eigenvalues(a)?.into_iter().map(f64::abs).fold(0.0, f64::max))
}

/// Largest `|λ|` of the Hermitian matrix `cos φ S + i sin φ K`, via the real
/// symmetric embedding `[[X, Yᵀ], [Y, X]]` of `X + iY`.
fn hermitian_part_radius(sym: &DMatrix<f64>, skew: &DMatrix<f64>, phi: f64) -> Result<f64> {
    let d = sym.nrows();
    let (c, s) = (phi.cos(), phi.sin());
    let embedded = DMatrix::from_fn(2 * d, 2 * d, |r, q| {
        let (rb, rr) = (r / d, r % d);
        let (qb, qq) = (q / d, q % d);
        match (rb, qb) {
            (0, 0) | (1, 1) => c * sym[(rr, qq)],
            (1, 0) => s * skew[(rr, qq)],
            _ => s * skew[(qq, rr)],
        }
    });
    symmetric_norm(&embedded)
}

/// Numerical radius `w(A) = max_{|x|=1} |x* A x|`.
///
/// Uses `w(A) = max_{φ∈[0,π)} max |λ(H_φ)|` with `H_φ` the Hermitian part of
/// `e^{iφ} A`: a 64-point grid in φ, then golden-section refinement around
/// the three best local maxima until the bracket is below `tol`.
pub fn numerical_radius(a: &DMatrix<f64>, tol: f64) -> Result<f64> {
    check_square(a)?;
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let sym = (a + a.transpose()) * 0.5;
    let skew = (a - a.transpose()) * 0.5;
    if skew.iter().all(|&v| v == 0.0) {
        return symmetric_norm(&sym);
    }
    const GRID: usize = 64;
    let step = core::f64::consts::PI / GRID as f64;
    let f = |phi: f64| hermitian_part_radius(&sym, &skew, phi);
    let values = (0..GRID).map(|k| f(k as f64 * step)).collect::<Result<Vec<_>>>()?;
    let mut best = values.iter().copied().fold(0.0, f64::max);

    // The objective has period π.
    let mut peaks: Vec<usize> = (0..GRID)
        .filter(|&k| {
            let prev = values[(k + GRID - 1) % GRID];
            let next = values[(k + 1) % GRID];
            values[k] >= prev && values[k] >= next
        })
        .collect();
    peaks.sort_by(|&p, &q| values[q].total_cmp(&values[p]));
    peaks.truncate(3);

    let ratio = (5.0.sqrt() - 1.0) / 2.0;
    for k in peaks {
        let (mut lo, mut hi) = ((k as f64 - 1.0) * step, (k as f64 + 1.0) * step);
        let mut x1 = hi - ratio * (hi - lo);
        let mut x2 = lo + ratio * (hi - lo);
        let (mut f1, mut f2) = (f(x1)?, f(x2)?);
        let mut iterations = 0;
        while hi - lo > tol {
            iterations += 1;
            if iterations > 200 {
                return Err(Error::Numeric("numerical radius refinement did not converge".into()));
            }
            if f1 >= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - ratio * (hi - lo);
                f1 = f(x1)?;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + ratio * (hi - lo);
                f2 = f(x2)?;
            }
        }
        best = best.max(f1).max(f2);
    }
    Ok(best)
}
