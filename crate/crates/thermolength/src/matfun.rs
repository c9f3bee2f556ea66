//! Dense matrix-function and matrix-equation kernels.
//!
//! Everything here operates on small dense matrices (2N x 2N with N of
//! order one): matrix functions through complex eigendecomposition, the
//! bounded Gram integral of a matrix exponential, continuous Lyapunov
//! solves via a Kronecker linear system, and symmetric-definite roots
//! and logarithms. All kernels are pure functions.

use nalgebra::{Complex, DMatrix, DVector};

use crate::{Error, Result};

/// Complex scalar used throughout the kernels.
pub type C64 = Complex<f64>;
/// Dense complex matrix.
pub type CMatrix = DMatrix<C64>;
/// Dense real matrix.
pub type RMatrix = DMatrix<f64>;
/// Dense real vector.
pub type RVector = DVector<f64>;

/// Default cap on the eigenvector condition number; beyond it a matrix
/// is treated as numerically non-diagonalizable.
pub const CONDITION_CAP: f64 = 1e8;

/// Largest entry magnitude; the infinity-style norm used in residuals.
pub fn max_abs(m: &RMatrix) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Largest entry magnitude of a complex matrix.
pub fn max_abs_c(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.norm()))
}

/// Eigendecomposition M = V diag(values) V^{-1} of a general complex matrix.
#[derive(Debug, Clone)]
pub struct ComplexEigen {
    /// Eigenvector matrix V (unit-norm columns).
    pub vectors: CMatrix,
    /// Inverse eigenvector matrix V^{-1}.
    pub inverse: CMatrix,
    /// Eigenvalues, ordered as the columns of V.
    pub values: DVector<C64>,
    /// Condition estimate ||V|| * ||V^{-1}|| (Frobenius).
    pub condition: f64,
}

/// Diagonalizes a general complex square matrix via its Schur form.
///
/// Eigenvectors are recovered by back-substitution on the triangular
/// factor; a defective or near-defective input inflates the eigenvector
/// condition number past `cap` and is rejected.
pub fn complex_eigen(m: &CMatrix, cap: f64) -> Result<ComplexEigen> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::InvalidArgument(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            n,
            m.ncols()
        )));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidArgument(
            "matrix contains non-finite entries".into(),
        ));
    }
    // Already-triangular input (zero and diagonal matrices included) is
    // its own Schur form; the iteration below chokes on the zero matrix.
    let zero = C64::new(0.0, 0.0);
    let lower_zero = (1..n).all(|i| (0..i).all(|j| m[(i, j)] == zero));
    let (q, t) = if lower_zero {
        (CMatrix::identity(n, n), m.clone())
    } else {
        m.clone()
            .try_schur(f64::EPSILON, 10_000)
            .ok_or(Error::NotConverged {
                iterations: 10_000,
                residual: f64::NAN,
            })?
            .unpack()
    };
    let scale = max_abs_c(&t).max(f64::MIN_POSITIVE);
    // Guard for repeated diagonal entries: perturbing the denominator by
    // ~eps*scale turns a defective case into a huge condition number,
    // which the cap below converts into an explicit error.
    let tiny = f64::EPSILON * scale;

    let mut z = CMatrix::zeros(n, n);
    let mut values = DVector::from_element(n, C64::new(0.0, 0.0));
    for k in 0..n {
        values[k] = t[(k, k)];
        let mut y = DVector::from_element(n, C64::new(0.0, 0.0));
        y[k] = C64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut s = C64::new(0.0, 0.0);
            for j in (i + 1)..=k {
                s += t[(i, j)] * y[j];
            }
            if s.norm() == 0.0 {
                // Exactly decoupled row; no division (the guarded
                // denominator can be denormal for all-zero inputs).
                continue;
            }
            let mut den = t[(i, i)] - t[(k, k)];
            if den.norm() < tiny {
                den = C64::new(tiny, 0.0);
            }
            y[i] = -s / den;
        }
        let norm = y.norm();
        for i in 0..n {
            z[(i, k)] = y[i] / norm;
        }
    }
    let vectors = &q * z;
    let inverse = vectors
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::NonDiagonalizable {
            condition: f64::INFINITY,
            cap,
        })?;
    let condition = vectors.norm() * inverse.norm();
    if !condition.is_finite() || condition > cap {
        return Err(Error::NonDiagonalizable {
            condition,
            cap,
        });
    }
    Ok(ComplexEigen {
        vectors,
        inverse,
        values,
        condition,
    })
}

/// Applies a scalar function to a diagonalizable complex matrix:
/// f(M) = V f(diag) V^{-1}.
pub fn apply_matrix_function<F>(m: &CMatrix, f: F) -> Result<CMatrix>
where
    F: Fn(C64) -> C64,
{
    let eig = complex_eigen(m, CONDITION_CAP)?;
    let n = m.nrows();
    let mut diag = CMatrix::zeros(n, n);
    for k in 0..n {
        let fv = f(eig.values[k]);
        if !fv.re.is_finite() || !fv.im.is_finite() {
            return Err(Error::SingularEigenvalue(format!(
                "function undefined at eigenvalue {:.6e}{:+.6e}i",
                eig.values[k].re, eig.values[k].im
            )));
        }
        diag[(k, k)] = fv;
    }
    Ok(&eig.vectors * diag * &eig.inverse)
}

/// phi(z, beta) = (e^{beta z} - 1)/z with phi(0, beta) = beta.
///
/// A series branch below |beta z| = 1e-6 avoids the cancellation that
/// otherwise occurs for conjugate frequency pairs summing to zero.
pub fn phi(z: C64, beta: f64) -> C64 {
    let w = z * beta;
    if w.norm() < 1e-6 {
        let c = C64::new(1.0, 0.0)
            + w / 2.0
            + w * w / 6.0
            + w * w * w / 24.0;
        c * beta
    } else {
        ((z * beta).exp() - 1.0) / z
    }
}

/// e^z - 1 for complex z, accurate near z = 0.
pub(crate) fn expm1_c(z: C64) -> C64 {
    if z.im == 0.0 {
        C64::new(z.re.exp_m1(), 0.0)
    } else if z.norm() < 1e-3 {
        // z * sum_{m>=0} z^m / (m+1)! in Horner form
        let mut s = C64::new(1.0, 0.0);
        for k in (2..=9u32).rev() {
            s = C64::new(1.0, 0.0) + z * s / f64::from(k);
        }
        z * s
    } else {
        z.exp() - 1.0
    }
}

/// (e^z - 1)/z for complex z, with the limit 1 at z = 0.
pub(crate) fn expm1_ratio(z: C64) -> C64 {
    if z.norm() == 0.0 {
        C64::new(1.0, 0.0)
    } else {
        expm1_c(z) / z
    }
}

/// Bounded Gram integral of a matrix exponential:
/// returns the value of the integral over s in [0, beta] of
/// (e^{sW})^T X e^{sW}.
///
/// Computed from W = V diag(theta) V^{-1} by transforming
/// X' = V^T X V, scaling entrywise with phi(theta_a + theta_b, beta),
/// and back-transforming with V^{-T} (.) V^{-1}.
pub fn bounded_exp_gram(w: &CMatrix, x: &CMatrix, beta: f64) -> Result<CMatrix> {
    if beta <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "integration bound beta must be positive, got {beta}"
        )));
    }
    let eig = complex_eigen(w, CONDITION_CAP)?;
    let n = w.nrows();
    let mut xp = eig.vectors.transpose() * x * &eig.vectors;
    for a in 0..n {
        for b in 0..n {
            xp[(a, b)] *= phi(eig.values[a] + eig.values[b], beta);
        }
    }
    Ok(eig.inverse.transpose() * xp * &eig.inverse)
}

/// Maximum real part over the eigenvalues of a real matrix.
pub fn spectral_abscissa(a: &RMatrix) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .fold(f64::NEG_INFINITY, |acc, z| acc.max(z.re))
}

/// Solves the continuous Lyapunov equation A^T M + M A = -X for M.
///
/// Uses the Kronecker linear system (I (x) A^T + A^T (x) I) vec(M) =
/// -vec(X) with column-major vectorization; the result is symmetrized
/// when X is symmetric and the residual is verified against 1e-10
/// relative to ||X||.
pub fn lyapunov_solve(a: &RMatrix, x: &RMatrix) -> Result<RMatrix> {
    let n = a.nrows();
    if n != a.ncols() || x.nrows() != n || x.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "lyapunov_solve needs square same-size matrices, got {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            x.nrows(),
            x.ncols()
        )));
    }
    let abscissa = spectral_abscissa(a);
    if abscissa >= -1e-12 {
        return Err(Error::NotHurwitz { abscissa });
    }
    let eye = RMatrix::identity(n, n);
    let at = a.transpose();
    let k = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = DVector::from_column_slice(x.as_slice()).scale(-1.0);
    let sol = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularMatrix("Kronecker Lyapunov system".into()))?;
    let mut m = RMatrix::from_column_slice(n, n, sol.as_slice());
    let x_sym = max_abs(&(x - x.transpose())) <= 1e-12 * max_abs(x).max(f64::MIN_POSITIVE);
    if x_sym {
        m = (&m + m.transpose()).scale(0.5);
    }
    let residual = max_abs(&(a.transpose() * &m + &m * a + x));
    let tol = 1e-10 * max_abs(x).max(f64::MIN_POSITIVE);
    if residual > tol {
        return Err(Error::NotConverged {
            iterations: 1,
            residual,
        });
    }
    Ok(m)
}

/// Relative residual of a candidate Lyapunov solution.
pub fn lyapunov_residual(a: &RMatrix, x: &RMatrix, m: &RMatrix) -> f64 {
    max_abs(&(a.transpose() * m + m * a + x)) / max_abs(x).max(f64::MIN_POSITIVE)
}

/// Eigendecomposition M = V diag(w) V^T of a real symmetric matrix by
/// cyclic Jacobi rotations.
///
/// nalgebra's QL-based solver leaves backward errors near 1e-9 on
/// close eigenvalue pairs, which downstream code feels whenever it
/// differences nearly equal lengths or compares a smallest eigenvalue
/// against a 1e-9-scale bar. Jacobi reaches componentwise machine
/// accuracy, and the matrices here are small enough that its extra
/// sweeps cost nothing.
pub fn sym_eigen(m: &RMatrix) -> (RMatrix, RVector) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = RMatrix::identity(n, n);
    let scale = max_abs(m).max(f64::MIN_POSITIVE);
    for _ in 0..50 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(a[(p, q)].abs());
            }
        }
        if off <= f64::EPSILON * scale {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let w = RVector::from_fn(n, |i, _| a[(i, i)]);
    (v, w)
}

/// Smallest eigenvalue of a real symmetric matrix.
pub fn sym_min_eig(m: &RMatrix) -> f64 {
    sym_eigen(m).1.iter().fold(f64::INFINITY, |a, &x| a.min(x))
}

fn spd_eigen(m: &RMatrix, what: &str) -> Result<(RMatrix, RVector)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::InvalidArgument(format!(
            "{what} needs a square matrix"
        )));
    }
    let asym = max_abs(&(m - m.transpose()));
    if asym > 1e-10 * max_abs(m).max(f64::MIN_POSITIVE) {
        return Err(Error::NotPositiveDefinite(format!(
            "{what}: matrix is not symmetric (asymmetry {asym:.3e})"
        )));
    }
    let (vectors, values) = sym_eigen(m);
    let max_eig = values.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let min_eig = values.iter().fold(f64::INFINITY, |a, &x| a.min(x));
    if min_eig <= 1e-12 * max_eig {
        return Err(Error::NotPositiveDefinite(format!(
            "{what}: eigenvalue {min_eig:.6e} not positive"
        )));
    }
    Ok((vectors, values))
}

fn rebuild(vectors: &RMatrix, values: RVector) -> RMatrix {
    vectors * RMatrix::from_diagonal(&values) * vectors.transpose()
}

/// Principal square root of a symmetric positive-definite matrix.
pub fn spd_sqrt(m: &RMatrix) -> Result<RMatrix> {
    let (v, w) = spd_eigen(m, "spd_sqrt")?;
    Ok(rebuild(&v, w.map(f64::sqrt)))
}

/// Matrix logarithm of a symmetric positive-definite matrix.
pub fn spd_log(m: &RMatrix) -> Result<RMatrix> {
    let (v, w) = spd_eigen(m, "spd_log")?;
    Ok(rebuild(&v, w.map(f64::ln)))
}

/// Matrix exponential of a real symmetric matrix.
pub fn sym_exp(m: &RMatrix) -> Result<RMatrix> {
    let asym = max_abs(&(m - m.transpose()));
    if asym > 1e-10 * max_abs(m).max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidArgument(format!(
            "sym_exp: matrix is not symmetric (asymmetry {asym:.3e})"
        )));
    }
    let (vectors, values) = sym_eigen(m);
    Ok(rebuild(&vectors, values.map(f64::exp)))
}

/// Extracts the real part after verifying the imaginary residue is
/// negligible relative to the matrix scale.
pub fn real_part_checked(m: &CMatrix, tol_rel: f64) -> Result<RMatrix> {
    let scale = max_abs_c(m).max(f64::MIN_POSITIVE);
    let imag = m.iter().fold(0.0f64, |a, z| a.max(z.im.abs()));
    if imag > tol_rel * scale {
        return Err(Error::SingularEigenvalue(format!(
            "imaginary residue {imag:.3e} exceeds {tol_rel:.1e} of scale {scale:.3e}"
        )));
    }
    Ok(m.map(|z| z.re))
}

/// Promotes a real matrix to complex entries.
pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| C64::new(x, 0.0))
}
