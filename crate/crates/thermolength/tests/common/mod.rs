//! Shared oracles and generators for the integration tests.
//!
//! Everything here is implemented independently of the library kernels
//! it is used to check: matrix exponentials by scaling and squaring on
//! a plain Taylor series, integrals by adaptive Simpson on matrix
//! entries, and reference data from seeded generators.

#![allow(dead_code)]

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type RMatrix = DMatrix<f64>;

pub fn max_abs(m: &RMatrix) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(x.abs()))
}

pub fn max_abs_c(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(x.norm()))
}

/// Matrix exponential by scaling-and-squaring on a Taylor series.
/// Slow and simple on purpose: it shares no code with the library.
pub fn expm(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let norm = max_abs_c(m) * n as f64;
    let k = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = m.map(|z| z / 2f64.powi(k));
    let mut term = CMatrix::identity(n, n);
    let mut sum = CMatrix::identity(n, n);
    for j in 1..60 {
        term = &term * &scaled / C64::new(j as f64, 0.0);
        sum += &term;
        if max_abs_c(&term) < 1e-18 * max_abs_c(&sum).max(1.0) {
            break;
        }
    }
    let mut out = sum;
    for _ in 0..k {
        out = &out * &out;
    }
    out
}

/// Adaptive Simpson quadrature of a matrix-valued integrand, refined
/// until the entrywise estimate change is below `tol`.
pub fn simpson_matrix<F>(f: &F, a: f64, b: f64, tol: f64) -> CMatrix
where
    F: Fn(f64) -> CMatrix,
{
    fn simpson<F: Fn(f64) -> CMatrix>(f: &F, a: f64, b: f64) -> CMatrix {
        let fa = f(a);
        let fm = f(0.5 * (a + b));
        let fb = f(b);
        (fa + fm * C64::new(4.0, 0.0) + fb) * C64::new((b - a) / 6.0, 0.0)
    }
    fn recurse<F: Fn(f64) -> CMatrix>(
        f: &F,
        a: f64,
        b: f64,
        whole: &CMatrix,
        tol: f64,
        depth: usize,
    ) -> CMatrix {
        let m = 0.5 * (a + b);
        let left = simpson(f, a, m);
        let right = simpson(f, m, b);
        let combined = &left + &right;
        let delta = max_abs_c(&(&combined - whole));
        if depth == 0 || delta <= 15.0 * tol {
            let correction = (&combined - whole) * C64::new(1.0 / 15.0, 0.0);
            combined + correction
        } else {
            recurse(f, a, m, &left, tol / 2.0, depth - 1)
                + recurse(f, m, b, &right, tol / 2.0, depth - 1)
        }
    }
    let whole = simpson(f, a, b);
    recurse(f, a, b, &whole, tol, 30)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random symmetric positive-definite matrix with eigenvalues in
/// roughly [0.3, 3].
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> RMatrix {
    let a = RMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let q = a.qr().q();
    let eigs = RMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| {
        rng.gen_range(0.3..3.0)
    }));
    let m = &q * eigs * q.transpose();
    (&m + m.transpose()) * 0.5
}

/// Random complex matrix with entries in the unit square.
pub fn random_complex(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

/// Random invertible real matrix (resampled until well conditioned).
pub fn random_invertible(rng: &mut ChaCha8Rng, n: usize) -> RMatrix {
    loop {
        let a = RMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        if let Some(inv) = a.clone().lu().try_inverse() {
            if max_abs(&a) * max_abs(&inv) < 50.0 {
                return a;
            }
        }
    }
}
