//! Gaussian-model building blocks checked against closed oscillator
//! forms and a number-state partition-sum oracle.

mod common;

use common::{random_spd, rng};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::Rng;
use thermolength::gaussian::{
    cayley_residual, diffusion_matrix, drift_matrix, free_energy, omega, relaxation_integral,
    stationarity_residual, symplectic_eigenvalues, symplectic_j, thermal_covariance, Dissipator,
    JumpMatrix, ParametrizedGaussianModel,
};
use thermolength::matfun::{max_abs, max_abs_c, spectral_abscissa, C64, CMatrix, RMatrix, RVector};

fn coth(x: f64) -> f64 {
    x.cosh() / x.sinh()
}

/// Jump matrix of a thermally damped mode: rows are the two jump
/// vectors (absorption and emission) in quadrature components.
fn damped_jumps(omega_v: f64, beta: f64, gamma0: f64) -> JumpMatrix {
    let n = 1.0 / (beta * omega_v).exp_m1();
    let sp = 0.5 * (2.0 * gamma0 * omega_v * (n + 1.0)).sqrt();
    let sm = 0.5 * (2.0 * gamma0 * omega_v * n).sqrt();
    let mut c = CMatrix::zeros(2, 2);
    c[(0, 0)] = C64::new(sp, 0.0);
    c[(0, 1)] = C64::new(0.0, sp / omega_v);
    c[(1, 0)] = C64::new(sm, 0.0);
    c[(1, 1)] = C64::new(0.0, -sm / omega_v);
    JumpMatrix(c)
}

fn oscillator_g(omega_v: f64) -> RMatrix {
    RMatrix::from_diagonal(&DVector::from_column_slice(&[omega_v * omega_v, 1.0]))
}

#[test]
fn quadrature_form_matrices_are_consistent() {
    for n in [1usize, 2, 3] {
        let om = omega(n);
        let j = symplectic_j(n);
        let d = 2 * n;
        // Omega = i J, Omega^2 = identity, Omega^T = -Omega.
        let ij = j.map(|x| C64::new(0.0, x));
        assert!(max_abs_c(&(&om - ij)) == 0.0);
        assert!(max_abs_c(&(&om * &om - CMatrix::identity(d, d))) < 1e-15);
        assert!(max_abs_c(&(om.transpose() + &om)) == 0.0);
    }
}

#[test]
fn thermal_covariance_matches_oscillator_closed_form() {
    // Unit oscillator at beta = 2: coth(1)/2 on the diagonal.
    let sigma = thermal_covariance(&oscillator_g(1.0), 2.0).unwrap();
    assert!((sigma[(0, 0)] - 0.6565176427496656).abs() < 1e-15);
    assert!((sigma[(1, 1)] - 0.6565176427496656).abs() < 1e-15);
    assert!(sigma[(0, 1)].abs() < 1e-15);

    // Deep quantum regime: coth saturates and sigma -> diag(1/(2w), w/2).
    let sigma = thermal_covariance(&oscillator_g(2.0), 50.0).unwrap();
    assert!((sigma[(0, 0)] - 0.25).abs() < 1e-12);
    assert!((sigma[(1, 1)] - 1.0).abs() < 1e-12);

    // Generic point against the scalar closed form.
    let (w, beta) = (1.7, 0.9);
    let sigma = thermal_covariance(&oscillator_g(w), beta).unwrap();
    let c = coth(beta * w / 2.0) / 2.0;
    assert!((sigma[(0, 0)] - c / w).abs() < 1e-14);
    assert!((sigma[(1, 1)] - c * w).abs() < 1e-14);
}

#[test]
fn thermal_covariance_rejects_bad_inputs() {
    assert_eq!(
        thermal_covariance(&oscillator_g(1.0), 0.0).unwrap_err().name(),
        "InvalidArgument"
    );
    // A singular Hamiltonian matrix has no thermal state.
    let err = thermal_covariance(&RMatrix::zeros(2, 2), 1.0).unwrap_err();
    assert_eq!(err.name(), "SingularEigenvalue");
}

#[test]
fn drift_and_diffusion_match_closed_forms() {
    let (w, beta, gamma0) = (1.5, 2.0, 0.2);
    let jumps = damped_jumps(w, beta, gamma0);
    let a = drift_matrix(&oscillator_g(w), &jumps);
    let expected = RMatrix::from_row_slice(2, 2, &[-gamma0 / 2.0, 1.0, -w * w, -gamma0 / 2.0]);
    assert!(max_abs(&(&a - expected)) < 1e-14);

    let d = diffusion_matrix(&jumps);
    let c = coth(beta * w / 2.0);
    assert!((d[(0, 0)] - gamma0 * c / (2.0 * w)).abs() < 1e-14);
    assert!((d[(1, 1)] - gamma0 * w * c / 2.0).abs() < 1e-14);
    assert!(d[(0, 1)].abs() < 1e-14);
    assert!(d[(1, 0)].abs() < 1e-14);

    // Emission beats absorption by exactly the spontaneous rate:
    // the imaginary part of the Gram matrix carries gamma0/2.
    let gram = jumps.gram();
    assert!((gram[(1, 0)].im - gamma0 / 2.0).abs() < 1e-14);
}

#[test]
fn thermal_state_is_stationary_and_satisfies_cayley_identity() {
    for (w, beta, gamma0) in [(0.5, 1.0, 0.1), (1.0, 6.0, 0.05), (2.2, 0.4, 0.3)] {
        let g = oscillator_g(w);
        let jumps = damped_jumps(w, beta, gamma0);
        let a = drift_matrix(&g, &jumps);
        let d = diffusion_matrix(&jumps);
        let sigma = thermal_covariance(&g, beta).unwrap();
        let st = stationarity_residual(&a, &d, &sigma);
        assert!(st < 1e-12, "stationarity residual {st:.3e} at w={w}, beta={beta}");
        let cr = cayley_residual(&g, &sigma, beta).unwrap();
        assert!(cr < 1e-9, "Cayley residual {cr:.3e} at w={w}, beta={beta}");
    }
}

/// The absolute residual of the propagator-covariance identity is only
/// meaningful while it is well conditioned: rounding the covariance to
/// f64 perturbs the identity's right side by ~e^{2 beta omega} * eps
/// (the denominator eigenvalue 1 - coth shrinks like e^{-beta omega}),
/// and in the ground-state limit the denominator becomes exactly
/// singular. Both regimes must be visible, not papered over.
#[test]
fn cayley_residual_degrades_and_then_singularizes_in_deep_quantum_limit() {
    let g = oscillator_g(1.0);
    let sigma = thermal_covariance(&g, 16.0).unwrap();
    let cr = cayley_residual(&g, &sigma, 16.0).unwrap();
    assert!(
        cr > 1e-6 && cr < 1e-2,
        "expected conditioning-limited residual at beta*omega = 16, got {cr:.3e}"
    );
    // coth rounds to exactly 1 here; 2 sigma Omega + I is singular.
    let sigma = thermal_covariance(&g, 80.0).unwrap();
    let err = cayley_residual(&g, &sigma, 80.0).unwrap_err();
    assert_eq!(err.name(), "SingularMatrix");
}

#[test]
fn cayley_residual_detects_a_perturbed_covariance() {
    let g = oscillator_g(1.0);
    let mut sigma = thermal_covariance(&g, 1.0).unwrap();
    sigma[(0, 0)] += 0.1;
    let cr = cayley_residual(&g, &sigma, 1.0).unwrap();
    assert!(cr > 1e-3, "perturbed covariance went undetected: {cr:.3e}");
}

#[test]
fn cayley_identity_holds_on_random_couplings() {
    let mut r = rng(71);
    for _ in 0..6 {
        let g = random_spd(&mut r, 4);
        // Mode frequencies reach ~3; keep beta*nu inside the identity's
        // well-conditioned window (see the degradation test above).
        let beta = r.gen_range(0.2..2.0);
        let sigma = thermal_covariance(&g, beta).unwrap();
        let cr = cayley_residual(&g, &sigma, beta).unwrap();
        assert!(cr < 1e-9, "Cayley residual {cr:.3e} on random two-mode form");
    }
}

#[test]
fn relaxation_integral_matches_pinned_inverse() {
    let a = RMatrix::from_row_slice(2, 2, &[-0.05, 1.0, -1.0, -0.05]);
    let y = relaxation_integral(&a).unwrap();
    assert!((y[(0, 0)] - 0.049875311720698254).abs() < 1e-15);
    assert!((y[(0, 1)] - 0.9975062344139651).abs() < 1e-15);
    assert!((y[(1, 0)] + 0.9975062344139651).abs() < 1e-15);
    assert!((y[(1, 1)] - 0.049875311720698254).abs() < 1e-15);
    assert!(max_abs(&(&a * &y + RMatrix::identity(2, 2))) < 1e-14);

    let marginal = RMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    assert_eq!(relaxation_integral(&marginal).unwrap_err().name(), "NotHurwitz");
}

/// Free energy against a truncated number-state partition sum,
/// computed without the library's sinh form.
#[test]
fn free_energy_matches_partition_sum_oracle() {
    for (w, beta) in [(1.0, 1.0), (0.7, 2.3), (2.0, 5.0)] {
        let f = free_energy(&oscillator_g(w), beta).unwrap();
        let z: f64 = (0..400).map(|n| (-beta * w * (n as f64 + 0.5)).exp()).sum();
        let oracle = -z.ln() / beta;
        assert!(
            (f - oracle).abs() < 1e-12,
            "free energy {f} vs partition oracle {oracle} at w={w}, beta={beta}"
        );
    }
    // Zero-temperature limit: ground-state energy w/2.
    let f = free_energy(&oscillator_g(1.3), 200.0).unwrap();
    assert!((f - 0.65).abs() < 1e-10);
    // Two decoupled modes add.
    let g2 = RMatrix::from_diagonal(&DVector::from_column_slice(&[0.49, 4.0, 1.0, 1.0]));
    let f2 = free_energy(&g2, 1.1).unwrap();
    let sum = free_energy(&oscillator_g(0.7), 1.1).unwrap()
        + free_energy(&oscillator_g(2.0), 1.1).unwrap();
    assert!((f2 - sum).abs() < 1e-12);
}

#[test]
fn symplectic_eigenvalues_recover_mode_frequencies() {
    let nu = symplectic_eigenvalues(&oscillator_g(1.7)).unwrap();
    assert_eq!(nu.len(), 1);
    assert!((nu[0] - 1.7).abs() < 1e-12);

    let g2 = RMatrix::from_diagonal(&DVector::from_column_slice(&[0.49, 4.0, 1.0, 1.0]));
    let nu = symplectic_eigenvalues(&g2).unwrap();
    assert_eq!(nu.len(), 2);
    assert!((nu[0] - 0.7).abs() < 1e-12);
    assert!((nu[1] - 2.0).abs() < 1e-12);

    let indefinite = RMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
    assert!(symplectic_eigenvalues(&indefinite).is_err());
}

#[test]
fn model_reports_derivative_consistency_and_guards_domain() {
    let model = thermolength::catalog::damped_oscillator_model(1.3, 0.1).unwrap();
    assert!(model.has_analytic_g_derivative());
    let worst = model.derivative_consistency(&[1.1, 0.6]).unwrap();
    assert!(worst < 1e-6, "analytic and differenced derivatives disagree by {worst:.3e}");

    let g = model.g(&[1.1, 0.6]).unwrap();
    assert!((g[(0, 0)] - 1.21).abs() < 1e-15);
    assert!((g[(1, 1)] - 1.0).abs() < 1e-15);
    let mu = model.mu(&[1.1, 0.6]).unwrap();
    assert!((mu[0] - 0.6).abs() < 1e-15);
    assert!(model.jumps(&[1.1, 0.6]).unwrap().is_some());

    assert_eq!(model.g(&[1.1]).unwrap_err().name(), "InvalidArgument");
    assert_eq!(model.g(&[5.0, 0.0]).unwrap_err().name(), "DomainExceeded");
}

#[test]
fn single_relaxation_dissipator_short_circuits_the_maps() {
    let model = ParametrizedGaussianModel::new(
        "relaxation-probe",
        1,
        2.0,
        vec![(0.5, 2.0)],
        |l: &[f64]| RMatrix::identity(2, 2).scale(l[0]),
        |_l: &[f64]| RVector::zeros(2),
        Dissipator::SingleRelaxation { tau_eq: 0.7 },
    )
    .unwrap();
    let x = RMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 3.0]);
    let fx = model.lyapunov_map(&[1.0], &x).unwrap();
    assert!(max_abs(&(&fx - x.scale(0.7))) < 1e-15);
    let y = model.relaxation_integral(&[1.0]).unwrap();
    assert!(max_abs(&(&y - RMatrix::identity(2, 2).scale(0.7))) < 1e-15);
    assert!(model.drift(&[1.0]).is_err());
    assert!(model.diffusion(&[1.0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// The damped-oscillator drift is Hurwitz and the thermal state is
    /// stationary across frequency, temperature, and weak coupling.
    #[test]
    fn drift_is_hurwitz_and_thermal_state_stationary(
        w in 0.3f64..2.5,
        beta in 0.2f64..20.0,
        gamma0 in 0.01f64..0.15,
    ) {
        let g = oscillator_g(w);
        let jumps = damped_jumps(w, beta, gamma0);
        let a = drift_matrix(&g, &jumps);
        prop_assert!(spectral_abscissa(&a) < 0.0);
        let sigma = thermal_covariance(&g, beta).unwrap();
        let st = stationarity_residual(&a, &diffusion_matrix(&jumps), &sigma);
        prop_assert!(st < 1e-10, "stationarity residual {st:.3e}");
    }

    /// Jump Gram matrices are Hermitian with positive-semidefinite
    /// real part (the diffusion seed).
    #[test]
    fn gram_matrix_is_hermitian_psd(
        w in 0.3f64..2.5,
        beta in 0.2f64..20.0,
        gamma0 in 0.01f64..0.3,
    ) {
        let gram = damped_jumps(w, beta, gamma0).gram();
        let herm = max_abs_c(&(gram.adjoint() - &gram));
        prop_assert!(herm < 1e-14 * max_abs_c(&gram));
        let re = gram.map(|z| z.re);
        let min = re.symmetric_eigen().eigenvalues.iter().fold(f64::INFINITY, |a, &x| a.min(x));
        prop_assert!(min >= -1e-14);
    }
}
