//! Metric-tensor pipeline checks against closed forms, frozen probe
//! values, and structural identities.

mod common;

use nalgebra::DVector;
use proptest::prelude::*;
use thermolength::catalog::{
    analytic_lambda_damped, analytic_xi_damped, classical_relaxation_model,
    damped_oscillator_model, displacement_flat_metrics, displacement_model, CouplingOrder,
};
use thermolength::gaussian::{Dissipator, ParametrizedGaussianModel};
use thermolength::matfun::{max_abs, RMatrix, RVector};
use thermolength::metrics::{
    classical_lambda_tensor, classical_xi_tensor, fdr_gap, induced_siegel_tensor, lambda_tensor,
    metric_tensor, xi_tensor, MetricKind,
};

fn rel_diff(a: &RMatrix, b: &RMatrix) -> f64 {
    max_abs(&(a - b)) / max_abs(b).max(f64::MIN_POSITIVE)
}

/// Pipeline tensors at the frozen probe point, pinned to values that
/// were cross-checked against a number-state (Fock basis) computation
/// of the same quantities.
#[test]
fn pipeline_matches_frozen_probe_values() {
    let model = damped_oscillator_model(1.0, 0.1).unwrap();
    let probe = [1.0, 0.0];

    let xi = xi_tensor(&model, &probe).unwrap();
    assert!((xi.g[(0, 0)] - 9.233717904842743).abs() < 1e-9 * 9.2337,);
    assert!((xi.g[(1, 1)] - 0.04987531172069826).abs() < 1e-12);
    assert!(xi.g[(0, 1)].abs() < 1e-9 * xi.g[(0, 0)]);

    let lam = lambda_tensor(&model, &probe).unwrap();
    assert!((lam.g[(0, 0)] - 18.484328422520324).abs() < 1e-8 * 18.48);
    assert!((lam.g[(1, 1)] - 0.10792785105928443).abs() < 1e-11);
    assert!(lam.g[(0, 1)].abs() < 1e-9 * lam.g[(0, 0)]);
}

/// The pipeline reproduces the closed-form tensors over a small
/// frequency-temperature grid at the catalog damping rate.
#[test]
fn pipeline_matches_closed_forms_on_grid() {
    let gamma0 = 0.1;
    for &beta in &[1.0, 5.0, 20.0] {
        let model = damped_oscillator_model(beta, gamma0).unwrap();
        for &omega in &[0.5, 1.25, 2.0] {
            let probe = [omega, 0.7];
            let xi = xi_tensor(&model, &probe).unwrap();
            let xi_cf = analytic_xi_damped(omega, beta, gamma0, CouplingOrder::Exact);
            assert!(
                rel_diff(&xi.g, &xi_cf) < 1e-6,
                "excess-work tensor off at omega={omega}, beta={beta}: {:.3e}",
                rel_diff(&xi.g, &xi_cf)
            );
            let lam = lambda_tensor(&model, &probe).unwrap();
            let lam_cf = analytic_lambda_damped(omega, beta, gamma0, CouplingOrder::Exact);
            assert!(
                rel_diff(&lam.g, &lam_cf) < 1e-6,
                "fluctuation tensor off at omega={omega}, beta={beta}: {:.3e}",
                rel_diff(&lam.g, &lam_cf)
            );
        }
    }
}

/// The classical fluctuation tensor is exactly 2/beta times the
/// classical excess-work tensor.
#[test]
fn classical_tensors_satisfy_fluctuation_dissipation_exactly() {
    let model = damped_oscillator_model(2.5, 0.1).unwrap();
    let probe = [1.3, 0.4];
    let xi = classical_xi_tensor(&model, &probe).unwrap();
    let lam = classical_lambda_tensor(&model, &probe).unwrap();
    let expected = xi.g.scale(2.0 / 2.5);
    assert!(rel_diff(&lam.g, &expected) < 1e-12);
}

/// One-control scaling model G = lambda * I with a single-relaxation
/// dissipator: the classical excess-work component reduces to
/// tau_eq/(2 beta) tr{G^{-2}} (dG/dlambda is the identity).
#[test]
fn classical_xi_scaling_model_worked_example() {
    let model = ParametrizedGaussianModel::new(
        "isotropic-scaling",
        1,
        1.0,
        vec![(0.5, 2.0)],
        |l: &[f64]| RMatrix::identity(2, 2).scale(l[0]),
        |_l: &[f64]| RVector::zeros(2),
        Dissipator::SingleRelaxation { tau_eq: 1.0 },
    )
    .unwrap()
    .with_g_derivative(|_l: &[f64], _j: usize| RMatrix::identity(2, 2));
    let xi = classical_xi_tensor(&model, &[1.0]).unwrap();
    assert!((xi.g[(0, 0)] - 1.0).abs() < 1e-12);
    let lam = classical_lambda_tensor(&model, &[1.0]).unwrap();
    assert!((lam.g[(0, 0)] - 2.0).abs() < 1e-12);
}

/// Displacement drive: the pipeline tensors are constant over the
/// control plane and equal the first-moment closed forms.
#[test]
fn displacement_pipeline_matches_flat_closed_forms() {
    let (beta, omega, gamma0) = (2.0, 1.2, 0.1);
    let model = displacement_model(beta, omega, gamma0).unwrap();
    let (xi_flat, lam_flat) = displacement_flat_metrics(beta, omega, gamma0).unwrap();
    for probe in [[0.0, 0.0], [1.0, 2.0], [-3.0, 4.5]] {
        let xi = xi_tensor(&model, &probe).unwrap();
        let lam = lambda_tensor(&model, &probe).unwrap();
        assert!(rel_diff(&xi.g, &xi_flat) < 1e-9, "{:?}", probe);
        assert!(rel_diff(&lam.g, &lam_flat) < 1e-9, "{:?}", probe);
    }
}

/// The static matrix geometry pulled back to the entry coordinates of
/// the single-relaxation model, evaluated at the identity.
#[test]
fn induced_static_tensor_at_identity() {
    let model = classical_relaxation_model(1.0, 1.0).unwrap();
    let t = induced_siegel_tensor(&model, &[1.0, 1.0, 0.0]).unwrap();
    let expected = RMatrix::from_diagonal(&DVector::from_column_slice(&[0.5, 0.5, 1.0]));
    assert!(rel_diff(&t.g, &expected) < 1e-9);
}

/// For the single-relaxation model the classical excess-work tensor is
/// a constant conformal multiple tau_eq/beta of the static tensor.
#[test]
fn classical_relaxation_tensor_is_conformal_to_static_geometry() {
    let (beta, tau_eq) = (1.7, 0.6);
    let model = classical_relaxation_model(beta, tau_eq).unwrap();
    for probe in [[1.0, 1.0, 0.0], [2.0, 0.5, 0.3], [4.0, 3.0, -1.0]] {
        let xi = classical_xi_tensor(&model, &probe).unwrap();
        let sg = induced_siegel_tensor(&model, &probe).unwrap();
        assert!(rel_diff(&xi.g, &sg.g.scale(tau_eq / beta)) < 1e-10, "{probe:?}");
    }
}

#[test]
fn metric_kind_names_round_trip() {
    for kind in [
        MetricKind::Xi,
        MetricKind::Lambda,
        MetricKind::ClassicalXi,
        MetricKind::ClassicalLambda,
        MetricKind::Siegel,
    ] {
        let parsed: MetricKind = kind.name().parse().unwrap();
        assert_eq!(parsed, kind);
    }
    assert_eq!("classical".parse::<MetricKind>().unwrap(), MetricKind::ClassicalXi);
    assert!("nonsense".parse::<MetricKind>().is_err());
}

#[test]
fn metric_tensor_dispatch_covers_all_kinds() {
    let model = damped_oscillator_model(2.0, 0.1).unwrap();
    for kind in [
        MetricKind::Xi,
        MetricKind::Lambda,
        MetricKind::ClassicalXi,
        MetricKind::ClassicalLambda,
        MetricKind::Siegel,
    ] {
        let t = metric_tensor(&model, &[1.0, 0.5], kind).unwrap();
        assert_eq!(t.kind, kind);
        if kind == MetricKind::Siegel {
            // The static tensor is blind to the displacement control
            // (G does not depend on y), so it is only semidefinite here.
            assert!(
                t.min_eig() >= -1e-12 * max_abs(&t.g),
                "{kind} tensor has a genuinely negative direction"
            );
        } else {
            assert!(t.min_eig() > 0.0, "{kind} tensor not positive definite");
        }
    }
}

#[test]
fn out_of_domain_point_is_rejected() {
    let model = damped_oscillator_model(1.0, 0.1).unwrap();
    let err = xi_tensor(&model, &[0.1, 0.0]).unwrap_err();
    assert_eq!(err.name(), "DomainExceeded");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The work-fluctuation tensor dominates 2/beta times the
    /// excess-work tensor everywhere in the control box, for any
    /// admissible temperature.
    #[test]
    fn fluctuations_dominate_dissipation(
        omega in 0.4f64..2.4,
        y in 0.0f64..2.4,
        beta in 0.2f64..20.0,
    ) {
        let model = damped_oscillator_model(beta, 0.1).unwrap();
        let lam = lambda_tensor(&model, &[omega, y]).unwrap();
        let gap = fdr_gap(&model, &[omega, y]).unwrap();
        prop_assert!(
            gap >= -1e-9 * max_abs(&lam.g),
            "fluctuation-dissipation gap {gap:.3e} negative beyond roundoff at \
             omega={omega}, y={y}, beta={beta}"
        );
    }

    /// Both quantum tensors are symmetric positive definite across the
    /// control box.
    #[test]
    fn quantum_tensors_are_positive_definite(
        omega in 0.4f64..2.4,
        beta in 0.2f64..20.0,
    ) {
        let model = damped_oscillator_model(beta, 0.1).unwrap();
        let xi = xi_tensor(&model, &[omega, 1.0]).unwrap();
        let lam = lambda_tensor(&model, &[omega, 1.0]).unwrap();
        prop_assert!(xi.min_eig() > 0.0, "excess-work tensor lost positivity");
        prop_assert!(lam.min_eig() > 0.0, "fluctuation tensor lost positivity");
    }
}
