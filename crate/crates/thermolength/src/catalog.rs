//! Worked model catalog: a thermally damped oscillator driven in
//! frequency and displacement, a pure displacement drive, and a
//! single-relaxation model on positive-definite Hamiltonian matrices.
//!
//! Each constructor wires a [`ParametrizedGaussianModel`] with analytic
//! control derivatives. The damped oscillator additionally comes with
//! closed-form metric tensors (exact in the damping rate, and their
//! weak-damping limits), ready-made analytic metric fields over the
//! (frequency, displacement) plane, and the geodesic equation of the
//! fluctuation metric for independent integration.

use nalgebra::DVector;

use crate::gaussian::{Dissipator, JumpMatrix, ParametrizedGaussianModel};
use crate::matfun::{max_abs, C64, CMatrix, RMatrix, RVector};
use crate::metrics::AnalyticField;
use crate::{Error, Result};

/// Identifier of the frequency-and-displacement driven oscillator.
pub const DAMPED_OSCILLATOR_ID: &str = "damped-oscillator";
/// Identifier of the displacement-only drive.
pub const DISPLACEMENT_ID: &str = "displacement";
/// Identifier of the single-relaxation model on Hamiltonian matrices.
pub const CLASSICAL_RELAXATION_ID: &str = "classical-relaxation";

/// All catalog model identifiers.
pub const MODEL_IDS: [&str; 3] = [
    DAMPED_OSCILLATOR_ID,
    DISPLACEMENT_ID,
    CLASSICAL_RELAXATION_ID,
];

/// Whether closed-form tensors keep all orders of the damping rate or
/// only its leading order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingOrder {
    /// All orders in the damping rate.
    Exact,
    /// Leading order in the damping rate.
    Weak,
}

/// Downward and upward thermal jump rates of an oscillator mode:
/// gamma(omega) = 2 gamma0 omega (N + 1) and
/// gamma(-omega) = 2 gamma0 omega N with N the thermal occupation.
pub fn thermal_rates(omega: f64, beta: f64, gamma0: f64) -> (f64, f64) {
    let n = 1.0 / (beta * omega).exp_m1();
    (
        2.0 * gamma0 * omega * (n + 1.0),
        2.0 * gamma0 * omega * n,
    )
}

fn damped_jumps(omega: f64, beta: f64, gamma0: f64) -> JumpMatrix {
    let (gp, gm) = thermal_rates(omega, beta, gamma0);
    let sp = 0.5 * gp.sqrt();
    let sm = 0.5 * gm.sqrt();
    let mut m = CMatrix::zeros(2, 2);
    m[(0, 0)] = C64::new(sp, 0.0);
    m[(0, 1)] = C64::new(0.0, sp / omega);
    m[(1, 0)] = C64::new(sm, 0.0);
    m[(1, 1)] = C64::new(0.0, -sm / omega);
    JumpMatrix(m)
}

/// Control box of the damped oscillator: frequency and displacement.
pub fn damped_oscillator_domain() -> Vec<(f64, f64)> {
    vec![(0.3, 2.5), (0.0, 2.5)]
}

/// Thermally damped oscillator with controls (frequency, displacement):
/// Hamiltonian matrix diag(omega^2, 1), linear drive (y, 0), and
/// detailed-balance jump operators with base damping rate `gamma0`.
///
/// The damping rate must stay small against the lowest admissible
/// frequency; a ratio above 0.5 is rejected and above 0.2 warned about,
/// since the slow-driving tensors assume underdamped motion.
pub fn damped_oscillator_model(beta: f64, gamma0: f64) -> Result<ParametrizedGaussianModel> {
    if gamma0 <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "damping rate must be positive, got {gamma0}"
        )));
    }
    let domain = damped_oscillator_domain();
    let omega_min = domain[0].0;
    let ratio = gamma0 / omega_min;
    if ratio > 0.5 {
        return Err(Error::InvalidArgument(format!(
            "damping ratio gamma0/omega_min = {ratio:.3} exceeds 0.5; \
             the slow-driving expansion does not apply"
        )));
    }
    if ratio > 0.2 {
        // Worth flagging, but once per process: sweeps construct the
        // model at every grid point.
        static RATIO_WARNING: std::sync::Once = std::sync::Once::new();
        RATIO_WARNING.call_once(|| {
            eprintln!(
                "warning: damping ratio gamma0/omega_min = {ratio:.3} above 0.2; \
                 closed-form checks may lose accuracy"
            );
        });
    }
    let model = ParametrizedGaussianModel::new(
        DAMPED_OSCILLATOR_ID,
        1,
        beta,
        domain,
        |lambda: &[f64]| {
            let omega = lambda[0];
            RMatrix::from_diagonal(&DVector::from_column_slice(&[omega * omega, 1.0]))
        },
        |lambda: &[f64]| RVector::from_column_slice(&[lambda[1], 0.0]),
        Dissipator::Jumps(Box::new(move |lambda: &[f64]| {
            damped_jumps(lambda[0], beta, gamma0)
        })),
    )?
    .with_g_derivative(|lambda: &[f64], j: usize| {
        if j == 0 {
            RMatrix::from_diagonal(&DVector::from_column_slice(&[2.0 * lambda[0], 0.0]))
        } else {
            RMatrix::zeros(2, 2)
        }
    })
    .with_mu_derivative(|_lambda: &[f64], j: usize| {
        if j == 0 {
            RVector::zeros(2)
        } else {
            RVector::from_column_slice(&[1.0, 0.0])
        }
    });

    // The jump operators must reproduce the textbook damped-oscillator
    // drift; verify once at a reference point.
    let a = model.drift(&[1.0, 0.0])?;
    let expected = RMatrix::from_row_slice(2, 2, &[-gamma0 / 2.0, 1.0, -1.0, -gamma0 / 2.0]);
    if max_abs(&(&a - &expected)) > 1e-12 {
        return Err(Error::InvalidArgument(
            "internal consistency check failed: damped-oscillator drift mismatch".into(),
        ));
    }
    Ok(model)
}

fn coth(u: f64) -> f64 {
    1.0 / u.tanh()
}

fn csch2(u: f64) -> f64 {
    let s = u.sinh();
    1.0 / (s * s)
}

fn delta_of(omega: f64, gamma0: f64, order: CouplingOrder) -> f64 {
    match order {
        CouplingOrder::Exact => gamma0 * gamma0 + 4.0 * omega * omega,
        CouplingOrder::Weak => 4.0 * omega * omega,
    }
}

fn xi_components(omega: f64, beta: f64, gamma0: f64, order: CouplingOrder) -> (f64, f64) {
    let u = beta * omega / 2.0;
    let delta = delta_of(omega, gamma0, order);
    let xi11 = beta * csch2(u) / (4.0 * gamma0) + gamma0 * coth(u) / (2.0 * omega * delta);
    let xi22 = match order {
        CouplingOrder::Exact => 2.0 * gamma0 * omega * omega / delta,
        CouplingOrder::Weak => gamma0 / 2.0,
    };
    (xi11, xi22)
}

fn xi_derivatives(omega: f64, beta: f64, gamma0: f64, order: CouplingOrder) -> (f64, f64) {
    let u = beta * omega / 2.0;
    let c2 = csch2(u);
    let ct = coth(u);
    let delta = delta_of(omega, gamma0, order);
    let ddelta = 8.0 * omega;
    let dxi11 = -beta * beta * c2 * ct / (4.0 * gamma0)
        - gamma0 * beta * c2 / (4.0 * omega * delta)
        - gamma0 * ct * (delta + omega * ddelta) / (2.0 * omega * omega * delta * delta);
    let dxi22 = match order {
        CouplingOrder::Exact => 4.0 * gamma0.powi(3) * omega / (delta * delta),
        CouplingOrder::Weak => 0.0,
    };
    (dxi11, dxi22)
}

fn lambda_components(omega: f64, beta: f64, gamma0: f64, order: CouplingOrder) -> (f64, f64) {
    let u = beta * omega / 2.0;
    let delta = delta_of(omega, gamma0, order);
    let l11 = 0.5 * csch2(u) * (1.0 / gamma0 + gamma0 * (beta * omega).cosh() / delta);
    let l22 = 2.0 * gamma0 * omega.powi(3) * coth(u) / delta;
    (l11, l22)
}

fn lambda_derivatives(omega: f64, beta: f64, gamma0: f64, order: CouplingOrder) -> (f64, f64) {
    let u = beta * omega / 2.0;
    let c2 = csch2(u);
    let ct = coth(u);
    let delta = delta_of(omega, gamma0, order);
    let ddelta = 8.0 * omega;
    let ch = (beta * omega).cosh();
    let sh = (beta * omega).sinh();
    let dl11 = -0.5 * beta * c2 * ct * (1.0 / gamma0 + gamma0 * ch / delta)
        + 0.5 * c2 * gamma0 * (beta * sh / delta - ch * ddelta / (delta * delta));
    let dl22 = 2.0 * gamma0
        * (3.0 * omega * omega * ct / delta
            - beta * omega.powi(3) * c2 / (2.0 * delta)
            - omega.powi(3) * ct * ddelta / (delta * delta));
    (dl11, dl22)
}

/// Closed-form excess-work tensor of the damped oscillator at one
/// control point, diagonal in the (frequency, displacement) controls.
pub fn analytic_xi_damped(
    omega: f64,
    beta: f64,
    gamma0: f64,
    order: CouplingOrder,
) -> RMatrix {
    let (xi11, xi22) = xi_components(omega, beta, gamma0, order);
    RMatrix::from_diagonal(&DVector::from_column_slice(&[xi11, xi22]))
}

/// Closed-form work-fluctuation tensor of the damped oscillator.
pub fn analytic_lambda_damped(
    omega: f64,
    beta: f64,
    gamma0: f64,
    order: CouplingOrder,
) -> RMatrix {
    let (l11, l22) = lambda_components(omega, beta, gamma0, order);
    RMatrix::from_diagonal(&DVector::from_column_slice(&[l11, l22]))
}

/// Closed-form excess-work metric field of the damped oscillator over
/// the (frequency, displacement) box, with analytic derivatives.
pub fn damped_xi_field(beta: f64, gamma0: f64, order: CouplingOrder) -> AnalyticField {
    AnalyticField::new(damped_oscillator_domain(), move |lambda: &[f64]| {
        analytic_xi_damped(lambda[0], beta, gamma0, order)
    })
    .with_derivative(move |lambda: &[f64], j: usize| {
        if j == 0 {
            let (d11, d22) = xi_derivatives(lambda[0], beta, gamma0, order);
            RMatrix::from_diagonal(&DVector::from_column_slice(&[d11, d22]))
        } else {
            RMatrix::zeros(2, 2)
        }
    })
}

/// Closed-form work-fluctuation metric field of the damped oscillator.
pub fn damped_lambda_field(beta: f64, gamma0: f64, order: CouplingOrder) -> AnalyticField {
    AnalyticField::new(damped_oscillator_domain(), move |lambda: &[f64]| {
        analytic_lambda_damped(lambda[0], beta, gamma0, order)
    })
    .with_derivative(move |lambda: &[f64], j: usize| {
        if j == 0 {
            let (d11, d22) = lambda_derivatives(lambda[0], beta, gamma0, order);
            RMatrix::from_diagonal(&DVector::from_column_slice(&[d11, d22]))
        } else {
            RMatrix::zeros(2, 2)
        }
    })
}

/// Right-hand side of the geodesic equation of the exact
/// work-fluctuation metric in the (frequency, displacement) plane.
/// State layout: (omega, y, omega_dot, y_dot).
pub fn damped_lambda_geodesic_rhs(beta: f64, gamma0: f64, state: &[f64; 4]) -> [f64; 4] {
    let [omega, _y, vo, vy] = *state;
    let (l11, l22) = lambda_components(omega, beta, gamma0, CouplingOrder::Exact);
    let (dl11, dl22) = lambda_derivatives(omega, beta, gamma0, CouplingOrder::Exact);
    let gamma_ooo = dl11 / (2.0 * l11);
    let gamma_oyy = -dl22 / (2.0 * l11);
    let gamma_yoy = dl22 / (2.0 * l22);
    [
        vo,
        vy,
        -gamma_ooo * vo * vo - gamma_oyy * vy * vy,
        -2.0 * gamma_yoy * vo * vy,
    ]
}

/// Classic fourth-order Runge-Kutta integration of a four-component
/// autonomous system over duration `tau`, returning all steps including
/// the initial state.
pub fn rk4_integrate<F>(rhs: F, state0: [f64; 4], tau: f64, steps: usize) -> Vec<[f64; 4]>
where
    F: Fn(&[f64; 4]) -> [f64; 4],
{
    let h = tau / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let mut s = state0;
    out.push(s);
    let add = |a: &[f64; 4], b: &[f64; 4], c: f64| -> [f64; 4] {
        [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2], a[3] + c * b[3]]
    };
    for _ in 0..steps {
        let k1 = rhs(&s);
        let k2 = rhs(&add(&s, &k1, h / 2.0));
        let k3 = rhs(&add(&s, &k2, h / 2.0));
        let k4 = rhs(&add(&s, &k3, h));
        for i in 0..4 {
            s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out.push(s);
    }
    out
}

/// Displacement-only drive: the oscillator Hamiltonian is frozen at
/// frequency `omega` and both controls shift the linear drive. Both
/// work metrics are constant over the control plane, so geodesics are
/// straight lines.
pub fn displacement_model(
    beta: f64,
    omega: f64,
    gamma0: f64,
) -> Result<ParametrizedGaussianModel> {
    if omega <= 0.0 || gamma0 <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "frequency and damping rate must be positive, got {omega} and {gamma0}"
        )));
    }
    let g_fixed = RMatrix::from_diagonal(&DVector::from_column_slice(&[omega * omega, 1.0]));
    let g_closure = g_fixed.clone();
    ParametrizedGaussianModel::new(
        DISPLACEMENT_ID,
        1,
        beta,
        vec![(-5.0, 5.0), (-5.0, 5.0)],
        move |_lambda: &[f64]| g_closure.clone(),
        |lambda: &[f64]| RVector::from_column_slice(&[lambda[0], lambda[1]]),
        Dissipator::Jumps(Box::new(move |_lambda: &[f64]| {
            damped_jumps(omega, beta, gamma0)
        })),
    )
    .map(|m| {
        m.with_g_derivative(|_lambda: &[f64], _j: usize| RMatrix::zeros(2, 2))
            .with_mu_derivative(|_lambda: &[f64], j: usize| {
                let mut v = RVector::zeros(2);
                v[j] = 1.0;
                v
            })
    })
}

/// Constant work-metric tensors of the displacement drive, from the
/// first-moment relaxation alone: the excess-work tensor is the
/// symmetric part of G Y and the fluctuation tensor is
/// G (Y sigma + sigma Y^T) G.
pub fn displacement_flat_metrics(
    beta: f64,
    omega: f64,
    gamma0: f64,
) -> Result<(RMatrix, RMatrix)> {
    let g = RMatrix::from_diagonal(&DVector::from_column_slice(&[omega * omega, 1.0]));
    let jumps = damped_jumps(omega, beta, gamma0);
    let a = crate::gaussian::drift_matrix(&g, &jumps);
    let y = crate::gaussian::relaxation_integral(&a)?;
    let sigma = crate::gaussian::thermal_covariance(&g, beta)?;
    let xi = (&g * &y + y.transpose() * &g).scale(0.5);
    let lam = &g * (&y * &sigma + &sigma * y.transpose()) * &g;
    Ok((xi, (&lam + lam.transpose()).scale(0.5)))
}

/// Single-relaxation model whose controls are the entries of a 2x2
/// symmetric positive-definite Hamiltonian matrix, ordered
/// (diag 1, diag 2, off-diagonal). The dissipator drives the state
/// straight to the instantaneous thermal state on one timescale.
pub fn classical_relaxation_model(beta: f64, tau_eq: f64) -> Result<ParametrizedGaussianModel> {
    ParametrizedGaussianModel::new(
        CLASSICAL_RELAXATION_ID,
        1,
        beta,
        vec![(0.05, 10.0), (0.05, 10.0), (-3.0, 3.0)],
        |lambda: &[f64]| {
            RMatrix::from_row_slice(2, 2, &[lambda[0], lambda[2], lambda[2], lambda[1]])
        },
        |_lambda: &[f64]| RVector::zeros(2),
        Dissipator::SingleRelaxation { tau_eq },
    )
    .map(|m| {
        m.with_g_derivative(|_lambda: &[f64], j: usize| {
            let mut dg = RMatrix::zeros(2, 2);
            match j {
                0 => dg[(0, 0)] = 1.0,
                1 => dg[(1, 1)] = 1.0,
                _ => {
                    dg[(0, 1)] = 1.0;
                    dg[(1, 0)] = 1.0;
                }
            }
            dg
        })
        .with_mu_derivative(|_lambda: &[f64], _j: usize| RVector::zeros(2))
    })
}
