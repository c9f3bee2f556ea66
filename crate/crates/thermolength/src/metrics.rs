//! Metric tensors on control-parameter space for slowly driven open
//! Gaussian systems.
//!
//! Two Riemannian structures are computed from the same model data: the
//! excess-work metric (`xi`) whose action gives the mean excess work of
//! a slow protocol, and the work-fluctuation metric (`lambda`) whose
//! action gives the work variance. High-temperature limits of both are
//! available as explicit classical tensors, and the static
//! Hessian-of-log-partition geometry on positive-definite Hamiltonian
//! matrices is exposed as an induced tensor in the model coordinates.

use nalgebra::DMatrix;

use crate::gaussian::{omega, thermal_covariance, ParametrizedGaussianModel};
use crate::matfun::{
    complex_eigen, expm1_c, expm1_ratio, max_abs, sym_min_eig, to_complex, C64, CMatrix, RMatrix,
    RVector, CONDITION_CAP,
};
use crate::{Error, Result};

/// Which metric tensor a value refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    /// Excess-work metric.
    Xi,
    /// Work-fluctuation metric.
    Lambda,
    /// High-temperature limit of the excess-work metric.
    ClassicalXi,
    /// High-temperature limit of the work-fluctuation metric.
    ClassicalLambda,
    /// Static geometry on positive-definite Hamiltonian matrices,
    /// pulled back to the model coordinates.
    Siegel,
}

impl MetricKind {
    /// Stable identifier used in file outputs.
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Xi => "xi",
            MetricKind::Lambda => "lambda",
            MetricKind::ClassicalXi => "classical_xi",
            MetricKind::ClassicalLambda => "classical_lambda",
            MetricKind::Siegel => "siegel",
        }
    }
}

impl std::fmt::Display for MetricKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xi" => Ok(MetricKind::Xi),
            "lambda" => Ok(MetricKind::Lambda),
            "classical" | "classical_xi" => Ok(MetricKind::ClassicalXi),
            "classical_lambda" => Ok(MetricKind::ClassicalLambda),
            "siegel" => Ok(MetricKind::Siegel),
            other => Err(Error::InvalidArgument(format!(
                "unknown metric kind '{other}' (expected xi, lambda, classical_xi, \
                 classical_lambda, or siegel)"
            ))),
        }
    }
}

/// A metric tensor evaluated at one control point.
#[derive(Debug, Clone)]
pub struct MetricTensor {
    /// Symmetric tensor components in the model's control coordinates.
    pub g: RMatrix,
    /// Which metric this is.
    pub kind: MetricKind,
    /// Control point of the evaluation.
    pub lambda: Vec<f64>,
    /// Inverse temperature used in the evaluation.
    pub beta: f64,
}

impl MetricTensor {
    /// Smallest eigenvalue of the tensor.
    pub fn min_eig(&self) -> f64 {
        sym_min_eig(&self.g)
    }
}

struct ModelData {
    xs: Vec<RMatrix>,
    dmus: Vec<RVector>,
    fs: Vec<RMatrix>,
    g: RMatrix,
    sigma: RMatrix,
    y: RMatrix,
}

fn model_data(model: &ParametrizedGaussianModel, lambda: &[f64]) -> Result<ModelData> {
    let d = model.dim;
    let g = model.g(lambda)?;
    let sigma = thermal_covariance(&g, model.beta)?;
    let y = model.relaxation_integral(lambda)?;
    let mut xs = Vec::with_capacity(d);
    let mut dmus = Vec::with_capacity(d);
    let mut fs = Vec::with_capacity(d);
    for j in 0..d {
        let x = model.dg(lambda, j)?;
        fs.push(model.lyapunov_map(lambda, &x)?);
        xs.push(x);
        dmus.push(model.dmu(lambda, j)?);
    }
    Ok(ModelData {
        xs,
        dmus,
        fs,
        g,
        sigma,
        y,
    })
}

fn symmetrize(mut t: RMatrix) -> RMatrix {
    t = (&t + t.transpose()).scale(0.5);
    t
}

/// Kernel weight of the excess-work trace in the eigenbasis of
/// W = Omega G, with x = beta * eigenvalue:
/// psi(x_a, x_b) = -beta (e^{x_a+x_b} - 1) /
///                 ((x_a+x_b) (e^{x_a} - 1)(e^{x_b} - 1)).
///
/// This is the product of the propagator Gram weight
/// (e^{x_a+x_b} - 1)/(theta_a + theta_b) with the thermal occupation
/// factors 1/(e^{x_b} - 1) and 1/(1 - e^{x_a}) contributed by
/// sigma -+ Omega/2. Multiplying the three factors analytically keeps
/// the weight bounded by ~beta; multiplying the matrices instead piles
/// up e^{x} intermediates whose later cancellation is hopeless in
/// floating point once x is large.
fn xi_kernel(xa: C64, xb: C64, beta: f64) -> C64 {
    let s = xa + xb;
    if xa.re > 0.0 && xb.re > 0.0 {
        // Normalized by e^{x_a + x_b} so every factor stays in [0, 1]
        // no matter how large the eigenvalues are.
        let num = -expm1_c(-s);
        let da = -expm1_c(-xa);
        let db = -expm1_c(-xb);
        C64::new(-beta, 0.0) * num / (s * da * db)
    } else {
        C64::new(-beta, 0.0) * expm1_ratio(s) / (expm1_c(xa) * expm1_c(xb))
    }
}

/// Excess-work metric tensor at a control point.
///
/// Component (j, k) is
/// (1/2) tr{ J[X_k] (sigma - Omega/2) F[X_j] (sigma + Omega/2) }
/// + dmu_j^T G Y dmu_k, where J is the bounded Gram integral of the
/// imaginary-time propagator, F the inverse-relaxation map, and Y the
/// integrated first-moment relaxation; the result is symmetrized.
///
/// The trace is contracted in the eigenbasis of W = Omega G: with
/// X' = V^T X_k V and F~ = V^{-1} Omega F[X_j] Omega V^{-T}, it equals
/// (1/2) sum_ab psi(x_a, x_b) X'_ab F~_ba, because left and right
/// eigenvectors of W diagonalize sigma -+ Omega/2 from the matching
/// sides. The trace is real up to roundoff, which is verified against
/// the magnitude of the summed terms before truncation.
pub fn xi_tensor(model: &ParametrizedGaussianModel, lambda: &[f64]) -> Result<MetricTensor> {
    let d = model.dim;
    let beta = model.beta;
    let data = model_data(model, lambda)?;
    let om = omega(model.n_modes);
    let w = &om * to_complex(&data.g);
    let eig = complex_eigen(&w, CONDITION_CAP)?;
    let gy = &data.g * &data.y;

    let q = w.nrows();
    let x: Vec<C64> = eig.values.iter().map(|&th| th * beta).collect();
    let mut psi = DMatrix::<C64>::zeros(q, q);
    for a in 0..q {
        for b in 0..q {
            psi[(a, b)] = xi_kernel(x[a], x[b], beta);
        }
    }

    let vt = eig.vectors.transpose();
    let vit = eig.inverse.transpose();
    let xps: Vec<CMatrix> = data.xs.iter().map(|m| &vt * to_complex(m) * &eig.vectors).collect();
    let fts: Vec<CMatrix> = data
        .fs
        .iter()
        .map(|m| &eig.inverse * &om * to_complex(m) * &om * &vit)
        .collect();

    let mut t = DMatrix::<C64>::zeros(d, d);
    let mut term_scale = 0.0f64;
    for j in 0..d {
        for k in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            let mut mag = 0.0f64;
            for a in 0..q {
                for b in 0..q {
                    let term = psi[(a, b)] * xps[k][(a, b)] * fts[j][(b, a)] * 0.5;
                    acc += term;
                    mag += term.norm();
                }
            }
            let mean = data.dmus[j].dot(&(&gy * &data.dmus[k]));
            t[(j, k)] = acc + C64::new(mean, 0.0);
            term_scale = term_scale.max(mag + mean.abs());
        }
    }
    let real = checked_real_tensor(&t, term_scale, "excess-work metric")?;
    Ok(MetricTensor {
        g: symmetrize(real),
        kind: MetricKind::Xi,
        lambda: lambda.to_vec(),
        beta,
    })
}

/// Work-fluctuation metric tensor at a control point.
///
/// Component (j, k) is
/// Re tr{ X_k (sigma - Omega/2) F[X_j] (sigma + Omega/2) }
/// + 2 dmu_j^T G Y sigma G dmu_k, symmetrized. The imaginary part of the
/// trace is an antisymmetric commutator contribution that the work
/// variance genuinely discards, so the real part is taken directly.
pub fn lambda_tensor(model: &ParametrizedGaussianModel, lambda: &[f64]) -> Result<MetricTensor> {
    let d = model.dim;
    let beta = model.beta;
    let data = model_data(model, lambda)?;
    let om = omega(model.n_modes);
    let sig_minus = to_complex(&data.sigma) - om.scale(0.5);
    let sig_plus = to_complex(&data.sigma) + om.scale(0.5);
    let gysg = &data.g * &data.y * &data.sigma * &data.g;

    let fs_c: Vec<CMatrix> = data.fs.iter().map(to_complex).collect();
    let xs_c: Vec<CMatrix> = data.xs.iter().map(to_complex).collect();

    let mut t = RMatrix::zeros(d, d);
    for j in 0..d {
        let right = &fs_c[j] * &sig_plus;
        for k in 0..d {
            let left = &xs_c[k] * &sig_minus;
            let tr = (&left * &right).trace();
            let mean = 2.0 * data.dmus[j].dot(&(&gysg * &data.dmus[k]));
            t[(j, k)] = tr.re + mean;
        }
    }
    Ok(MetricTensor {
        g: symmetrize(t),
        kind: MetricKind::Lambda,
        lambda: lambda.to_vec(),
        beta,
    })
}

/// High-temperature excess-work metric:
/// (1/(2 beta)) tr{ X_k G^{-1} F[X_j] G^{-1} } + dmu_j^T G Y dmu_k,
/// symmetrized.
pub fn classical_xi_tensor(
    model: &ParametrizedGaussianModel,
    lambda: &[f64],
) -> Result<MetricTensor> {
    let d = model.dim;
    let beta = model.beta;
    let data = model_data(model, lambda)?;
    let g_inv = data
        .g
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::SingularMatrix("Hamiltonian matrix G".into()))?;
    let gy = &data.g * &data.y;

    let mut t = RMatrix::zeros(d, d);
    for j in 0..d {
        let right = &g_inv * &data.fs[j] * &g_inv;
        for k in 0..d {
            let tr = (&data.xs[k] * &right).trace();
            let mean = data.dmus[j].dot(&(&gy * &data.dmus[k]));
            t[(j, k)] = tr / (2.0 * beta) + mean;
        }
    }
    Ok(MetricTensor {
        g: symmetrize(t),
        kind: MetricKind::ClassicalXi,
        lambda: lambda.to_vec(),
        beta,
    })
}

/// High-temperature work-fluctuation metric, exactly 2/beta times the
/// classical excess-work tensor.
pub fn classical_lambda_tensor(
    model: &ParametrizedGaussianModel,
    lambda: &[f64],
) -> Result<MetricTensor> {
    let xi = classical_xi_tensor(model, lambda)?;
    Ok(MetricTensor {
        g: xi.g.scale(2.0 / model.beta),
        kind: MetricKind::ClassicalLambda,
        lambda: xi.lambda,
        beta: xi.beta,
    })
}

/// Static metric on the positive-definite Hamiltonian matrices,
/// ds^2 = (1/2) tr{(G^{-1} dG)^2}, pulled back to the model's control
/// coordinates.
pub fn induced_siegel_tensor(
    model: &ParametrizedGaussianModel,
    lambda: &[f64],
) -> Result<MetricTensor> {
    let d = model.dim;
    let data_g = model.g(lambda)?;
    let g_inv = data_g
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::SingularMatrix("Hamiltonian matrix G".into()))?;
    let xs: Vec<RMatrix> = (0..d)
        .map(|j| model.dg(lambda, j))
        .collect::<Result<_>>()?;
    let mut t = RMatrix::zeros(d, d);
    for j in 0..d {
        let right = &g_inv * &xs[j] * &g_inv;
        for k in 0..d {
            t[(j, k)] = 0.5 * (&xs[k] * &right).trace();
        }
    }
    Ok(MetricTensor {
        g: symmetrize(t),
        kind: MetricKind::Siegel,
        lambda: lambda.to_vec(),
        beta: model.beta,
    })
}

/// Evaluates the requested metric tensor at a control point.
pub fn metric_tensor(
    model: &ParametrizedGaussianModel,
    lambda: &[f64],
    kind: MetricKind,
) -> Result<MetricTensor> {
    match kind {
        MetricKind::Xi => xi_tensor(model, lambda),
        MetricKind::Lambda => lambda_tensor(model, lambda),
        MetricKind::ClassicalXi => classical_xi_tensor(model, lambda),
        MetricKind::ClassicalLambda => classical_lambda_tensor(model, lambda),
        MetricKind::Siegel => induced_siegel_tensor(model, lambda),
    }
}

/// Smallest eigenvalue of Lambda - (2/beta) xi at a control point.
///
/// Non-negative up to roundoff: the work fluctuations of a slow
/// protocol dominate the classical fluctuation-dissipation value.
pub fn fdr_gap(model: &ParametrizedGaussianModel, lambda: &[f64]) -> Result<f64> {
    let xi = xi_tensor(model, lambda)?;
    let lam = lambda_tensor(model, lambda)?;
    let gap = &lam.g - xi.g.scale(2.0 / model.beta);
    Ok(sym_min_eig(&gap))
}

fn checked_real_tensor(t: &DMatrix<C64>, term_scale: f64, what: &str) -> Result<RMatrix> {
    let scale = t
        .iter()
        .fold(term_scale, |a, z| a.max(z.norm()))
        .max(f64::MIN_POSITIVE);
    let imag = t.iter().fold(0.0f64, |a, z| a.max(z.im.abs()));
    if imag > 1e-9 * scale {
        return Err(Error::SingularEigenvalue(format!(
            "{what}: imaginary residue {imag:.3e} exceeds 1e-9 of scale {scale:.3e}"
        )));
    }
    Ok(t.map(|z| z.re))
}

/// A smooth field of metric tensors over a box in control space.
///
/// Implementations either evaluate the full model pipeline at each
/// point or wrap closed-form tensors; geodesic routines only see this
/// interface.
pub trait MetricField: Sync {
    /// Number of control coordinates.
    fn dim(&self) -> usize;

    /// Admissible box per coordinate, inclusive.
    fn domain(&self) -> &[(f64, f64)];

    /// Metric tensor at a control point.
    fn metric(&self, lambda: &[f64]) -> Result<RMatrix>;

    /// Analytic derivative of the tensor along coordinate `j`, when the
    /// field provides one; `None` requests finite differences.
    fn metric_derivative(&self, lambda: &[f64], j: usize) -> Option<Result<RMatrix>> {
        let _ = (lambda, j);
        None
    }

    /// Checks that a point lies inside the domain box.
    fn check_domain(&self, lambda: &[f64]) -> Result<()> {
        if lambda.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "field takes {} coordinates, got {}",
                self.dim(),
                lambda.len()
            )));
        }
        for (j, (&v, &(lo, hi))) in lambda.iter().zip(self.domain().iter()).enumerate() {
            if !v.is_finite() || v < lo || v > hi {
                return Err(Error::DomainExceeded(format!(
                    "coordinate {j} value {v} outside [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

/// Metric field that evaluates the full model pipeline at every point.
pub struct PipelineField<'a> {
    /// Underlying model.
    pub model: &'a ParametrizedGaussianModel,
    /// Which tensor to evaluate.
    pub kind: MetricKind,
}

impl MetricField for PipelineField<'_> {
    fn dim(&self) -> usize {
        self.model.dim
    }

    fn domain(&self) -> &[(f64, f64)] {
        &self.model.domain
    }

    fn metric(&self, lambda: &[f64]) -> Result<RMatrix> {
        metric_tensor(self.model, lambda, self.kind).map(|t| t.g)
    }
}

type FieldFn = Box<dyn Fn(&[f64]) -> RMatrix + Send + Sync>;
type FieldGradFn = Box<dyn Fn(&[f64], usize) -> RMatrix + Send + Sync>;

/// Metric field given by closed-form tensor components.
pub struct AnalyticField {
    domain: Vec<(f64, f64)>,
    g: FieldFn,
    dg: Option<FieldGradFn>,
}

impl AnalyticField {
    /// Builds a field from a tensor closure over the given box.
    pub fn new(
        domain: Vec<(f64, f64)>,
        g: impl Fn(&[f64]) -> RMatrix + Send + Sync + 'static,
    ) -> Self {
        Self {
            domain,
            g: Box::new(g),
            dg: None,
        }
    }

    /// Attaches analytic derivatives of the tensor components.
    pub fn with_derivative(
        mut self,
        dg: impl Fn(&[f64], usize) -> RMatrix + Send + Sync + 'static,
    ) -> Self {
        self.dg = Some(Box::new(dg));
        self
    }
}

impl MetricField for AnalyticField {
    fn dim(&self) -> usize {
        self.domain.len()
    }

    fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    fn metric(&self, lambda: &[f64]) -> Result<RMatrix> {
        self.check_domain(lambda)?;
        Ok((self.g)(lambda))
    }

    fn metric_derivative(&self, lambda: &[f64], j: usize) -> Option<Result<RMatrix>> {
        self.dg.as_ref().map(|dg| {
            self.check_domain(lambda)?;
            Ok(dg(lambda, j))
        })
    }
}

/// Verifies a tensor is symmetric positive definite; returns its
/// smallest eigenvalue.
pub fn assert_positive_metric(g: &RMatrix, where_: &str) -> Result<f64> {
    let asym = max_abs(&(g - g.transpose()));
    if asym > 1e-9 * max_abs(g).max(f64::MIN_POSITIVE) {
        return Err(Error::NonPositiveMetric(format!(
            "{where_}: tensor asymmetry {asym:.3e}"
        )));
    }
    let min = sym_min_eig(g);
    if min <= 0.0 {
        return Err(Error::NonPositiveMetric(format!(
            "{where_}: smallest eigenvalue {min:.6e}"
        )));
    }
    Ok(min)
}
