//! Parametrized Gaussian models: quadratic Hamiltonians, linear jump
//! operators, thermal covariances, and the associated drift, diffusion,
//! and relaxation objects.
//!
//! A state of `n` bosonic modes is described through the quadrature
//! vector R = (x_1..x_n, p_1..p_n). The Hamiltonian is
//! H = (1/2) R^T G R + mu^T R with G symmetric positive definite, and
//! dissipation enters either through jump operators linear in R or
//! through a single-relaxation channel with one equilibration time.

use crate::matfun::{
    self, apply_matrix_function, max_abs, max_abs_c, real_part_checked, spd_sqrt, to_complex,
    C64, CMatrix, RMatrix, RVector,
};
use crate::{Error, Result};

/// Commutation matrix Omega = i J for `n` modes in (x.., p..) ordering:
/// Hermitian, squares to the identity, and Omega^T = -Omega.
pub fn omega(n_modes: usize) -> CMatrix {
    let n = n_modes;
    let mut m = CMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        m[(k, n + k)] = C64::new(0.0, 1.0);
        m[(n + k, k)] = C64::new(0.0, -1.0);
    }
    m
}

/// Real symplectic form J = [[0, I], [-I, 0]] for `n` modes.
pub fn symplectic_j(n_modes: usize) -> RMatrix {
    let n = n_modes;
    let mut m = RMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        m[(k, n + k)] = 1.0;
        m[(n + k, k)] = -1.0;
    }
    m
}

/// Jump-operator coefficients: row `n` holds c_n^T for the jump
/// operator L_n = c_n^T R.
#[derive(Debug, Clone)]
pub struct JumpMatrix(pub CMatrix);

impl JumpMatrix {
    /// Number of quadrature components (2 x modes).
    pub fn quadrature_dim(&self) -> usize {
        self.0.ncols()
    }

    /// Gram matrix sum_n c_n c_n^dagger = C^T conj(C), the sesquilinear
    /// combination entering drift and diffusion.
    pub fn gram(&self) -> CMatrix {
        self.0.transpose() * self.0.map(|z| z.conj())
    }
}

/// Dissipation mechanism of a model.
pub enum Dissipator {
    /// Jump operators linear in the quadratures, parameter dependent.
    Jumps(Box<dyn Fn(&[f64]) -> JumpMatrix + Send + Sync>),
    /// Single-relaxation channel driving the state to the instantaneous
    /// thermal state on one timescale.
    SingleRelaxation {
        /// Equilibration time of the channel.
        tau_eq: f64,
    },
}

impl std::fmt::Debug for Dissipator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Dissipator::Jumps(_) => write!(f, "Dissipator::Jumps(..)"),
            Dissipator::SingleRelaxation { tau_eq } => {
                write!(f, "Dissipator::SingleRelaxation {{ tau_eq: {tau_eq} }}")
            }
        }
    }
}

type MatrixFn = Box<dyn Fn(&[f64]) -> RMatrix + Send + Sync>;
type VectorFn = Box<dyn Fn(&[f64]) -> RVector + Send + Sync>;
type MatrixGradFn = Box<dyn Fn(&[f64], usize) -> RMatrix + Send + Sync>;
type VectorGradFn = Box<dyn Fn(&[f64], usize) -> RVector + Send + Sync>;

/// Gaussian model whose Hamiltonian and dissipator depend smoothly on a
/// control-parameter vector lambda of fixed dimension.
pub struct ParametrizedGaussianModel {
    /// Stable identifier used by configuration files and reports.
    pub id: String,
    /// Number of bosonic modes.
    pub n_modes: usize,
    /// Number of control parameters.
    pub dim: usize,
    /// Inverse temperature of the environment.
    pub beta: f64,
    /// Admissible box per control coordinate, inclusive.
    pub domain: Vec<(f64, f64)>,
    /// Dissipation mechanism.
    pub dissipator: Dissipator,
    g_fn: MatrixFn,
    mu_fn: VectorFn,
    g_grad: Option<MatrixGradFn>,
    mu_grad: Option<VectorGradFn>,
}

impl std::fmt::Debug for ParametrizedGaussianModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ParametrizedGaussianModel")
            .field("id", &self.id)
            .field("n_modes", &self.n_modes)
            .field("dim", &self.dim)
            .field("beta", &self.beta)
            .field("domain", &self.domain)
            .field("dissipator", &self.dissipator)
            .finish()
    }
}

impl ParametrizedGaussianModel {
    /// Builds a model from closures for G(lambda) and mu(lambda).
    ///
    /// Derivatives default to central finite differences with relative
    /// step 1e-6; analytic derivatives can be attached afterwards.
    pub fn new(
        id: impl Into<String>,
        n_modes: usize,
        beta: f64,
        domain: Vec<(f64, f64)>,
        g_fn: impl Fn(&[f64]) -> RMatrix + Send + Sync + 'static,
        mu_fn: impl Fn(&[f64]) -> RVector + Send + Sync + 'static,
        dissipator: Dissipator,
    ) -> Result<Self> {
        if beta <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "inverse temperature must be positive, got {beta}"
            )));
        }
        if domain.is_empty() {
            return Err(Error::InvalidArgument(
                "parameter domain must have at least one coordinate".into(),
            ));
        }
        for (j, (lo, hi)) in domain.iter().enumerate() {
            if !(lo < hi) {
                return Err(Error::InvalidArgument(format!(
                    "domain box for coordinate {j} is empty: [{lo}, {hi}]"
                )));
            }
        }
        if let Dissipator::SingleRelaxation { tau_eq } = dissipator {
            if tau_eq <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "equilibration time must be positive, got {tau_eq}"
                )));
            }
        }
        Ok(Self {
            id: id.into(),
            n_modes,
            dim: domain.len(),
            beta,
            domain,
            dissipator,
            g_fn: Box::new(g_fn),
            mu_fn: Box::new(mu_fn),
            g_grad: None,
            mu_grad: None,
        })
    }

    /// Attaches analytic derivatives of G with respect to each control.
    pub fn with_g_derivative(
        mut self,
        grad: impl Fn(&[f64], usize) -> RMatrix + Send + Sync + 'static,
    ) -> Self {
        self.g_grad = Some(Box::new(grad));
        self
    }

    /// Attaches analytic derivatives of mu with respect to each control.
    pub fn with_mu_derivative(
        mut self,
        grad: impl Fn(&[f64], usize) -> RVector + Send + Sync + 'static,
    ) -> Self {
        self.mu_grad = Some(Box::new(grad));
        self
    }

    /// Whether analytic derivatives of G are attached.
    pub fn has_analytic_g_derivative(&self) -> bool {
        self.g_grad.is_some()
    }

    /// Checks that a control point lies in the model's domain box.
    pub fn check_domain(&self, lambda: &[f64]) -> Result<()> {
        if lambda.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "model '{}' takes {} control parameters, got {}",
                self.id,
                self.dim,
                lambda.len()
            )));
        }
        for (j, (&v, &(lo, hi))) in lambda.iter().zip(self.domain.iter()).enumerate() {
            if !v.is_finite() || v < lo || v > hi {
                return Err(Error::DomainExceeded(format!(
                    "model '{}': coordinate {} value {v} outside [{lo}, {hi}]",
                    self.id, j
                )));
            }
        }
        Ok(())
    }

    /// Hamiltonian matrix G at a control point.
    pub fn g(&self, lambda: &[f64]) -> Result<RMatrix> {
        self.check_domain(lambda)?;
        let g = (self.g_fn)(lambda);
        let d = 2 * self.n_modes;
        if g.nrows() != d || g.ncols() != d {
            return Err(Error::InvalidArgument(format!(
                "model '{}': G must be {d}x{d}, got {}x{}",
                self.id,
                g.nrows(),
                g.ncols()
            )));
        }
        Ok(g)
    }

    /// Linear-drive vector mu at a control point.
    pub fn mu(&self, lambda: &[f64]) -> Result<RVector> {
        self.check_domain(lambda)?;
        let mu = (self.mu_fn)(lambda);
        let d = 2 * self.n_modes;
        if mu.len() != d {
            return Err(Error::InvalidArgument(format!(
                "model '{}': mu must have length {d}, got {}",
                self.id,
                mu.len()
            )));
        }
        Ok(mu)
    }

    /// Jump matrix at a control point, when the dissipator has one.
    pub fn jumps(&self, lambda: &[f64]) -> Result<Option<JumpMatrix>> {
        self.check_domain(lambda)?;
        match &self.dissipator {
            Dissipator::Jumps(f) => Ok(Some(f(lambda))),
            Dissipator::SingleRelaxation { .. } => Ok(None),
        }
    }

    fn fd_step(lambda: &[f64], j: usize) -> f64 {
        1e-6 * lambda[j].abs().max(1.0)
    }

    /// Derivative of G along control `j` (analytic when attached,
    /// otherwise a central finite difference).
    ///
    /// Finite-difference stencil points may step marginally outside the
    /// domain box; the raw closure is evaluated there on purpose.
    pub fn dg(&self, lambda: &[f64], j: usize) -> Result<RMatrix> {
        self.check_domain(lambda)?;
        if j >= self.dim {
            return Err(Error::InvalidArgument(format!(
                "derivative index {j} out of range for dimension {}",
                self.dim
            )));
        }
        if let Some(grad) = &self.g_grad {
            return Ok(grad(lambda, j));
        }
        let h = Self::fd_step(lambda, j);
        let mut up = lambda.to_vec();
        let mut dn = lambda.to_vec();
        up[j] += h;
        dn[j] -= h;
        Ok(((self.g_fn)(&up) - (self.g_fn)(&dn)).unscale(2.0 * h))
    }

    /// Derivative of mu along control `j`.
    pub fn dmu(&self, lambda: &[f64], j: usize) -> Result<RVector> {
        self.check_domain(lambda)?;
        if j >= self.dim {
            return Err(Error::InvalidArgument(format!(
                "derivative index {j} out of range for dimension {}",
                self.dim
            )));
        }
        if let Some(grad) = &self.mu_grad {
            return Ok(grad(lambda, j));
        }
        let h = Self::fd_step(lambda, j);
        let mut up = lambda.to_vec();
        let mut dn = lambda.to_vec();
        up[j] += h;
        dn[j] -= h;
        Ok(((self.mu_fn)(&up) - (self.mu_fn)(&dn)).unscale(2.0 * h))
    }

    /// Largest relative mismatch between attached analytic derivatives
    /// and central finite differences at a control point.
    pub fn derivative_consistency(&self, lambda: &[f64]) -> Result<f64> {
        self.check_domain(lambda)?;
        let mut worst = 0.0f64;
        for j in 0..self.dim {
            let h = Self::fd_step(lambda, j);
            let mut up = lambda.to_vec();
            let mut dn = lambda.to_vec();
            up[j] += h;
            dn[j] -= h;
            if let Some(grad) = &self.g_grad {
                let fd = ((self.g_fn)(&up) - (self.g_fn)(&dn)).unscale(2.0 * h);
                let an = grad(lambda, j);
                let scale = max_abs(&an).max(max_abs(&fd)).max(1e-12);
                worst = worst.max(max_abs(&(an - fd)) / scale);
            }
            if let Some(grad) = &self.mu_grad {
                let fd = ((self.mu_fn)(&up) - (self.mu_fn)(&dn)).unscale(2.0 * h);
                let an = grad(lambda, j);
                let diff = (&an - fd).abs().max();
                let scale = an.abs().max().max(1e-12);
                worst = worst.max(diff / scale);
            }
        }
        Ok(worst)
    }

    /// Thermal covariance at a control point.
    pub fn thermal_covariance(&self, lambda: &[f64]) -> Result<RMatrix> {
        thermal_covariance(&self.g(lambda)?, self.beta)
    }

    /// Drift matrix of the quadrature first moments at a control point.
    /// Only defined for jump-operator dissipators.
    pub fn drift(&self, lambda: &[f64]) -> Result<RMatrix> {
        match self.jumps(lambda)? {
            Some(c) => Ok(drift_matrix(&self.g(lambda)?, &c)),
            None => Err(Error::InvalidArgument(format!(
                "model '{}' uses a single-relaxation dissipator; it has no drift matrix",
                self.id
            ))),
        }
    }

    /// Diffusion matrix at a control point (jump dissipators only).
    pub fn diffusion(&self, lambda: &[f64]) -> Result<RMatrix> {
        match self.jumps(lambda)? {
            Some(c) => Ok(diffusion_matrix(&c)),
            None => Err(Error::InvalidArgument(format!(
                "model '{}' uses a single-relaxation dissipator; it has no diffusion matrix",
                self.id
            ))),
        }
    }

    /// Applies the inverse-relaxation map: returns M solving
    /// A^T M + M A = -X for jump dissipators, or tau_eq X for the
    /// single-relaxation channel.
    pub fn lyapunov_map(&self, lambda: &[f64], x: &RMatrix) -> Result<RMatrix> {
        match &self.dissipator {
            Dissipator::Jumps(_) => {
                let a = self.drift(lambda)?;
                matfun::lyapunov_solve(&a, x)
            }
            Dissipator::SingleRelaxation { tau_eq } => Ok(x.scale(*tau_eq)),
        }
    }

    /// Time integral of the relaxation propagator of the first moments:
    /// -A^{-1} for jump dissipators, tau_eq times the identity for the
    /// single-relaxation channel.
    pub fn relaxation_integral(&self, lambda: &[f64]) -> Result<RMatrix> {
        match &self.dissipator {
            Dissipator::Jumps(_) => relaxation_integral(&self.drift(lambda)?),
            Dissipator::SingleRelaxation { tau_eq } => {
                Ok(RMatrix::identity(2 * self.n_modes, 2 * self.n_modes).scale(*tau_eq))
            }
        }
    }

    /// Equilibrium free energy at a control point (drive-independent).
    pub fn free_energy(&self, lambda: &[f64]) -> Result<f64> {
        free_energy(&self.g(lambda)?, self.beta)
    }
}

/// Positive symplectic eigenvalues of a symmetric positive-definite G,
/// sorted ascending. Computed from the Hermitian similarity
/// G^{1/2} Omega G^{1/2} of Omega G.
pub fn symplectic_eigenvalues(g: &RMatrix) -> Result<Vec<f64>> {
    let n = g.nrows() / 2;
    let sq = to_complex(&spd_sqrt(g)?);
    let k = &sq * omega(n) * &sq;
    let eig = k.symmetric_eigen();
    let mut pos: Vec<f64> = eig.eigenvalues.iter().copied().filter(|&v| v > 0.0).collect();
    if pos.len() != n {
        return Err(Error::NotPositiveDefinite(format!(
            "expected {n} positive symplectic eigenvalues, found {}",
            pos.len()
        )));
    }
    pos.sort_by(|a, b| a.total_cmp(b));
    Ok(pos)
}

/// Thermal covariance sigma = (1/2) coth(beta Omega G / 2) Omega of the
/// Gibbs state of H = (1/2) R^T G R at inverse temperature beta.
///
/// The result is real symmetric; an imaginary residue above 1e-10 of
/// the matrix scale is reported as an error instead of being truncated.
pub fn thermal_covariance(g: &RMatrix, beta: f64) -> Result<RMatrix> {
    if beta <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "inverse temperature must be positive, got {beta}"
        )));
    }
    let n = g.nrows() / 2;
    if g.nrows() != 2 * n || g.ncols() != g.nrows() {
        return Err(Error::InvalidArgument(
            "G must be square with even dimension".into(),
        ));
    }
    let om = omega(n);
    let w = &om * to_complex(g);
    let half = beta / 2.0;
    let coth = apply_matrix_function(&w, |z| {
        let t = (z * half).tanh();
        C64::new(1.0, 0.0) / t
    })?;
    let sigma_c = (coth * om).scale(0.5);
    let mut sigma = real_part_checked(&sigma_c, 1e-10)?;
    sigma = (&sigma + sigma.transpose()).scale(0.5);
    Ok(sigma)
}

/// Drift matrix A = J (G - Im(sum_n c_n c_n^dagger)) of the
/// first-moment dynamics under jump operators with coefficients c_n.
pub fn drift_matrix(g: &RMatrix, jumps: &JumpMatrix) -> RMatrix {
    let n = g.nrows() / 2;
    let im = jumps.gram().map(|z| z.im);
    symplectic_j(n) * (g - im)
}

/// Diffusion matrix D = J Re(sum_n c_n c_n^dagger) J^T, symmetric
/// positive semidefinite.
pub fn diffusion_matrix(jumps: &JumpMatrix) -> RMatrix {
    let d = jumps.quadrature_dim();
    let n = d / 2;
    let re = jumps.gram().map(|z| z.re);
    let j = symplectic_j(n);
    &j * re * j.transpose()
}

/// Residual of the stationary covariance equation
/// A sigma + sigma A^T + D = 0, relative to the diffusion scale.
pub fn stationarity_residual(a: &RMatrix, d: &RMatrix, sigma: &RMatrix) -> f64 {
    let r = a * sigma + sigma * a.transpose() + d;
    max_abs(&r) / max_abs(d).max(f64::MIN_POSITIVE)
}

/// Residual of the Cayley identity linking the Gibbs covariance to the
/// imaginary-time propagator:
/// || e^{-beta Omega G} - (2 sigma Omega - I)(2 sigma Omega + I)^{-1} ||.
pub fn cayley_residual(g: &RMatrix, sigma: &RMatrix, beta: f64) -> Result<f64> {
    let n = g.nrows() / 2;
    let om = omega(n);
    let w = &om * to_complex(g);
    let prop = apply_matrix_function(&w, |z| (-z * beta).exp())?;
    let so = to_complex(sigma) * &om;
    let eye = CMatrix::identity(2 * n, 2 * n);
    let num = so.scale(2.0) - &eye;
    let den = so.scale(2.0) + &eye;
    let inv = den
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::SingularMatrix("Cayley denominator 2 sigma Omega + I".into()))?;
    Ok(max_abs_c(&(prop - num * inv)))
}

/// Time integral of e^{A t} over the half line: -A^{-1}, requiring A
/// Hurwitz.
pub fn relaxation_integral(a: &RMatrix) -> Result<RMatrix> {
    let abscissa = matfun::spectral_abscissa(a);
    if abscissa >= -1e-12 {
        return Err(Error::NotHurwitz { abscissa });
    }
    let inv = a
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::SingularMatrix("drift matrix".into()))?;
    let y = inv.scale(-1.0);
    let resid = max_abs(&(a * &y + RMatrix::identity(a.nrows(), a.ncols())));
    if resid > 1e-12 * max_abs(a).max(1.0) * max_abs(&y).max(1.0) {
        return Err(Error::NotConverged {
            iterations: 1,
            residual: resid,
        });
    }
    Ok(y)
}

/// Equilibrium free energy of the Gaussian Gibbs state:
/// beta^{-1} sum_k ln(2 sinh(beta nu_k / 2)) over the positive
/// symplectic eigenvalues nu_k of G. Independent of the linear drive.
pub fn free_energy(g: &RMatrix, beta: f64) -> Result<f64> {
    if beta <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "inverse temperature must be positive, got {beta}"
        )));
    }
    let nus = symplectic_eigenvalues(g)?;
    let mut f = 0.0;
    for nu in nus {
        f += (2.0 * (beta * nu / 2.0).sinh()).ln();
    }
    Ok(f / beta)
}
