//! Work statistics of slow driving protocols.
//!
//! For a slowly driven open Gaussian system the mean excess work and
//! the work variance of a protocol are the actions of its control path
//! under the excess-work and work-fluctuation metrics. This module
//! evaluates those functionals with the exact discretization used by
//! the geometry routines, so the geometric lower bounds are tight at
//! the discrete level, and collects the derived indicators: Fano
//! factor, quantum correction, and length-squared-over-duration
//! bounds.

use serde::Serialize;

use crate::gaussian::ParametrizedGaussianModel;
use crate::geometry::{path_action, path_length, PathGrid};
use crate::metrics::{MetricField, MetricKind, PipelineField};
use crate::{Error, Result};

/// Work statistics of one protocol.
#[derive(Debug, Clone, Serialize)]
pub struct WorkReport {
    /// Mean excess work of the protocol.
    pub excess_work: f64,
    /// Work variance of the protocol.
    pub variance: f64,
    /// Fano factor: beta times variance over mean excess work.
    pub fano: f64,
    /// Quantum correction: half beta times variance, minus the mean
    /// excess work. Non-negative; zero in the classical limit.
    pub quantum_correction: f64,
    /// Path length under the excess-work metric.
    pub xi_length: f64,
    /// Path length under the work-fluctuation metric.
    pub lambda_length: f64,
    /// Lower bound on the mean excess work: xi length squared over the
    /// protocol duration.
    pub bound_excess: f64,
    /// Lower bound on the work variance: fluctuation length squared
    /// over the protocol duration.
    pub bound_variance: f64,
    /// Equilibrium free-energy difference between the endpoints.
    pub delta_free_energy: f64,
    /// Mean total work: excess work plus the free-energy difference.
    pub total_work: f64,
}

/// Straight-line protocol between two control points.
pub fn linear_protocol(from: &[f64], to: &[f64], tau: f64, m: usize) -> Result<PathGrid> {
    PathGrid::linear(from, to, tau, m)
}

/// Mean excess work of a protocol: the action of its path under the
/// excess-work metric field.
pub fn excess_work(xi_field: &dyn MetricField, path: &PathGrid) -> Result<f64> {
    path_action(xi_field, path)
}

/// Work variance of a protocol: the action of its path under the
/// work-fluctuation metric field.
pub fn work_variance(lambda_field: &dyn MetricField, path: &PathGrid) -> Result<f64> {
    path_action(lambda_field, path)
}

/// Fano factor beta * variance / excess work.
pub fn fano_ratio(beta: f64, excess: f64, variance: f64) -> Result<f64> {
    if excess.abs() < 1e-300 {
        return Err(Error::DivisionByZero(
            "Fano factor of a protocol with zero mean excess work".into(),
        ));
    }
    Ok(beta * variance / excess)
}

/// Quantum correction (beta/2) * variance - excess work.
pub fn quantum_correction(beta: f64, excess: f64, variance: f64) -> f64 {
    0.5 * beta * variance - excess
}

/// Full work statistics of a path under explicit metric fields.
///
/// The free-energy difference of the endpoints is supplied by the
/// caller; use [`evaluate_model_protocol`] to derive everything from a
/// model.
pub fn work_report(
    xi_field: &dyn MetricField,
    lambda_field: &dyn MetricField,
    beta: f64,
    path: &PathGrid,
    delta_free_energy: f64,
) -> Result<WorkReport> {
    let tau = path.duration();
    let excess = path_action(xi_field, path)?;
    let variance = path_action(lambda_field, path)?;
    let xi_length = path_length(xi_field, path)?;
    let lambda_length = path_length(lambda_field, path)?;
    Ok(WorkReport {
        excess_work: excess,
        variance,
        fano: fano_ratio(beta, excess, variance)?,
        quantum_correction: quantum_correction(beta, excess, variance),
        xi_length,
        lambda_length,
        bound_excess: xi_length * xi_length / tau,
        bound_variance: lambda_length * lambda_length / tau,
        delta_free_energy,
        total_work: excess + delta_free_energy,
    })
}

/// Work statistics of a path through a model, with both metric fields
/// evaluated by the full pipeline and the free-energy difference taken
/// between the path endpoints.
pub fn evaluate_model_protocol(
    model: &ParametrizedGaussianModel,
    path: &PathGrid,
) -> Result<WorkReport> {
    let xi_field = PipelineField {
        model,
        kind: MetricKind::Xi,
    };
    let lambda_field = PipelineField {
        model,
        kind: MetricKind::Lambda,
    };
    let first = path.nodes[0].as_slice().to_vec();
    let last = path.nodes[path.len() - 1].as_slice().to_vec();
    let delta_f = model.free_energy(&last)? - model.free_energy(&first)?;
    work_report(&xi_field, &lambda_field, model.beta, path, delta_f)
}

/// Relative savings of a geodesic protocol over the straight-line
/// protocol between the same endpoints: ratios of mean excess work and
/// of work variance. Values at or below one mean the geodesic does not
/// lose against the line.
pub fn savings(geodesic: &WorkReport, linear: &WorkReport) -> Result<(f64, f64)> {
    if linear.excess_work.abs() < 1e-300 {
        return Err(Error::DivisionByZero(
            "excess-work savings of a protocol with zero straight-line excess work".into(),
        ));
    }
    if linear.variance.abs() < 1e-300 {
        return Err(Error::DivisionByZero(
            "variance savings of a protocol with zero straight-line variance".into(),
        ));
    }
    Ok((
        geodesic.excess_work / linear.excess_work,
        geodesic.variance / linear.variance,
    ))
}
