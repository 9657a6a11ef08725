//! The smoothed lp penalty and the objectives built on it.
//!
//! The penalty  sum_i |x_i| / (|x_i| + eps_i)^(1-p)  with 0 < p < 1 and
//! eps > 0 is a smooth-in-eps stand-in for sum_i |x_i|^p: it never exceeds
//! that sum and converges to it as eps -> 0+. The solvers minimize the
//! residual plus this penalty; the surrogate below is the majorizing form
//! whose exact coordinate-wise minimizer is the thresholding update.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Exponent and smoothing vector for the penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyParams {
    p: f64,
    epsilon: Vec<f64>,
}

impl PenaltyParams {
    pub fn new(p: f64, epsilon: Vec<f64>) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::contract(format!("p must lie in (0,1), got {p}")));
        }
        if epsilon.is_empty() {
            return Err(Error::contract("epsilon must be non-empty"));
        }
        if !epsilon.iter().all(|e| e.is_finite() && *e > 0.0) {
            return Err(Error::contract("every epsilon component must be positive"));
        }
        Ok(Self { p, epsilon })
    }

    /// Uniform smoothing: the same eps in every coordinate.
    pub fn uniform(p: f64, eps: f64, len: usize) -> Result<Self> {
        Self::new(p, vec![eps; len])
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn epsilon(&self) -> &[f64] {
        &self.epsilon
    }
}

/// Raw penalty sum; callers guarantee matching lengths and valid parameters.
///
/// Zero coordinates contribute exactly zero, so they are skipped; that also
/// keeps the trace bookkeeping cheap on sparse iterates.
pub(crate) fn penalty_sum_raw(x: &[f64], epsilon: &[f64], p: f64) -> f64 {
    let mut sum = 0.0;
    for (&xi, &ei) in x.iter().zip(epsilon) {
        if xi != 0.0 {
            let m = xi.abs();
            sum += m / (m + ei).powf(1.0 - p);
        }
    }
    sum
}

/// Weighted l1 sum used by the surrogate: |x_i| / (|y_i| + eps_i)^(1-p).
pub(crate) fn weighted_l1_raw(x: &[f64], y: &[f64], epsilon: &[f64], p: f64) -> f64 {
    let mut sum = 0.0;
    for ((&xi, &yi), &ei) in x.iter().zip(y).zip(epsilon) {
        if xi != 0.0 {
            sum += xi.abs() / (yi.abs() + ei).powf(1.0 - p);
        }
    }
    sum
}

/// Evaluates  sum_i |x_i| / (|x_i| + eps_i)^(1-p).
pub fn smoothed_lp_penalty(x: &[f64], params: &PenaltyParams) -> Result<f64> {
    if x.len() != params.epsilon.len() {
        return Err(Error::contract(format!(
            "penalty: x has length {} but epsilon has length {}",
            x.len(),
            params.epsilon.len()
        )));
    }
    Ok(penalty_sum_raw(x, &params.epsilon, params.p))
}

/// The regularized objective  ||Ax - b||^2 + lambda * penalty(x).
pub fn regularized_objective(
    a: &DenseMatrix,
    b: &[f64],
    x: &[f64],
    lambda: f64,
    params: &PenaltyParams,
) -> Result<f64> {
    if b.len() != a.rows() {
        return Err(Error::contract(format!(
            "objective: matrix is {}x{} but b has length {}",
            a.rows(),
            a.cols(),
            b.len()
        )));
    }
    if lambda <= 0.0 {
        return Err(Error::contract(format!(
            "objective: lambda must be positive, got {lambda}"
        )));
    }
    let ax = a.matvec(x)?;
    let residual_sq: f64 = ax.iter().zip(b).map(|(axi, bi)| (axi - bi) * (axi - bi)).sum();
    Ok(residual_sq + lambda * smoothed_lp_penalty(x, params)?)
}

/// The majorizing surrogate
/// `mu ||Ax-b||^2 + lambda mu sum_i |x_i|/(|y_i|+eps_i)^(1-p) - mu ||Ax-Ay||^2 + ||x-y||^2`.
///
/// At `x == y` this equals `mu` times the regularized objective.
pub fn surrogate_objective(
    a: &DenseMatrix,
    b: &[f64],
    x: &[f64],
    y: &[f64],
    lambda: f64,
    mu: f64,
    params: &PenaltyParams,
) -> Result<f64> {
    if b.len() != a.rows() {
        return Err(Error::contract(format!(
            "surrogate: matrix is {}x{} but b has length {}",
            a.rows(),
            a.cols(),
            b.len()
        )));
    }
    if x.len() != y.len() || x.len() != params.epsilon.len() {
        return Err(Error::contract(
            "surrogate: x, y, and epsilon must have equal lengths",
        ));
    }
    if lambda <= 0.0 || mu <= 0.0 {
        return Err(Error::contract(format!(
            "surrogate: lambda and mu must be positive, got lambda={lambda}, mu={mu}"
        )));
    }
    let ax = a.matvec(x)?;
    let ay = a.matvec(y)?;
    let residual_sq: f64 = ax.iter().zip(b).map(|(axi, bi)| (axi - bi) * (axi - bi)).sum();
    let coupling_sq: f64 = ax
        .iter()
        .zip(&ay)
        .map(|(axi, ayi)| (axi - ayi) * (axi - ayi))
        .sum();
    let step_sq: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - yi) * (xi - yi)).sum();
    Ok(mu * residual_sq + lambda * mu * weighted_l1_raw(x, y, &params.epsilon, params.p)
        - mu * coupling_sq
        + step_sq)
}
