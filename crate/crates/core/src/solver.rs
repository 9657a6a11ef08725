//! Iterative thresholding solvers for `min ‖Ax − b‖² + λ R(x)`.
//!
//! Three coordinate-wise thresholding rules are provided, selected by
//! [`Algorithm`]: a reweighted rule driven by the smoothed penalty from
//! [`crate::penalty`], plain soft thresholding (ℓ1), and the closed-form
//! half thresholding rule (ℓ1/2). Every iteration takes the same gradient
//! step `B(x) = x + μ Aᵀ(b − Ax)` and then thresholds each coordinate.
//!
//! The regularization weight λ is either held fixed or chosen per
//! iteration from the magnitude profile of `B(x)` so that roughly `r`
//! coordinates survive the threshold, where `r` is the sparsity target.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{kth_largest_magnitude, norm2, DenseMatrix};
use crate::penalty::penalty_sum_raw;
use crate::threshold::{
    half_threshold, half_weight_for_boundary, reweighted_soft_threshold, soft_threshold,
};

/// Thresholding rule applied after each gradient step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Reweighted soft thresholding with per-coordinate smoothing offsets.
    It,
    /// Plain soft thresholding (ℓ1 penalty).
    Soft,
    /// Closed-form half thresholding (ℓ1/2 penalty).
    Half,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::It, Algorithm::Soft, Algorithm::Half];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::It => "it",
            Algorithm::Soft => "soft",
            Algorithm::Half => "half",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "it" => Ok(Algorithm::It),
            "soft" => Ok(Algorithm::Soft),
            "half" => Ok(Algorithm::Half),
            other => Err(Error::contract(format!(
                "unknown algorithm '{other}' (expected it, soft, or half)"
            ))),
        }
    }
}

/// Why the solve loop stopped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Termination {
    /// Relative step size fell below the tolerance.
    Converged,
    /// Iteration budget exhausted before the step test fired.
    MaxIterations,
    /// The iteration could not proceed (zero operator, divergence).
    DegenerateInput(String),
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIterations => "max_iterations",
            Termination::DegenerateInput(_) => "degenerate_input",
        }
    }
}

/// Per-iteration diagnostics recorded by [`solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Objective value `‖Ax − b‖² + λ R(x)` at the iterate produced by this
    /// iteration, evaluated with this iteration's λ (and smoothing offsets).
    pub objective: f64,
    /// Euclidean norm of the update `‖x_new − x_old‖`.
    pub step_norm: f64,
    /// Regularization weight used for this update.
    pub lambda: f64,
    /// Number of nonzero coordinates after the update.
    pub support_size: usize,
}

/// Output of [`solve`].
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub solution: Vec<f64>,
    /// Number of completed iterations (equals `trace.len()`).
    pub iterations: usize,
    pub termination: Termination,
    pub trace: Vec<IterationRecord>,
    /// Step size actually used, `(1 − η) / ‖A‖²`.
    pub mu: f64,
}

/// Solver parameters. Construct with [`SolverConfig::new`] and override
/// fields as needed; [`solve`] validates before running.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    /// Sparsity target `r` driving the adaptive weight rules.
    pub sparsity_r: usize,
    /// Penalty exponent in `(0, 1)`; used by [`Algorithm::It`] only.
    pub p: f64,
    /// Step-size margin: `μ = (1 − η) / ‖A‖²`.
    pub eta: f64,
    /// Relative step tolerance for convergence.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Factor on the gradient magnitude in the smoothing-offset rule.
    pub epsilon_scale: f64,
    /// Lower bound keeping the smoothing offsets strictly positive.
    pub epsilon_floor: f64,
    /// When set, disables the adaptive weight rule and uses this λ.
    pub fixed_lambda: Option<f64>,
    /// When set, uses this uniform smoothing offset instead of the
    /// gradient-driven rule ([`Algorithm::It`] only).
    pub fixed_epsilon: Option<f64>,
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm, sparsity_r: usize) -> Self {
        SolverConfig {
            algorithm,
            sparsity_r,
            p: 0.7,
            eta: 0.01,
            tolerance: 1e-8,
            max_iterations: 5000,
            epsilon_scale: 0.7,
            epsilon_floor: 1e-3,
            fixed_lambda: None,
            fixed_epsilon: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p > 0.0 && self.p < 1.0) {
            return Err(Error::contract(format!(
                "exponent p must lie in (0, 1), got {}",
                self.p
            )));
        }
        if !(self.eta.is_finite() && self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::contract(format!(
                "step margin eta must lie in (0, 1), got {}",
                self.eta
            )));
        }
        if self.sparsity_r == 0 {
            return Err(Error::contract("sparsity target r must be at least 1"));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::contract(format!(
                "tolerance must be positive and finite, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::contract("max_iterations must be at least 1"));
        }
        if !(self.epsilon_scale.is_finite() && self.epsilon_scale > 0.0) {
            return Err(Error::contract(format!(
                "epsilon scale must be positive and finite, got {}",
                self.epsilon_scale
            )));
        }
        if !(self.epsilon_floor.is_finite() && self.epsilon_floor > 0.0) {
            return Err(Error::contract(format!(
                "epsilon floor must be positive and finite, got {}",
                self.epsilon_floor
            )));
        }
        if let Some(l) = self.fixed_lambda {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::contract(format!(
                    "fixed lambda must be positive and finite, got {l}"
                )));
            }
        }
        if let Some(e) = self.fixed_epsilon {
            if !(e.is_finite() && e > 0.0) {
                return Err(Error::contract(format!(
                    "fixed epsilon must be positive and finite, got {e}"
                )));
            }
        }
        Ok(())
    }
}

/// One gradient step on the data term: `B(x) = x + μ Aᵀ(b − Ax)`.
pub fn gradient_step(a: &DenseMatrix, b: &[f64], x: &[f64], mu: f64) -> Result<Vec<f64>> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::contract(format!(
            "step size mu must be positive and finite, got {mu}"
        )));
    }
    let g = scaled_residual_gradient(a, b, x, mu)?;
    Ok(x.iter().zip(&g).map(|(xi, gi)| xi + gi).collect())
}

/// Gradient-driven smoothing offsets: `ε_i = max(scale · |[μ Aᵀ(b − Ax)]_i|, floor)`.
pub fn adaptive_epsilon(
    a: &DenseMatrix,
    b: &[f64],
    x: &[f64],
    mu: f64,
    scale: f64,
    floor: f64,
) -> Result<Vec<f64>> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::contract(format!(
            "step size mu must be positive and finite, got {mu}"
        )));
    }
    if !(scale.is_finite() && scale > 0.0) || !(floor.is_finite() && floor > 0.0) {
        return Err(Error::contract(
            "epsilon scale and floor must be positive and finite",
        ));
    }
    let g = scaled_residual_gradient(a, b, x, mu)?;
    Ok(g.iter().map(|gi| (scale * gi.abs()).max(floor)).collect())
}

/// Adaptive regularization weight for the reweighted rule:
/// `λ = 2 t_b (t_x + t_ε)^(1−p) / μ`, where `t_v` is the `(r+1)`-th largest
/// magnitude of `v`. The three rankings are taken independently.
pub fn adaptive_lambda(
    b_mu: &[f64],
    x_prev: &[f64],
    epsilon: &[f64],
    mu: f64,
    p: f64,
    r: usize,
) -> Result<f64> {
    if b_mu.len() != x_prev.len() || b_mu.len() != epsilon.len() {
        return Err(Error::contract(format!(
            "mismatched lengths: b_mu has {}, x_prev has {}, epsilon has {}",
            b_mu.len(),
            x_prev.len(),
            epsilon.len()
        )));
    }
    if r + 1 > b_mu.len() {
        return Err(Error::contract(format!(
            "adaptive weight needs r + 1 <= n, got r = {r} with n = {}",
            b_mu.len()
        )));
    }
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::contract(format!(
            "step size mu must be positive and finite, got {mu}"
        )));
    }
    if !(p.is_finite() && p > 0.0 && p < 1.0) {
        return Err(Error::contract(format!(
            "exponent p must lie in (0, 1), got {p}"
        )));
    }
    let t_b = kth_largest_magnitude(b_mu, r + 1);
    let t_x = kth_largest_magnitude(x_prev, r + 1);
    let t_e = kth_largest_magnitude(epsilon, r + 1);
    Ok(2.0 * t_b * (t_x + t_e).powf(1.0 - p) / mu)
}

/// Relative reconstruction error `‖x − x0‖ / ‖x0‖`.
pub fn relative_error(x: &[f64], x0: &[f64]) -> Result<f64> {
    if x.len() != x0.len() {
        return Err(Error::contract(format!(
            "length mismatch: estimate has {}, ground truth has {}",
            x.len(),
            x0.len()
        )));
    }
    let denom = norm2(x0);
    if denom == 0.0 {
        return Err(Error::contract(
            "relative error is undefined for a zero ground truth",
        ));
    }
    let mut diff_sq = 0.0;
    for (xi, ti) in x.iter().zip(x0) {
        let d = xi - ti;
        diff_sq += d * d;
    }
    Ok(diff_sq.sqrt() / denom)
}

fn soft_lambda(b_mu: &[f64], mu: f64, r: usize) -> f64 {
    2.0 * kth_largest_magnitude(b_mu, r + 1) / mu
}

fn half_lambda(b_mu: &[f64], mu: f64, r: usize) -> f64 {
    half_weight_for_boundary(kth_largest_magnitude(b_mu, r + 1)) / mu
}

/// `μ Aᵀ(b − Ax)`, shared by the gradient step and the offset rule.
fn scaled_residual_gradient(
    a: &DenseMatrix,
    b: &[f64],
    x: &[f64],
    mu: f64,
) -> Result<Vec<f64>> {
    let ax = a.matvec(x)?;
    if b.len() != ax.len() {
        return Err(Error::contract(format!(
            "right-hand side has length {}, expected {}",
            b.len(),
            a.rows()
        )));
    }
    let residual: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut g = a.matvec_transpose(&residual)?;
    for gi in g.iter_mut() {
        *gi *= mu;
    }
    Ok(g)
}

/// Runs the selected thresholding iteration from `x = 0` until the relative
/// step falls below the tolerance or the iteration budget runs out.
pub fn solve(a: &DenseMatrix, b: &[f64], config: &SolverConfig) -> Result<SolveResult> {
    config.validate()?;
    if b.len() != a.rows() {
        return Err(Error::contract(format!(
            "right-hand side has length {}, expected {}",
            b.len(),
            a.rows()
        )));
    }
    if !b.iter().all(|v| v.is_finite()) {
        return Err(Error::contract(
            "right-hand side contains non-finite values",
        ));
    }
    let n = a.cols();
    if config.fixed_lambda.is_none() && config.sparsity_r + 1 > n {
        return Err(Error::contract(format!(
            "adaptive weight needs r + 1 <= n, got r = {} with n = {n}",
            config.sparsity_r
        )));
    }

    let sigma = a.spectral_norm();
    if sigma == 0.0 {
        return Ok(SolveResult {
            solution: vec![0.0; n],
            iterations: 0,
            termination: Termination::DegenerateInput("operator norm is zero".into()),
            trace: Vec::new(),
            mu: 0.0,
        });
    }
    let mu = (1.0 - config.eta) / (sigma * sigma);

    let fixed_eps: Option<Vec<f64>> = config.fixed_epsilon.map(|e| vec![e; n]);
    let mut x = vec![0.0; n];
    let mut trace: Vec<IterationRecord> = Vec::new();
    let mut pending_reg: Option<f64> = None;
    let mut eps_buf: Vec<f64> = Vec::new();
    let mut termination = Termination::MaxIterations;

    for _ in 0..config.max_iterations {
        let ax = a.matvec(&x)?;
        let mut residual = ax;
        let mut res_sq = 0.0;
        for (ri, bi) in residual.iter_mut().zip(b) {
            *ri = bi - *ri;
            res_sq += *ri * *ri;
        }
        if let (Some(reg), Some(rec)) = (pending_reg.take(), trace.last_mut()) {
            rec.objective = res_sq + reg;
        }

        let mut g = a.matvec_transpose(&residual)?;
        for gi in g.iter_mut() {
            *gi *= mu;
        }
        let b_mu: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi + gi).collect();
        if !b_mu.iter().all(|v| v.is_finite()) {
            termination =
                Termination::DegenerateInput("gradient step produced non-finite values".into());
            break;
        }

        let eps: Option<&[f64]> = match config.algorithm {
            Algorithm::It => Some(match &fixed_eps {
                Some(v) => v.as_slice(),
                None => {
                    eps_buf.clear();
                    eps_buf.extend(
                        g.iter()
                            .map(|gi| (config.epsilon_scale * gi.abs()).max(config.epsilon_floor)),
                    );
                    eps_buf.as_slice()
                }
            }),
            Algorithm::Soft | Algorithm::Half => None,
        };

        let lambda = match config.fixed_lambda {
            Some(l) => l,
            None => match config.algorithm {
                Algorithm::It => adaptive_lambda(
                    &b_mu,
                    &x,
                    eps.expect("offsets are always built for the reweighted rule"),
                    mu,
                    config.p,
                    config.sparsity_r,
                )?,
                Algorithm::Soft => soft_lambda(&b_mu, mu, config.sparsity_r),
                Algorithm::Half => half_lambda(&b_mu, mu, config.sparsity_r),
            },
        };
        if !lambda.is_finite() {
            termination =
                Termination::DegenerateInput("regularization weight diverged".into());
            break;
        }

        let mut x_new = vec![0.0; n];
        match config.algorithm {
            Algorithm::It => {
                let eps = eps.expect("offsets are always built for the reweighted rule");
                for i in 0..n {
                    x_new[i] =
                        reweighted_soft_threshold(b_mu[i], x[i], lambda, mu, config.p, eps[i]);
                }
            }
            Algorithm::Soft => {
                for i in 0..n {
                    x_new[i] = soft_threshold(b_mu[i], lambda * mu);
                }
            }
            Algorithm::Half => {
                for i in 0..n {
                    x_new[i] = half_threshold(b_mu[i], lambda * mu);
                }
            }
        }
        if !x_new.iter().all(|v| v.is_finite()) {
            termination = Termination::DegenerateInput("iterate diverged".into());
            break;
        }

        let prev_norm = norm2(&x);
        let mut step_sq = 0.0;
        for (xn, xo) in x_new.iter().zip(&x) {
            let d = xn - xo;
            step_sq += d * d;
        }
        let step_norm = step_sq.sqrt();
        let support_size = x_new.iter().filter(|v| **v != 0.0).count();

        let reg = lambda
            * match config.algorithm {
                Algorithm::It => penalty_sum_raw(
                    &x_new,
                    eps.expect("offsets are always built for the reweighted rule"),
                    config.p,
                ),
                Algorithm::Soft => x_new.iter().map(|v| v.abs()).sum::<f64>(),
                Algorithm::Half => x_new.iter().map(|v| v.abs().sqrt()).sum::<f64>(),
            };
        trace.push(IterationRecord {
            objective: f64::NAN,
            step_norm,
            lambda,
            support_size,
        });
        pending_reg = Some(reg);
        x = x_new;

        let converged = if prev_norm == 0.0 {
            step_norm == 0.0
        } else {
            step_norm <= config.tolerance * prev_norm
        };
        if converged {
            termination = Termination::Converged;
            break;
        }
    }

    if pending_reg.is_some() {
        let ax = a.matvec(&x)?;
        let mut res_sq = 0.0;
        for (ai, bi) in ax.iter().zip(b) {
            let d = bi - ai;
            res_sq += d * d;
        }
        if let (Some(reg), Some(rec)) = (pending_reg.take(), trace.last_mut()) {
            rec.objective = res_sq + reg;
        }
    }

    Ok(SolveResult {
        iterations: trace.len(),
        solution: x,
        termination,
        trace,
        mu,
    })
}
