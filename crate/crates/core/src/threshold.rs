//! Scalar thresholding operators.
//!
//! Each operator returns the global minimizer of a one-dimensional problem
//! `(alpha - beta)^2 + penalty(alpha)`; the solvers apply them coordinate-wise
//! after a gradient step. All three are pure scalar functions.

use std::f64::consts::FRAC_PI_3;

/// Minimizer of `(alpha - beta)^2 + lambda |alpha|`:
/// `sign(beta) * max(|beta| - lambda/2, 0)`.
pub fn soft_threshold(beta: f64, lambda: f64) -> f64 {
    debug_assert!(lambda >= 0.0);
    let shrunk = beta.abs() - lambda / 2.0;
    if shrunk > 0.0 {
        shrunk.copysign(beta)
    } else {
        0.0
    }
}

/// The solver's per-coordinate update: a soft threshold whose weight is
/// rescaled by the previous iterate, `lambda*mu / (|x_prev_i| + eps_i)^(1-p)`.
///
/// Coordinates that were large last iteration get a weaker threshold, which
/// is what steers the iteration toward sparse solutions without the uniform
/// shrinkage bias of the plain soft operator.
pub fn reweighted_soft_threshold(
    b_mu_i: f64,
    x_prev_i: f64,
    lambda: f64,
    mu: f64,
    p: f64,
    epsilon_i: f64,
) -> f64 {
    debug_assert!(lambda >= 0.0 && mu > 0.0 && epsilon_i > 0.0);
    debug_assert!(p > 0.0 && p < 1.0);
    let weight = lambda * mu / (x_prev_i.abs() + epsilon_i).powf(1.0 - p);
    soft_threshold(b_mu_i, weight)
}

/// Magnitude at or below which `half_threshold(beta, lambda)` returns 0:
/// `(54^(1/3) / 4) * lambda^(2/3)`.
pub fn half_threshold_boundary(lambda: f64) -> f64 {
    debug_assert!(lambda >= 0.0);
    let c = 54f64.cbrt() / 4.0;
    let l3 = lambda.cbrt();
    c * l3 * l3
}

/// The weight whose dead-zone boundary sits exactly at `tau`:
/// the inverse of [`half_threshold_boundary`], `(sqrt(96)/9) * tau^(3/2)`.
pub fn half_weight_for_boundary(tau: f64) -> f64 {
    debug_assert!(tau >= 0.0);
    (96f64.sqrt() / 9.0) * tau * tau.sqrt()
}

/// Global minimizer of `(alpha - beta)^2 + lambda |alpha|^(1/2)`.
///
/// Closed form: for `|beta|` above the dead-zone boundary the stationary
/// condition reduces to a depressed cubic in `sqrt(|alpha|)` whose largest
/// root gives `(2/3)|beta| (1 + cos(2*pi/3 - (2/3) acos((lambda/8)(|beta|/3)^(-3/2))))`;
/// at or below the boundary (where 0 ties or wins) the result is 0.
pub fn half_threshold(beta: f64, lambda: f64) -> f64 {
    debug_assert!(lambda >= 0.0);
    let mag = beta.abs();
    if mag <= half_threshold_boundary(lambda) {
        return 0.0;
    }
    let phi = ((lambda / 8.0) * (mag / 3.0).powf(-1.5)).acos();
    let value = (2.0 / 3.0) * mag * (1.0 + (2.0 * FRAC_PI_3 - 2.0 * phi / 3.0).cos());
    value.copysign(beta)
}
