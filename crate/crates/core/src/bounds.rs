//! Closed-form approximation ratios.
//!
//! `bell` is the generalized Bell number at `alpha`, `rho` the work ratio
//! `w_max / w_min`.

use crate::error::Result;
use crate::oracle::bell_tilde;

const BELL_TOL: f64 = 1e-12;

pub fn bell(alpha: f64) -> Result<f64> {
    Ok(bell_tilde::<f64>(alpha, BELL_TOL)?.value)
}

/// `(1 + eps)^alpha * B`, the weakest of the stated single-processor ratios.
pub fn single(alpha: f64, eps: f64) -> Result<f64> {
    Ok((1.0 + eps).powf(alpha) * bell(alpha)?)
}

/// `(1 + eps)^(alpha - 1) * B`.
pub fn single_tight(alpha: f64, eps: f64) -> Result<f64> {
    Ok((1.0 + eps).powf(alpha - 1.0) * bell(alpha)?)
}

/// `(1 + eps) * B`.
pub fn single_linear(alpha: f64, eps: f64) -> Result<f64> {
    Ok((1.0 + eps) * bell(alpha)?)
}

/// `B * ((1 + eps)(1 + rho))^alpha` for fully heterogeneous processors.
pub fn heterogeneous(alpha: f64, eps: f64, rho: f64) -> Result<f64> {
    Ok(bell(alpha)? * ((1.0 + eps) * (1.0 + rho)).powf(alpha))
}

/// `B * (2(1 + eps))^alpha`: the heterogeneous ratio when each processor sees equal works.
pub fn equal_work(alpha: f64, eps: f64) -> Result<f64> {
    heterogeneous(alpha, eps, 1.0)
}

/// `(1 + rho)^alpha`: non-preemptive energy over the preemptive optimum on one processor.
pub fn preemption_gap(alpha: f64, rho: f64) -> f64 {
    (1.0 + rho).powf(alpha)
}

/// `2^(alpha - 1) (1 + eps)^alpha B`: earlier single-processor rounding result.
pub fn prior_single_rounding(alpha: f64, eps: f64) -> Result<f64> {
    Ok(2f64.powf(alpha - 1.0) * (1.0 + eps).powf(alpha) * bell(alpha)?)
}

/// `(12 (1 + eps))^(alpha - 1)`: earlier single-processor constant-factor result.
pub fn prior_single_constant(alpha: f64, eps: f64) -> f64 {
    (12.0 * (1.0 + eps)).powf(alpha - 1.0)
}

/// `(5/2)^(alpha - 1) B ((1 + eps)(1 + rho))^alpha`: earlier homogeneous result.
pub fn prior_homogeneous(alpha: f64, eps: f64, rho: f64) -> Result<f64> {
    Ok(2.5f64.powf(alpha - 1.0) * heterogeneous(alpha, eps, rho)?)
}

/// `(5/2)^(alpha - 1) B ((1 + eps)(1 + rho) rho)^alpha`: earlier homogeneous result with
/// processor-dependent works.
pub fn prior_homogeneous_works(alpha: f64, eps: f64, rho: f64) -> Result<f64> {
    Ok(2.5f64.powf(alpha - 1.0) * bell(alpha)? * ((1.0 + eps) * (1.0 + rho) * rho).powf(alpha))
}

/// `2 (1 + eps)^alpha 5^(alpha - 1) B`: earlier equal-work result.
pub fn prior_equal_work(alpha: f64, eps: f64) -> Result<f64> {
    Ok(2.0 * (1.0 + eps).powf(alpha) * 5f64.powf(alpha - 1.0) * bell(alpha)?)
}
