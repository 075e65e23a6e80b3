//! Kernel-smoothed importance weights for scalar continuous actions.

use crate::error::{OpeError, Result};
use crate::mdp::Policy;

/// `w̄ = ∫ π(a|s)/π_b(a_t|s) · (1/h) K((a - a_t)/h) da` with a Gaussian kernel.
///
/// For a Gaussian policy the integral is a Gaussian convolution, so
/// `w̄ = N(a_t; μ(s), σ(s)² + h²) / π_b(a_t|s)`.
pub fn smoothed_importance_weight(
    policy: &Policy,
    state: usize,
    logged_action: f64,
    logged_propensity: f64,
    bandwidth: f64,
) -> Result<f64> {
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(OpeError::param(format!("bandwidth must be positive, got {bandwidth}")));
    }
    if !(logged_propensity > 0.0) {
        return Err(OpeError::param(format!(
            "propensity must be positive, got {logged_propensity}"
        )));
    }
    let (mean, std) = policy
        .gaussian_params(state)
        .ok_or_else(|| OpeError::shape("kernel-smoothed weights need a Gaussian policy"))?;
    let var = std * std + bandwidth * bandwidth;
    let z = logged_action - mean;
    let density = (-0.5 * z * z / var).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
    Ok(density / logged_propensity)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_value() {
        let pi = Policy::gaussian(vec![0.0], vec![1.0]).unwrap();
        let w = smoothed_importance_weight(&pi, 0, 0.0, 0.5, 1.0).unwrap();
        assert!((w - 1.0 / (4.0 * std::f64::consts::PI).sqrt() / 0.5).abs() < 1e-15);
        assert!((w - 0.56419).abs() < 1e-5);
    }

    #[test]
    fn small_bandwidth_approaches_plain_ratio() {
        let pi = Policy::gaussian(vec![0.3], vec![0.8]).unwrap();
        let w = smoothed_importance_weight(&pi, 0, 1.1, 0.2, 1e-4).unwrap();
        let plain = pi.density(0, 1.1).unwrap() / 0.2;
        assert!(((w - plain) / plain).abs() < 1e-4);
    }

    #[test]
    fn rejects_bad_bandwidth() {
        let pi = Policy::gaussian(vec![0.0], vec![1.0]).unwrap();
        assert!(smoothed_importance_weight(&pi, 0, 0.0, 0.5, 0.0).is_err());
        assert!(smoothed_importance_weight(&pi, 0, 0.0, 0.5, -1.0).is_err());
    }
}
