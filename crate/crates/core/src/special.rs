//! Euler Gamma function and the fractional-Laplacian normalization constant.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Euler Gamma function for positive arguments.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("gamma_fn requires a finite x > 0, got {x}")));
    }
    Ok(statrs::function::gamma::gamma(x))
}

/// Kernel constant `C_{N,s} = s 4^s Gamma((2s+N)/2) / (pi^{N/2} Gamma(1-s))`
/// of the integral fractional Laplacian in dimension `dim`.
pub fn c_ns(dim: usize, s: f64) -> Result<f64> {
    if !(1..=2).contains(&dim) {
        return Err(Error::Parameter(format!("dimension must be 1 or 2, got {dim}")));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Parameter(format!("s must lie in (0,1), got {s}")));
    }
    let n = dim as f64;
    let num = s * 4f64.powf(s) * gamma_fn(s + 0.5 * n)?;
    let den = PI.powf(0.5 * n) * gamma_fn(1.0 - s)?;
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classical_values() {
        assert!((gamma_fn(0.5).unwrap() - PI.sqrt()).abs() < 1e-14);
        assert!((gamma_fn(1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!((gamma_fn(5.0).unwrap() - 24.0).abs() < 1e-12);
    }

    #[test]
    fn nonpositive_argument_is_a_domain_error() {
        assert!(matches!(gamma_fn(0.0), Err(Error::Domain(_))));
        assert!(matches!(gamma_fn(-1.5), Err(Error::Domain(_))));
        assert!(matches!(gamma_fn(f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn half_exponent_constants() {
        assert!((c_ns(2, 0.5).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((c_ns(1, 0.5).unwrap() - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn constant_vanishes_near_one() {
        // 1/Gamma(1-s) ~ (1-s) as s -> 1, so C_{2,s} ~ 4 (1-s) / pi
        let c = c_ns(2, 0.999).unwrap();
        assert!(c < 0.01 * c_ns(2, 0.5).unwrap());
        assert!((c / (0.001 * 4.0 / PI) - 1.0).abs() < 0.01);
    }

    #[test]
    fn out_of_range_exponent() {
        assert!(matches!(c_ns(2, 1.2), Err(Error::Parameter(_))));
        assert!(matches!(c_ns(2, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(c_ns(3, 0.5), Err(Error::Parameter(_))));
    }
}
