//! Univariate normal and t distribution functions.

use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf;

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

/// Standard normal CDF.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * erf::erfc(-x * FRAC_1_SQRT_2)
}

#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal quantile; maps 0 and 1 to the infinities.
#[inline]
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    -SQRT_2 * erf::erfc_inv(2.0 * p)
}

/// CDF of a central t distribution.
pub fn t_cdf(x: f64, df: f64) -> f64 {
    if df.is_infinite() {
        return normal_cdf(x);
    }
    StudentsT::new(0.0, 1.0, df)
        .map(|t| t.cdf(x))
        .unwrap_or_else(|_| normal_cdf(x))
}

/// Quantile of a central t distribution; `df = inf` gives the normal quantile.
pub fn t_quantile(p: f64, df: f64) -> f64 {
    if df.is_infinite() {
        return normal_quantile(p);
    }
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    StudentsT::new(0.0, 1.0, df)
        .map(|t| t.inverse_cdf(p))
        .unwrap_or_else(|_| normal_quantile(p))
}

/// Upper-tail probability of a normal (df absent) or t variable.
pub fn upper_tail(x: f64, df: Option<f64>) -> f64 {
    match df {
        None => normal_cdf(-x),
        Some(df) => 1.0 - t_cdf(x, df),
    }
}

pub fn quantile(p: f64, df: Option<f64>) -> f64 {
    match df {
        None => normal_quantile(p),
        Some(df) => t_quantile(p, df),
    }
}
