//! Simultaneous one-sided lower confidence bounds from a calibrated test.

use crate::error::{Error, Result};
use crate::method::{Calibration, MethodSpec, TestResult};

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBound {
    pub population: String,
    pub estimate: f64,
    pub se: f64,
    pub critical_value: f64,
    pub lower: f64,
}

/// `[theta_hat_I - c_I SE_I, inf)` for every population.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceSet {
    pub method: MethodSpec,
    pub alpha: f64,
    pub bounds: Vec<LowerBound>,
}

impl ConfidenceSet {
    /// Whether every true effect lies inside its interval.
    pub fn covers(&self, true_effects: &[f64]) -> bool {
        self.bounds.iter().zip(true_effects).all(|(b, &theta)| theta >= b.lower)
    }

    /// Populations whose interval excludes zero.
    pub fn excludes_zero(&self) -> Vec<bool> {
        self.bounds.iter().map(|b| b.lower > 0.0).collect()
    }
}

/// Bounds that reuse the critical values and standard errors of the test, so
/// `H_I` is rejected exactly when the bound is positive.
pub fn simultaneous_lower_bounds(result: &TestResult) -> Result<ConfidenceSet> {
    if result.method.calibration == Calibration::Unadjusted {
        return Err(Error::Unsupported(
            "unadjusted critical values do not give simultaneous bounds".into(),
        ));
    }
    let mut bounds = Vec::with_capacity(result.hypotheses.len());
    for h in &result.hypotheses {
        if !(h.se > 0.0 && h.se.is_finite()) {
            return Err(Error::Unsupported(format!(
                "population {} has no usable standard error",
                h.population
            )));
        }
        let lower = h.estimate - h.critical_value * h.se;
        if !lower.is_finite() {
            return Err(Error::Numeric(format!("bound for {} is not finite", h.population)));
        }
        bounds.push(LowerBound {
            population: h.population.clone(),
            estimate: h.estimate,
            se: h.se,
            critical_value: h.critical_value,
            lower,
        });
    }
    Ok(ConfidenceSet {
        method: result.method,
        alpha: result.alpha,
        bounds,
    })
}
