//! Method taxonomy and the per-hypothesis results every procedure reports.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Which test statistic a method uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// Contrast of population means over a common residual variance.
    Anova,
    /// Contrast over population variances that include between-strata spread.
    Marginal,
    /// Marginal with James-Stein shrunk subgroup means.
    MarginalShrunk,
    /// Prevalence-weighted sum of within-stratum differences.
    Stratified,
}

/// How critical values are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Calibration {
    /// Multivariate normal or t quantiles.
    Analytic,
    /// Parametric bootstrap of the max statistic.
    Bootstrap,
    /// Univariate quantile per hypothesis, no multiplicity adjustment.
    Unadjusted,
}

/// Where the residual variance comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarianceMode {
    Known,
    /// Pooled within-cell estimate with `N - s` degrees of freedom.
    Pooled,
    /// Per-cell variances; only meaningful for the marginal family.
    Heterogeneous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MethodSpec {
    pub family: Family,
    pub calibration: Calibration,
    pub variance_mode: VarianceMode,
}

impl MethodSpec {
    pub fn new(family: Family, calibration: Calibration, variance_mode: VarianceMode) -> Result<Self> {
        use Calibration::*;
        use Family::*;
        match (family, calibration) {
            (MarginalShrunk, Analytic) | (MarginalShrunk, Unadjusted) => {
                return Err(Error::Unsupported(
                    "shrinkage is only calibrated by the bootstrap".into(),
                ))
            }
            (Stratified, Analytic) | (Stratified, Unadjusted) => {
                return Err(Error::Unsupported(
                    "the stratified estimator is only calibrated by the bootstrap".into(),
                ))
            }
            (Marginal, Unadjusted) => {
                return Err(Error::Unsupported("unadjusted tests use the anova statistic".into()))
            }
            _ => {}
        }
        if variance_mode == VarianceMode::Heterogeneous && family != Marginal {
            return Err(Error::Unsupported(
                "heterogeneous variances are only supported by the marginal family".into(),
            ));
        }
        Ok(Self {
            family,
            calibration,
            variance_mode,
        })
    }

    pub fn anova_t() -> Self {
        Self::new(Family::Anova, Calibration::Analytic, VarianceMode::Pooled).unwrap()
    }

    pub fn anova_boot() -> Self {
        Self::new(Family::Anova, Calibration::Bootstrap, VarianceMode::Pooled).unwrap()
    }

    pub fn marg_t() -> Self {
        Self::new(Family::Marginal, Calibration::Analytic, VarianceMode::Pooled).unwrap()
    }

    pub fn marg_boot() -> Self {
        Self::new(Family::Marginal, Calibration::Bootstrap, VarianceMode::Pooled).unwrap()
    }

    pub fn marg_shr_boot() -> Self {
        Self::new(Family::MarginalShrunk, Calibration::Bootstrap, VarianceMode::Pooled).unwrap()
    }

    pub fn strat_boot() -> Self {
        Self::new(Family::Stratified, Calibration::Bootstrap, VarianceMode::Pooled).unwrap()
    }

    pub fn unadjusted() -> Self {
        Self::new(Family::Anova, Calibration::Unadjusted, VarianceMode::Pooled).unwrap()
    }

    /// The six adjusted methods compared in the simulation tables.
    pub fn table_methods() -> Vec<Self> {
        vec![
            Self::anova_t(),
            Self::anova_boot(),
            Self::marg_t(),
            Self::marg_boot(),
            Self::marg_shr_boot(),
            Self::strat_boot(),
        ]
    }

    pub fn with_variance_mode(self, mode: VarianceMode) -> Result<Self> {
        Self::new(self.family, self.calibration, mode)
    }

    pub fn is_bootstrap(&self) -> bool {
        self.calibration == Calibration::Bootstrap
    }

    /// Short name, e.g. `anova+t` or `marg+shr+boot`.
    pub fn name(&self) -> String {
        let base = match (self.family, self.calibration) {
            (_, Calibration::Unadjusted) => return "unadj".into(),
            (Family::Anova, Calibration::Analytic) => "anova+t",
            (Family::Anova, _) => "anova+boot",
            (Family::Marginal, Calibration::Analytic) => "marg+t",
            (Family::Marginal, _) => "marg+boot",
            (Family::MarginalShrunk, _) => "marg+shr+boot",
            (Family::Stratified, _) => "strat+boot",
        };
        match self.variance_mode {
            VarianceMode::Pooled => base.to_string(),
            VarianceMode::Known => format!("{base}+known"),
            VarianceMode::Heterogeneous => format!("{base}+het"),
        }
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for MethodSpec {
    type Err = Error;

    /// Accepts the short names plus optional `+known` / `+het` suffixes.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (base, mode) = if let Some(b) = s.strip_suffix("+known") {
            (b, VarianceMode::Known)
        } else if let Some(b) = s.strip_suffix("+het") {
            (b, VarianceMode::Heterogeneous)
        } else {
            (s.as_str(), VarianceMode::Pooled)
        };
        let (family, calibration) = match base {
            "anova+t" => (Family::Anova, Calibration::Analytic),
            "anova+boot" => (Family::Anova, Calibration::Bootstrap),
            "marg+t" => (Family::Marginal, Calibration::Analytic),
            "marg+boot" => (Family::Marginal, Calibration::Bootstrap),
            "marg+shr+boot" => (Family::MarginalShrunk, Calibration::Bootstrap),
            "strat+boot" => (Family::Stratified, Calibration::Bootstrap),
            "unadj" => (Family::Anova, Calibration::Unadjusted),
            other => return Err(Error::Config(format!("unknown method {other:?}"))),
        };
        Self::new(family, calibration, mode)
    }
}

/// Outcome for one hypothesis `H_I`.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisResult {
    pub population: String,
    pub estimate: f64,
    pub se: f64,
    pub statistic: f64,
    pub critical_value: f64,
    pub adjusted_p: f64,
    pub rejected: bool,
    pub df: Option<f64>,
}

impl HypothesisResult {
    /// One-sided simultaneous lower confidence bound.
    pub fn lower_bound(&self) -> f64 {
        self.estimate - self.critical_value * self.se
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub method: MethodSpec,
    pub alpha: f64,
    pub hypotheses: Vec<HypothesisResult>,
}

impl TestResult {
    pub fn any_rejected(&self) -> bool {
        self.hypotheses.iter().any(|h| h.rejected)
    }

    pub fn rejections(&self) -> usize {
        self.hypotheses.iter().filter(|h| h.rejected).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for m in MethodSpec::table_methods()
            .into_iter()
            .chain([MethodSpec::unadjusted()])
        {
            assert_eq!(m.name().parse::<MethodSpec>().unwrap(), m);
        }
        let het: MethodSpec = "marg+t+het".parse().unwrap();
        assert_eq!(het.variance_mode, VarianceMode::Heterogeneous);
        assert_eq!(het.name(), "marg+t+het");
    }

    #[test]
    fn unsupported_pairings_are_rejected() {
        assert!(MethodSpec::new(Family::MarginalShrunk, Calibration::Analytic, VarianceMode::Pooled).is_err());
        assert!(MethodSpec::new(Family::Stratified, Calibration::Analytic, VarianceMode::Known).is_err());
        assert!(MethodSpec::new(Family::Anova, Calibration::Analytic, VarianceMode::Heterogeneous).is_err());
        assert!("anova+z".parse::<MethodSpec>().is_err());
    }
}
