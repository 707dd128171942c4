use super::StatVector;
use crate::error::{Error, Result};
use crate::method::{Calibration, Family, HypothesisResult, MethodSpec, TestResult};
use crate::numerics::dist::{quantile, upper_tail};
use crate::numerics::{equicoordinate_quantile, max_exceedance, QmcSettings, RngStream};

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Argument(format!("alpha must lie in (0,1), got {alpha}")))
    }
}

/// Per-hypothesis critical values from the joint distribution with each
/// hypothesis' own degrees of freedom, evaluated at the global null.
pub fn marginal_critical_values(
    stats: &StatVector,
    alpha: f64,
    settings: &QmcSettings,
    stream: &RngStream,
) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    let mut out: Vec<f64> = Vec::with_capacity(stats.len());
    for (k, df) in stats.df.iter().enumerate() {
        // identical df share one quantile
        if let Some(j) = stats.df[..k].iter().position(|d| d == df) {
            out.push(out[j]);
            continue;
        }
        out.push(equicoordinate_quantile(&stats.correlation, alpha, *df, settings, &stream.child(k as u64))?);
    }
    Ok(out)
}

/// Full analytic test: critical values, adjusted p-values and decisions.
pub fn analytic_test(
    stats: &StatVector,
    method: &MethodSpec,
    alpha: f64,
    settings: &QmcSettings,
    stream: &RngStream,
) -> Result<TestResult> {
    check_alpha(alpha)?;
    let crit: Vec<f64> = match (method.calibration, method.family) {
        (Calibration::Unadjusted, _) => stats.df.iter().map(|&df| quantile(1.0 - alpha, df)).collect(),
        (Calibration::Analytic, Family::Anova) => {
            let c = equicoordinate_quantile(&stats.correlation, alpha, stats.df[0], settings, &stream.child(0))?;
            vec![c; stats.len()]
        }
        (Calibration::Analytic, Family::Marginal) => marginal_critical_values(stats, alpha, settings, stream)?,
        _ => {
            return Err(Error::Unsupported(format!(
                "{} has no analytic calibration",
                method.name()
            )))
        }
    };
    let p_stream = stream.child(1 << 32);
    let mut hypotheses = Vec::with_capacity(stats.len());
    for k in 0..stats.len() {
        let z = stats.statistics[k];
        let df = stats.df[k];
        let p = match method.calibration {
            Calibration::Unadjusted => upper_tail(z, df),
            _ => max_exceedance(z, &stats.correlation, df, settings, &p_stream.child(k as u64))?,
        };
        hypotheses.push(HypothesisResult {
            population: stats.populations[k].clone(),
            estimate: stats.estimates[k],
            se: stats.se[k],
            statistic: z,
            critical_value: crit[k],
            adjusted_p: p,
            rejected: z > crit[k],
            df,
        });
    }
    Ok(TestResult {
        method: *method,
        alpha,
        hypotheses,
    })
}

/// Decisions only, by comparing adjusted p-values with `alpha`.
///
/// The univariate tail bounds the adjusted p-value from below and the
/// Bonferroni sum from above, so the multivariate integral is needed only
/// when `alpha` lies between the two.
pub fn analytic_decisions(
    stats: &StatVector,
    method: &MethodSpec,
    alpha: f64,
    settings: &QmcSettings,
    stream: &RngStream,
) -> Result<Vec<bool>> {
    check_alpha(alpha)?;
    let d = stats.len() as f64;
    let adjusted = match (method.calibration, method.family) {
        (Calibration::Unadjusted, _) => false,
        (Calibration::Analytic, Family::Anova | Family::Marginal) => true,
        _ => {
            return Err(Error::Unsupported(format!(
                "{} has no analytic calibration",
                method.name()
            )))
        }
    };
    let mut out = Vec::with_capacity(stats.len());
    for k in 0..stats.len() {
        let z = stats.statistics[k];
        let df = stats.df[k];
        let tail = upper_tail(z, df);
        let reject = if !adjusted {
            tail <= alpha
        } else if tail > alpha {
            false
        } else if d * tail <= alpha {
            true
        } else {
            max_exceedance(z, &stats.correlation, df, settings, &stream.child(k as u64))? <= alpha
        };
        out.push(reject);
    }
    Ok(out)
}
