use super::bivariate::bivariate_normal_cdf;
use super::correlation::CorrelationMatrix;
use super::dist::quantile;
use super::qmc::{mv_normal_prob, mv_prob, FixedRule, Integrand, QmcSettings};
use super::rng::RngStream;
use crate::error::{Error, Result};

const MAX_EXPANSIONS: usize = 50;
const MAX_BISECTIONS: usize = 200;
const WIDTH_TOL: f64 = 1e-10;

/// Equicoordinate quantile with the point set it was solved on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileResult {
    pub value: f64,
    /// Error estimate of the CDF at `value`.
    pub error_estimate: f64,
    pub points_used: usize,
}

/// The `c` with `P(max_i X_i > c) = alpha` for `X` multivariate normal
/// (`df` absent) or t with correlation `corr`.
pub fn equicoordinate_quantile(
    corr: &CorrelationMatrix,
    alpha: f64,
    df: Option<f64>,
    settings: &QmcSettings,
    stream: &RngStream,
) -> Result<f64> {
    equicoordinate_quantile_detailed(corr, alpha, df, settings, stream).map(|q| q.value)
}

pub fn equicoordinate_quantile_detailed(
    corr: &CorrelationMatrix,
    alpha: f64,
    df: Option<f64>,
    settings: &QmcSettings,
    stream: &RngStream,
) -> Result<QuantileResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Argument(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if let Some(df) = df {
        if !(df > 0.0) {
            return Err(Error::Argument(format!("degrees of freedom must be positive, got {df}")));
        }
    }
    let d = corr.dim();
    if d == 1 {
        return Ok(QuantileResult {
            value: quantile(1.0 - alpha, df),
            error_estimate: 0.0,
            points_used: 0,
        });
    }
    let mut lo = quantile(1.0 - alpha, df);
    let mut hi = quantile(1.0 - alpha / d as f64, df);
    if d == 2 && df.is_none() {
        let r = corr.get(0, 1);
        let value = bisect(lo, hi, |c| 1.0 - bivariate_normal_cdf(c, c, r) - alpha);
        return Ok(QuantileResult {
            value,
            error_estimate: 0.0,
            points_used: 0,
        });
    }

    // One point set for the whole search; its size is chosen at the
    // Bonferroni end of the bracket.
    let integrand = Integrand::prepare(&vec![hi; d], corr, df);
    let mut rng = stream.rng();
    let (_, shifts, points) = integrand.adaptive(&vec![hi; d], settings, &mut rng);
    let rule = FixedRule::new(integrand, shifts, points);
    let excess = |c: f64| 1.0 - rule.eval(&vec![c; d]).value - alpha;

    let mut g_lo = excess(lo);
    let mut g_hi = excess(hi);
    let mut expansions = 0;
    while !(g_lo >= 0.0 && g_hi <= 0.0) {
        if expansions == MAX_EXPANSIONS {
            return Err(Error::Numeric(format!(
                "could not bracket the {alpha} equicoordinate quantile"
            )));
        }
        let width = (hi - lo).max(1e-3);
        if g_lo < 0.0 {
            lo -= width;
            g_lo = excess(lo);
        }
        if g_hi > 0.0 {
            hi += width;
            g_hi = excess(hi);
        }
        expansions += 1;
    }
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= WIDTH_TOL * (1.0 + hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let g = excess(mid);
        if g == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let value = 0.5 * (lo + hi);
    let at = rule.eval(&vec![value; d]);
    Ok(QuantileResult {
        value,
        error_estimate: at.error_estimate,
        points_used: rule.points_used(),
    })
}

/// `P(max_i X_i > z)`: the single-step adjusted p-value of an observed `z`.
pub fn max_exceedance(
    z: f64,
    corr: &CorrelationMatrix,
    df: Option<f64>,
    settings: &QmcSettings,
    stream: &RngStream,
) -> Result<f64> {
    let d = corr.dim();
    let p = mv_prob(&vec![z; d], corr, df, settings, stream)?;
    Ok((1.0 - p.value).clamp(0.0, 1.0))
}

/// Probability that at least one coordinate of `N(shift, corr)` exceeds `c`.
pub fn true_fwer_given_shift(
    shift: &[f64],
    corr: &CorrelationMatrix,
    c: f64,
    settings: &QmcSettings,
    stream: &RngStream,
) -> Result<f64> {
    if shift.len() != corr.dim() {
        return Err(Error::Argument("shift and correlation dimensions differ".into()));
    }
    let upper: Vec<f64> = shift.iter().map(|nu| c - nu).collect();
    let p = mv_normal_prob(&upper, corr, settings, stream)?;
    Ok((1.0 - p.value).clamp(0.0, 1.0))
}

/// Root of a decreasing `g` bracketed by `[lo, hi]`, which must satisfy
/// `g(lo) >= 0 >= g(hi)` (true for exceedance minus alpha between the
/// unadjusted and Bonferroni quantiles).
fn bisect(mut lo: f64, mut hi: f64, g: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= WIDTH_TOL * (1.0 + hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
