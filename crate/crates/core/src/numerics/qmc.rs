//! Rectangle probabilities of the multivariate normal and t distributions by
//! randomized quasi-Monte Carlo.
//!
//! The integral is transformed to the unit cube by the sequential
//! conditioning of Genz (Cholesky factor with variable reordering), which
//! leaves a `d-1` dimensional integrand for the normal case and one more
//! dimension for the chi scale of the t case. Points come from a randomly
//! shifted Richtmyer rank-1 lattice with the baker's transform; the spread of
//! the shifted replicates gives the error estimate.

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::bivariate::bivariate_normal_cdf;
use super::correlation::CorrelationMatrix;
use super::dist::{normal_cdf, normal_pdf, normal_quantile, t_cdf};
use super::rng::RngStream;
use crate::error::{Error, Result};

/// Conditional variances below this are treated as exact linear dependence.
const PIVOT_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QmcSettings {
    /// Target absolute error (three standard errors across replicates).
    pub tol: f64,
    pub replicates: usize,
    pub min_points: usize,
    /// Cap on lattice points per replicate.
    pub max_points: usize,
}

impl Default for QmcSettings {
    fn default() -> Self {
        Self {
            tol: 5e-4,
            replicates: 8,
            min_points: 64,
            max_points: 1 << 17,
        }
    }
}

impl QmcSettings {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MvProbResult {
    pub value: f64,
    pub error_estimate: f64,
    pub points_used: usize,
}

impl MvProbResult {
    fn exact(value: f64) -> Self {
        Self {
            value,
            error_estimate: 0.0,
            points_used: 0,
        }
    }
}

/// `P(X_1 <= u_1, ..., X_d <= u_d)` for `X ~ N(0, corr)`.
pub fn mv_normal_prob(
    upper: &[f64],
    corr: &CorrelationMatrix,
    settings: &QmcSettings,
    stream: &RngStream,
) -> Result<MvProbResult> {
    mv_prob(upper, corr, None, settings, stream)
}

/// Central multivariate t rectangle probability with `df` degrees of freedom.
pub fn mv_t_prob(
    upper: &[f64],
    corr: &CorrelationMatrix,
    df: f64,
    settings: &QmcSettings,
    stream: &RngStream,
) -> Result<MvProbResult> {
    if !(df > 0.0) {
        return Err(Error::Argument(format!("degrees of freedom must be positive, got {df}")));
    }
    mv_prob(upper, corr, Some(df), settings, stream)
}

/// Normal when `df` is absent, t otherwise.
pub fn mv_prob(
    upper: &[f64],
    corr: &CorrelationMatrix,
    df: Option<f64>,
    settings: &QmcSettings,
    stream: &RngStream,
) -> Result<MvProbResult> {
    if upper.len() != corr.dim() {
        return Err(Error::Argument(format!(
            "{} limits for a {}-dimensional distribution",
            upper.len(),
            corr.dim()
        )));
    }
    if upper.iter().any(|u| u.is_nan()) {
        return Err(Error::Argument("NaN integration limit".into()));
    }
    if upper.iter().any(|&u| u == f64::NEG_INFINITY) {
        return Ok(MvProbResult::exact(0.0));
    }
    let keep: Vec<usize> = (0..upper.len()).filter(|&i| upper[i].is_finite()).collect();
    if keep.is_empty() {
        return Ok(MvProbResult::exact(1.0));
    }
    let limits: Vec<f64> = keep.iter().map(|&i| upper[i]).collect();
    if keep.len() == 1 {
        let v = match df {
            None => normal_cdf(limits[0]),
            Some(df) => t_cdf(limits[0], df),
        };
        return Ok(MvProbResult::exact(v));
    }
    let sub = if keep.len() == corr.dim() {
        corr.clone()
    } else {
        corr.submatrix(&keep)
    };
    if keep.len() == 2 && df.is_none() {
        return Ok(MvProbResult::exact(bivariate_normal_cdf(limits[0], limits[1], sub.get(0, 1))));
    }
    let integrand = Integrand::prepare(&limits, &sub, df);
    let ordered = integrand.permute(&limits);
    let mut rng = stream.rng();
    Ok(integrand.adaptive(&ordered, settings, &mut rng).0)
}

/// Transformed integrand: reordered Cholesky factor plus the distribution
/// family.
#[derive(Debug, Clone)]
pub(crate) struct Integrand {
    dim: usize,
    /// Row-major lower triangle of the reordered factor.
    chol: Vec<f64>,
    perm: Vec<usize>,
    df: Option<f64>,
}

impl Integrand {
    /// Cholesky factorization with the Genz–Bretz ordering: at each step the
    /// remaining variable with the smallest conditional probability goes next.
    pub(crate) fn prepare(limits: &[f64], corr: &CorrelationMatrix, df: Option<f64>) -> Self {
        let d = limits.len();
        let mut c: Vec<f64> = corr.entries().to_vec();
        let mut b = limits.to_vec();
        let mut perm: Vec<usize> = (0..d).collect();
        let mut l = vec![0.0; d * d];
        let mut y = vec![0.0; d];

        for i in 0..d {
            let mut best = i;
            let mut best_p = f64::INFINITY;
            for j in i..d {
                let mut s2 = c[j * d + j];
                let mut shift = 0.0;
                for k in 0..i {
                    s2 -= l[j * d + k] * l[j * d + k];
                    shift += l[j * d + k] * y[k];
                }
                let p = if s2 > PIVOT_EPS {
                    normal_cdf((b[j] - shift) / s2.sqrt())
                } else if shift <= b[j] {
                    1.0
                } else {
                    0.0
                };
                if p < best_p {
                    best_p = p;
                    best = j;
                }
            }
            if best != i {
                b.swap(i, best);
                perm.swap(i, best);
                for k in 0..i {
                    l.swap(i * d + k, best * d + k);
                }
                for k in 0..d {
                    c.swap(i * d + k, best * d + k);
                }
                for k in 0..d {
                    c.swap(k * d + i, k * d + best);
                }
            }
            let mut s2 = c[i * d + i];
            let mut shift = 0.0;
            for k in 0..i {
                s2 -= l[i * d + k] * l[i * d + k];
                shift += l[i * d + k] * y[k];
            }
            if s2 > PIVOT_EPS {
                let lii = s2.sqrt();
                l[i * d + i] = lii;
                for j in i + 1..d {
                    let mut v = c[j * d + i];
                    for k in 0..i {
                        v -= l[j * d + k] * l[i * d + k];
                    }
                    l[j * d + i] = v / lii;
                }
                let u = (b[i] - shift) / lii;
                let cdf = normal_cdf(u);
                y[i] = if cdf > 1e-300 { -normal_pdf(u) / cdf } else { u };
            } else {
                for j in i..d {
                    l[j * d + i] = 0.0;
                }
                y[i] = 0.0;
            }
        }
        Self {
            dim: d,
            chol: l,
            perm,
            df,
        }
    }

    pub(crate) fn permute(&self, limits: &[f64]) -> Vec<f64> {
        self.perm.iter().map(|&p| limits[p]).collect()
    }

    pub(crate) fn qmc_dim(&self) -> usize {
        self.dim - 1 + usize::from(self.df.is_some())
    }

    fn scale_from(&self, u: f64) -> f64 {
        match self.df {
            None => 1.0,
            Some(df) => {
                let u = u.clamp(1e-14, 1.0 - 1e-14);
                let chi2 = ChiSquared::new(df).expect("positive df").inverse_cdf(u);
                (chi2 / df).sqrt()
            }
        }
    }

    /// Integrand value at one cube point `w` (length `dim - 1`) with the
    /// limits multiplied by `scale`.
    #[inline]
    fn value(&self, limits: &[f64], scale: f64, w: &[f64], y: &mut [f64]) -> f64 {
        let d = self.dim;
        let mut prod = 1.0;
        for i in 0..d {
            let row = &self.chol[i * d..i * d + i + 1];
            let mut shift = 0.0;
            for k in 0..i {
                shift += row[k] * y[k];
            }
            let lii = row[i];
            let bound = scale * limits[i];
            let e = if lii > 0.0 {
                normal_cdf((bound - shift) / lii)
            } else if shift <= bound {
                1.0
            } else {
                0.0
            };
            prod *= e;
            if prod <= 0.0 {
                return 0.0;
            }
            if i + 1 < d {
                y[i] = if lii > 0.0 {
                    normal_quantile((w[i] * e).clamp(f64::MIN_POSITIVE, 1.0 - 1e-16))
                } else {
                    0.0
                };
            }
        }
        prod
    }

    /// Double the point count per replicate until the error target or the
    /// cap is met. Returns the result and the shifts used.
    pub(crate) fn adaptive<R: Rng + ?Sized>(
        &self,
        limits: &[f64],
        settings: &QmcSettings,
        rng: &mut R,
    ) -> (MvProbResult, Vec<f64>, usize) {
        let dim = self.qmc_dim();
        let m = settings.replicates.max(2);
        let shifts: Vec<f64> = (0..m * dim).map(|_| rng.random::<f64>()).collect();
        let gens = generators(dim);
        let mut sums = vec![0.0; m];
        let mut done = 0usize;
        let mut n = settings.min_points.max(1).min(settings.max_points.max(1));
        let mut w = vec![0.0; dim];
        let mut y = vec![0.0; self.dim];
        loop {
            for r in 0..m {
                let shift = &shifts[r * dim..(r + 1) * dim];
                for k in done + 1..=n {
                    lattice_point(k, &gens, shift, &mut w);
                    let (scale, cube) = self.split(&w);
                    sums[r] += self.value(limits, scale, cube, &mut y);
                }
            }
            done = n;
            let result = summarize(&sums, n);
            if result.error_estimate <= settings.tol || n >= settings.max_points {
                return (result, shifts, n);
            }
            n = (n * 2).min(settings.max_points);
        }
    }

    #[inline]
    fn split<'a>(&self, w: &'a [f64]) -> (f64, &'a [f64]) {
        match self.df {
            None => (1.0, w),
            Some(_) => {
                let (cube, last) = w.split_at(self.dim - 1);
                (self.scale_from(last[0]), cube)
            }
        }
    }
}

/// A frozen point set: evaluating it at different limits involves no
/// randomness, so root searches over it see a deterministic objective.
#[derive(Debug, Clone)]
pub(crate) struct FixedRule {
    integrand: Integrand,
    shifts: Vec<f64>,
    replicates: usize,
    points: usize,
    /// Precomputed chi scales, `replicates * points`, for the t case.
    scales: Option<Vec<f64>>,
}

impl FixedRule {
    pub(crate) fn new(integrand: Integrand, shifts: Vec<f64>, points: usize) -> Self {
        let dim = integrand.qmc_dim();
        let replicates = if dim == 0 { 0 } else { shifts.len() / dim };
        let scales = integrand.df.map(|_| {
            let gens = generators(dim);
            let mut w = vec![0.0; dim];
            let mut out = Vec::with_capacity(replicates * points);
            for r in 0..replicates {
                let shift = &shifts[r * dim..(r + 1) * dim];
                for k in 1..=points {
                    lattice_point(k, &gens, shift, &mut w);
                    out.push(integrand.scale_from(w[dim - 1]));
                }
            }
            out
        });
        Self {
            integrand,
            shifts,
            replicates,
            points,
            scales,
        }
    }

    pub(crate) fn points_used(&self) -> usize {
        self.points
    }

    /// Probability at limits given in the integrand's internal order.
    pub(crate) fn eval(&self, limits: &[f64]) -> MvProbResult {
        let dim = self.integrand.qmc_dim();
        let d = self.integrand.dim;
        let gens = generators(dim);
        let mut sums = vec![0.0; self.replicates];
        let mut w = vec![0.0; dim];
        let mut y = vec![0.0; d];
        for (r, sum) in sums.iter_mut().enumerate() {
            let shift = &self.shifts[r * dim..(r + 1) * dim];
            for k in 1..=self.points {
                lattice_point(k, &gens, shift, &mut w);
                let scale = match &self.scales {
                    Some(s) => s[r * self.points + k - 1],
                    None => 1.0,
                };
                *sum += self.integrand.value(limits, scale, &w[..d - 1], &mut y);
            }
        }
        summarize(&sums, self.points)
    }
}

fn summarize(sums: &[f64], n: usize) -> MvProbResult {
    let m = sums.len() as f64;
    let means: Vec<f64> = sums.iter().map(|s| s / n as f64).collect();
    let mean = means.iter().sum::<f64>() / m;
    let var = means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    MvProbResult {
        value: mean.clamp(0.0, 1.0),
        error_estimate: 3.0 * (var / m).sqrt(),
        points_used: n * sums.len(),
    }
}

#[inline]
fn lattice_point(k: usize, gens: &[f64], shift: &[f64], out: &mut [f64]) {
    let kf = k as f64;
    for j in 0..out.len() {
        let x = (kf * gens[j] + shift[j]).fract();
        out[j] = 1.0 - (2.0 * x - 1.0).abs();
    }
}

/// Richtmyer generators: fractional parts of square roots of primes.
fn generators(dim: usize) -> Vec<f64> {
    let mut primes = Vec::with_capacity(dim);
    let mut candidate = 2u64;
    while primes.len() < dim {
        if (2..candidate).take_while(|p| p * p <= candidate).all(|p| candidate % p != 0) {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes.iter().map(|&p| (p as f64).sqrt().fract()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn settings() -> QmcSettings {
        QmcSettings::default()
    }

    #[test]
    fn infinite_limits_are_exact() {
        let corr = CorrelationMatrix::equicorrelated(3, 0.3).unwrap();
        let s = RngStream::new(1);
        let all = mv_normal_prob(&[f64::INFINITY; 3], &corr, &settings(), &s).unwrap();
        assert_eq!(all.value, 1.0);
        let none = mv_normal_prob(&[0.0, f64::NEG_INFINITY, 1.0], &corr, &settings(), &s).unwrap();
        assert_eq!(none.value, 0.0);
        let one = mv_normal_prob(&[f64::INFINITY, 1.0, f64::INFINITY], &corr, &settings(), &s).unwrap();
        assert_abs_diff_eq!(one.value, normal_cdf(1.0), epsilon = 1e-15);
    }

    #[test]
    fn univariate_cases() {
        let corr = CorrelationMatrix::identity(1);
        let s = RngStream::new(1);
        let r = mv_normal_prob(&[1.959964], &corr, &settings(), &s).unwrap();
        assert_abs_diff_eq!(r.value, 0.975, epsilon = 1e-6);
        let r = mv_t_prob(&[2.228138851986], &corr, 10.0, &settings(), &s).unwrap();
        assert_abs_diff_eq!(r.value, 0.975, epsilon = 1e-9);
    }

    #[test]
    fn orthant_of_equicorrelated_trivariate() {
        // P(X <= 0) = 1/8 + 3/(4 pi) asin(1/2) = 1/4
        let corr = CorrelationMatrix::equicorrelated(3, 0.5).unwrap();
        let r = mv_normal_prob(&[0.0; 3], &corr, &settings(), &RngStream::new(5)).unwrap();
        assert_abs_diff_eq!(r.value, 0.25, epsilon = settings().tol);
        assert!(r.error_estimate <= settings().tol);
    }

    #[test]
    fn perfect_correlation_takes_the_minimum() {
        let corr = CorrelationMatrix::equicorrelated(2, 1.0).unwrap();
        let r = mv_normal_prob(&[0.3, 1.2], &corr, &settings(), &RngStream::new(9)).unwrap();
        assert_abs_diff_eq!(r.value, normal_cdf(0.3), epsilon = settings().tol);
        let r = mv_normal_prob(&[1.2, 0.3], &corr, &settings(), &RngStream::new(9)).unwrap();
        assert_abs_diff_eq!(r.value, normal_cdf(0.3), epsilon = settings().tol);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let corr = CorrelationMatrix::identity(2);
        assert!(mv_normal_prob(&[0.0], &corr, &settings(), &RngStream::new(1)).is_err());
        assert!(mv_t_prob(&[0.0, 0.0], &corr, 0.0, &settings(), &RngStream::new(1)).is_err());
    }

    #[test]
    fn fixed_rule_matches_adaptive_estimate() {
        let corr = CorrelationMatrix::equicorrelated(3, 0.4).unwrap();
        let limits = [1.0, 1.5, 0.5];
        let integrand = Integrand::prepare(&limits, &corr, Some(7.0));
        let ordered = integrand.permute(&limits);
        let mut rng = RngStream::new(3).rng();
        let (res, shifts, n) = integrand.adaptive(&ordered, &settings(), &mut rng);
        let rule = FixedRule::new(integrand, shifts, n);
        let again = rule.eval(&ordered);
        assert_abs_diff_eq!(res.value, again.value, epsilon = 1e-12);
    }
}
