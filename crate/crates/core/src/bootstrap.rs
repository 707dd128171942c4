//! Parametric bootstrap of the max statistic under the estimated global null.
//!
//! Each replicate redraws the strata sizes from a multinomial with the
//! observed strata fractions, keeps the observed allocation rates as
//! fractional effective cell sizes, and draws cell means around the
//! projection of the observed means onto the null constraints.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::design::{CellGrid, Population, Treatment, TrialDesign, TrialSummary};
use crate::error::{Error, Result};
use crate::method::{Calibration, Family, HypothesisResult, MethodSpec, TestResult};
use crate::numerics::{multinomial_into, standard_normal, RngStream};
use crate::procedures::{kernel, residual, statistics, StatVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroCellPolicy {
    /// Redraw the replicate's strata sizes until every needed stratum is
    /// populated.
    Redraw,
    /// Drop the replicate; p-values and quantiles use the remaining ones.
    Skip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PValueRule {
    /// `#{max Z* >= z} / B`.
    Plain,
    /// `(#{max Z* >= z} + 1) / (B + 1)`.
    AddOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BootstrapConfig {
    pub n_boot: usize,
    pub zero_cell: ZeroCellPolicy,
    pub p_value: PValueRule,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            n_boot: 1000,
            zero_cell: ZeroCellPolicy::Redraw,
            p_value: PValueRule::Plain,
        }
    }
}

impl BootstrapConfig {
    pub fn with_n_boot(n_boot: usize) -> Self {
        Self {
            n_boot,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_boot == 0 {
            return Err(Error::Argument("n_boot must be at least 1".into()));
        }
        Ok(())
    }

    fn redraw_cap(&self) -> usize {
        100 * self.n_boot
    }
}

/// Observed cell means projected onto the null constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct NullProjection {
    pub means: CellGrid<f64>,
    /// Largest `|r_I^T theta_I^0|` after projection.
    pub constraint_residual: f64,
}

fn constraint_weights(summary: &TrialSummary, pop: &Population) -> Vec<f64> {
    let layout = summary.layout();
    let n_p = layout.population_size(pop);
    pop.subgroups.iter().map(|&i| layout.subgroup_size(i) / n_p).collect()
}

fn constraint_value(means: &CellGrid<f64>, pop: &Population, r: &[f64]) -> f64 {
    pop.subgroups
        .iter()
        .zip(r)
        .map(|(&i, w)| w * (means.at(i, pop.treatment) - means.at(i, Treatment::CONTROL)))
        .sum()
}

/// Orthogonal (unweighted) projection of the observed cell means onto
/// `{mu : r_I^T theta_I = 0 for all I}`.
///
/// The constraint vectors are orthonormalized by an SVD, so duplicated or
/// dependent constraints are handled by rank truncation.
pub fn project_to_null(summary: &TrialSummary, design: &TrialDesign) -> Result<NullProjection> {
    let cells = design.cells();
    let index = |i: usize, t: Treatment| cells.iter().position(|&c| c == (i, t));
    let p = cells.len();
    let m = design.n_populations();
    for pop in design.populations() {
        if !(summary.layout().population_size(pop) > 0.0) {
            return Err(Error::DegenerateSample(format!("population {} is empty", pop.name)));
        }
    }
    let weights: Vec<Vec<f64>> = design.populations().iter().map(|p| constraint_weights(summary, p)).collect();
    let mut a = DMatrix::<f64>::zeros(p, m);
    for (k, pop) in design.populations().iter().enumerate() {
        for (&i, &w) in pop.subgroups.iter().zip(&weights[k]) {
            a[(index(i, pop.treatment).expect("administered"), k)] = w;
            a[(index(i, Treatment::CONTROL).expect("administered"), k)] = -w;
        }
    }
    let y = nalgebra::DVector::from_iterator(p, cells.iter().map(|&(i, t)| summary.means().at(i, t)));
    let svd = a.svd(true, false);
    let u = svd.u.as_ref().expect("requested U");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = smax * 1e-12 * p.max(m) as f64;
    let mut proj = y.clone();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > tol {
            let col = u.column(k);
            let coef = col.dot(&y);
            proj -= col * coef;
        }
    }
    let mut means = summary.means().clone();
    for (k, &(i, t)) in cells.iter().enumerate() {
        means.set(i, t, proj[k]);
    }
    let constraint_residual = design
        .populations()
        .iter()
        .zip(&weights)
        .map(|(pop, r)| constraint_value(&means, pop, r).abs())
        .fold(0.0, f64::max);
    Ok(NullProjection {
        means,
        constraint_residual,
    })
}

/// Draws of one bootstrap configuration, shared by every statistic family.
struct Sampler<'a> {
    design: &'a TrialDesign,
    total: u64,
    strata_probs: Vec<f64>,
    delta: CellGrid<f64>,
    null_means: CellGrid<f64>,
    cells: Vec<(usize, Treatment)>,
    needed: Vec<usize>,
}

/// Scratch space for one replicate.
struct Draw {
    counts: Vec<u64>,
    sizes: CellGrid<f64>,
    noise: Vec<f64>,
    means: CellGrid<f64>,
}

impl<'a> Sampler<'a> {
    fn new(summary: &TrialSummary, design: &'a TrialDesign) -> Result<Self> {
        let layout = summary.layout();
        let total_f = layout.total();
        if !(total_f >= 1.0) {
            return Err(Error::DegenerateSample("no observations".into()));
        }
        let total = total_f.round() as u64;
        let strata: Vec<f64> = (0..design.n_subgroups()).map(|i| layout.subgroup_size(i)).collect();
        let sum: f64 = strata.iter().sum();
        let strata_probs: Vec<f64> = strata.iter().map(|n| n / sum).collect();
        let mut delta = design.empty_grid();
        for (i, t) in design.cells() {
            if strata[i] > 0.0 {
                delta.set(i, t, layout.cell(i, t) / strata[i]);
            }
        }
        let needed: Vec<usize> = (0..design.n_subgroups()).filter(|&i| design.is_covered(i)).collect();
        if let Some(&i) = needed.iter().find(|&&i| strata[i] <= 0.0) {
            return Err(Error::DegenerateSample(format!("subgroup {} has no patients", i + 1)));
        }
        Ok(Self {
            design,
            total,
            strata_probs,
            delta,
            null_means: project_to_null(summary, design)?.means,
            cells: design.cells(),
            needed,
        })
    }

    fn scratch(&self) -> Draw {
        Draw {
            counts: vec![0; self.design.n_subgroups()],
            sizes: self.design.empty_grid(),
            noise: vec![0.0; self.cells.len()],
            means: self.null_means.clone(),
        }
    }

    /// One attempt; `false` when a needed stratum came out empty.
    fn attempt<R: rand::Rng + ?Sized>(&self, rng: &mut R, draw: &mut Draw) -> Result<bool> {
        multinomial_into(rng, self.total, &self.strata_probs, &mut draw.counts)?;
        for (k, &(i, t)) in self.cells.iter().enumerate() {
            draw.sizes.set(i, t, draw.counts[i] as f64 * self.delta.at(i, t));
            draw.noise[k] = standard_normal(rng);
        }
        Ok(self.needed.iter().all(|&i| draw.counts[i] > 0))
    }

    /// Fill `draw.means` for residual variance `sigma2`.
    fn means_for(&self, sigma2: f64, draw: &mut Draw) {
        for (k, &(i, t)) in self.cells.iter().enumerate() {
            let n = draw.sizes.at(i, t);
            let mu = self.null_means.at(i, t);
            let m = if n > 0.0 { mu + (sigma2 / n).sqrt() * draw.noise[k] } else { mu };
            draw.means.set(i, t, m);
        }
    }

    /// Draw replicate `r` from its own stream. Returns `None` for a skipped
    /// replicate and the number of redraws spent.
    fn replicate(&self, stream: &RngStream, r: usize, cfg: &BootstrapConfig, draw: &mut Draw) -> Result<(bool, usize)> {
        let mut rng = stream.child(r as u64).rng();
        let mut redraws = 0;
        loop {
            if self.attempt(&mut rng, draw)? {
                return Ok((true, redraws));
            }
            match cfg.zero_cell {
                ZeroCellPolicy::Skip => return Ok((false, 0)),
                ZeroCellPolicy::Redraw => {
                    redraws += 1;
                    if redraws > cfg.redraw_cap() {
                        return Err(too_many_redraws(cfg));
                    }
                }
            }
        }
    }
}

fn too_many_redraws(cfg: &BootstrapConfig) -> Error {
    Error::DegenerateSample(format!(
        "bootstrap needed more than {} redraws for empty strata",
        cfg.redraw_cap()
    ))
}

/// Statistics of one family on a replicate, written into `out`; returns the
/// maximum.
fn replicate_statistics(family: Family, design: &TrialDesign, draw: &Draw, sigma2: f64, out: &mut [f64]) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for (k, pop) in design.populations().iter().enumerate() {
        let (est, se) = match family {
            Family::Anova => kernel::anova(pop, &draw.sizes, &draw.means, sigma2),
            Family::Marginal => kernel::marginal_population(pop, &draw.sizes, &draw.means, sigma2),
            Family::MarginalShrunk => kernel::shrunk(pop, &draw.sizes, &draw.means, sigma2),
            Family::Stratified => kernel::stratified(pop, &draw.sizes, &draw.means, sigma2),
        };
        out[k] = est / se;
        max = max.max(out[k]);
    }
    max
}

fn bootstrap_method(method: &MethodSpec) -> Result<()> {
    if method.calibration != Calibration::Bootstrap {
        return Err(Error::Argument(format!("{} is not a bootstrap method", method.name())));
    }
    Ok(())
}

/// Bootstrapped max statistics and the per-replicate statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapSample {
    pub max_stats: Vec<f64>,
    /// One vector of `Z*_I` per retained replicate.
    pub replicates: Vec<Vec<f64>>,
    pub redraws: usize,
    pub skipped: usize,
}

/// Full bootstrap distribution. Replicates run in parallel; replicate `r`
/// always uses `stream.child(r)`, so the result does not depend on the
/// number of workers.
pub fn bootstrap_distribution(
    summary: &TrialSummary,
    design: &TrialDesign,
    method: &MethodSpec,
    cfg: &BootstrapConfig,
    stream: &RngStream,
) -> Result<BootstrapSample> {
    bootstrap_method(method)?;
    cfg.validate()?;
    let (sigma2, _) = residual(summary, method.variance_mode)?;
    let sampler = Sampler::new(summary, design)?;
    let d = design.n_populations();
    let results: Vec<Result<Option<(Vec<f64>, usize)>>> = (0..cfg.n_boot)
        .into_par_iter()
        .map_init(
            || sampler.scratch(),
            |draw, r| {
                let (kept, redraws) = sampler.replicate(stream, r, cfg, draw)?;
                if !kept {
                    return Ok(None);
                }
                sampler.means_for(sigma2, draw);
                let mut z = vec![0.0; d];
                replicate_statistics(method.family, design, draw, sigma2, &mut z);
                Ok(Some((z, redraws)))
            },
        )
        .collect();
    let mut out = BootstrapSample {
        max_stats: Vec::with_capacity(cfg.n_boot),
        replicates: Vec::with_capacity(cfg.n_boot),
        redraws: 0,
        skipped: 0,
    };
    for r in results {
        match r? {
            Some((z, redraws)) => {
                out.redraws += redraws;
                out.max_stats.push(z.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
                out.replicates.push(z);
            }
            None => out.skipped += 1,
        }
    }
    if out.redraws > cfg.redraw_cap() {
        return Err(too_many_redraws(cfg));
    }
    if out.max_stats.is_empty() {
        return Err(Error::DegenerateSample("every bootstrap replicate was skipped".into()));
    }
    Ok(out)
}

/// Single-step adjusted p-values from the bootstrapped max statistics; ties
/// count as exceedances.
pub fn adjusted_pvalues(observed: &[f64], max_stats: &[f64], rule: PValueRule) -> Result<Vec<f64>> {
    if max_stats.is_empty() {
        return Err(Error::Argument("empty bootstrap sample".into()));
    }
    let b = max_stats.len() as f64;
    Ok(observed
        .iter()
        .map(|&z| {
            let count = max_stats.iter().filter(|&&m| m >= z).count() as f64;
            match rule {
                PValueRule::Plain => count / b,
                PValueRule::AddOne => (count + 1.0) / (b + 1.0),
            }
        })
        .collect())
}

/// Rank `k = ceil((1 - alpha) B)` of the critical order statistic.
fn critical_rank(alpha: f64, b: usize) -> usize {
    let k = ((1.0 - alpha) * b as f64 - 1e-9).ceil();
    (k.max(1.0) as usize).min(b)
}

/// Empirical `(1 - alpha)` quantile: the `ceil((1 - alpha) B)`-th smallest
/// bootstrapped max statistic.
pub fn bootstrap_critical_value(max_stats: &[f64], alpha: f64) -> Result<f64> {
    if max_stats.is_empty() {
        return Err(Error::Argument("empty bootstrap sample".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Argument(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let k = critical_rank(alpha, max_stats.len());
    let mut sorted = max_stats.to_vec();
    let (_, kth, _) = sorted.select_nth_unstable_by(k - 1, |a, b| a.total_cmp(b));
    Ok(*kth)
}

/// Bootstrap-calibrated test with a common critical value. `H_I` is rejected
/// when `z_I` exceeds the critical value, which matches `p_I <= alpha` for
/// the plain rule up to ties.
pub fn bootstrap_test(
    summary: &TrialSummary,
    design: &TrialDesign,
    method: &MethodSpec,
    cfg: &BootstrapConfig,
    alpha: f64,
    stream: &RngStream,
) -> Result<TestResult> {
    let observed = statistics(summary, design, method)?;
    let sample = bootstrap_distribution(summary, design, method, cfg, stream)?;
    let c = bootstrap_critical_value(&sample.max_stats, alpha)?;
    let p = adjusted_pvalues(&observed.statistics, &sample.max_stats, cfg.p_value)?;
    Ok(assemble(method, alpha, &observed, c, &p))
}

fn assemble(method: &MethodSpec, alpha: f64, observed: &StatVector, c: f64, p: &[f64]) -> TestResult {
    let hypotheses = (0..observed.len())
        .map(|k| HypothesisResult {
            population: observed.populations[k].clone(),
            estimate: observed.estimates[k],
            se: observed.se[k],
            statistic: observed.statistics[k],
            critical_value: c,
            adjusted_p: p[k],
            rejected: observed.statistics[k] > c,
            df: None,
        })
        .collect();
    TestResult {
        method: *method,
        alpha,
        hypotheses,
    }
}

/// Decisions of several bootstrap methods sharing one set of replicate
/// draws, with early stopping.
///
/// `H_I` is rejected iff fewer than `B - k + 1` bootstrapped maxima reach
/// `z_I`, with `k` the critical rank; this is exactly `z_I > c`. Counts only
/// grow, so once every hypothesis has too many exceedances the remaining
/// replicates cannot change any decision and the loop stops. With the skip
/// policy the effective `B` is unknown in advance and all replicates run.
pub fn bootstrap_decisions(
    summary: &TrialSummary,
    design: &TrialDesign,
    methods: &[MethodSpec],
    observed: &[StatVector],
    cfg: &BootstrapConfig,
    alpha: f64,
    stream: &RngStream,
) -> Result<Vec<Vec<bool>>> {
    cfg.validate()?;
    if methods.len() != observed.len() {
        return Err(Error::Argument("one observed statistic vector per method".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Argument(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let mut sigma2 = Vec::with_capacity(methods.len());
    for m in methods {
        bootstrap_method(m)?;
        sigma2.push(residual(summary, m.variance_mode)?.0);
    }
    let sampler = Sampler::new(summary, design)?;
    let d = design.n_populations();
    let limit = cfg.n_boot - critical_rank(alpha, cfg.n_boot);
    let mut counts = vec![vec![0usize; d]; methods.len()];
    let mut draw = sampler.scratch();
    let mut z = vec![0.0; d];
    let mut kept = 0usize;
    let mut redraws = 0usize;
    let early = cfg.zero_cell == ZeroCellPolicy::Redraw;
    let mut last_sigma = f64::NAN;
    for r in 0..cfg.n_boot {
        let open: Vec<usize> = (0..methods.len())
            .filter(|&f| !early || counts[f].iter().any(|&c| c <= limit))
            .collect();
        if open.is_empty() {
            break;
        }
        let (ok, extra) = sampler.replicate(stream, r, cfg, &mut draw)?;
        redraws += extra;
        if redraws > cfg.redraw_cap() {
            return Err(too_many_redraws(cfg));
        }
        if !ok {
            continue;
        }
        kept += 1;
        for &f in &open {
            if sigma2[f] != last_sigma {
                sampler.means_for(sigma2[f], &mut draw);
                last_sigma = sigma2[f];
            }
            let max = replicate_statistics(methods[f].family, design, &draw, sigma2[f], &mut z);
            for (c, &zo) in counts[f].iter_mut().zip(&observed[f].statistics) {
                if max >= zo {
                    *c += 1;
                }
            }
        }
        last_sigma = f64::NAN;
    }
    let limit = if early {
        limit
    } else {
        if kept == 0 {
            return Err(Error::DegenerateSample("every bootstrap replicate was skipped".into()));
        }
        kept - critical_rank(alpha, kept)
    };
    Ok(counts
        .into_iter()
        .map(|c| c.into_iter().map(|n| n <= limit).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{PopulationSpec, SampleLayout};
    use approx::assert_abs_diff_eq;

    fn single_cell_summary(mean_e: f64, mean_c: f64) -> (TrialDesign, TrialSummary) {
        let design = TrialDesign::new(1, vec![PopulationSpec::new("P", &[0], "E")]).unwrap();
        let mut sizes = design.empty_grid();
        sizes.set(0, Treatment(0), 10.0);
        sizes.set(0, Treatment(1), 10.0);
        let mut means = design.empty_grid();
        means.set(0, Treatment(0), mean_c);
        means.set(0, Treatment(1), mean_e);
        let s = TrialSummary::new(SampleLayout::new(sizes).unwrap(), means, design.empty_grid(), Some(1.0)).unwrap();
        (design, s)
    }

    #[test]
    fn two_cell_projection_by_hand() {
        let (design, s) = single_cell_summary(1.0, 0.0);
        let p = project_to_null(&s, &design).unwrap();
        assert_abs_diff_eq!(p.means.at(0, Treatment(0)), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p.means.at(0, Treatment(1)), 0.5, epsilon = 1e-12);
        assert!(p.constraint_residual < 1e-12);
    }

    #[test]
    fn pvalues_and_quantiles_by_count() {
        let boot = [1.0, 2.0, 3.0];
        assert_eq!(adjusted_pvalues(&[2.0], &boot, PValueRule::Plain).unwrap(), vec![2.0 / 3.0]);
        assert_eq!(adjusted_pvalues(&[0.0], &boot, PValueRule::Plain).unwrap(), vec![1.0]);
        assert_eq!(adjusted_pvalues(&[9.0], &boot, PValueRule::Plain).unwrap(), vec![0.0]);
        assert_eq!(adjusted_pvalues(&[9.0], &boot, PValueRule::AddOne).unwrap(), vec![0.25]);
        let hundred: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(bootstrap_critical_value(&hundred, 0.025).unwrap(), 98.0);
        assert_eq!(bootstrap_critical_value(&hundred, 0.999).unwrap(), 1.0);
        assert_eq!(bootstrap_critical_value(&[4.2; 7], 0.3).unwrap(), 4.2);
        assert_eq!(critical_rank(0.025, 500), 488);
        assert_eq!(critical_rank(0.05, 1000), 950);
    }

    #[test]
    fn single_replicate_is_reproducible() {
        let (design, s) = single_cell_summary(0.3, 0.0);
        let cfg = BootstrapConfig::with_n_boot(1);
        let st = RngStream::new(77);
        let a = bootstrap_distribution(&s, &design, &MethodSpec::anova_boot().with_variance_mode(crate::method::VarianceMode::Known).unwrap(), &cfg, &st).unwrap();
        let b = bootstrap_distribution(&s, &design, &MethodSpec::anova_boot().with_variance_mode(crate::method::VarianceMode::Known).unwrap(), &cfg, &st).unwrap();
        assert_eq!(a.max_stats.len(), 1);
        assert_eq!(a, b);
    }
}
