//! Test statistics for the population hypotheses `H_I: theta_I <= 0`.
//!
//! Every family reduces to an estimate and a standard error per population;
//! the statistic is their ratio. The families differ in how the standard
//! error accounts for heterogeneity between strata:
//!
//! * anova: common residual variance only;
//! * marginal: population variances that include the between-strata spread;
//! * marginal-shrunk: the same spread after James-Stein shrinkage;
//! * stratified: prevalence weights with a multinomial variance term.

mod analytic;
pub(crate) mod kernel;

pub use analytic::{analytic_decisions, analytic_test, marginal_critical_values};

use crate::design::{
    pooled_variance, CellGrid, Population, SampleLayout, Treatment, TrialDesign, TrialSummary,
};
use crate::error::{Error, Result};
use crate::method::{Family, MethodSpec, VarianceMode};
use crate::numerics::CorrelationMatrix;

/// Per-population statistics with their shared correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct StatVector {
    pub populations: Vec<String>,
    pub estimates: Vec<f64>,
    pub se: Vec<f64>,
    pub statistics: Vec<f64>,
    /// Degrees of freedom for t calibration; `None` means normal.
    pub df: Vec<Option<f64>>,
    pub correlation: CorrelationMatrix,
}

impl StatVector {
    fn assemble(
        design: &TrialDesign,
        estimates: Vec<f64>,
        se: Vec<f64>,
        df: Vec<Option<f64>>,
        correlation: CorrelationMatrix,
    ) -> Result<Self> {
        let statistics: Vec<f64> = estimates.iter().zip(&se).map(|(e, s)| e / s).collect();
        if let Some(k) = statistics.iter().position(|z| !z.is_finite()) {
            return Err(Error::Numeric(format!(
                "statistic for population {} is not finite",
                design.populations()[k].name
            )));
        }
        Ok(Self {
            populations: design.populations().iter().map(|p| p.name.clone()).collect(),
            estimates,
            se,
            statistics,
            df,
            correlation,
        })
    }

    pub fn len(&self) -> usize {
        self.statistics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statistics.is_empty()
    }

    pub fn max_statistic(&self) -> f64 {
        self.statistics.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Residual variance and degrees of freedom under a variance mode.
pub(crate) fn residual(summary: &TrialSummary, mode: VarianceMode) -> Result<(f64, Option<f64>)> {
    match mode {
        VarianceMode::Known => summary
            .known_variance()
            .map(|v| (v, None))
            .ok_or_else(|| Error::Config("method needs a known variance but none was given".into())),
        VarianceMode::Pooled | VarianceMode::Heterogeneous => {
            let (v, df) = pooled_variance(summary)?;
            if v <= 0.0 {
                return Err(Error::DegenerateSample("pooled variance is zero".into()));
            }
            Ok((v, Some(df)))
        }
    }
}

/// Residual variance of a summary: the known value when present, else pooled.
fn default_residual(summary: &TrialSummary) -> Result<(f64, Option<f64>)> {
    let mode = if summary.known_variance().is_some() {
        VarianceMode::Known
    } else {
        VarianceMode::Pooled
    };
    residual(summary, mode)
}

fn require_arms(layout: &SampleLayout, design: &TrialDesign, min: f64) -> Result<()> {
    for pop in design.populations() {
        for t in [pop.treatment, Treatment::CONTROL] {
            let n = layout.population_arm_size(pop, t);
            if n < min {
                return Err(Error::DegenerateSample(format!(
                    "population {} arm {} has {n} patients, needs at least {min}",
                    pop.name,
                    design.treatment_label(t)
                )));
            }
        }
    }
    Ok(())
}

fn require_cells(layout: &SampleLayout, design: &TrialDesign, pops: &[&Population], min: f64) -> Result<()> {
    for pop in pops {
        for &i in &pop.subgroups {
            for t in [pop.treatment, Treatment::CONTROL] {
                let n = layout.cell(i, t);
                if n < min {
                    return Err(Error::DegenerateSample(format!(
                        "subgroup {} arm {} of population {} has {n} patients, needs at least {min}",
                        i + 1,
                        design.treatment_label(t),
                        pop.name
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Anova contrast statistics. Uses the summary's known variance when set,
/// otherwise the pooled estimate with `N - s` degrees of freedom.
pub fn anova_statistics(summary: &TrialSummary, design: &TrialDesign) -> Result<StatVector> {
    let (sigma2, df) = default_residual(summary)?;
    anova_with(summary, design, sigma2, df)
}

fn anova_with(summary: &TrialSummary, design: &TrialDesign, sigma2: f64, df: Option<f64>) -> Result<StatVector> {
    let layout = summary.layout();
    require_arms(layout, design, 1.0)?;
    let (est, se) = design
        .populations()
        .iter()
        .map(|p| kernel::anova(p, layout.sizes(), summary.means(), sigma2))
        .unzip();
    let corr = anova_correlation(layout, design)?;
    StatVector::assemble(design, est, se, vec![df; design.n_populations()], corr)
}

/// Correlation of the anova contrasts induced by shared patients.
pub fn anova_correlation(layout: &SampleLayout, design: &TrialDesign) -> Result<CorrelationMatrix> {
    require_arms(layout, design, 1.0)?;
    correlation_with(layout, design, |_, _| 1.0)
}

/// Correlation of the contrasts when every cell has its own variance.
pub fn heterogeneous_correlation(
    layout: &SampleLayout,
    variances: &CellGrid<f64>,
    design: &TrialDesign,
) -> Result<CorrelationMatrix> {
    require_arms(layout, design, 1.0)?;
    correlation_with(layout, design, |i, t| variances.at(i, t))
}

fn correlation_with(
    layout: &SampleLayout,
    design: &TrialDesign,
    var: impl Fn(usize, Treatment) -> f64,
) -> Result<CorrelationMatrix> {
    let pops = design.populations();
    let d = pops.len();
    // covariance of the two contrasts, up to the common sigma^2
    let cov = |a: &Population, b: &Population| -> f64 {
        let c = Treatment::CONTROL;
        let mut s = 0.0;
        for &i in a.subgroups.iter().filter(|&&i| b.contains(i)) {
            if a.treatment == b.treatment {
                let e = a.treatment;
                s += layout.cell(i, e) * var(i, e)
                    / (layout.population_arm_size(a, e) * layout.population_arm_size(b, e));
            }
            s += layout.cell(i, c) * var(i, c)
                / (layout.population_arm_size(a, c) * layout.population_arm_size(b, c));
        }
        s
    };
    let v: Vec<f64> = pops.iter().map(|p| cov(p, p)).collect();
    if let Some(k) = v.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::DegenerateSample(format!(
            "contrast of population {} has zero variance",
            pops[k].name
        )));
    }
    let mut entries = vec![0.0; d * d];
    for a in 0..d {
        entries[a * d + a] = 1.0;
        for b in 0..a {
            let r = (cov(&pops[a], &pops[b]) / (v[a] * v[b]).sqrt()).clamp(-1.0, 1.0);
            entries[a * d + b] = r;
            entries[b * d + a] = r;
        }
    }
    CorrelationMatrix::new(d, entries)
}

/// Expected anova statistics given the layout and true cell means.
pub fn anova_noncentrality(
    design: &TrialDesign,
    layout: &SampleLayout,
    true_means: &CellGrid<f64>,
    sigma2: f64,
) -> Result<Vec<f64>> {
    require_arms(layout, design, 1.0)?;
    Ok(design
        .populations()
        .iter()
        .map(|p| {
            let (est, se) = kernel::anova(p, layout.sizes(), true_means, sigma2);
            est / se
        })
        .collect())
}

/// Welch-Satterthwaite degrees of freedom of a two-sample contrast.
pub fn satterthwaite_df(var_e: f64, n_e: f64, var_c: f64, n_c: f64) -> Result<f64> {
    if !(n_e >= 2.0 && n_c >= 2.0) {
        return Err(Error::DegenerateSample(format!(
            "Satterthwaite needs two observations per arm, got {n_e} and {n_c}"
        )));
    }
    if !(var_e > 0.0 && var_c > 0.0) {
        return Err(Error::DegenerateSample("Satterthwaite needs positive variances".into()));
    }
    let a = var_e / n_e;
    let b = var_c / n_c;
    Ok((a + b).powi(2) / (a * a / (n_e - 1.0) + b * b / (n_c - 1.0)))
}

/// Sample variance of a pooled population-arm cell, from cell sums of
/// squares plus the between-strata spread.
fn pooled_cell_variance(summary: &TrialSummary, pop: &Population, t: Treatment) -> f64 {
    let sizes = summary.layout().sizes();
    let (n, mean) = kernel::arm(pop, t, sizes, summary.means());
    let within: f64 = pop.subgroups.iter().map(|&i| summary.ss().at(i, t)).sum();
    let between = n * kernel::between_spread(pop, t, sizes, summary.means(), n, mean);
    (within + between) / (n - 1.0)
}

/// Marginal statistics with Satterthwaite degrees of freedom.
///
/// `Known` and `Pooled` use the anova correlation; `Heterogeneous` estimates
/// a variance per cell and uses the heterogeneous correlation.
pub fn marginal_statistics(summary: &TrialSummary, design: &TrialDesign, mode: VarianceMode) -> Result<StatVector> {
    let layout = summary.layout();
    require_arms(layout, design, 2.0)?;
    let n_pop = design.n_populations();
    let mut est = Vec::with_capacity(n_pop);
    let mut se = Vec::with_capacity(n_pop);
    let mut df = Vec::with_capacity(n_pop);
    for pop in design.populations() {
        let ne = layout.population_arm_size(pop, pop.treatment);
        let nc = layout.population_arm_size(pop, Treatment::CONTROL);
        let ve = pooled_cell_variance(summary, pop, pop.treatment);
        let vc = pooled_cell_variance(summary, pop, Treatment::CONTROL);
        let (_, me) = kernel::arm(pop, pop.treatment, layout.sizes(), summary.means());
        let (_, mc) = kernel::arm(pop, Treatment::CONTROL, layout.sizes(), summary.means());
        df.push(Some(satterthwaite_df(ve, ne, vc, nc)?));
        est.push(me - mc);
        se.push((ve / ne + vc / nc).sqrt());
    }
    let corr = match mode {
        VarianceMode::Known | VarianceMode::Pooled => anova_correlation(layout, design)?,
        VarianceMode::Heterogeneous => {
            let pops: Vec<&Population> = design.populations().iter().collect();
            require_cells(layout, design, &pops, 2.0)?;
            let mut var = design.empty_grid();
            for (i, t) in design.tested_cells() {
                var.set(i, t, summary.ss().at(i, t) / (layout.cell(i, t) - 1.0));
            }
            heterogeneous_correlation(layout, &var, design)?
        }
    };
    StatVector::assemble(design, est, se, df, corr)
}

/// Positive-part James-Stein shrinkage of subgroup means towards their
/// unweighted average.
pub fn james_stein_shrink(means: &[f64], sizes: &[f64], sigma2: f64) -> Result<Vec<f64>> {
    if means.len() != sizes.len() {
        return Err(Error::Argument("means and sizes differ in length".into()));
    }
    if means.len() < 3 {
        return Err(Error::Argument("shrinkage needs at least three strata".into()));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::Argument("variance must be positive".into()));
    }
    let k = means.len() as f64;
    let denom: f64 = means.iter().zip(sizes).map(|(m, n)| m * m * n / sigma2).sum();
    let kappa = if denom > 0.0 { ((k - 2.0) / denom).clamp(0.0, 1.0) } else { 0.0 };
    let grand = means.iter().sum::<f64>() / k;
    Ok(means.iter().map(|m| (1.0 - kappa) * (m - grand) + grand).collect())
}

/// `sigma2` plus the size-weighted variance of the (shrunk) means.
pub fn shrunk_population_variance(shrunk: &[f64], sizes: &[f64], sigma2: f64) -> Result<f64> {
    if shrunk.len() != sizes.len() || shrunk.is_empty() {
        return Err(Error::Argument("means and sizes must be nonempty and aligned".into()));
    }
    let n: f64 = sizes.iter().sum();
    if !(n > 0.0) {
        return Err(Error::DegenerateSample("population arm is empty".into()));
    }
    let m1: f64 = shrunk.iter().zip(sizes).map(|(m, s)| s / n * m).sum();
    let m2: f64 = shrunk.iter().zip(sizes).map(|(m, s)| s / n * m * m).sum();
    Ok(sigma2 + (m2 - m1 * m1).max(0.0))
}

/// Marginal statistics over shrunk population variances. Populations with
/// fewer than three strata get the anova statistic.
pub fn shrunk_statistics(summary: &TrialSummary, design: &TrialDesign, mode: VarianceMode) -> Result<StatVector> {
    let (sigma2, _) = residual(summary, mode)?;
    let layout = summary.layout();
    require_arms(layout, design, 1.0)?;
    let wide: Vec<&Population> = design.populations().iter().filter(|p| p.subgroups.len() >= 3).collect();
    require_cells(layout, design, &wide, 1.0)?;
    let (est, se) = design
        .populations()
        .iter()
        .map(|p| kernel::shrunk(p, layout.sizes(), summary.means(), sigma2))
        .unzip();
    let corr = anova_correlation(layout, design)?;
    StatVector::assemble(design, est, se, vec![None; design.n_populations()], corr)
}

/// Prevalence-weighted stratified estimates with plug-in multinomial
/// variance.
pub fn stratified_statistics(summary: &TrialSummary, design: &TrialDesign) -> Result<StatVector> {
    let (sigma2, _) = default_residual(summary)?;
    stratified_with(summary, design, sigma2)
}

fn stratified_with(summary: &TrialSummary, design: &TrialDesign, sigma2: f64) -> Result<StatVector> {
    let layout = summary.layout();
    let pops: Vec<&Population> = design.populations().iter().collect();
    require_cells(layout, design, &pops, 1.0)?;
    let (est, se) = design
        .populations()
        .iter()
        .map(|p| kernel::stratified(p, layout.sizes(), summary.means(), sigma2))
        .unzip();
    let corr = anova_correlation(layout, design)?;
    StatVector::assemble(design, est, se, vec![None; design.n_populations()], corr)
}

/// Observed statistics of a method's family under its variance mode.
pub fn statistics(summary: &TrialSummary, design: &TrialDesign, method: &MethodSpec) -> Result<StatVector> {
    match method.family {
        Family::Anova => {
            let (sigma2, df) = residual(summary, method.variance_mode)?;
            anova_with(summary, design, sigma2, df)
        }
        Family::Marginal => marginal_statistics(summary, design, method.variance_mode),
        Family::MarginalShrunk => shrunk_statistics(summary, design, method.variance_mode),
        Family::Stratified => {
            let (sigma2, _) = residual(summary, method.variance_mode)?;
            stratified_with(summary, design, sigma2)
        }
    }
}
