//! Allocation-free estimate/SE kernels shared by the observed-data
//! statistics and the bootstrap loop. Inputs are assumed validated.

use crate::design::{CellGrid, Population, Treatment};

/// `(n_{P,T}, Ybar_{P,T})`.
#[inline]
pub(crate) fn arm(pop: &Population, t: Treatment, sizes: &CellGrid<f64>, means: &CellGrid<f64>) -> (f64, f64) {
    let mut n = 0.0;
    let mut sum = 0.0;
    for &i in &pop.subgroups {
        let ni = sizes.at(i, t);
        n += ni;
        sum += ni * means.at(i, t);
    }
    (n, sum / n)
}

/// Weighted between-strata spread `sum_i w_i (Ybar_i - Ybar_P)^2` with
/// `w_i = n_i / n_P`.
#[inline]
pub(crate) fn between_spread(
    pop: &Population,
    t: Treatment,
    sizes: &CellGrid<f64>,
    means: &CellGrid<f64>,
    n: f64,
    mean: f64,
) -> f64 {
    pop.subgroups
        .iter()
        .map(|&i| sizes.at(i, t) / n * (means.at(i, t) - mean).powi(2))
        .sum()
}

#[inline]
pub(crate) fn anova(pop: &Population, sizes: &CellGrid<f64>, means: &CellGrid<f64>, sigma2: f64) -> (f64, f64) {
    let (ne, me) = arm(pop, pop.treatment, sizes, means);
    let (nc, mc) = arm(pop, Treatment::CONTROL, sizes, means);
    (me - mc, (sigma2 * (1.0 / ne + 1.0 / nc)).sqrt())
}

/// Marginal contrast with population variances `sigma2 + spread`, the form
/// used when only cell means are available.
#[inline]
pub(crate) fn marginal_population(
    pop: &Population,
    sizes: &CellGrid<f64>,
    means: &CellGrid<f64>,
    sigma2: f64,
) -> (f64, f64) {
    let (ne, me) = arm(pop, pop.treatment, sizes, means);
    let (nc, mc) = arm(pop, Treatment::CONTROL, sizes, means);
    let ve = sigma2 + between_spread(pop, pop.treatment, sizes, means, ne, me);
    let vc = sigma2 + between_spread(pop, Treatment::CONTROL, sizes, means, nc, mc);
    (me - mc, (ve / ne + vc / nc).sqrt())
}

/// Positive-part James-Stein factor for one arm of a population.
#[inline]
pub(crate) fn shrink_factor(pop: &Population, t: Treatment, sizes: &CellGrid<f64>, means: &CellGrid<f64>, sigma2: f64) -> f64 {
    let k = pop.subgroups.len() as f64;
    let denom: f64 = pop
        .subgroups
        .iter()
        .map(|&i| means.at(i, t).powi(2) * sizes.at(i, t) / sigma2)
        .sum();
    if denom > 0.0 {
        ((k - 2.0) / denom).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// `sigma2 + sum w mu^2 - (sum w mu)^2` over shrunk means, computed without
/// materializing them.
#[inline]
pub(crate) fn shrunk_arm_variance(
    pop: &Population,
    t: Treatment,
    sizes: &CellGrid<f64>,
    means: &CellGrid<f64>,
    sigma2: f64,
    n: f64,
) -> f64 {
    let kappa = shrink_factor(pop, t, sizes, means, sigma2);
    let grand = pop.subgroups.iter().map(|&i| means.at(i, t)).sum::<f64>() / pop.subgroups.len() as f64;
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for &i in &pop.subgroups {
        let w = sizes.at(i, t) / n;
        let mu = (1.0 - kappa) * (means.at(i, t) - grand) + grand;
        m1 += w * mu;
        m2 += w * mu * mu;
    }
    sigma2 + (m2 - m1 * m1).max(0.0)
}

/// Shrunk marginal contrast; populations with fewer than three strata use
/// the anova statistic.
#[inline]
pub(crate) fn shrunk(pop: &Population, sizes: &CellGrid<f64>, means: &CellGrid<f64>, sigma2: f64) -> (f64, f64) {
    if pop.subgroups.len() < 3 {
        return anova(pop, sizes, means, sigma2);
    }
    let (ne, me) = arm(pop, pop.treatment, sizes, means);
    let (nc, mc) = arm(pop, Treatment::CONTROL, sizes, means);
    let ve = shrunk_arm_variance(pop, pop.treatment, sizes, means, sigma2, ne);
    let vc = shrunk_arm_variance(pop, Treatment::CONTROL, sizes, means, sigma2, nc);
    (me - mc, (ve / ne + vc / nc).sqrt())
}

/// Stratified estimate and its standard error, including the multinomial
/// fluctuation of the strata sizes.
#[inline]
pub(crate) fn stratified(pop: &Population, sizes: &CellGrid<f64>, means: &CellGrid<f64>, sigma2: f64) -> (f64, f64) {
    let e = pop.treatment;
    let c = Treatment::CONTROL;
    let n_t = sizes.n_treatments();
    let subgroup_n = |i: usize| (0..n_t).map(|t| sizes.at(i, Treatment(t))).sum::<f64>();
    let n_p: f64 = pop.subgroups.iter().map(|&i| subgroup_n(i)).sum();
    let mut est = 0.0;
    let mut within = 0.0;
    let mut m2 = 0.0;
    for &i in &pop.subgroups {
        let ni = subgroup_n(i);
        let pi = ni / n_p;
        let theta = means.at(i, e) - means.at(i, c);
        est += pi * theta;
        m2 += pi * theta * theta;
        // (1/delta_E + 1/delta_C) n_i = n_i^2 (1/n_E + 1/n_C)
        within += ni * ni * (1.0 / sizes.at(i, e) + 1.0 / sizes.at(i, c));
    }
    let multinomial = n_p * (m2 - est * est).max(0.0);
    (est, (sigma2 * within + multinomial).sqrt() / n_p)
}
