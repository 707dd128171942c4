//! Per-study scenario draws and per-run trial draws.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::design::{CellGrid, PopulationModel, SampleLayout, Treatment, TrialDesign, TrialSummary};
use crate::error::{Error, Result};
use crate::numerics::{multinomial_into, normal_sample, scaled_chi_square, uniform_sample};

use super::Allocation;

const MAX_ALT_ATTEMPTS: usize = 1_000_000;
pub const MAX_LAYOUT_REDRAWS: usize = 1000;

/// Three uniforms normalized to the simplex.
pub fn gen_prevalences<R: Rng + ?Sized>(rng: &mut R) -> Vec<f64> {
    loop {
        let u: Vec<f64> = (0..3).map(|_| uniform_sample(rng)).collect();
        let total: f64 = u.iter().sum();
        if total > 0.0 && u.iter().all(|&x| x > 0.0) {
            return u.iter().map(|x| x / total).collect();
        }
    }
}

/// The subgroup whose effect seeds the null system: the first one shared by
/// all populations.
fn seed_subgroup(design: &TrialDesign) -> Result<usize> {
    design
        .intersection()
        .first()
        .copied()
        .ok_or_else(|| Error::Design("populations share no subgroup".into()))
}

/// Subgroup effects with every population effect exactly zero, given the
/// effect of the overlap subgroup.
pub fn solve_null_effects(prevalences: &[f64], design: &TrialDesign, seed_effect: f64) -> Result<Vec<f64>> {
    let n = design.n_subgroups();
    if prevalences.len() != n {
        return Err(Error::Argument("one prevalence per subgroup".into()));
    }
    let seed = seed_subgroup(design)?;
    let free: Vec<usize> = (0..n).filter(|&i| i != seed && design.is_covered(i)).collect();
    let m = design.n_populations();
    if free.len() != m {
        return Err(Error::Generation(format!(
            "{m} population constraints cannot fix {} free effects uniquely",
            free.len()
        )));
    }
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut b = DVector::<f64>::zeros(m);
    for (row, pop) in design.populations().iter().enumerate() {
        for (col, &i) in free.iter().enumerate() {
            if pop.contains(i) {
                a[(row, col)] = prevalences[i];
            }
        }
        if pop.contains(seed) {
            b[row] = -prevalences[seed] * seed_effect;
        }
    }
    let solution = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Generation("null effect system is singular".into()))?;
    let mut effects = vec![0.0; n];
    effects[seed] = seed_effect;
    for (col, &i) in free.iter().enumerate() {
        effects[i] = solution[col];
    }
    Ok(effects)
}

/// Null effects with the overlap effect drawn from `U[-1, 1] * ehf`.
pub fn gen_null_effects<R: Rng + ?Sized>(
    prevalences: &[f64],
    design: &TrialDesign,
    ehf: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let u = 2.0 * uniform_sample(rng) - 1.0;
    solve_null_effects(prevalences, design, u * ehf)
}

fn population_effects(prevalences: &[f64], design: &TrialDesign, effects: &[f64]) -> Vec<f64> {
    design
        .populations()
        .iter()
        .map(|p| {
            let mass: f64 = p.subgroups.iter().map(|&i| prevalences[i]).sum();
            p.subgroups.iter().map(|&i| prevalences[i] * effects[i]).sum::<f64>() / mass
        })
        .collect()
}

/// Effects drawn i.i.d. from `U[-ehf, ehf]` until every subgroup effect,
/// and hence every population effect, is positive. The acceptance region is
/// a cone, so the accepted draw scales linearly with `ehf` for a fixed
/// stream.
pub fn gen_alt_effects<R: Rng + ?Sized>(
    prevalences: &[f64],
    design: &TrialDesign,
    ehf: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(ehf > 0.0) {
        return Err(Error::Argument("alternative effects need EHF > 0".into()));
    }
    let n = design.n_subgroups();
    for _ in 0..MAX_ALT_ATTEMPTS {
        let unit: Vec<f64> = (0..n).map(|_| 2.0 * uniform_sample(rng) - 1.0).collect();
        let positive = (0..n).filter(|&i| design.is_covered(i)).all(|i| unit[i] > 0.0);
        if positive && population_effects(prevalences, design, &unit).iter().all(|&t| t > 0.0) {
            return Ok(unit.iter().map(|u| u * ehf).collect());
        }
    }
    Err(Error::Generation(format!(
        "no alternative configuration after {MAX_ALT_ATTEMPTS} attempts"
    )))
}

/// `(0, chf, 2 chf)` in subgroup order.
pub fn gen_control_means(chf: f64, n_subgroups: usize) -> Vec<f64> {
    (0..n_subgroups).map(|i| i as f64 * chf).collect()
}

/// Exact arm sizes of a stratum of size `n`: `ratio * n` experimental, the
/// rest control. Sizes may be fractional; the simulation only needs them as
/// variance scales, and exact shares keep the pooled contrasts free of
/// control-level differences between strata.
pub fn split_stratum(n: u64, ratio: f64) -> (f64, f64) {
    let e = ratio * n as f64;
    (e, n as f64 - e)
}

fn two_arm(design: &TrialDesign) -> Result<()> {
    if design.n_treatments() != 2 {
        return Err(Error::Unsupported(
            "allocation patterns are defined for one experimental arm".into(),
        ));
    }
    Ok(())
}

/// One draw of the cell sizes; may contain empty cells.
pub fn draw_layout_once<R: Rng + ?Sized>(
    design: &TrialDesign,
    prevalences: &[f64],
    n_total: u64,
    allocation: Allocation,
    rng: &mut R,
) -> Result<SampleLayout> {
    two_arm(design)?;
    let n = design.n_subgroups();
    let e = Treatment(1);
    let c = Treatment::CONTROL;
    let mut sizes = design.empty_grid();
    match allocation {
        Allocation::D => {
            // all cells at once, each subgroup's mass split over its arms
            let cells: Vec<(usize, Treatment)> = (0..n).flat_map(|i| [(i, e), (i, c)]).collect();
            let probs: Vec<f64> = cells.iter().map(|&(i, _)| prevalences[i] / 2.0).collect();
            let mut counts = vec![0; cells.len()];
            multinomial_into(rng, n_total, &probs, &mut counts)?;
            for (&(i, t), &k) in cells.iter().zip(&counts) {
                sizes.set(i, t, k as f64);
            }
        }
        _ => {
            let mut counts = vec![0; n];
            multinomial_into(rng, n_total, prevalences, &mut counts)?;
            let inter = design.intersection();
            for i in 0..n {
                let ratio = match allocation {
                    Allocation::A => 0.5,
                    Allocation::B => 2.0 / 3.0,
                    _ if inter.contains(&i) => 2.0 / 3.0,
                    _ => 0.5,
                };
                let (ne, nc) = split_stratum(counts[i], ratio);
                sizes.set(i, e, ne);
                sizes.set(i, c, nc);
            }
        }
    }
    SampleLayout::new(sizes)
}

/// Redraws until every tested cell has a patient. Returns the layout and the
/// number of redraws.
pub fn draw_layout<R: Rng + ?Sized>(
    design: &TrialDesign,
    prevalences: &[f64],
    n_total: u64,
    allocation: Allocation,
    rng: &mut R,
) -> Result<(SampleLayout, usize)> {
    if n_total == 0 {
        return Err(Error::Argument("total sample size must be positive".into()));
    }
    let tested = design.tested_cells();
    for redraws in 0..=MAX_LAYOUT_REDRAWS {
        let layout = draw_layout_once(design, prevalences, n_total, allocation, rng)?;
        if tested.iter().all(|&(i, t)| layout.cell(i, t) >= 1.0) {
            return Ok((layout, redraws));
        }
    }
    Err(Error::Generation(format!(
        "layout still had empty cells after {MAX_LAYOUT_REDRAWS} redraws"
    )))
}

/// Sufficient statistics of one simulated trial: cell means from
/// `N(mu, sigma^2 / n)` and sums of squares from `sigma^2 chi^2_{n-1}`.
pub fn simulate_summary<R: Rng + ?Sized>(
    design: &TrialDesign,
    model: &PopulationModel,
    layout: &SampleLayout,
    rng: &mut R,
) -> Result<TrialSummary> {
    let mut means = design.empty_grid();
    let mut ss = CellGrid::filled(design.n_subgroups(), design.n_treatments(), 0.0);
    let mut common = None;
    for (i, t) in design.cells() {
        let n = layout.cell(i, t);
        let var = model.variances().at(i, t);
        common = match common {
            None => Some(var),
            Some(v) if v == var => Some(v),
            _ => Some(f64::NAN),
        };
        if n >= 1.0 {
            means.set(i, t, normal_sample(rng, model.means().at(i, t), (var / n).sqrt()));
            ss.set(i, t, scaled_chi_square(rng, var, n - 1.0));
        }
    }
    let known = common.filter(|v| v.is_finite());
    TrialSummary::new(layout.clone(), means, ss, known)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;
    use approx::assert_abs_diff_eq;

    #[test]
    fn example_one_null_system() {
        let d = TrialDesign::nested3();
        let e = solve_null_effects(&[1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], &d, 4.0).unwrap();
        assert_abs_diff_eq!(e[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e[1], 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e[2], -1.0, epsilon = 1e-12);
        let o = TrialDesign::overlapping3();
        let e = solve_null_effects(&[0.2, 0.5, 0.3], &o, 1.0).unwrap();
        assert_abs_diff_eq!(e[0], -2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(e[2], -0.5 / 0.3, epsilon = 1e-12);
    }

    #[test]
    fn exact_shares() {
        assert_eq!(split_stratum(9, 2.0 / 3.0), (6.0, 3.0));
        assert_eq!(split_stratum(10, 0.5), (5.0, 5.0));
        assert_eq!(split_stratum(1, 0.5), (0.5, 0.5));
        assert_eq!(split_stratum(5, 0.5), (2.5, 2.5));
    }

    #[test]
    fn degenerate_prevalence_layout() {
        let d = TrialDesign::new(1, vec![crate::design::PopulationSpec::new("P", &[0], "E")]).unwrap();
        let mut rng = RngStream::new(3).rng();
        let l = draw_layout_once(&d, &[1.0], 10, Allocation::A, &mut rng).unwrap();
        assert_eq!(l.cell(0, Treatment(1)), 5.0);
        assert_eq!(l.cell(0, Treatment(0)), 5.0);
    }

    #[test]
    fn control_pattern() {
        assert_eq!(gen_control_means(10.0, 3), vec![0.0, 10.0, 20.0]);
        assert_eq!(gen_control_means(0.0, 3), vec![0.0; 3]);
    }
}
