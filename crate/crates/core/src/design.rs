//! Trial designs, population models and the sufficient statistics every
//! procedure works from.
//!
//! Subgroups are indexed from 0 internally. Treatments are indexed with the
//! shared control at slot 0 and experimental arms at slots `1..`.

use std::collections::HashSet;

use crate::error::{Error, Result};

/// Index of a treatment arm within a design. Slot 0 is the shared control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Treatment(pub usize);

impl Treatment {
    pub const CONTROL: Treatment = Treatment(0);

    pub fn is_control(self) -> bool {
        self.0 == 0
    }
}

/// A target population: the union of some subgroups in which one
/// experimental arm is compared with control.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub name: String,
    /// Sorted, distinct subgroup indices.
    pub subgroups: Vec<usize>,
    pub treatment: Treatment,
}

impl Population {
    pub fn contains(&self, subgroup: usize) -> bool {
        self.subgroups.binary_search(&subgroup).is_ok()
    }
}

/// Input form of a population, as read from a design file or built in code.
#[derive(Debug, Clone)]
pub struct PopulationSpec {
    pub name: String,
    pub subgroups: Vec<usize>,
    pub treatment: String,
}

impl PopulationSpec {
    pub fn new(name: impl Into<String>, subgroups: &[usize], treatment: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            subgroups: subgroups.to_vec(),
            treatment: treatment.into(),
        }
    }
}

pub const DEFAULT_CONTROL_LABEL: &str = "C";

/// The combinatorial skeleton of a multi-population trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialDesign {
    n_subgroups: usize,
    populations: Vec<Population>,
    /// Slot 0 holds the control label.
    treatment_labels: Vec<String>,
}

impl TrialDesign {
    pub fn new(n_subgroups: usize, populations: Vec<PopulationSpec>) -> Result<Self> {
        Self::with_control(n_subgroups, DEFAULT_CONTROL_LABEL, populations)
    }

    pub fn with_control(
        n_subgroups: usize,
        control_label: &str,
        populations: Vec<PopulationSpec>,
    ) -> Result<Self> {
        if n_subgroups == 0 {
            return Err(Error::Design("a design needs at least one subgroup".into()));
        }
        if populations.is_empty() {
            return Err(Error::Design("a design needs at least one population".into()));
        }
        let mut labels = vec![control_label.to_string()];
        let mut seen_sets = HashSet::new();
        let mut seen_names = HashSet::new();
        let mut pops = Vec::with_capacity(populations.len());
        for spec in populations {
            if spec.subgroups.is_empty() {
                return Err(Error::Design(format!("population {} is empty", spec.name)));
            }
            let mut subgroups = spec.subgroups.clone();
            subgroups.sort_unstable();
            subgroups.dedup();
            if let Some(&bad) = subgroups.iter().find(|&&s| s >= n_subgroups) {
                return Err(Error::Design(format!(
                    "population {} references subgroup {} outside 1..={}",
                    spec.name,
                    bad + 1,
                    n_subgroups
                )));
            }
            if !seen_sets.insert(subgroups.clone()) {
                return Err(Error::Design(format!(
                    "population {} duplicates another population's index set",
                    spec.name
                )));
            }
            if !seen_names.insert(spec.name.clone()) {
                return Err(Error::Design(format!("duplicate population name {}", spec.name)));
            }
            if spec.treatment == control_label {
                return Err(Error::Design(format!(
                    "population {} uses the reserved control label {control_label}",
                    spec.name
                )));
            }
            let slot = match labels.iter().position(|l| *l == spec.treatment) {
                Some(slot) => slot,
                None => {
                    labels.push(spec.treatment.clone());
                    labels.len() - 1
                }
            };
            pops.push(Population {
                name: spec.name,
                subgroups,
                treatment: Treatment(slot),
            });
        }
        Ok(Self {
            n_subgroups,
            populations: pops,
            treatment_labels: labels,
        })
    }

    /// Three subgroups, `P1 = {1,2,3}` and `P2 = {2,3}`, one shared arm.
    pub fn nested3() -> Self {
        Self::new(
            3,
            vec![
                PopulationSpec::new("P1", &[0, 1, 2], "E"),
                PopulationSpec::new("P2", &[1, 2], "E"),
            ],
        )
        .expect("static design is valid")
    }

    /// Three subgroups, `P1 = {1,2}` and `P2 = {2,3}`, one shared arm.
    pub fn overlapping3() -> Self {
        Self::new(
            3,
            vec![
                PopulationSpec::new("P1", &[0, 1], "E"),
                PopulationSpec::new("P2", &[1, 2], "E"),
            ],
        )
        .expect("static design is valid")
    }

    pub fn n_subgroups(&self) -> usize {
        self.n_subgroups
    }

    pub fn n_treatments(&self) -> usize {
        self.treatment_labels.len()
    }

    pub fn populations(&self) -> &[Population] {
        &self.populations
    }

    pub fn n_populations(&self) -> usize {
        self.populations.len()
    }

    pub fn population(&self, index: usize) -> Result<&Population> {
        self.populations
            .get(index)
            .ok_or_else(|| Error::Design(format!("unknown population index {index}")))
    }

    pub fn population_by_name(&self, name: &str) -> Option<usize> {
        self.populations.iter().position(|p| p.name == name)
    }

    pub fn treatment_label(&self, t: Treatment) -> &str {
        &self.treatment_labels[t.0]
    }

    pub fn control_label(&self) -> &str {
        &self.treatment_labels[0]
    }

    pub fn treatment_by_label(&self, label: &str) -> Option<Treatment> {
        self.treatment_labels
            .iter()
            .position(|l| l == label)
            .map(Treatment)
    }

    /// Whether treatment `t` is administered in subgroup `i`. Control is
    /// administered everywhere.
    pub fn administers(&self, subgroup: usize, t: Treatment) -> bool {
        t.is_control()
            || self
                .populations
                .iter()
                .any(|p| p.treatment == t && p.contains(subgroup))
    }

    /// Whether subgroup `i` belongs to at least one population.
    pub fn is_covered(&self, subgroup: usize) -> bool {
        self.populations.iter().any(|p| p.contains(subgroup))
    }

    /// All administered (subgroup, treatment) cells, ordered by subgroup and
    /// then treatment slot.
    pub fn cells(&self) -> Vec<(usize, Treatment)> {
        let mut cells = Vec::new();
        for i in 0..self.n_subgroups {
            for t in 0..self.n_treatments() {
                if self.administers(i, Treatment(t)) {
                    cells.push((i, Treatment(t)));
                }
            }
        }
        cells
    }

    /// Cells that enter at least one hypothesis test: the experimental and
    /// control cells of every subgroup of every population.
    pub fn tested_cells(&self) -> Vec<(usize, Treatment)> {
        self.cells()
            .into_iter()
            .filter(|&(i, t)| {
                self.populations
                    .iter()
                    .any(|p| p.contains(i) && (t.is_control() || p.treatment == t))
            })
            .collect()
    }

    /// Subgroups contained in every population.
    pub fn intersection(&self) -> Vec<usize> {
        (0..self.n_subgroups)
            .filter(|&i| self.populations.iter().all(|p| p.contains(i)))
            .collect()
    }

    pub fn empty_grid(&self) -> CellGrid<f64> {
        CellGrid::filled(self.n_subgroups, self.n_treatments(), 0.0)
    }
}

/// Dense subgroup × treatment table. Cells a design does not administer are
/// carried along with neutral values.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGrid<T> {
    n_subgroups: usize,
    n_treatments: usize,
    data: Vec<T>,
}

impl<T: Clone> CellGrid<T> {
    pub fn filled(n_subgroups: usize, n_treatments: usize, value: T) -> Self {
        Self {
            n_subgroups,
            n_treatments,
            data: vec![value; n_subgroups * n_treatments],
        }
    }
}

impl<T> CellGrid<T> {
    pub fn n_subgroups(&self) -> usize {
        self.n_subgroups
    }

    pub fn n_treatments(&self) -> usize {
        self.n_treatments
    }

    pub fn get(&self, subgroup: usize, t: Treatment) -> &T {
        &self.data[subgroup * self.n_treatments + t.0]
    }

    pub fn set(&mut self, subgroup: usize, t: Treatment, value: T) {
        self.data[subgroup * self.n_treatments + t.0] = value;
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn same_shape<U>(&self, other: &CellGrid<U>) -> bool {
        self.n_subgroups == other.n_subgroups && self.n_treatments == other.n_treatments
    }
}

impl CellGrid<f64> {
    pub fn at(&self, subgroup: usize, t: Treatment) -> f64 {
        self.data[subgroup * self.n_treatments + t.0]
    }
}

/// True prevalences, cell means and cell variances.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationModel {
    prevalences: Vec<f64>,
    means: CellGrid<f64>,
    variances: CellGrid<f64>,
}

impl PopulationModel {
    pub fn new(
        design: &TrialDesign,
        prevalences: Vec<f64>,
        means: CellGrid<f64>,
        variances: CellGrid<f64>,
    ) -> Result<Self> {
        check_prevalences(&prevalences, design.n_subgroups())?;
        let shape = design.empty_grid();
        if !means.same_shape(&shape) || !variances.same_shape(&shape) {
            return Err(Error::Argument(
                "mean/variance tables do not match the design".into(),
            ));
        }
        for (i, t) in design.cells() {
            if !means.at(i, t).is_finite() {
                return Err(Error::Argument(format!(
                    "mean for subgroup {} arm {} is not finite",
                    i + 1,
                    design.treatment_label(t)
                )));
            }
            let v = variances.at(i, t);
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Argument(format!(
                    "variance for subgroup {} arm {} must be positive",
                    i + 1,
                    design.treatment_label(t)
                )));
            }
        }
        Ok(Self {
            prevalences,
            means,
            variances,
        })
    }

    /// Homogeneous-variance model built from per-subgroup control means and
    /// per-subgroup effects shared by every experimental arm.
    pub fn from_subgroup_effects(
        design: &TrialDesign,
        prevalences: Vec<f64>,
        control_means: &[f64],
        effects: &[f64],
        sigma2: f64,
    ) -> Result<Self> {
        let n = design.n_subgroups();
        if control_means.len() != n || effects.len() != n {
            return Err(Error::Argument(format!(
                "expected {n} control means and effects"
            )));
        }
        let mut means = design.empty_grid();
        let mut variances = CellGrid::filled(n, design.n_treatments(), sigma2);
        for i in 0..n {
            for t in 0..design.n_treatments() {
                let t = Treatment(t);
                let m = if t.is_control() {
                    control_means[i]
                } else {
                    control_means[i] + effects[i]
                };
                means.set(i, t, m);
                variances.set(i, t, sigma2);
            }
        }
        Self::new(design, prevalences, means, variances)
    }

    pub fn prevalences(&self) -> &[f64] {
        &self.prevalences
    }

    pub fn means(&self) -> &CellGrid<f64> {
        &self.means
    }

    pub fn variances(&self) -> &CellGrid<f64> {
        &self.variances
    }

    pub fn population_prevalence(&self, pop: &Population) -> f64 {
        pop.subgroups.iter().map(|&i| self.prevalences[i]).sum()
    }

    /// Within-subgroup effect of the population's arm against control.
    pub fn subgroup_effect(&self, subgroup: usize, t: Treatment) -> f64 {
        self.means.at(subgroup, t) - self.means.at(subgroup, Treatment::CONTROL)
    }
}

pub(crate) fn check_prevalences(prevalences: &[f64], n: usize) -> Result<()> {
    if prevalences.len() != n {
        return Err(Error::Argument(format!(
            "expected {n} prevalences, got {}",
            prevalences.len()
        )));
    }
    if prevalences.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
        return Err(Error::Argument("prevalences must be strictly positive".into()));
    }
    let total: f64 = prevalences.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Argument(format!("prevalences sum to {total}, not 1")));
    }
    Ok(())
}

/// Prevalence-weighted population effect of the population's arm.
pub fn true_effect(design: &TrialDesign, model: &PopulationModel, population: usize) -> Result<f64> {
    let pop = design.population(population)?;
    let total = model.population_prevalence(pop);
    Ok(pop
        .subgroups
        .iter()
        .map(|&i| model.prevalences[i] / total * model.subgroup_effect(i, pop.treatment))
        .sum())
}

/// Per-cell sample sizes. Sizes are stored as reals so that bootstrap
/// layouts can carry fractional effective sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleLayout {
    sizes: CellGrid<f64>,
}

impl SampleLayout {
    pub fn new(sizes: CellGrid<f64>) -> Result<Self> {
        if sizes.values().iter().any(|&n| !(n >= 0.0) || !n.is_finite()) {
            return Err(Error::Argument("cell sizes must be finite and nonnegative".into()));
        }
        Ok(Self { sizes })
    }

    pub fn from_counts(design: &TrialDesign, counts: &[(usize, Treatment, u64)]) -> Result<Self> {
        let mut sizes = design.empty_grid();
        for &(i, t, n) in counts {
            if i >= design.n_subgroups() || t.0 >= design.n_treatments() {
                return Err(Error::Argument(format!("cell ({i}, {}) outside design", t.0)));
            }
            sizes.set(i, t, n as f64);
        }
        Self::new(sizes)
    }

    pub fn sizes(&self) -> &CellGrid<f64> {
        &self.sizes
    }

    pub fn cell(&self, subgroup: usize, t: Treatment) -> f64 {
        self.sizes.at(subgroup, t)
    }

    /// `n_{S_i}`: all patients of a subgroup, across arms.
    pub fn subgroup_size(&self, subgroup: usize) -> f64 {
        (0..self.sizes.n_treatments())
            .map(|t| self.sizes.at(subgroup, Treatment(t)))
            .sum()
    }

    /// `n_{P_I,T}`.
    pub fn population_arm_size(&self, pop: &Population, t: Treatment) -> f64 {
        pop.subgroups.iter().map(|&i| self.sizes.at(i, t)).sum()
    }

    /// `n_{P_I}`: all patients of the population's subgroups.
    pub fn population_size(&self, pop: &Population) -> f64 {
        pop.subgroups.iter().map(|&i| self.subgroup_size(i)).sum()
    }

    pub fn total(&self) -> f64 {
        self.sizes.values().iter().sum()
    }

    /// `delta_{S_i,T} = n_{S_i,T} / n_{S_i}`.
    pub fn allocation_rate(&self, subgroup: usize, t: Treatment) -> f64 {
        self.sizes.at(subgroup, t) / self.subgroup_size(subgroup)
    }

    /// Number of cells with at least one observation.
    pub fn occupied_cells(&self) -> usize {
        self.sizes.values().iter().filter(|&&n| n >= 1.0).count()
    }
}

/// Sufficient statistics of an observed (or simulated) trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    layout: SampleLayout,
    means: CellGrid<f64>,
    ss: CellGrid<f64>,
    known_variance: Option<f64>,
}

impl TrialSummary {
    pub fn new(
        layout: SampleLayout,
        means: CellGrid<f64>,
        ss: CellGrid<f64>,
        known_variance: Option<f64>,
    ) -> Result<Self> {
        if !means.same_shape(layout.sizes()) || !ss.same_shape(layout.sizes()) {
            return Err(Error::Argument("summary tables do not match the layout".into()));
        }
        if means.values().iter().any(|m| !m.is_finite()) {
            return Err(Error::Argument("cell means must be finite".into()));
        }
        for (idx, (&s, &n)) in ss.values().iter().zip(layout.sizes().values()).enumerate() {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::Argument(format!("sum of squares in cell {idx} is negative")));
            }
            if n <= 1.0 && s != 0.0 {
                return Err(Error::Argument(format!(
                    "cell {idx} has at most one observation but a nonzero sum of squares"
                )));
            }
        }
        if let Some(v) = known_variance {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Argument("known variance must be positive".into()));
            }
        }
        Ok(Self {
            layout,
            means,
            ss,
            known_variance,
        })
    }

    pub fn layout(&self) -> &SampleLayout {
        &self.layout
    }

    pub fn means(&self) -> &CellGrid<f64> {
        &self.means
    }

    pub fn ss(&self) -> &CellGrid<f64> {
        &self.ss
    }

    pub fn known_variance(&self) -> Option<f64> {
        self.known_variance
    }

    pub fn with_known_variance(mut self, variance: Option<f64>) -> Self {
        self.known_variance = variance;
        self
    }

    /// `sigma^2`: the known variance when present, otherwise the pooled
    /// estimate. Zero pooled variance is reported as degenerate.
    pub fn residual_variance(&self) -> Result<f64> {
        match self.known_variance {
            Some(v) => Ok(v),
            None => {
                let (v, _) = pooled_variance(self)?;
                if v <= 0.0 {
                    return Err(Error::DegenerateSample("pooled variance is zero".into()));
                }
                Ok(v)
            }
        }
    }
}

/// `Ybar_{P_I,T}`, the size-weighted mean of the population's cells.
pub fn population_mean(summary: &TrialSummary, pop: &Population, t: Treatment) -> Result<f64> {
    let n = summary.layout.population_arm_size(pop, t);
    if !(n > 0.0) {
        return Err(Error::DegenerateSample(format!(
            "population {} has no patients on arm {}",
            pop.name, t.0
        )));
    }
    Ok(pop
        .subgroups
        .iter()
        .map(|&i| summary.layout.cell(i, t) / n * summary.means.at(i, t))
        .sum())
}

/// Pooled within-cell variance and its degrees of freedom `N - s`.
pub fn pooled_variance(summary: &TrialSummary) -> Result<(f64, f64)> {
    let total = summary.layout.total();
    let s = summary.layout.occupied_cells() as f64;
    if total <= s {
        return Err(Error::InsufficientData(format!(
            "{total} observations in {s} cells leave no degrees of freedom"
        )));
    }
    let ss: f64 = summary.ss.values().iter().sum();
    let df = total - s;
    Ok((ss / df, df))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn layout_1d(design: &TrialDesign, sizes: &[(usize, usize, f64)]) -> SampleLayout {
        let mut grid = design.empty_grid();
        for &(i, t, n) in sizes {
            grid.set(i, Treatment(t), n);
        }
        SampleLayout::new(grid).unwrap()
    }

    #[test]
    fn example_one_configuration_is_a_global_null() {
        let design = TrialDesign::nested3();
        let model = PopulationModel::from_subgroup_effects(
            &design,
            vec![1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
            &[0.0; 3],
            &[0.0, 4.0, -1.0],
            0.25,
        )
        .unwrap();
        assert_abs_diff_eq!(true_effect(&design, &model, 0).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(true_effect(&design, &model, 1).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn true_effect_is_prevalence_weighted() {
        let design = TrialDesign::new(2, vec![PopulationSpec::new("all", &[0, 1], "E")]).unwrap();
        let model =
            PopulationModel::from_subgroup_effects(&design, vec![0.5, 0.5], &[3.0, -1.0], &[1.0, 3.0], 1.0)
                .unwrap();
        assert_abs_diff_eq!(true_effect(&design, &model, 0).unwrap(), 2.0, epsilon = 1e-12);
        let flat =
            PopulationModel::from_subgroup_effects(&design, vec![0.5, 0.5], &[3.0, -1.0], &[0.0, 0.0], 1.0)
                .unwrap();
        assert_eq!(true_effect(&design, &flat, 0).unwrap(), 0.0);
        assert!(matches!(true_effect(&design, &model, 5), Err(Error::Design(_))));
    }

    #[test]
    fn true_effect_is_linear_in_effects() {
        let design = TrialDesign::nested3();
        let prev = vec![0.2, 0.3, 0.5];
        let base = [0.7, -1.2, 0.4];
        let scaled: Vec<f64> = base.iter().map(|e| e * -3.5).collect();
        let m1 = PopulationModel::from_subgroup_effects(&design, prev.clone(), &[1.0, 2.0, 3.0], &base, 1.0).unwrap();
        let m2 = PopulationModel::from_subgroup_effects(&design, prev, &[1.0, 2.0, 3.0], &scaled, 1.0).unwrap();
        for p in 0..2 {
            assert_abs_diff_eq!(
                true_effect(&design, &m2, p).unwrap(),
                -3.5 * true_effect(&design, &m1, p).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn design_validation() {
        assert!(TrialDesign::new(3, vec![]).is_err());
        assert!(TrialDesign::new(3, vec![PopulationSpec::new("a", &[], "E")]).is_err());
        assert!(TrialDesign::new(3, vec![PopulationSpec::new("a", &[3], "E")]).is_err());
        assert!(TrialDesign::new(
            3,
            vec![PopulationSpec::new("a", &[0, 1], "E"), PopulationSpec::new("b", &[1, 0], "F")]
        )
        .is_err());
        assert!(TrialDesign::new(3, vec![PopulationSpec::new("a", &[0], "C")]).is_err());
        let d = TrialDesign::new(
            3,
            vec![PopulationSpec::new("a", &[0, 1], "E"), PopulationSpec::new("b", &[1, 2], "F")],
        )
        .unwrap();
        assert_eq!(d.n_treatments(), 3);
        assert!(d.administers(1, Treatment(1)) && d.administers(1, Treatment(2)));
        assert!(!d.administers(0, Treatment(2)));
        assert_eq!(d.cells().len(), 3 + 2 + 2);
        assert_eq!(d.intersection(), vec![1]);
    }

    #[test]
    fn population_means_are_size_weighted() {
        let design = TrialDesign::new(2, vec![PopulationSpec::new("all", &[0, 1], "E")]).unwrap();
        let layout = layout_1d(&design, &[(0, 0, 10.0), (1, 0, 30.0), (0, 1, 5.0), (1, 1, 5.0)]);
        let mut means = design.empty_grid();
        means.set(0, Treatment(0), 0.0);
        means.set(1, Treatment(0), 4.0);
        means.set(0, Treatment(1), 1.0);
        means.set(1, Treatment(1), 3.0);
        let summary = TrialSummary::new(layout, means, design.empty_grid(), Some(1.0)).unwrap();
        let pop = &design.populations()[0];
        assert_abs_diff_eq!(population_mean(&summary, pop, Treatment(0)).unwrap(), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(population_mean(&summary, pop, Treatment(1)).unwrap(), 2.0, epsilon = 1e-12);

        let single = PopulationSpec::new("one", &[1], "E");
        let d1 = TrialDesign::new(2, vec![single]).unwrap();
        assert_abs_diff_eq!(
            population_mean(&summary, &d1.populations()[0], Treatment(0)).unwrap(),
            4.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn empty_population_arm_is_degenerate() {
        let design = TrialDesign::new(2, vec![PopulationSpec::new("all", &[0, 1], "E")]).unwrap();
        let layout = layout_1d(&design, &[(0, 0, 10.0), (1, 0, 30.0)]);
        let summary =
            TrialSummary::new(layout, design.empty_grid(), design.empty_grid(), None).unwrap();
        let err = population_mean(&summary, &design.populations()[0], Treatment(1));
        assert!(matches!(err, Err(Error::DegenerateSample(_))));
    }

    #[test]
    fn pooled_variance_formula_and_errors() {
        let design = TrialDesign::new(1, vec![PopulationSpec::new("all", &[0], "E")]).unwrap();
        let layout = layout_1d(&design, &[(0, 0, 10.0), (0, 1, 10.0)]);
        let mut ss = design.empty_grid();
        ss.set(0, Treatment(0), 9.0);
        ss.set(0, Treatment(1), 9.0);
        let summary = TrialSummary::new(layout.clone(), design.empty_grid(), ss, None).unwrap();
        let (v, df) = pooled_variance(&summary).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
        assert_eq!(df, 18.0);

        let flat = TrialSummary::new(layout, design.empty_grid(), design.empty_grid(), None).unwrap();
        assert_eq!(pooled_variance(&flat).unwrap().0, 0.0);
        assert!(matches!(flat.residual_variance(), Err(Error::DegenerateSample(_))));
        assert_eq!(flat.clone().with_known_variance(Some(0.3)).residual_variance().unwrap(), 0.3);

        let tiny = layout_1d(&design, &[(0, 0, 1.0), (0, 1, 1.0)]);
        let s = TrialSummary::new(tiny, design.empty_grid(), design.empty_grid(), None).unwrap();
        assert!(matches!(pooled_variance(&s), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn summary_rejects_ss_in_singleton_cells() {
        let design = TrialDesign::new(1, vec![PopulationSpec::new("all", &[0], "E")]).unwrap();
        let layout = layout_1d(&design, &[(0, 0, 1.0), (0, 1, 3.0)]);
        let mut ss = design.empty_grid();
        ss.set(0, Treatment(0), 0.5);
        assert!(TrialSummary::new(layout, design.empty_grid(), ss, None).is_err());
    }

    #[test]
    fn layout_accessors() {
        let design = TrialDesign::nested3();
        let layout = layout_1d(
            &design,
            &[(0, 0, 5.0), (0, 1, 5.0), (1, 0, 4.0), (1, 1, 8.0), (2, 0, 10.0), (2, 1, 10.0)],
        );
        assert_eq!(layout.total(), 42.0);
        assert_eq!(layout.subgroup_size(1), 12.0);
        assert_abs_diff_eq!(layout.allocation_rate(1, Treatment(1)), 2.0 / 3.0, epsilon = 1e-15);
        let p2 = &design.populations()[1];
        assert_eq!(layout.population_arm_size(p2, Treatment(1)), 18.0);
        assert_eq!(layout.population_size(p2), 32.0);
        for i in 0..3 {
            let sum: f64 = (0..2).map(|t| layout.allocation_rate(i, Treatment(t))).sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn prevalences_must_be_on_the_simplex() {
        let design = TrialDesign::nested3();
        let bad = PopulationModel::from_subgroup_effects(&design, vec![0.5, 0.5, 0.0], &[0.0; 3], &[0.0; 3], 1.0);
        assert!(bad.is_err());
        let bad = PopulationModel::from_subgroup_effects(&design, vec![0.5, 0.5, 0.1], &[0.0; 3], &[0.0; 3], 1.0);
        assert!(bad.is_err());
    }
}
