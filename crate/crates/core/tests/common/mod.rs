#![allow(dead_code)]

use fwer_seh::design::{CellGrid, SampleLayout, Treatment, TrialDesign, TrialSummary};

/// Summary on `design` from per-cell sizes, means and within-cell variances,
/// all listed in `design.cells()` order.
pub fn summary(design: &TrialDesign, sizes: &[f64], means: &[f64], cell_var: &[f64], known: Option<f64>) -> TrialSummary {
    let mut n = design.empty_grid();
    let mut m = design.empty_grid();
    let mut ss = CellGrid::filled(design.n_subgroups(), design.n_treatments(), 0.0);
    for (k, (i, t)) in design.cells().into_iter().enumerate() {
        n.set(i, t, sizes[k]);
        m.set(i, t, means[k]);
        if sizes[k] > 1.0 {
            ss.set(i, t, cell_var[k] * (sizes[k] - 1.0));
        }
    }
    TrialSummary::new(SampleLayout::new(n).unwrap(), m, ss, known).unwrap()
}

pub fn shifted(summary: &TrialSummary, design: &TrialDesign, shift: f64) -> TrialSummary {
    let mut m = summary.means().clone();
    for (i, t) in design.cells() {
        m.set(i, t, m.at(i, t) + shift);
    }
    TrialSummary::new(summary.layout().clone(), m, summary.ss().clone(), summary.known_variance()).unwrap()
}

pub fn with_means(summary: &TrialSummary, means: CellGrid<f64>) -> TrialSummary {
    TrialSummary::new(summary.layout().clone(), means, summary.ss().clone(), summary.known_variance()).unwrap()
}

pub const E: Treatment = Treatment(1);
pub const C: Treatment = Treatment::CONTROL;

pub mod oracles;
