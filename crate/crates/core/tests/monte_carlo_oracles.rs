use fwer_seh::design::{CellGrid, PopulationModel, SampleLayout, Treatment, TrialDesign};
use fwer_seh::numerics::{normal_sample, RngStream};
use fwer_seh::procedures::{anova_correlation, heterogeneous_correlation, stratified_statistics};
use fwer_seh::sim::{draw_layout, simulate_summary, Allocation};

fn variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)
}

fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    cov / (x.iter().map(|a| (a - mx).powi(2)).sum::<f64>() * y.iter().map(|b| (b - my).powi(2)).sum::<f64>()).sqrt()
}

#[test]
fn stratified_se_matches_monte_carlo_variance() {
    let trials = 100_000;
    for (design, prev, effects) in [
        (TrialDesign::nested3(), vec![0.2, 0.3, 0.5], vec![2.0, -1.0, 0.5]),
        (TrialDesign::overlapping3(), vec![0.4, 0.25, 0.35], vec![1.5, 0.0, -2.0]),
    ] {
        let model = PopulationModel::from_subgroup_effects(&design, prev.clone(), &[0.0, 1.0, 2.0], &effects, 0.25).unwrap();
        let mut rng = RngStream::new(17).rng();
        let d = design.n_populations();
        let mut est = vec![Vec::with_capacity(trials); d];
        let mut se2 = vec![0.0; d];
        for _ in 0..trials {
            let (layout, _) = draw_layout(&design, &prev, 500, Allocation::A, &mut rng).unwrap();
            let s = simulate_summary(&design, &model, &layout, &mut rng).unwrap();
            let stats = stratified_statistics(&s, &design).unwrap();
            for k in 0..d {
                est[k].push(stats.estimates[k]);
                se2[k] += stats.se[k].powi(2) / trials as f64;
            }
        }
        for k in 0..d {
            let mc = variance(&est[k]);
            let rel = (se2[k] - mc).abs() / mc;
            assert!(rel < 0.03, "population {k}: mean SE^2 {} vs MC variance {mc}", se2[k]);
        }
    }
}

fn contrast_correlation(design: &TrialDesign, layout: &SampleLayout, cell_var: &CellGrid<f64>, draws: usize) -> f64 {
    let mut rng = RngStream::new(3).rng();
    let mut means = design.empty_grid();
    let (mut z1, mut z2) = (Vec::with_capacity(draws), Vec::with_capacity(draws));
    let pops = design.populations();
    for _ in 0..draws {
        for (i, t) in design.cells() {
            means.set(i, t, normal_sample(&mut rng, 0.0, (cell_var.at(i, t) / layout.cell(i, t)).sqrt()));
        }
        let diff = |k: usize| {
            let p = &pops[k];
            let arm = |t: Treatment| {
                let n = layout.population_arm_size(p, t);
                p.subgroups.iter().map(|&i| layout.cell(i, t) / n * means.at(i, t)).sum::<f64>()
            };
            arm(p.treatment) - arm(Treatment::CONTROL)
        };
        z1.push(diff(0));
        z2.push(diff(1));
    }
    correlation(&z1, &z2)
}

#[test]
fn contrast_correlations_match_monte_carlo() {
    let draws = 100_000;
    for design in [TrialDesign::nested3(), TrialDesign::overlapping3()] {
        let mut sizes = design.empty_grid();
        for (k, (i, t)) in design.cells().into_iter().enumerate() {
            sizes.set(i, t, [40.0, 25.0, 60.0, 90.0, 120.0, 70.0][k]);
        }
        let layout = SampleLayout::new(sizes).unwrap();
        let flat = CellGrid::filled(3, 2, 1.0);
        let mc = contrast_correlation(&design, &layout, &flat, draws);
        let formula = anova_correlation(&layout, &design).unwrap().get(0, 1);
        assert!((mc - formula).abs() < 0.01, "homogeneous: {mc} vs {formula}");

        let mut het = design.empty_grid();
        for (k, (i, t)) in design.cells().into_iter().enumerate() {
            het.set(i, t, [0.3, 2.0, 1.0, 0.5, 4.0, 0.2][k]);
        }
        let mc = contrast_correlation(&design, &layout, &het, draws);
        let formula = heterogeneous_correlation(&layout, &het, &design).unwrap().get(0, 1);
        assert!((mc - formula).abs() < 0.01, "heterogeneous: {mc} vs {formula}");
    }
}
