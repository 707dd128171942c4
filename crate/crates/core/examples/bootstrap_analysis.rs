//! Simulate one trial with heterogeneous subgroup effects that cancel in
//! both populations, then test it with every method. The bootstrap
//! replicates the strata-size fluctuation that the t approximation ignores.

use fwer_seh::analysis::{run_test, AnalysisSettings};
use fwer_seh::bootstrap::{bootstrap_distribution, bootstrap_critical_value, project_to_null, BootstrapConfig};
use fwer_seh::design::TrialDesign;
use fwer_seh::method::MethodSpec;
use fwer_seh::numerics::{purpose, RngStream};
use fwer_seh::sim::{draw_layout, simulate_summary, solve_null_effects, Allocation, StudyConfig};

fn main() -> fwer_seh::Result<()> {
    let design = TrialDesign::nested3();
    let prevalences = vec![0.2, 0.3, 0.5];
    // the overlap effect is fixed, the others solve the null system
    let effects = solve_null_effects(&prevalences, &design, 3.0)?;
    let study = StudyConfig::new(&design, prevalences.clone(), vec![0.0, 1.0, 2.0], effects.clone(), 0.25)?;
    println!("subgroup effects {effects:.3?}, population effects {:.1?}", study.population_effects(&design));

    let root = RngStream::new(11);
    let mut rng = root.child(purpose::DATA).rng();
    let (layout, _) = draw_layout(&design, &prevalences, 500, Allocation::A, &mut rng)?;
    let summary = simulate_summary(&design, &study.model, &layout, &mut rng)?;

    let projection = project_to_null(&summary, &design)?;
    println!("null projection residual {:.1e}", projection.constraint_residual);

    let settings = AnalysisSettings::default();
    for method in MethodSpec::table_methods() {
        let r = run_test(&summary, &design, &method, &settings, &root.child(purpose::BOOTSTRAP))?;
        let line: Vec<String> = r
            .hypotheses
            .iter()
            .map(|h| format!("{}: z={:+.2} c={:.2} p={:.3}", h.population, h.statistic, h.critical_value, h.adjusted_p))
            .collect();
        println!("{:<14} {}", method.name(), line.join("  "));
    }

    let sample = bootstrap_distribution(
        &summary,
        &design,
        &MethodSpec::anova_boot(),
        &BootstrapConfig::with_n_boot(2000),
        &root.child(purpose::BOOTSTRAP),
    )?;
    let c = bootstrap_critical_value(&sample.max_stats, 0.025)?;
    println!("anova max-statistic critical value from 2000 replicates: {c:.3}");
    Ok(())
}
