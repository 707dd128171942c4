//! Simultaneous one-sided lower bounds that agree with the test decisions.

use fwer_seh::analysis::{run_test, AnalysisSettings};
use fwer_seh::confidence::simultaneous_lower_bounds;
use fwer_seh::design::TrialDesign;
use fwer_seh::method::MethodSpec;
use fwer_seh::numerics::{purpose, RngStream};
use fwer_seh::sim::{draw_layout, simulate_summary, Allocation, StudyConfig};

fn main() -> fwer_seh::Result<()> {
    let design = TrialDesign::overlapping3();
    let prevalences = vec![0.3, 0.3, 0.4];
    let study = StudyConfig::new(&design, prevalences.clone(), vec![0.0; 3], vec![0.15, 0.1, -0.05], 0.25)?;
    let truth = study.population_effects(&design);

    let root = RngStream::new(3);
    let mut rng = root.child(purpose::DATA).rng();
    let (layout, _) = draw_layout(&design, &prevalences, 400, Allocation::A, &mut rng)?;
    let summary = simulate_summary(&design, &study.model, &layout, &mut rng)?;

    let settings = AnalysisSettings::default();
    for method in [MethodSpec::anova_t(), MethodSpec::marg_t(), MethodSpec::strat_boot()] {
        let result = run_test(&summary, &design, &method, &settings, &root.child(purpose::BOOTSTRAP))?;
        let set = simultaneous_lower_bounds(&result)?;
        println!("{} (covers truth: {})", method.name(), set.covers(&truth));
        for (b, h) in set.bounds.iter().zip(&result.hypotheses) {
            println!(
                "  {}: estimate {:.3}  lower bound {:+.3}  rejected {}  true {:.3}",
                b.population, b.estimate, b.lower, h.rejected, truth[design.population_by_name(&b.population).unwrap()]
            );
        }
    }
    Ok(())
}
