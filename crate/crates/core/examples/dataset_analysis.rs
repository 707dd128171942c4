//! Patient-level CSV in, per-method decisions and bounds out. The data are
//! synthetic; the same file can be fed to `fwer-seh analyze`.

use fwer_seh::analysis::{run_test, AnalysisSettings};
use fwer_seh::design::TrialDesign;
use fwer_seh::io::{ingest_reader, write_dataset, DatasetRow};
use fwer_seh::method::MethodSpec;
use fwer_seh::numerics::{normal_sample, RngStream};

fn main() -> fwer_seh::Result<()> {
    let design = TrialDesign::nested3();
    let mut rng = RngStream::new(5).rng();
    let mut rows = Vec::new();
    // subgroup sizes per arm and the true experimental shift in each
    for (subgroup, n, shift) in [(1, 30, 0.1), (2, 45, 0.35), (3, 75, 0.25)] {
        for arm in ["C", "E"] {
            for k in 0..n {
                let mean = if arm == "E" { shift } else { 0.0 };
                rows.push(DatasetRow {
                    subject: format!("s{subgroup}{arm}{k:03}"),
                    subgroup,
                    treatment: arm.to_string(),
                    response: normal_sample(&mut rng, mean, 0.5),
                });
            }
        }
    }
    let mut csv = Vec::new();
    write_dataset(&mut csv, &rows)?;
    println!("{}", String::from_utf8_lossy(&csv).lines().take(3).collect::<Vec<_>>().join("\n"));

    let data = ingest_reader(csv.as_slice(), &design)?;
    println!("{} rows, {} duplicate ids", data.rows, data.duplicate_subjects);

    let settings = AnalysisSettings::default();
    let stream = RngStream::new(1);
    for method in [MethodSpec::unadjusted(), MethodSpec::anova_t(), MethodSpec::marg_t(), MethodSpec::strat_boot()] {
        let r = run_test(&data.summary, &design, &method, &settings, &stream)?;
        for h in &r.hypotheses {
            println!(
                "{:<12} {}  estimate {:.3}  se {:.3}  p {:.4}  reject {}",
                method.name(),
                h.population,
                h.estimate,
                h.se,
                h.adjusted_p,
                h.rejected
            );
        }
    }
    Ok(())
}
