//! A small FWER and power grid, written in the same CSV format as the
//! `simulate` subcommand.
//!
//! `cargo run --release --example scenario_grid`

use fwer_seh::io::write_metric_csv;
use fwer_seh::method::MethodSpec;
use fwer_seh::sim::{run_scenario_grid, GridSpec, Metric};

fn main() -> fwer_seh::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let grid = GridSpec {
        ehf: vec![0.0, 10.0],
        chf: vec![0.0, 10.0],
        n_studies: 8,
        n_runs: 100,
        n_boot: 200,
        methods: vec![MethodSpec::anova_t(), MethodSpec::anova_boot(), MethodSpec::marg_t(), MethodSpec::strat_boot()],
        ..GridSpec::default()
    };
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let report = run_scenario_grid(&grid, workers)?;
    let stdout = std::io::stdout();
    for metric in [Metric::Fwer, Metric::Power] {
        write_metric_csv(stdout.lock(), &report, &grid, metric)?;
        println!();
    }
    Ok(())
}
