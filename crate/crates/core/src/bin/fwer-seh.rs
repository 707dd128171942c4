use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fwer_seh::io::{cmd_analyze, cmd_example1, cmd_simulate, AnalyzeOptions, Example1Options, SimulateOptions};
use fwer_seh::method::MethodSpec;
use fwer_seh::Result;

#[derive(Parser)]
#[command(version, about = "FWER of multi-population trial tests under subgroup effect heterogeneity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario grid and write fwer.csv and power.csv.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Test a patient-level dataset with several methods.
    Analyze {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        design: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "unadj,anova+t,anova+boot,marg+t,marg+boot,strat+boot")]
        methods: Vec<String>,
        #[arg(long, default_value_t = 0.025)]
        alpha: f64,
        #[arg(long, default_value_t = 1000)]
        n_boot: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// True FWER of the anova test when subgroup effects cancel.
    Example1 {
        #[arg(long, default_value_t = 10_000)]
        n_iter: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, seed, workers, out } => {
            let report = cmd_simulate(&SimulateOptions { config, seed, workers, out: out.clone() })?;
            let failed = report.cells.iter().filter(|c| c.error.is_some()).count();
            println!("{} rows written to {}, {failed} failed", report.cells.len(), out.display());
        }
        Command::Analyze { data, design, methods, alpha, n_boot, seed, out } => {
            let methods = methods.iter().map(|m| m.parse()).collect::<Result<Vec<MethodSpec>>>()?;
            let failed = cmd_analyze(&AnalyzeOptions { data, design, methods, alpha, n_boot, seed, out: out.clone() })?;
            println!("analysis written to {}, {failed} methods failed", out.join("analysis.csv").display());
        }
        Command::Example1 { n_iter, seed, out } => {
            for r in cmd_example1(&Example1Options { n_iter, seed, out })? {
                let target = if r.target.is_finite() { format!("{:.4}", r.target) } else { "-".into() };
                println!("{:<22} N={:<7} {:.4}  target {target}", r.quantity, r.n, r.value);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
