use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::analysis::{run_test, AnalysisSettings};
use crate::bootstrap::BootstrapConfig;
use crate::confidence::simultaneous_lower_bounds;
use crate::error::{Error, Result};
use crate::method::MethodSpec;
use crate::numerics::{purpose, QmcSettings, RngStream};
use crate::sim::{
    noncentrality_variances, example1_analytic, run_scenario_grid, Metric, SimulationReport, EXAMPLE1_EFFECTS,
};

use super::config::{config_hash, load_design, SimulationConfig};
use super::dataset::ingest_dataset;
use super::report::{format_sig, write_metric_csv};

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

#[derive(Debug, Clone)]
pub struct SimulateOptions {
    /// Absent means the default grid.
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: usize,
    pub out: PathBuf,
}

/// Run a grid and write `fwer.csv` and `power.csv` into `out`.
pub fn cmd_simulate(opts: &SimulateOptions) -> Result<SimulationReport> {
    let cfg = match &opts.config {
        Some(p) => SimulationConfig::load(p)?,
        None => SimulationConfig::default(),
    };
    let mut grid = cfg.to_grid()?;
    if let Some(seed) = opts.seed {
        grid.seed = seed;
    }
    log::info!("config {} seed {}", config_hash(&grid)?, grid.seed);
    let report = run_scenario_grid(&grid, opts.workers)?;
    for (metric, name) in [(Metric::Fwer, "fwer.csv"), (Metric::Power, "power.csv")] {
        let mut w = create(&opts.out, name)?;
        write_metric_csv(&mut w, &report, &grid, metric)?;
        w.flush()?;
    }
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub data: PathBuf,
    pub design: PathBuf,
    pub methods: Vec<MethodSpec>,
    pub alpha: f64,
    pub n_boot: usize,
    pub seed: u64,
    pub out: PathBuf,
}

const ANALYSIS_COLUMNS: [&str; 11] = [
    "method",
    "population",
    "estimate",
    "se",
    "statistic",
    "critical_value",
    "adjusted_p",
    "rejected",
    "df",
    "lower_bound",
    "error",
];

/// Test every method on one dataset and write `analysis.csv`. A method that
/// fails gets a single row carrying the error; the others still run.
/// Returns the number of failed methods.
pub fn cmd_analyze(opts: &AnalyzeOptions) -> Result<usize> {
    if opts.methods.is_empty() {
        return Err(Error::Config("no methods given".into()));
    }
    let design = load_design(&opts.design)?;
    let data = ingest_dataset(&opts.data, &design)?;
    log::info!("{} rows, {} duplicate subject ids", data.rows, data.duplicate_subjects);
    let settings = AnalysisSettings {
        alpha: opts.alpha,
        bootstrap: BootstrapConfig::with_n_boot(opts.n_boot),
        qmc: QmcSettings::default(),
    };
    let root = RngStream::new(opts.seed);
    let mut out = create(&opts.out, "analysis.csv")?;
    writeln!(out, "# {} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "# data = {}", opts.data.display())?;
    writeln!(out, "# design = {}", opts.design.display())?;
    writeln!(out, "# alpha = {}", opts.alpha)?;
    writeln!(out, "# n_boot = {}", opts.n_boot)?;
    writeln!(out, "# seed = {}", opts.seed)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ANALYSIS_COLUMNS)?;
    let mut failed = 0;
    for (k, method) in opts.methods.iter().enumerate() {
        let stream = root.descend(&[purpose::BOOTSTRAP, k as u64]);
        match run_test(&data.summary, &design, method, &settings, &stream) {
            Ok(result) => {
                let bounds = simultaneous_lower_bounds(&result).ok();
                for (j, h) in result.hypotheses.iter().enumerate() {
                    let lower = bounds.as_ref().map_or("NA".to_string(), |b| format_sig(b.bounds[j].lower));
                    w.write_record([
                        method.name(),
                        h.population.clone(),
                        format_sig(h.estimate),
                        format_sig(h.se),
                        format_sig(h.statistic),
                        format_sig(h.critical_value),
                        format_sig(h.adjusted_p),
                        h.rejected.to_string(),
                        h.df.map_or("NA".to_string(), format_sig),
                        lower,
                        String::new(),
                    ])?;
                }
            }
            Err(e) => {
                log::warn!("{method}: {e}");
                failed += 1;
                let mut row = vec![method.name()];
                row.extend(std::iter::repeat_n("NA".to_string(), ANALYSIS_COLUMNS.len() - 2));
                row.push(e.to_string());
                w.write_record(row)?;
            }
        }
    }
    w.flush()?;
    Ok(failed)
}

#[derive(Debug, Clone)]
pub struct Example1Options {
    pub n_iter: usize,
    pub seed: u64,
    pub out: PathBuf,
}

/// One line of the `example1` summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Example1Row {
    pub quantity: &'static str,
    pub n: u64,
    pub value: f64,
    pub target: f64,
    pub mc_se: f64,
}

const VARIANCE_N: u64 = 100_000;

/// Mean true FWER of the cancelling configuration at N = 250, 500, 1000,
/// a homogeneous-null control row, and the limiting variances of the
/// noncentralities. Writes `example1.csv`.
pub fn cmd_example1(opts: &Example1Options) -> Result<Vec<Example1Row>> {
    let alpha = 0.025;
    let qmc = QmcSettings::default();
    let root = RngStream::new(opts.seed);
    let mut rows = Vec::new();
    for n in [250, 500, 1000] {
        let s = example1_analytic(n, opts.n_iter, &EXAMPLE1_EFFECTS, alpha, &qmc, &root.descend(&[purpose::EXAMPLE, n]))?;
        rows.push(Example1Row {
            quantity: "mean_true_fwer",
            n,
            value: s.mean_fwer,
            target: f64::NAN,
            mc_se: s.mc_se,
        });
    }
    let s = example1_analytic(500, opts.n_iter, &[0.0; 3], alpha, &qmc, &root.descend(&[purpose::EXAMPLE, 0]))?;
    rows.push(Example1Row {
        quantity: "homogeneous_null_fwer",
        n: 500,
        value: s.mean_fwer,
        target: alpha,
        mc_se: s.mc_se,
    });
    let (v1, v2) = noncentrality_variances(VARIANCE_N, opts.n_iter.max(2), &root.descend(&[purpose::EXAMPLE, VARIANCE_N]))?;
    rows.push(Example1Row {
        quantity: "var_nu1",
        n: VARIANCE_N,
        value: v1,
        target: 10.0 / 3.0,
        mc_se: f64::NAN,
    });
    rows.push(Example1Row {
        quantity: "var_nu2",
        n: VARIANCE_N,
        value: v2,
        target: 4.0,
        mc_se: f64::NAN,
    });

    let mut out = create(&opts.out, "example1.csv")?;
    writeln!(out, "# {} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "# alpha = {alpha}")?;
    writeln!(out, "# n_iter = {}", opts.n_iter)?;
    writeln!(out, "# seed = {}", opts.seed)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["quantity", "N", "value", "target", "mc_se"])?;
    for r in &rows {
        w.write_record([
            r.quantity.to_string(),
            r.n.to_string(),
            format_sig(r.value),
            format_sig(r.target),
            format_sig(r.mc_se),
        ])?;
    }
    w.flush()?;
    Ok(rows)
}
