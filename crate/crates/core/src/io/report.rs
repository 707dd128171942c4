use std::io::Write;

use crate::error::Result;
use crate::sim::{GridSpec, Metric, SimulationReport};

use super::config::{canonical_grid, config_hash};

pub const REPORT_COLUMNS: [&str; 9] = ["N", "alloc", "EHF", "CHF", "method", "estimate", "mc_se", "n_studies", "n_runs"];

/// Fixed six significant digits in positional notation.
pub fn format_sig(x: f64) -> String {
    if !x.is_finite() {
        return "NaN".into();
    }
    if x == 0.0 {
        return "0".into();
    }
    // exponent after rounding to six digits, so 9.9999996 counts as 10
    let sci = format!("{x:.5e}");
    let exp: i32 = sci.split('e').nth(1).and_then(|e| e.parse().ok()).unwrap_or(0);
    let decimals = (5 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

fn metric_name(m: Metric) -> &'static str {
    match m {
        Metric::Fwer => "fwer",
        Metric::Power => "power",
    }
}

/// One report table with a `#` header block holding the version, metric,
/// seed, config hash and the full canonical config.
pub fn write_metric_csv<W: Write>(mut out: W, report: &SimulationReport, grid: &GridSpec, metric: Metric) -> Result<()> {
    writeln!(out, "# {} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "# metric = {}", metric_name(metric))?;
    writeln!(out, "# seed = {}", grid.seed)?;
    writeln!(out, "# config_sha256 = {}", config_hash(grid)?)?;
    for line in canonical_grid(grid)?.lines() {
        writeln!(out, "# config: {line}")?;
    }
    for c in report.rows(metric).filter(|c| c.error.is_some()) {
        writeln!(
            out,
            "# failed: N={} alloc={} EHF={} CHF={} method={}: {}",
            c.n,
            c.allocation,
            c.ehf,
            c.chf,
            c.method,
            c.error.as_deref().unwrap_or("")
        )?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_COLUMNS)?;
    for c in report.rows(metric) {
        w.write_record([
            c.n.to_string(),
            c.allocation.to_string(),
            c.ehf.to_string(),
            c.chf.to_string(),
            c.method.name(),
            format_sig(c.estimate),
            format_sig(c.mc_se),
            c.n_studies.to_string(),
            c.n_runs.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
