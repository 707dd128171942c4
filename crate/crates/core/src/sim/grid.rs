use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::method::MethodSpec;

use super::run::{simulate_rates, StudyConfig};
use super::{Allocation, Metric, ScenarioSpec, Structure};

/// Full factorial over N, allocation, EHF and CHF. Every method runs on
/// every cell with common random numbers. Power cells with `EHF = 0` are
/// skipped since no alternative exists there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub structure: Structure,
    pub n: Vec<u64>,
    pub allocation: Vec<Allocation>,
    pub ehf: Vec<f64>,
    pub chf: Vec<f64>,
    pub alpha: f64,
    pub sigma2: f64,
    pub n_studies: usize,
    pub n_runs: usize,
    pub n_boot: usize,
    #[serde(with = "method_names")]
    pub methods: Vec<MethodSpec>,
    pub seed: u64,
    pub fwer: bool,
    pub power: bool,
}

mod method_names {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::method::MethodSpec;

    pub fn serialize<S: Serializer>(methods: &[MethodSpec], s: S) -> Result<S::Ok, S::Error> {
        methods.iter().map(|m| m.name()).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<MethodSpec>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|n| n.parse().map_err(serde::de::Error::custom))
            .collect()
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        let s = ScenarioSpec::default();
        Self {
            structure: s.structure,
            n: vec![s.n],
            allocation: vec![s.allocation],
            ehf: vec![0.0, 1.0, 10.0],
            chf: vec![0.0, 1.0, 10.0],
            alpha: s.alpha,
            sigma2: s.sigma2,
            n_studies: s.n_studies,
            n_runs: s.n_runs,
            n_boot: s.n_boot,
            methods: s.methods,
            seed: s.seed,
            fwer: true,
            power: true,
        }
    }
}

impl GridSpec {
    /// The scenarios of one metric in report order.
    pub fn scenarios(&self, metric: Metric) -> Vec<ScenarioSpec> {
        let on = match metric {
            Metric::Fwer => self.fwer,
            Metric::Power => self.power,
        };
        if !on {
            return Vec::new();
        }
        let mut n = self.n.clone();
        n.sort_unstable();
        n.dedup();
        let mut alloc = self.allocation.clone();
        alloc.sort_unstable();
        alloc.dedup();
        let sorted = |v: &[f64]| {
            let mut v = v.to_vec();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let (ehf, chf) = (sorted(&self.ehf), sorted(&self.chf));
        let mut out = Vec::new();
        for &n in &n {
            for &allocation in &alloc {
                for &e in &ehf {
                    if metric == Metric::Power && e == 0.0 {
                        continue;
                    }
                    for &c in &chf {
                        out.push(ScenarioSpec {
                            structure: self.structure,
                            ehf: e,
                            chf: c,
                            n,
                            allocation,
                            alpha: self.alpha,
                            sigma2: self.sigma2,
                            n_studies: self.n_studies,
                            n_runs: self.n_runs,
                            n_boot: self.n_boot,
                            methods: self.methods.clone(),
                            seed: self.seed,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.n.is_empty() || self.allocation.is_empty() || self.ehf.is_empty() || self.chf.is_empty() {
            return Err(Error::Config("every grid axis needs at least one value".into()));
        }
        if !self.fwer && !self.power {
            return Err(Error::Config("no metric selected".into()));
        }
        for m in [Metric::Fwer, Metric::Power] {
            for s in self.scenarios(m) {
                s.validate()?;
            }
        }
        Ok(())
    }
}

/// One row of a report: one metric of one method in one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub metric: Metric,
    pub n: u64,
    pub allocation: Allocation,
    pub ehf: f64,
    pub chf: f64,
    pub method: MethodSpec,
    /// Mean of the per-study rates; NaN for a failed cell.
    pub estimate: f64,
    /// Standard error of that mean across studies.
    pub mc_se: f64,
    pub per_study: Vec<f64>,
    pub n_studies: usize,
    pub n_runs: usize,
    /// Studies dropped because no usable layout could be drawn.
    pub excluded: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimulationReport {
    pub cells: Vec<CellSummary>,
}

impl SimulationReport {
    pub fn rows(&self, metric: Metric) -> impl Iterator<Item = &CellSummary> {
        self.cells.iter().filter(move |c| c.metric == metric)
    }

    pub fn find(
        &self,
        metric: Metric,
        n: u64,
        allocation: Allocation,
        ehf: f64,
        chf: f64,
        method: &MethodSpec,
    ) -> Option<&CellSummary> {
        self.cells.iter().find(|c| {
            c.metric == metric
                && c.n == n
                && c.allocation == allocation
                && c.ehf == ehf
                && c.chf == chf
                && c.method == *method
        })
    }
}

enum StudyOutcome {
    Rates(Vec<f64>),
    Excluded,
    Failed(String),
}

fn run_study(spec: &ScenarioSpec, metric: Metric, index: u64) -> StudyOutcome {
    let design = spec.structure.design();
    let study = match metric {
        Metric::Fwer => StudyConfig::null(spec, &design, index),
        Metric::Power => StudyConfig::alternative(spec, &design, index),
    };
    let result = study.and_then(|s| simulate_rates(&s, spec, metric, index));
    match result {
        Ok(r) => StudyOutcome::Rates(r),
        Err(Error::Generation(msg)) => {
            log::warn!("study {index} excluded: {msg}");
            StudyOutcome::Excluded
        }
        Err(e) => StudyOutcome::Failed(e.to_string()),
    }
}

fn summarize(spec: &ScenarioSpec, metric: Metric, outcomes: Vec<StudyOutcome>) -> Vec<CellSummary> {
    let mut rates: Vec<Vec<f64>> = vec![Vec::new(); spec.methods.len()];
    let mut excluded = 0;
    let mut error = None;
    for o in outcomes {
        match o {
            StudyOutcome::Rates(r) => {
                for (acc, v) in rates.iter_mut().zip(r) {
                    acc.push(v);
                }
            }
            StudyOutcome::Excluded => excluded += 1,
            StudyOutcome::Failed(msg) => {
                error.get_or_insert(msg);
            }
        }
    }
    if error.is_none() && rates[0].is_empty() {
        error = Some("every study was excluded".to_string());
    }
    spec.methods
        .iter()
        .zip(rates)
        .map(|(method, per_study)| {
            let k = per_study.len();
            let (estimate, mc_se) = if error.is_some() {
                (f64::NAN, f64::NAN)
            } else {
                let mean = per_study.iter().sum::<f64>() / k as f64;
                let var = if k > 1 {
                    per_study.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64
                } else {
                    0.0
                };
                (mean, (var / k as f64).sqrt())
            };
            CellSummary {
                metric,
                n: spec.n,
                allocation: spec.allocation,
                ehf: spec.ehf,
                chf: spec.chf,
                method: *method,
                estimate,
                mc_se,
                n_studies: k,
                per_study,
                n_runs: spec.n_runs,
                excluded,
                error: error.clone(),
            }
        })
        .collect()
}

/// Run every scenario of the grid on `workers` threads. Studies are the unit
/// of parallel work and every random draw is keyed by (seed, study, run,
/// replicate), so the report does not depend on `workers`.
pub fn run_scenario_grid(grid: &GridSpec, workers: usize) -> Result<SimulationReport> {
    grid.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let scenarios: Vec<(Metric, ScenarioSpec)> = [Metric::Fwer, Metric::Power]
        .into_iter()
        .flat_map(|m| grid.scenarios(m).into_iter().map(move |s| (m, s)))
        .collect();
    let tasks: Vec<(usize, u64)> = (0..scenarios.len())
        .flat_map(|c| (0..grid.n_studies as u64).map(move |s| (c, s)))
        .collect();
    let done = AtomicUsize::new(0);
    let total = tasks.len();
    let outcomes: Vec<StudyOutcome> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(c, s)| {
                let (metric, spec) = &scenarios[c];
                let out = run_study(spec, *metric, s);
                let k = done.fetch_add(1, Ordering::Relaxed) + 1;
                if k % grid.n_studies.max(1) == 0 {
                    log::info!("{k}/{total} studies done");
                }
                out
            })
            .collect()
    });
    let mut outcomes = outcomes.into_iter();
    let mut report = SimulationReport::default();
    for (metric, spec) in &scenarios {
        let chunk: Vec<StudyOutcome> = outcomes.by_ref().take(grid.n_studies).collect();
        report.cells.extend(summarize(spec, *metric, chunk));
    }
    Ok(report)
}
