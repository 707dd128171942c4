use crate::bootstrap::{bootstrap_decisions, BootstrapConfig};
use crate::design::{PopulationModel, TrialDesign, TrialSummary};
use crate::error::{Error, Result};
use crate::method::{Calibration, MethodSpec};
use crate::numerics::{purpose, QmcSettings, RngStream};
use crate::procedures::{analytic_decisions, statistics};

use super::generate::{draw_layout, gen_alt_effects, gen_control_means, gen_null_effects, gen_prevalences, simulate_summary};
use super::{Metric, ScenarioSpec};

/// One simulated study: prevalences, subgroup effects and control means.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub prevalences: Vec<f64>,
    pub effects: Vec<f64>,
    pub control_means: Vec<f64>,
    pub model: PopulationModel,
}

impl StudyConfig {
    pub fn new(
        design: &TrialDesign,
        prevalences: Vec<f64>,
        control_means: Vec<f64>,
        effects: Vec<f64>,
        sigma2: f64,
    ) -> Result<Self> {
        let model = PopulationModel::from_subgroup_effects(design, prevalences.clone(), &control_means, &effects, sigma2)?;
        Ok(Self {
            prevalences,
            effects,
            control_means,
            model,
        })
    }

    /// Study `index` of a scenario under the global null. Prevalences and
    /// the overlap effect come from streams that ignore EHF, CHF, N and the
    /// allocation, so every grid cell sees the same studies.
    pub fn null(spec: &ScenarioSpec, design: &TrialDesign, index: u64) -> Result<Self> {
        let mut rng = RngStream::new(spec.seed).descend(&[purpose::STUDY, index]).rng();
        let prevalences = gen_prevalences(&mut rng);
        let effects = gen_null_effects(&prevalences, design, spec.ehf, &mut rng)?;
        Self::new(design, prevalences, gen_control_means(spec.chf, design.n_subgroups()), effects, spec.sigma2)
    }

    /// Study `index` under the alternative: same prevalences as the null
    /// study, effects by rejection sampling.
    pub fn alternative(spec: &ScenarioSpec, design: &TrialDesign, index: u64) -> Result<Self> {
        let mut rng = RngStream::new(spec.seed).descend(&[purpose::STUDY, index]).rng();
        let prevalences = gen_prevalences(&mut rng);
        let mut alt = RngStream::new(spec.seed).descend(&[purpose::ALTERNATIVE, index]).rng();
        let effects = gen_alt_effects(&prevalences, design, spec.ehf, &mut alt)?;
        Self::new(design, prevalences, gen_control_means(spec.chf, design.n_subgroups()), effects, spec.sigma2)
    }

    /// `theta_{P_I}` for every population.
    pub fn population_effects(&self, design: &TrialDesign) -> Vec<f64> {
        (0..design.n_populations())
            .map(|k| crate::design::true_effect(design, &self.model, k).expect("index in range"))
            .collect()
    }
}

/// Decisions of every method on one summary. Bootstrap methods share one set
/// of replicate draws.
pub fn evaluate_run(
    design: &TrialDesign,
    summary: &TrialSummary,
    methods: &[MethodSpec],
    alpha: f64,
    boot: &BootstrapConfig,
    qmc: &QmcSettings,
    stream: &RngStream,
) -> Result<Vec<Vec<bool>>> {
    let mut out = vec![Vec::new(); methods.len()];
    let mut boot_idx = Vec::new();
    let mut boot_methods = Vec::new();
    let mut boot_stats = Vec::new();
    for (k, m) in methods.iter().enumerate() {
        let stats = statistics(summary, design, m)?;
        match m.calibration {
            Calibration::Bootstrap => {
                boot_idx.push(k);
                boot_methods.push(*m);
                boot_stats.push(stats);
            }
            _ => {
                out[k] = analytic_decisions(&stats, m, alpha, qmc, &stream.descend(&[purpose::QMC, k as u64]))?;
            }
        }
    }
    if !boot_methods.is_empty() {
        let decisions = bootstrap_decisions(
            summary,
            design,
            &boot_methods,
            &boot_stats,
            boot,
            alpha,
            &stream.child(purpose::BOOTSTRAP),
        )?;
        for (k, d) in boot_idx.into_iter().zip(decisions) {
            out[k] = d;
        }
    }
    Ok(out)
}

/// Per-method rate of one study over `spec.n_runs` runs: the share of runs
/// with any rejection (FWER) or the mean share of rejected hypotheses
/// (power).
pub fn simulate_rates(study: &StudyConfig, spec: &ScenarioSpec, metric: Metric, index: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    let design = spec.structure.design();
    let d = design.n_populations() as f64;
    let boot = BootstrapConfig::with_n_boot(spec.n_boot);
    let qmc = QmcSettings::default();
    let root = RngStream::new(spec.seed);
    let mut totals = vec![0.0; spec.methods.len()];
    for r in 0..spec.n_runs as u64 {
        let run = root.descend(&[purpose::DATA, index, r]);
        let mut rng = run.rng();
        let (layout, _) = draw_layout(&design, &study.prevalences, spec.n, spec.allocation, &mut rng)?;
        let summary = simulate_summary(&design, &study.model, &layout, &mut rng)?;
        let decisions = evaluate_run(&design, &summary, &spec.methods, spec.alpha, &boot, &qmc, &run)?;
        for (t, dec) in totals.iter_mut().zip(&decisions) {
            let k = dec.iter().filter(|&&x| x).count() as f64;
            *t += match metric {
                Metric::Fwer => f64::from(u8::from(k > 0.0)),
                Metric::Power => k / d,
            };
        }
    }
    Ok(totals.into_iter().map(|t| t / spec.n_runs as f64).collect())
}

fn single(study: &StudyConfig, spec: &ScenarioSpec, method: &MethodSpec, metric: Metric, index: u64) -> Result<f64> {
    let spec = ScenarioSpec {
        methods: vec![*method],
        ..spec.clone()
    };
    simulate_rates(study, &spec, metric, index).map(|r| r[0])
}

/// FWER of one method for a null study.
pub fn simulate_fwer(study: &StudyConfig, spec: &ScenarioSpec, method: &MethodSpec, index: u64) -> Result<f64> {
    single(study, spec, method, Metric::Fwer, index)
}

/// Multiple power of one method for an alternative study.
pub fn simulate_power(study: &StudyConfig, spec: &ScenarioSpec, method: &MethodSpec, index: u64) -> Result<f64> {
    if !(spec.ehf > 0.0) {
        return Err(Error::Config("power needs EHF > 0".into()));
    }
    single(study, spec, method, Metric::Power, index)
}
