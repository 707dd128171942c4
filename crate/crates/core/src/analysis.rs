//! One entry point for running any method on a summary.

use crate::bootstrap::{bootstrap_test, BootstrapConfig};
use crate::design::{TrialDesign, TrialSummary};
use crate::error::Result;
use crate::method::{Calibration, MethodSpec, TestResult};
use crate::numerics::{QmcSettings, RngStream};
use crate::procedures::{analytic_test, statistics};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisSettings {
    pub alpha: f64,
    pub bootstrap: BootstrapConfig,
    pub qmc: QmcSettings,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self {
            alpha: 0.025,
            bootstrap: BootstrapConfig::default(),
            qmc: QmcSettings::default(),
        }
    }
}

/// Run `method` on `summary`, calibrating analytically or by bootstrap.
pub fn run_test(
    summary: &TrialSummary,
    design: &TrialDesign,
    method: &MethodSpec,
    settings: &AnalysisSettings,
    stream: &RngStream,
) -> Result<TestResult> {
    match method.calibration {
        Calibration::Bootstrap => {
            bootstrap_test(summary, design, method, &settings.bootstrap, settings.alpha, stream)
        }
        Calibration::Analytic | Calibration::Unadjusted => {
            let stats = statistics(summary, design, method)?;
            analytic_test(&stats, method, settings.alpha, &settings.qmc, stream)
        }
    }
}
