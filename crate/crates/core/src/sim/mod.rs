//! Simulation study: random study configurations, per-study FWER and power
//! under common random numbers, and grids of scenarios.

mod example1;
mod generate;
mod grid;
mod run;

pub use example1::{noncentrality_variances, example1_analytic, Example1Summary, EXAMPLE1_EFFECTS, EXAMPLE1_PREVALENCES};
pub use generate::{
    draw_layout, draw_layout_once, gen_alt_effects, gen_control_means, gen_null_effects, gen_prevalences,
    simulate_summary, solve_null_effects, split_stratum, MAX_LAYOUT_REDRAWS,
};
pub use grid::{run_scenario_grid, CellSummary, GridSpec, SimulationReport};
pub use run::{evaluate_run, simulate_fwer, simulate_power, simulate_rates, StudyConfig};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::design::TrialDesign;
use crate::error::{Error, Result};
use crate::method::MethodSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    /// `P1 = {1,2,3}`, `P2 = {2,3}`.
    Nested,
    /// `P1 = {1,2}`, `P2 = {2,3}`.
    Overlapping,
}

impl Structure {
    pub fn design(self) -> TrialDesign {
        match self {
            Structure::Nested => TrialDesign::nested3(),
            Structure::Overlapping => TrialDesign::overlapping3(),
        }
    }
}

/// Treatment allocation within strata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Allocation {
    /// 1:1 in every stratum.
    A,
    /// 2:1 in every stratum.
    B,
    /// 2:1 in the strata shared by all populations, 1:1 elsewhere.
    C,
    /// Every cell drawn from one multinomial with equal arm probabilities.
    D,
}

impl fmt::Display for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Allocation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Allocation::A),
            "B" | "b" => Ok(Allocation::B),
            "C" | "c" => Ok(Allocation::C),
            "D" | "d" => Ok(Allocation::D),
            other => Err(Error::Config(format!("unknown allocation pattern {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Fwer,
    Power,
}

/// One cell of a simulation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub structure: Structure,
    pub ehf: f64,
    pub chf: f64,
    pub n: u64,
    pub allocation: Allocation,
    pub alpha: f64,
    pub sigma2: f64,
    pub n_studies: usize,
    pub n_runs: usize,
    pub n_boot: usize,
    pub methods: Vec<MethodSpec>,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            structure: Structure::Nested,
            ehf: 0.0,
            chf: 0.0,
            n: 500,
            allocation: Allocation::A,
            alpha: 0.025,
            sigma2: 0.25,
            n_studies: 100,
            n_runs: 1000,
            n_boot: 1000,
            methods: MethodSpec::table_methods(),
            seed: 1,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.ehf >= 0.0 && self.ehf.is_finite()) {
            return bad("EHF must be a nonnegative number");
        }
        if !(self.chf >= 0.0 && self.chf.is_finite()) {
            return bad("CHF must be a nonnegative number");
        }
        if self.n == 0 {
            return bad("N must be positive");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0,1)");
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return bad("sigma2 must be positive");
        }
        if self.n_studies == 0 || self.n_runs == 0 || self.n_boot == 0 {
            return bad("study, run and bootstrap counts must be positive");
        }
        if self.methods.is_empty() {
            return bad("at least one method is required");
        }
        Ok(())
    }
}
