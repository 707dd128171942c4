//! Simulation config and design files, both TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::design::{PopulationSpec, TrialDesign};
use crate::error::{Error, Result};
use crate::method::MethodSpec;
use crate::sim::{Allocation, GridSpec, Structure};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudySection {
    pub structure: Structure,
    pub alpha: f64,
    pub sigma2: f64,
    pub methods: Vec<String>,
    /// Any of `fwer`, `power`.
    pub metrics: Vec<String>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub n: Vec<u64>,
    pub allocation: Vec<Allocation>,
    pub ehf: Vec<f64>,
    pub chf: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplicationSection {
    pub n_studies: usize,
    pub n_runs: usize,
    pub n_boot: usize,
}

/// Contents of a `simulate` config file. Every key is optional.
///
/// ```toml
/// [study]
/// structure = "nested"
/// methods = ["anova+t", "anova+boot"]
///
/// [grid]
/// n = [250, 500]
/// ehf = [0, 10]
///
/// [replication]
/// n_runs = 200
/// ```
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub study: StudySection,
    pub grid: GridSection,
    pub replication: ReplicationSection,
}

impl Default for StudySection {
    fn default() -> Self {
        let g = GridSpec::default();
        Self {
            structure: g.structure,
            alpha: g.alpha,
            sigma2: g.sigma2,
            methods: g.methods.iter().map(|m| m.name()).collect(),
            metrics: vec!["fwer".into(), "power".into()],
            seed: g.seed,
        }
    }
}

impl Default for GridSection {
    fn default() -> Self {
        let g = GridSpec::default();
        Self {
            n: g.n,
            allocation: g.allocation,
            ehf: g.ehf,
            chf: g.chf,
        }
    }
}

impl Default for ReplicationSection {
    fn default() -> Self {
        let g = GridSpec::default();
        Self {
            n_studies: g.n_studies,
            n_runs: g.n_runs,
            n_boot: g.n_boot,
        }
    }
}

impl SimulationConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_grid(&self) -> Result<GridSpec> {
        let methods = self
            .study
            .methods
            .iter()
            .map(|m| m.parse::<MethodSpec>())
            .collect::<Result<Vec<_>>>()?;
        let mut fwer = false;
        let mut power = false;
        for m in &self.study.metrics {
            match m.as_str() {
                "fwer" => fwer = true,
                "power" => power = true,
                other => return Err(Error::Config(format!("unknown metric {other:?}"))),
            }
        }
        let grid = GridSpec {
            structure: self.study.structure,
            n: self.grid.n.clone(),
            allocation: self.grid.allocation.clone(),
            ehf: self.grid.ehf.clone(),
            chf: self.grid.chf.clone(),
            alpha: self.study.alpha,
            sigma2: self.study.sigma2,
            n_studies: self.replication.n_studies,
            n_runs: self.replication.n_runs,
            n_boot: self.replication.n_boot,
            methods,
            seed: self.study.seed,
            fwer,
            power,
        };
        grid.validate()?;
        Ok(grid)
    }
}

/// Canonical TOML of a grid; the config hash is taken over this text.
pub fn canonical_grid(grid: &GridSpec) -> Result<String> {
    toml::to_string(grid).map_err(|e| Error::Config(e.to_string()))
}

pub fn config_hash(grid: &GridSpec) -> Result<String> {
    let digest = Sha256::digest(canonical_grid(grid)?.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DesignFile {
    n_subgroups: usize,
    #[serde(default = "default_control")]
    control: String,
    population: Vec<PopulationEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PopulationEntry {
    name: String,
    /// 1-based subgroup numbers.
    subgroups: Vec<usize>,
    treatment: String,
}

fn default_control() -> String {
    "C".into()
}

/// Parse a design description:
///
/// ```toml
/// n_subgroups = 3
/// control = "C"
///
/// [[population]]
/// name = "P1"
/// subgroups = [1, 2, 3]
/// treatment = "E"
/// ```
pub fn parse_design(text: &str) -> Result<TrialDesign> {
    let file: DesignFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let mut pops = Vec::with_capacity(file.population.len());
    for p in file.population {
        if p.subgroups.contains(&0) {
            return Err(Error::Design(format!("population {}: subgroups are numbered from 1", p.name)));
        }
        let zero_based: Vec<usize> = p.subgroups.iter().map(|s| s - 1).collect();
        pops.push(PopulationSpec::new(p.name, &zero_based, p.treatment));
    }
    TrialDesign::with_control(file.n_subgroups, &file.control, pops)
}

pub fn load_design(path: &Path) -> Result<TrialDesign> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_design(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_default_grid() {
        let g = SimulationConfig::parse("").unwrap().to_grid().unwrap();
        assert_eq!(g, GridSpec::default());
    }

    #[test]
    fn integer_factors_and_partial_sections() {
        let c = SimulationConfig::parse("[grid]\nehf = [0, 10]\nallocation = [\"B\"]\n[replication]\nn_runs = 7\n").unwrap();
        let g = c.to_grid().unwrap();
        assert_eq!(g.ehf, vec![0.0, 10.0]);
        assert_eq!(g.allocation, vec![Allocation::B]);
        assert_eq!(g.n_runs, 7);
        assert_eq!(g.n_boot, GridSpec::default().n_boot);
    }

    #[test]
    fn bad_keys_and_values_are_config_errors() {
        assert!(matches!(SimulationConfig::parse("[grid]\nfoo = 1\n"), Err(Error::Config(_))));
        let c = SimulationConfig::parse("[study]\nmethods = [\"bogus\"]\n").unwrap();
        assert!(matches!(c.to_grid(), Err(Error::Config(_))));
        let c = SimulationConfig::parse("[study]\nalpha = 1.5\n").unwrap();
        assert!(matches!(c.to_grid(), Err(Error::Config(_))));
    }

    #[test]
    fn hash_tracks_content() {
        let a = GridSpec::default();
        let mut b = a.clone();
        b.seed = 2;
        assert_eq!(config_hash(&a).unwrap(), config_hash(&a.clone()).unwrap());
        assert_ne!(config_hash(&a).unwrap(), config_hash(&b).unwrap());
    }

    #[test]
    fn design_file_round_trip() {
        let d = parse_design(
            "n_subgroups = 3\n[[population]]\nname = \"P1\"\nsubgroups = [1, 2, 3]\ntreatment = \"E\"\n\
             [[population]]\nname = \"P2\"\nsubgroups = [2, 3]\ntreatment = \"E\"\n",
        )
        .unwrap();
        assert_eq!(d, TrialDesign::nested3());
        assert!(parse_design("n_subgroups = 3\n[[population]]\nname = \"P\"\nsubgroups = [0]\ntreatment = \"E\"\n").is_err());
    }
}
