//! Experiment configuration, read from a TOML file with sectioned keys:
//!
//! ```toml
//! seed = 7
//!
//! [graph]
//! kind = "power-law"
//! n = 5000
//! hazards.dead_end = 0.02
//!
//! [walk]
//! walkers = 10
//! step_budget = 20000
//!
//! [walk.c]
//! d = 0.142857142857
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subsampling::SampleType;
use crate::walkers::{JumpMode, StuckLimits};
use crate::webgraph::{GeneratorSpec, HazardRates, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GraphKind {
    #[default]
    PowerLaw,
    Trap,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub kind: GraphKind,
    /// Graph file for `kind = "file"`, relative to the config file.
    pub path: Option<PathBuf>,
    /// Size of the trap graph.
    pub trap_n: usize,
    /// Generator seed; derived from the global seed when absent.
    pub seed: Option<u64>,
    pub n: usize,
    pub target_exponent: f64,
    pub max_outdegree: usize,
    pub hosts_per_domain: f64,
    pub pages_per_host_exponent: f64,
    pub max_pages_per_host: usize,
    pub intra_host_fraction: f64,
    pub hub_bias: f64,
    pub max_indegree: Option<usize>,
    pub tld_weights: Option<Vec<(String, f64)>>,
    pub hazards: HazardRates,
}

impl Default for GraphConfig {
    fn default() -> Self {
        let d = GeneratorSpec::default();
        GraphConfig {
            kind: GraphKind::PowerLaw,
            path: None,
            trap_n: 200,
            seed: None,
            n: 5000,
            target_exponent: d.target_exponent,
            max_outdegree: d.max_outdegree,
            hosts_per_domain: d.hosts_per_domain,
            pages_per_host_exponent: d.pages_per_host_exponent,
            max_pages_per_host: d.max_pages_per_host,
            intra_host_fraction: d.intra_host_fraction,
            hub_bias: d.hub_bias,
            max_indegree: d.max_indegree,
            tld_weights: None,
            hazards: d.hazards,
        }
    }
}

impl GraphConfig {
    pub fn generator_spec(&self, seed: u64) -> GeneratorSpec {
        let mut spec = GeneratorSpec {
            n: self.n,
            target_exponent: self.target_exponent,
            max_outdegree: self.max_outdegree,
            hosts_per_domain: self.hosts_per_domain,
            pages_per_host_exponent: self.pages_per_host_exponent,
            max_pages_per_host: self.max_pages_per_host,
            intra_host_fraction: self.intra_host_fraction,
            hub_bias: self.hub_bias,
            max_indegree: self.max_indegree,
            hazards: self.hazards,
            seed,
            ..GeneratorSpec::default()
        };
        if let Some(w) = &self.tld_weights {
            spec.tld_weights = w.clone();
        }
        spec
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum JumpModeConfig {
    #[default]
    Hierarchical,
    GlobalUniform,
}

impl From<JumpModeConfig> for JumpMode {
    fn from(m: JumpModeConfig) -> Self {
        match m {
            JumpModeConfig::Hierarchical => JumpMode::Hierarchical,
            JumpModeConfig::GlobalUniform => JumpMode::GlobalUniform,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AbConfig {
    /// Regular degree of Walk B; 0 picks ten times the largest frozen degree.
    pub max: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CConfig {
    pub d: f64,
    pub jump_mode: JumpModeConfig,
}

impl Default for CConfig {
    fn default() -> Self {
        CConfig { d: 1.0 / 7.0, jump_mode: JumpModeConfig::Hierarchical }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkSection {
    pub walkers: usize,
    pub step_budget: u64,
    pub start_node: u32,
    pub consecutive_host_limit: u64,
    pub overload_limit: u32,
    pub ab: AbConfig,
    pub c: CConfig,
}

impl Default for WalkSection {
    fn default() -> Self {
        let limits = StuckLimits::default();
        WalkSection {
            walkers: 10,
            step_budget: 20_000,
            start_node: 0,
            consecutive_host_limit: limits.consecutive_host_limit,
            overload_limit: limits.overload_limit,
            ab: AbConfig::default(),
            c: CConfig::default(),
        }
    }
}

impl WalkSection {
    pub fn limits(&self) -> StuckLimits {
        StuckLimits { consecutive_host_limit: self.consecutive_host_limit, overload_limit: self.overload_limit }
    }

    pub fn start(&self) -> NodeId {
        NodeId(self.start_node)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSection {
    pub target_size: f64,
    pub repetitions: usize,
    /// Sample type labels; all eleven when empty.
    pub types: Vec<String>,
}

impl Default for SampleSection {
    fn default() -> Self {
        SampleSection { target_size: 500.0, repetitions: 5, types: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub top_hosts: usize,
}

impl Default for ReportSection {
    fn default() -> Self {
        ReportSection { top_hosts: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub graph: GraphConfig,
    pub walk: WalkSection,
    pub sample: SampleSection,
    pub report: ReportSection,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Read and validate; a relative graph path is resolved against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut config = Self::parse(&text)?;
        if let Some(p) = &config.graph.path {
            if p.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                config.graph.path = Some(base.join(p));
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        match self.graph.kind {
            GraphKind::File => match &self.graph.path {
                None => return fail("graph.kind = \"file\" needs graph.path".into()),
                Some(p) if !p.exists() => return fail(format!("graph file {} does not exist", p.display())),
                _ => {}
            },
            GraphKind::Trap if self.graph.trap_n < 4 || !self.graph.trap_n.is_multiple_of(2) => {
                return fail(format!("graph.trap_n must be even and at least 4, got {}", self.graph.trap_n));
            }
            GraphKind::PowerLaw => {
                self.graph.generator_spec(0).validate().map_err(|e| Error::Config(e.to_string()))?;
            }
            _ => {}
        }
        let c = &self.walk.c;
        if !(c.d > 0.0 && c.d < 1.0) {
            return fail(format!("walk.c.d must lie in (0, 1), got {}", c.d));
        }
        if self.walk.walkers == 0 {
            return fail("walk.walkers must be at least 1".into());
        }
        if !(self.sample.target_size > 0.0) {
            return fail(format!("sample.target_size must be positive, got {}", self.sample.target_size));
        }
        if self.sample.repetitions == 0 {
            return fail("sample.repetitions must be at least 1".into());
        }
        let types = self.sample_types()?;
        for (i, t) in types.iter().enumerate() {
            if types[..i].contains(t) {
                return fail(format!("sample type {t} listed twice"));
            }
        }
        Ok(())
    }

    pub fn sample_types(&self) -> Result<Vec<SampleType>> {
        if self.sample.types.is_empty() {
            return Ok(SampleType::ALL.to_vec());
        }
        self.sample.types.iter().map(|s| s.parse()).collect()
    }

    /// Canonical JSON rendering, hashed into the manifest.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }
}
