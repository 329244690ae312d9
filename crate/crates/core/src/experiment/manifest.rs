use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{sha256_hex, ExperimentConfig, Layout};
use crate::analysis::SampleSummary;
use crate::error::{Error, Result};
use crate::walkers::{MergedWalk, TransitionTallies};
use crate::webgraph::WebGraph;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    /// Paths relative to the output directory.
    pub files: Vec<String>,
}

impl StageRecord {
    pub fn new(stage: &str, files: Vec<String>) -> Self {
        StageRecord { stage: stage.to_string(), files }
    }
}

/// Headline numbers of one merged walk, before pruning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkRecord {
    pub walkers: usize,
    pub stuck_walkers: Vec<usize>,
    pub total_visits: u64,
    pub distinct_nodes: usize,
    pub tallies: TransitionTallies,
    pub jump_fraction: f64,
    pub top_host_visit_share: f64,
}

impl WalkRecord {
    pub fn from_merged(m: &MergedWalk, graph: &WebGraph) -> Self {
        WalkRecord {
            walkers: m.walker_count,
            stuck_walkers: m.stuck_walkers.iter().copied().collect(),
            total_visits: m.total_visits(),
            distinct_nodes: m.distinct_nodes(),
            tallies: m.tallies,
            jump_fraction: m.tallies.jump_fraction(),
            top_host_visit_share: m.top_host_visit_share(graph),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub graph_hash: String,
    pub seed: u64,
    pub stages: Vec<StageRecord>,
    pub walks: BTreeMap<String, WalkRecord>,
    pub samples: Vec<SampleSummary>,
}

#[derive(Deserialize)]
struct WalkFile {
    walks: BTreeMap<String, WalkRecord>,
}

impl RunManifest {
    /// Assemble from the files the earlier stages left in `layout`.
    pub fn collect(config: &ExperimentConfig, layout: &Layout, stages: Vec<StageRecord>) -> Result<Self> {
        let graph_bytes = std::fs::read(layout.graph())?;
        let walks: WalkFile = serde_json::from_reader(File::open(layout.walk_record())?)?;
        let samples: Vec<SampleSummary> = serde_json::from_reader(File::open(layout.summary())?)?;
        Ok(RunManifest {
            config_hash: sha256_hex(config.canonical_json().as_bytes()),
            graph_hash: sha256_hex(&graph_bytes),
            seed: config.seed,
            stages,
            walks: walks.walks,
            samples,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
        Ok(serde_json::from_reader(file)?)
    }
}

fn fmt_num(x: f64) -> String {
    format!("{x:.4}")
}

/// One CSV row per (run, sample type); `run` is the first 12 hex digits of
/// the config hash. Runs over different graphs are not comparable and are
/// refused.
pub fn emit_comparison<W: Write>(manifests: &[RunManifest], mut w: W) -> Result<()> {
    let Some(first) = manifests.first() else {
        return Err(Error::Refused("no manifests to compare".into()));
    };
    if let Some(other) = manifests.iter().find(|m| m.graph_hash != first.graph_hash) {
        return Err(Error::Refused(format!(
            "manifests describe different graphs ({} vs {})",
            &first.graph_hash[..12.min(first.graph_hash.len())],
            &other.graph_hash[..12.min(other.graph_hash.len())]
        )));
    }
    let tlds: Vec<String> = first.samples.first().map(|s| s.tld.iter().map(|(l, _)| l.clone()).collect()).unwrap_or_default();
    write!(w, "run,sample_type,size,unique_hosts,top_host_share,avg_outdegree,max_outdegree,exponent")?;
    for t in &tlds {
        write!(w, ",tld_{}", t.trim_start_matches('.'))?;
    }
    writeln!(w)?;
    for m in manifests {
        let run = &m.config_hash[..12.min(m.config_hash.len())];
        for s in &m.samples {
            write!(
                w,
                "{run},{},{},{},{},{},{},{}",
                s.label,
                fmt_num(s.size),
                fmt_num(s.unique_hosts),
                fmt_num(s.top_host_share),
                fmt_num(s.avg_outdegree),
                fmt_num(s.max_outdegree),
                s.exponent.map_or("NA".to_string(), fmt_num)
            )?;
            for t in &tlds {
                let v = s.tld.iter().find(|(l, _)| l == t).map_or(0.0, |(_, v)| *v);
                write!(w, ",{}", fmt_num(v))?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}
