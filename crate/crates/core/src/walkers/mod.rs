//! Walk phases.
//!
//! Walk AB is a single undirected walk over frozen adjacency (outlinks plus
//! sampled inlinks plus one selfloop slot) from which both Walk A and Walk B
//! are derived by [`simulate_selfloops`]. Walk C imitates the PageRank
//! surfer with hierarchical random jumps over seen domains, hosts and
//! pages.

mod ab;
mod c;
mod io;
mod run;
mod selfloop;
mod stuck;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

pub use ab::step_ab;
pub use c::{step_c, JumpMode, SeenCatalog};
pub use io::{parse_trace, read_trace, write_summary, write_trace};
pub use run::{run_walks, WalkRun};
pub use selfloop::{inject_selfloops, modified_degree, simulate_selfloops, DegreeRule};
pub use stuck::{detect_stuck, detect_stuck_and_prune, prune_stuck, HostRunTracker, StuckLimits};

use crate::error::{Error, Result};
use crate::webgraph::{NodeId, WebGraph};

/// Why Walk C jumped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JumpCause {
    /// The reset coin came up.
    Coin,
    /// The current page has no outlinks.
    DeadEnd,
    /// The chosen outlink could not be fetched (failure, long URL, redirect
    /// limit or loop).
    Unfetchable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepKind {
    /// First entry of every trace.
    Start,
    Outlink,
    Inlink,
    /// `n >= 1` consecutive selfloop steps at the same node.
    SelfloopRun(u64),
    Jump(JumpCause),
    SiblingFallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Step {
    pub node: NodeId,
    pub kind: StepKind,
}

impl Step {
    pub fn new(node: NodeId, kind: StepKind) -> Self {
        Step { node, kind }
    }

    /// Visits this entry stands for.
    pub fn visits(&self) -> u64 {
        match self.kind {
            StepKind::SelfloopRun(n) => n,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WalkAlgorithm {
    AB,
    C,
}

/// Which chain a merged walk describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WalkKind {
    AB,
    A,
    B,
    C,
}

impl fmt::Display for WalkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WalkKind::AB => "AB",
            WalkKind::A => "A",
            WalkKind::B => "B",
            WalkKind::C => "C",
        })
    }
}

impl std::str::FromStr for WalkKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "AB" => Ok(WalkKind::AB),
            "A" => Ok(WalkKind::A),
            "B" => Ok(WalkKind::B),
            "C" => Ok(WalkKind::C),
            _ => Err(format!("unknown walk kind `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkConfig {
    pub algorithm: WalkAlgorithm,
    /// Reset probability of Walk C.
    pub d: f64,
    /// Regular degree of Walk B.
    pub max: u64,
    pub walkers: usize,
    /// Steps per walker after the start visit.
    pub step_budget: u64,
    pub start_node: NodeId,
    pub limits: StuckLimits,
    pub jump_mode: JumpMode,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            algorithm: WalkAlgorithm::AB,
            d: 1.0 / 7.0,
            max: 10_000_000,
            walkers: 50,
            step_budget: 10_000,
            start_node: NodeId(0),
            limits: StuckLimits::default(),
            jump_mode: JumpMode::Hierarchical,
            seed: 0,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self, graph: &WebGraph) -> Result<()> {
        if !(self.d > 0.0 && self.d < 1.0) {
            return Err(Error::Config(format!("reset probability d must lie in (0, 1), got {}", self.d)));
        }
        if self.walkers == 0 {
            return Err(Error::Config("at least one walker is required".into()));
        }
        if self.max == 0 {
            return Err(Error::Config("max must be positive".into()));
        }
        if !graph.contains(self.start_node) {
            return Err(Error::Config(format!("start node {} is not in the graph", self.start_node)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct TransitionTallies {
    pub outlink: u64,
    pub inlink: u64,
    pub selfloop: u64,
    /// All jumps, forced ones included.
    pub jump: u64,
    pub forced_jump: u64,
    pub sibling_fallback: u64,
}

impl TransitionTallies {
    pub fn record(&mut self, step: &Step) {
        match step.kind {
            StepKind::Start => {}
            StepKind::Outlink => self.outlink += 1,
            StepKind::Inlink => self.inlink += 1,
            StepKind::SelfloopRun(n) => self.selfloop += n,
            StepKind::Jump(cause) => {
                self.jump += 1;
                if cause != JumpCause::Coin {
                    self.forced_jump += 1;
                }
            }
            StepKind::SiblingFallback => self.sibling_fallback += 1,
        }
    }

    /// Non-initial steps.
    pub fn total(&self) -> u64 {
        self.outlink + self.inlink + self.selfloop + self.jump + self.sibling_fallback
    }

    pub fn jump_fraction(&self) -> f64 {
        ratio(self.jump, self.total())
    }

    /// Outlink share of the non-selfloop moves of an undirected walk.
    pub fn outlink_fraction(&self) -> f64 {
        ratio(self.outlink, self.outlink + self.inlink + self.sibling_fallback)
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkerTrace {
    pub walker: usize,
    pub steps: Vec<Step>,
}

impl WalkerTrace {
    /// Visits including selfloop runs.
    pub fn len_visits(&self) -> u64 {
        self.steps.iter().map(Step::visits).sum()
    }
}

/// All walkers of one walk phase, in walker-index order.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedWalk {
    pub kind: WalkKind,
    /// Walkers launched, including pruned ones.
    pub walker_count: usize,
    pub traces: Vec<WalkerTrace>,
    pub visit_count: BTreeMap<NodeId, u64>,
    pub tallies: TransitionTallies,
    pub stuck_walkers: BTreeSet<usize>,
}

impl MergedWalk {
    pub fn from_traces(kind: WalkKind, walker_count: usize, traces: Vec<WalkerTrace>, stuck_walkers: BTreeSet<usize>) -> Self {
        let mut counts: HashMap<NodeId, u64> = HashMap::new();
        let mut tallies = TransitionTallies::default();
        for trace in &traces {
            for step in &trace.steps {
                *counts.entry(step.node).or_insert(0) += step.visits();
                tallies.record(step);
            }
        }
        MergedWalk { kind, walker_count, traces, visit_count: counts.into_iter().collect(), tallies, stuck_walkers }
    }

    /// Total visits over all traces, start visits included.
    pub fn total_visits(&self) -> u64 {
        self.visit_count.values().sum()
    }

    pub fn distinct_nodes(&self) -> usize {
        self.visit_count.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.iter().all(|t| t.steps.is_empty())
    }

    /// Visit count per host, descending by count then host name.
    pub fn host_visits(&self, graph: &WebGraph) -> Vec<(String, u64)> {
        let mut per_host: HashMap<u32, u64> = HashMap::new();
        for (&v, &c) in &self.visit_count {
            *per_host.entry(graph.host_id(v)).or_insert(0) += c;
        }
        let mut rows: Vec<_> = per_host.into_iter().map(|(h, c)| (graph.host_name(h).to_string(), c)).collect();
        rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        rows
    }

    /// Share of all visits spent on the most visited host.
    pub fn top_host_visit_share(&self, graph: &WebGraph) -> f64 {
        let total = self.total_visits();
        self.host_visits(graph).first().map_or(0.0, |(_, c)| ratio(*c, total))
    }
}
