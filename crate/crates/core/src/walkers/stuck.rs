use std::collections::{BTreeSet, HashMap};

use super::{MergedWalk, WalkerTrace};
use crate::webgraph::WebGraph;

/// Host overload policy. Every `consecutive_host_limit` consecutive visits
/// to one host count as one overload event; a walker reaching
/// `overload_limit` events on the same host is stuck. A zero in either
/// field disables detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct StuckLimits {
    pub consecutive_host_limit: u64,
    pub overload_limit: u32,
}

impl Default for StuckLimits {
    fn default() -> Self {
        StuckLimits { consecutive_host_limit: 3000, overload_limit: 12 }
    }
}

impl StuckLimits {
    pub const DISABLED: StuckLimits = StuckLimits { consecutive_host_limit: 0, overload_limit: 0 };

    pub fn enabled(&self) -> bool {
        self.consecutive_host_limit > 0 && self.overload_limit > 0
    }
}

/// Online overload counter for one walker.
#[derive(Debug, Clone)]
pub struct HostRunTracker {
    limits: StuckLimits,
    host: Option<u32>,
    run: u64,
    events: HashMap<u32, u32>,
    visits: u64,
}

impl HostRunTracker {
    pub fn new(limits: StuckLimits) -> Self {
        HostRunTracker { limits, host: None, run: 0, events: HashMap::new(), visits: 0 }
    }

    /// Feed `count` consecutive visits on `host`. Returns `Some(k)` when the
    /// walker becomes stuck on the `k`-th of these visits.
    pub fn observe(&mut self, host: u32, count: u64) -> Option<u64> {
        if !self.limits.enabled() {
            self.visits += count;
            return None;
        }
        if self.host != Some(host) {
            self.host = Some(host);
            self.run = 0;
        }
        let limit = self.limits.consecutive_host_limit;
        let mut left = count;
        while left > 0 {
            let take = left.min(limit - self.run);
            self.run += take;
            left -= take;
            self.visits += take;
            if self.run == limit {
                self.run = 0;
                let events = self.events.entry(host).or_insert(0);
                *events += 1;
                if *events >= self.limits.overload_limit {
                    return Some(count - left);
                }
            }
        }
        None
    }

    /// Visits observed so far.
    pub fn visits(&self) -> u64 {
        self.visits
    }

    pub fn events_on(&self, host: u32) -> u32 {
        self.events.get(&host).copied().unwrap_or(0)
    }
}

/// 1-based visit index at which `trace` is declared stuck, if ever.
pub fn detect_stuck(trace: &WalkerTrace, graph: &WebGraph, limits: StuckLimits) -> Option<u64> {
    let mut tracker = HostRunTracker::new(limits);
    for step in &trace.steps {
        let before = tracker.visits();
        if let Some(k) = tracker.observe(graph.host_id(step.node), step.visits()) {
            return Some(before + k);
        }
    }
    None
}

/// Drop the traces of `merged.stuck_walkers`. Visit counts of nodes also
/// visited by other walkers shrink but survive.
pub fn prune_stuck(merged: &MergedWalk) -> MergedWalk {
    let traces: Vec<WalkerTrace> =
        merged.traces.iter().filter(|t| !merged.stuck_walkers.contains(&t.walker)).cloned().collect();
    MergedWalk::from_traces(merged.kind, merged.walker_count, traces, merged.stuck_walkers.clone())
}

/// Run stuck detection offline over every trace, then prune.
pub fn detect_stuck_and_prune(merged: &MergedWalk, graph: &WebGraph, limits: StuckLimits) -> MergedWalk {
    let mut stuck: BTreeSet<usize> = merged.stuck_walkers.clone();
    for trace in &merged.traces {
        if detect_stuck(trace, graph, limits).is_some() {
            stuck.insert(trace.walker);
        }
    }
    let marked = MergedWalk { stuck_walkers: stuck, ..merged.clone() };
    prune_stuck(&marked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walkers::{Step, StepKind, WalkKind};
    use crate::webgraph::{generate_trap_graph, NodeId};

    fn trace(walker: usize, nodes: &[u32]) -> WalkerTrace {
        let steps = nodes
            .iter()
            .enumerate()
            .map(|(i, &n)| Step::new(NodeId(n), if i == 0 { StepKind::Start } else { StepKind::Outlink }))
            .collect();
        WalkerTrace { walker, steps }
    }

    #[test]
    fn alternating_hosts_never_overload() {
        let g = generate_trap_graph(20).unwrap();
        // 0 is on the trap host, 19 is a chain page with its own host
        let nodes: Vec<u32> = (0..10_000).map(|i| if i % 2 == 0 { 0 } else { 19 }).collect();
        let limits = StuckLimits { consecutive_host_limit: 2, overload_limit: 1 };
        assert_eq!(detect_stuck(&trace(0, &nodes), &g, limits), None);
    }

    #[test]
    fn threshold_arithmetic() {
        let g = generate_trap_graph(20).unwrap();
        let limits = StuckLimits { consecutive_host_limit: 50, overload_limit: 3 };
        let nodes: Vec<u32> = (0..200).map(|i| i % 3).collect();
        assert_eq!(detect_stuck(&trace(0, &nodes), &g, limits), Some(150));
        assert_eq!(detect_stuck(&trace(0, &nodes[..149]), &g, limits), None);
    }

    #[test]
    fn selfloop_runs_split_at_threshold() {
        let mut t = HostRunTracker::new(StuckLimits { consecutive_host_limit: 50, overload_limit: 3 });
        assert_eq!(t.observe(7, 1), None);
        assert_eq!(t.observe(7, 1000), Some(149));
        assert_eq!(t.events_on(7), 3);
    }

    #[test]
    fn events_accumulate_across_separate_runs() {
        let mut t = HostRunTracker::new(StuckLimits { consecutive_host_limit: 5, overload_limit: 2 });
        assert_eq!(t.observe(1, 5), None);
        assert_eq!(t.observe(2, 4), None);
        assert_eq!(t.observe(1, 4), None);
        assert_eq!(t.observe(1, 1), Some(1));
    }

    #[test]
    fn disabled_limits() {
        let mut t = HostRunTracker::new(StuckLimits::DISABLED);
        assert_eq!(t.observe(1, u64::MAX / 2), None);
    }

    #[test]
    fn pruning_keeps_shared_nodes() {
        let g = generate_trap_graph(20).unwrap();
        let stuck_nodes: Vec<u32> = (0..60).map(|i| i % 3).collect();
        let healthy = vec![19, 18, 0, 18];
        let merged = MergedWalk::from_traces(
            WalkKind::AB,
            2,
            vec![trace(0, &stuck_nodes), trace(1, &healthy)],
            BTreeSet::new(),
        );
        let pruned = detect_stuck_and_prune(&merged, &g, StuckLimits { consecutive_host_limit: 20, overload_limit: 2 });
        assert_eq!(pruned.stuck_walkers, BTreeSet::from([0]));
        assert_eq!(pruned.traces.len(), 1);
        assert_eq!(pruned.visit_count[&NodeId(0)], 1);
        assert!(!pruned.visit_count.contains_key(&NodeId(1)));
        assert_eq!(pruned.total_visits(), 4);
        assert_eq!(pruned.walker_count, 2);
    }
}
