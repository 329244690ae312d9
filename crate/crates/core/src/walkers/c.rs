use std::collections::HashSet;

use indexmap::{IndexMap, IndexSet};
use rand::Rng;

use super::{JumpCause, Step, StepKind};
use crate::environment::Environment;
use crate::webgraph::{NodeId, WebGraph};

/// Target distribution of Walk C's random jumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum JumpMode {
    /// Uniform seen domain, then uniform seen host in it, then uniform seen
    /// page on that host.
    #[default]
    Hierarchical,
    /// Uniform over every page of the graph. Turns Walk C into the exact
    /// PageRank chain; used to check against a power-iteration oracle.
    GlobalUniform,
}

/// Seen domains, hosts and pages. A page is seen once it has been visited
/// or is the head of an outlink of a visited page. Grow-only; iteration and
/// sampling follow insertion order.
#[derive(Debug, Clone, Default)]
pub struct SeenCatalog {
    domains: IndexMap<u32, IndexMap<u32, IndexSet<NodeId>>>,
    seen: HashSet<NodeId>,
    visited: HashSet<NodeId>,
}

impl SeenCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn mark_seen(&mut self, graph: &WebGraph, node: NodeId) {
        if self.seen.insert(node) {
            self.domains
                .entry(graph.domain_id(node))
                .or_default()
                .entry(graph.host_id(node))
                .or_default()
                .insert(node);
        }
    }

    /// Record a visit to `node`, which sees the page and all its outlinks.
    pub fn visit(&mut self, graph: &WebGraph, node: NodeId) {
        self.visited.insert(node);
        self.mark_seen(graph, node);
        for &o in graph.out_links(node) {
            self.mark_seen(graph, o);
        }
    }

    pub fn is_seen(&self, node: NodeId) -> bool {
        self.seen.contains(&node)
    }

    pub fn is_visited(&self, node: NodeId) -> bool {
        self.visited.contains(&node)
    }

    pub fn is_empty(&self) -> bool {
        self.seen.is_empty()
    }

    pub fn seen_count(&self) -> usize {
        self.seen.len()
    }

    pub fn visited_count(&self) -> usize {
        self.visited.len()
    }

    pub fn domain_count(&self) -> usize {
        self.domains.len()
    }

    pub fn host_count(&self) -> usize {
        self.domains.values().map(IndexMap::len).sum()
    }

    /// Three-level uniform draw: domain, host within it, page within that.
    pub fn sample_hierarchical<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<NodeId> {
        if self.domains.is_empty() {
            return None;
        }
        let (_, hosts) = self.domains.get_index(rng.random_range(0..self.domains.len()))?;
        let (_, pages) = hosts.get_index(rng.random_range(0..hosts.len()))?;
        pages.get_index(rng.random_range(0..pages.len())).copied()
    }
}

// Bound on redraws when jump targets keep failing to fetch.
const MAX_JUMP_DRAWS: usize = 10_000;

fn jump<R: Rng + ?Sized>(
    env: &Environment<'_>,
    catalog: &SeenCatalog,
    current: NodeId,
    mode: JumpMode,
    cause: JumpCause,
    rng: &mut R,
) -> Step {
    let n = env.graph().node_count();
    for _ in 0..MAX_JUMP_DRAWS {
        let candidate = match mode {
            JumpMode::Hierarchical => catalog.sample_hierarchical(rng),
            JumpMode::GlobalUniform => Some(NodeId::from(rng.random_range(0..n))),
        };
        if let Some(target) = candidate.and_then(|c| env.resolve(c)) {
            return Step::new(target, StepKind::Jump(cause));
        }
    }
    // every draw failed; reset onto the page we are on
    Step::new(current, StepKind::Jump(cause))
}

/// One step of Walk C from the fetched page `current`.
///
/// With probability `d` jumps; otherwise follows a uniformly chosen outlink.
/// A page without outlinks or an outlink that cannot be fetched forces a
/// jump. Jump targets that cannot be fetched are redrawn.
pub fn step_c<R: Rng + ?Sized>(
    env: &Environment<'_>,
    catalog: &SeenCatalog,
    current: NodeId,
    d: f64,
    mode: JumpMode,
    rng: &mut R,
) -> Step {
    if rng.random::<f64>() < d {
        return jump(env, catalog, current, mode, JumpCause::Coin, rng);
    }
    let outlinks = env.graph().out_links(current);
    if outlinks.is_empty() {
        return jump(env, catalog, current, mode, JumpCause::DeadEnd, rng);
    }
    let chosen = outlinks[rng.random_range(0..outlinks.len())];
    match env.resolve(chosen) {
        Some(next) => Step::new(next, StepKind::Outlink),
        None => jump(env, catalog, current, mode, JumpCause::Unfetchable, rng),
    }
}
