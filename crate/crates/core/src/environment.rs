//! The simulated fetchable web.
//!
//! Fetch outcomes are pure functions of the graph: failures are node
//! behaviours rather than timed events, redirect chains collapse onto their
//! final page, and session-id truncation is decided by the page's
//! precomputed truncation outcome. Inlinks come from the true in-edges of
//! the graph, capped and sampled deterministically per node.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::OnceLock;

use rand::seq::index;

use crate::error::Result;
use crate::seed::rng_for;
use crate::webgraph::{Behavior, NodeId, TruncationOutcome, WebGraph};

/// URLs whose encoded form is longer than this are not fetched.
pub const MAX_URL_LENGTH: usize = 300;
/// Redirects followed before giving up.
pub const MAX_REDIRECTS: usize = 10;
/// Inlinks retrieved per node.
pub const MAX_INLINKS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnfetchableReason {
    TooLongUrl,
    FetchFail,
    Timeout,
    RedirectLimit,
    RedirectLoop,
}

impl fmt::Display for UnfetchableReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            UnfetchableReason::TooLongUrl => "too-long-url",
            UnfetchableReason::FetchFail => "fetch-fail",
            UnfetchableReason::Timeout => "timeout",
            UnfetchableReason::RedirectLimit => "redirect-limit",
            UnfetchableReason::RedirectLoop => "redirect-loop",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FetchOutcome<'g> {
    Fetched { node: NodeId, outlinks: &'g [NodeId] },
    Unfetchable(UnfetchableReason),
}

impl FetchOutcome<'_> {
    pub fn node(&self) -> Option<NodeId> {
        match self {
            FetchOutcome::Fetched { node, .. } => Some(*node),
            FetchOutcome::Unfetchable(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RedirectResolution {
    /// Every page touched, starting node first and final page last.
    pub chain: Vec<NodeId>,
    pub final_node: NodeId,
    pub truncation_applied: bool,
    pub truncation_undone: bool,
}

/// Follow `node`'s redirect chain. Loops and chains of more than
/// [`MAX_REDIRECTS`] hops are reported as failures.
pub fn resolve_redirects(graph: &WebGraph, node: NodeId) -> Result<RedirectResolution, UnfetchableReason> {
    let mut chain = vec![node];
    let mut current = node;
    while let Behavior::RedirectTo(next) = graph.meta(current).behavior {
        if chain.contains(&next) {
            return Err(UnfetchableReason::RedirectLoop);
        }
        if chain.len() > MAX_REDIRECTS {
            return Err(UnfetchableReason::RedirectLimit);
        }
        chain.push(next);
        current = next;
    }
    // Truncating at the question mark keeps the same logical page; an error
    // page or a fresh redirect on the truncated URL means the walk keeps the
    // untruncated URL, which is the same node again.
    let (truncation_applied, truncation_undone) = match graph.meta(current).behavior {
        Behavior::SessionIdUrl(TruncationOutcome::Ok) => (true, false),
        Behavior::SessionIdUrl(_) => (true, true),
        _ => (false, false),
    };
    Ok(RedirectResolution { chain, final_node: current, truncation_applied, truncation_undone })
}

fn page_failure(graph: &WebGraph, node: NodeId) -> Option<UnfetchableReason> {
    let meta = graph.meta(node);
    if meta.url.len() > MAX_URL_LENGTH {
        return Some(UnfetchableReason::TooLongUrl);
    }
    match meta.behavior {
        Behavior::FetchFail => Some(UnfetchableReason::FetchFail),
        Behavior::Timeout => Some(UnfetchableReason::Timeout),
        _ => None,
    }
}

/// Uncached fetch: URL length, fetch behaviour, redirects, truncation.
pub fn fetch(graph: &WebGraph, node: NodeId) -> FetchOutcome<'_> {
    if let Some(reason) = page_failure(graph, node) {
        return FetchOutcome::Unfetchable(reason);
    }
    let resolution = match resolve_redirects(graph, node) {
        Ok(r) => r,
        Err(reason) => return FetchOutcome::Unfetchable(reason),
    };
    if let Some(reason) = resolution.chain[1..].iter().find_map(|&hop| page_failure(graph, hop)) {
        return FetchOutcome::Unfetchable(reason);
    }
    let node = resolution.final_node;
    FetchOutcome::Fetched { node, outlinks: graph.out_links(node) }
}

/// A graph plus the global seed, with fetch outcomes and redirect pools
/// precomputed.
pub struct Environment<'g> {
    graph: &'g WebGraph,
    seed: u64,
    resolved: Vec<Result<NodeId, UnfetchableReason>>,
    /// final page -> other pages whose redirect chain ends there
    redirect_sources: HashMap<NodeId, Vec<NodeId>>,
}

impl<'g> Environment<'g> {
    pub fn new(graph: &'g WebGraph, seed: u64) -> Self {
        let resolved: Vec<_> = graph
            .node_ids()
            .map(|v| match fetch(graph, v) {
                FetchOutcome::Fetched { node, .. } => Ok(node),
                FetchOutcome::Unfetchable(r) => Err(r),
            })
            .collect();
        let mut redirect_sources: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
        for (v, r) in resolved.iter().enumerate() {
            if let Ok(fin) = r {
                if fin.index() != v {
                    redirect_sources.entry(*fin).or_default().push(NodeId::from(v));
                }
            }
        }
        Environment { graph, seed, resolved, redirect_sources }
    }

    pub fn graph(&self) -> &'g WebGraph {
        self.graph
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn fetch(&self, node: NodeId) -> FetchOutcome<'g> {
        match self.resolved[node.index()] {
            Ok(fin) => FetchOutcome::Fetched { node: fin, outlinks: self.graph.out_links(fin) },
            Err(r) => FetchOutcome::Unfetchable(r),
        }
    }

    pub fn is_fetchable(&self, node: NodeId) -> bool {
        self.resolved[node.index()].is_ok()
    }

    /// Final page `node` resolves to, if fetchable.
    pub fn resolve(&self, node: NodeId) -> Option<NodeId> {
        self.resolved[node.index()].ok()
    }

    /// In-edge sources of `node` pooled with those of every page that
    /// redirects onto it, one entry per edge.
    pub fn inlink_pool(&self, node: NodeId) -> Vec<NodeId> {
        let mut pool = self.graph.in_links(node).to_vec();
        if let Some(sources) = self.redirect_sources.get(&node) {
            for &s in sources {
                pool.extend_from_slice(self.graph.in_links(s));
            }
        }
        pool
    }

    /// Up to [`MAX_INLINKS`] pooled in-edges, sampled without replacement.
    /// Deterministic in `(node, seed)`.
    pub fn retrieve_inlinks(&self, node: NodeId) -> Vec<NodeId> {
        let pool = self.inlink_pool(node);
        if pool.len() <= MAX_INLINKS {
            return pool;
        }
        let mut rng = rng_for(self.seed, "inlinks", u64::from(node.0));
        let mut picked = index::sample(&mut rng, pool.len(), MAX_INLINKS).into_vec();
        picked.sort_unstable();
        picked.into_iter().map(|i| pool[i]).collect()
    }
}

/// Undirected adjacency of a page as stored at its first visit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyRecord {
    pub outlinks: Vec<NodeId>,
    pub inlinks: Vec<NodeId>,
}

impl AdjacencyRecord {
    /// Number of adjacency slots, not counting any selfloop.
    pub fn len(&self) -> usize {
        self.outlinks.len() + self.inlinks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Slot `i` of the concatenation outlinks ++ inlinks.
    pub fn slot(&self, i: usize) -> (NodeId, bool) {
        if i < self.outlinks.len() {
            (self.outlinks[i], true)
        } else {
            (self.inlinks[i - self.outlinks.len()], false)
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FrozenEntry<'a> {
    pub record: &'a AdjacencyRecord,
    pub frozen_at_step: u64,
}

const UNSET: u64 = u64::MAX;

/// Write-once store of adjacency records shared by all walkers.
///
/// A record is a pure function of `(node, global seed)`, so concurrent
/// registration is idempotent. `frozen_at_step` keeps the smallest step
/// index reported by any registration, which makes it independent of
/// which walker got there first.
pub struct FrozenAdjacency {
    records: Vec<OnceLock<AdjacencyRecord>>,
    steps: Vec<AtomicU64>,
}

impl FrozenAdjacency {
    pub fn new(node_count: usize) -> Self {
        FrozenAdjacency {
            records: (0..node_count).map(|_| OnceLock::new()).collect(),
            steps: (0..node_count).map(|_| AtomicU64::new(UNSET)).collect(),
        }
    }

    pub fn freeze(&self, env: &Environment<'_>, node: NodeId, step: u64) -> FrozenEntry<'_> {
        let record = self.records[node.index()].get_or_init(|| AdjacencyRecord {
            outlinks: env.graph().out_links(node).to_vec(),
            inlinks: env.retrieve_inlinks(node),
        });
        let prev = self.steps[node.index()].fetch_min(step, Ordering::Relaxed);
        FrozenEntry { record, frozen_at_step: prev.min(step) }
    }

    pub fn get(&self, node: NodeId) -> Option<&AdjacencyRecord> {
        self.records.get(node.index()).and_then(|r| r.get())
    }

    pub fn frozen_at(&self, node: NodeId) -> Option<u64> {
        let s = self.steps.get(node.index())?.load(Ordering::Relaxed);
        (s != UNSET).then_some(s)
    }

    pub fn len(&self) -> usize {
        self.records.iter().filter(|r| r.get().is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Registered nodes in id order.
    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &AdjacencyRecord)> + '_ {
        self.records.iter().enumerate().filter_map(|(i, r)| r.get().map(|rec| (NodeId::from(i), rec)))
    }

    /// `F <id> out=<csv-ids> in=<csv-ids> step=<t>` per registered node.
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        let csv = |ids: &[NodeId]| ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
        for (id, rec) in self.iter() {
            let step = self.frozen_at(id).unwrap_or(0);
            writeln!(w, "F {id} out={} in={} step={step}", csv(&rec.outlinks), csv(&rec.inlinks))?;
        }
        Ok(())
    }
}

/// Freeze every page reachable from `start` through frozen undirected
/// adjacency (unfetchable neighbours are skipped). Used by the exact
/// stationary oracles.
pub fn freeze_component(env: &Environment<'_>, start: NodeId) -> FrozenAdjacency {
    let store = FrozenAdjacency::new(env.graph().node_count());
    let Some(start) = env.resolve(start) else {
        return store;
    };
    let mut queue = VecDeque::from([start]);
    store.freeze(env, start, 0);
    while let Some(v) = queue.pop_front() {
        let rec = store.get(v).expect("queued nodes are frozen");
        for i in 0..rec.len() {
            if let Some(w) = env.resolve(rec.slot(i).0) {
                if store.get(w).is_none() {
                    store.freeze(env, w, 0);
                    queue.push_back(w);
                }
            }
        }
    }
    store
}
