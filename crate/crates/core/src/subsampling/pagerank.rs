use std::collections::{BTreeMap, HashMap};

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::par;
use crate::webgraph::NodeId;

pub const PAGERANK_TOLERANCE: f64 = 1e-10;
pub const PAGERANK_MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ScoreKind {
    SubgraphPageRank,
    VisitRatio,
    /// Exact stationary law of a chain, from the oracles.
    Stationary,
    Empirical,
}

/// Probability vector over nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub kind: ScoreKind,
    pub scores: BTreeMap<NodeId, f64>,
}

impl ScoreVector {
    pub fn new(kind: ScoreKind, scores: BTreeMap<NodeId, f64>) -> Self {
        ScoreVector { kind, scores }
    }

    /// Normalise non-negative counts into a score vector.
    pub fn from_counts<I: IntoIterator<Item = (NodeId, f64)>>(kind: ScoreKind, counts: I) -> Result<Self> {
        let scores: BTreeMap<NodeId, f64> = counts.into_iter().collect();
        let total: f64 = scores.values().sum();
        if !(total > 0.0) || scores.values().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(Error::Data("score counts must be non-negative with a positive total".into()));
        }
        Ok(ScoreVector { kind, scores: scores.into_iter().map(|(k, v)| (k, v / total)).collect() })
    }

    pub fn get(&self, node: NodeId) -> f64 {
        self.scores.get(&node).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.scores.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageRankResult {
    pub scores: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

impl PageRankResult {
    pub fn converged(&self) -> bool {
        self.residual < PAGERANK_TOLERANCE
    }
}

/// PageRank with uniform teleport probability `d` on `0..out.len()`.
/// Repeated entries in `out[u]` are parallel edges. Dangling mass is spread
/// uniformly. Pull-based power iteration, stopping at an L1 residual below
/// [`PAGERANK_TOLERANCE`] or after [`PAGERANK_MAX_ITERATIONS`] rounds.
pub fn pagerank(out: &[Vec<usize>], d: f64) -> PageRankResult {
    let n = out.len();
    if n == 0 {
        return PageRankResult { scores: Vec::new(), residual: 0.0, iterations: 0 };
    }
    let mut inn: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (u, heads) in out.iter().enumerate() {
        for &v in heads {
            inn[v].push(u);
        }
    }
    let inv_deg: Vec<f64> = out.iter().map(|h| if h.is_empty() { 0.0 } else { 1.0 / h.len() as f64 }).collect();
    let nf = n as f64;
    let mut x = vec![1.0 / nf; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < PAGERANK_MAX_ITERATIONS {
        let dangling: f64 = (0..n).filter(|&u| out[u].is_empty()).map(|u| x[u]).sum();
        let base = d / nf + (1.0 - d) * dangling / nf;
        let xs = &x;
        par::fill_indexed(&mut next, |v| base + (1.0 - d) * inn[v].iter().map(|&u| xs[u] * inv_deg[u]).sum::<f64>());
        residual = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        iterations += 1;
        if residual < PAGERANK_TOLERANCE {
            break;
        }
    }
    if residual >= PAGERANK_TOLERANCE {
        log::warn!("pagerank did not converge: residual {residual:.3e} after {iterations} iterations");
    }
    PageRankResult { scores: x, residual, iterations }
}

/// PageRank of the subgraph induced by `states`. An outlink `u -> x` is an
/// edge when `x` resolves (through redirects) to a member of `states`.
pub fn subgraph_pagerank(env: &Environment<'_>, states: &[NodeId], d: f64) -> Result<ScoreVector> {
    if states.is_empty() {
        return Err(Error::Data("subgraph pagerank of an empty state set".into()));
    }
    let index: HashMap<NodeId, usize> = states.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let out: Vec<Vec<usize>> = states
        .iter()
        .map(|&u| {
            env.graph()
                .out_links(u)
                .iter()
                .filter_map(|&x| env.resolve(x).and_then(|v| index.get(&v).copied()))
                .collect()
        })
        .collect();
    let result = pagerank(&out, d);
    Ok(ScoreVector::new(ScoreKind::SubgraphPageRank, states.iter().copied().zip(result.scores).collect()))
}

/// Visit count over total visits.
pub fn visit_ratio(visits: &BTreeMap<NodeId, u64>) -> Result<ScoreVector> {
    let total: u64 = visits.values().sum();
    if total == 0 {
        return Err(Error::Data("visit ratio of an empty walk".into()));
    }
    let scores = visits.iter().map(|(&v, &c)| (v, c as f64 / total as f64)).collect();
    Ok(ScoreVector::new(ScoreKind::VisitRatio, scores))
}
