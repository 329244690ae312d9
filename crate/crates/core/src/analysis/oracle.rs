//! Exact stationary laws of the walks, used to check simulations.

use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::environment::{Environment, FrozenAdjacency};
use crate::error::{Error, Result};
use crate::par;
use crate::subsampling::{ScoreKind, ScoreVector, PAGERANK_MAX_ITERATIONS, PAGERANK_TOLERANCE};
use crate::webgraph::NodeId;

#[derive(Clone, Copy)]
pub enum Chain<'a> {
    /// Walk A on the frozen undirected graph: `pi(v)` proportional to frozen
    /// degree plus one.
    UndirectedDegree(&'a FrozenAdjacency),
    /// Walk B: uniform over the frozen component.
    RegularUniform(&'a FrozenAdjacency),
    /// Walk C with global uniform jumps and teleport probability `d`.
    PageRankTeleport(f64),
}

/// Multiplicity of each resolved neighbour of every frozen node.
pub(crate) fn frozen_neighbours(env: &Environment<'_>, frozen: &FrozenAdjacency) -> Result<BTreeMap<NodeId, HashMap<NodeId, u64>>> {
    let mut adj = BTreeMap::new();
    for (u, rec) in frozen.iter() {
        let mut m: HashMap<NodeId, u64> = HashMap::new();
        for i in 0..rec.len() {
            let target = rec.slot(i).0;
            let v = env.resolve(target).ok_or_else(|| {
                Error::Domain(format!("node {u} has the unfetchable neighbour {target}; sibling fallback has no closed form"))
            })?;
            *m.entry(v).or_insert(0) += 1;
        }
        adj.insert(u, m);
    }
    Ok(adj)
}

/// Check the frozen graph is symmetric and connected; returns `deg + 1`
/// per node.
fn reversible_component(env: &Environment<'_>, frozen: &FrozenAdjacency) -> Result<BTreeMap<NodeId, u64>> {
    let adj = frozen_neighbours(env, frozen)?;
    let Some(&first) = adj.keys().next() else {
        return Err(Error::Domain("no frozen nodes".into()));
    };
    for (u, m) in &adj {
        for (v, &c) in m {
            let back = adj
                .get(v)
                .ok_or_else(|| Error::Domain(format!("neighbour {v} of {u} is not frozen")))?
                .get(u)
                .copied()
                .unwrap_or(0);
            if back != c {
                return Err(Error::Domain(format!("frozen adjacency is asymmetric between {u} and {v}")));
            }
        }
    }
    let mut seen = std::collections::HashSet::from([first]);
    let mut queue = VecDeque::from([first]);
    while let Some(u) = queue.pop_front() {
        for v in adj[&u].keys() {
            if seen.insert(*v) {
                queue.push_back(*v);
            }
        }
    }
    if seen.len() != adj.len() {
        return Err(Error::Domain("frozen graph is not connected".into()));
    }
    Ok(frozen.iter().map(|(u, rec)| (u, rec.len() as u64 + 1)).collect())
}

pub fn stationary_oracle(env: &Environment<'_>, chain: Chain<'_>) -> Result<ScoreVector> {
    match chain {
        Chain::UndirectedDegree(frozen) => {
            let deg = reversible_component(env, frozen)?;
            ScoreVector::from_counts(ScoreKind::Stationary, deg.into_iter().map(|(v, d)| (v, d as f64)))
        }
        Chain::RegularUniform(frozen) => {
            let deg = reversible_component(env, frozen)?;
            ScoreVector::from_counts(ScoreKind::Stationary, deg.into_keys().map(|v| (v, 1.0)))
        }
        Chain::PageRankTeleport(d) => pagerank_chain(env, d),
    }
}

/// Stationary law of Walk C in verification mode, including its failure
/// rules: a jump lands on `resolve(u)` for uniform fetchable `u`; dead ends
/// and unfetchable outlinks jump.
fn pagerank_chain(env: &Environment<'_>, d: f64) -> Result<ScoreVector> {
    if !(d > 0.0 && d < 1.0) {
        return Err(Error::Parameter(format!("teleport probability must lie in (0, 1), got {d}")));
    }
    let g = env.graph();
    let n = g.node_count();
    let mut jump = vec![0.0; n];
    let mut fetchable = 0usize;
    for v in g.node_ids() {
        if let Some(w) = env.resolve(v) {
            jump[w.index()] += 1.0;
            fetchable += 1;
        }
    }
    if fetchable == 0 {
        return Err(Error::Domain("no fetchable page".into()));
    }
    jump.iter_mut().for_each(|j| *j /= fetchable as f64);
    // probability mass sent to the jump law from v, and resolved in-edges
    let mut to_jump = vec![0.0; n];
    let mut inn: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for v in g.node_ids() {
        let out = g.out_links(v);
        if out.is_empty() {
            to_jump[v.index()] = 1.0;
            continue;
        }
        let share = 1.0 / out.len() as f64;
        for &o in out {
            match env.resolve(o) {
                Some(w) => inn[w.index()].push((v.index(), share)),
                None => to_jump[v.index()] += share,
            }
        }
    }
    let mut x = jump.clone();
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..PAGERANK_MAX_ITERATIONS.max(400) {
        let jumping: f64 = (0..n).map(|v| x[v] * (d + (1.0 - d) * to_jump[v])).sum();
        let xs = &x;
        par::fill_indexed(&mut next, |w| {
            jumping * jump[w] + (1.0 - d) * inn[w].iter().map(|&(v, s)| xs[v] * s).sum::<f64>()
        });
        residual = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        if residual < PAGERANK_TOLERANCE {
            break;
        }
    }
    if residual >= PAGERANK_TOLERANCE {
        log::warn!("pagerank oracle residual {residual:.3e}");
    }
    let scores = g.node_ids().filter(|&v| env.resolve(v) == Some(v)).map(|v| (v, x[v.index()])).collect();
    Ok(ScoreVector::new(ScoreKind::Stationary, scores))
}
