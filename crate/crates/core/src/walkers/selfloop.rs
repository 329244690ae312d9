use rand::Rng;
use rand_distr::{Distribution, Geometric};

use super::{MergedWalk, Step, StepKind, WalkKind, WalkerTrace};
use crate::environment::FrozenAdjacency;
use crate::error::{Error, Result};
use crate::par;
use crate::seed::rng_for;
use crate::webgraph::NodeId;

/// Degree used by the subsampling weights and by selfloop injection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegreeRule {
    /// Frozen undirected degree plus the single selfloop.
    A,
    /// Regular degree `max`, padded with selfloops.
    B { max: u64 },
}

impl DegreeRule {
    pub fn kind(self) -> WalkKind {
        match self {
            DegreeRule::A => WalkKind::A,
            DegreeRule::B { .. } => WalkKind::B,
        }
    }
}

/// Modified degree of a frozen node under `rule`.
pub fn modified_degree(frozen: &FrozenAdjacency, node: NodeId, rule: DegreeRule) -> Result<u64> {
    let record = frozen.get(node).ok_or_else(|| Error::Data(format!("node {node} has no frozen adjacency")))?;
    let k = record.len() as u64 + 1;
    match rule {
        DegreeRule::A => Ok(k),
        DegreeRule::B { max } if k > max => {
            Err(Error::Config(format!("node {node} has degree {k} above max = {max}")))
        }
        DegreeRule::B { max } => Ok(max),
    }
}

/// Turn one Walk AB trace into a Walk A or Walk B trace.
///
/// A keeps the trace. For B, each entry at a node of real degree `k`
/// (frozen slots plus selfloop) is followed by `G ~ Geometric(k/max)` extra
/// selfloop steps when `G > 0`. A B-walker at `v` leaves with probability
/// `(k-1)/max`; splitting each B step into "take an AB step" (probability
/// `k/max`) or "pure selfloop" gives exactly this construction.
pub fn inject_selfloops<R: Rng + ?Sized>(
    trace: &WalkerTrace,
    frozen: &FrozenAdjacency,
    rule: DegreeRule,
    rng: &mut R,
) -> Result<WalkerTrace> {
    let DegreeRule::B { max } = rule else {
        return Ok(trace.clone());
    };
    let mut steps = Vec::with_capacity(trace.steps.len() * 2);
    let mut cached: Option<(NodeId, Geometric)> = None;
    for &step in &trace.steps {
        steps.push(step);
        let geo = match cached {
            Some((node, geo)) if node == step.node => geo,
            _ => {
                let k = modified_degree(frozen, step.node, DegreeRule::A)?;
                if k > max {
                    return Err(Error::Config(format!("node {} has degree {k} above max = {max}", step.node)));
                }
                let geo = Geometric::new(k as f64 / max as f64)
                    .map_err(|e| Error::Parameter(format!("geometric parameter: {e}")))?;
                cached = Some((step.node, geo));
                geo
            }
        };
        let extra = geo.sample(rng);
        if extra > 0 {
            steps.push(Step::new(step.node, StepKind::SelfloopRun(extra)));
        }
    }
    Ok(WalkerTrace { walker: trace.walker, steps })
}

/// Derive the Walk A or Walk B merge from a Walk AB merge. Walker `i` uses
/// its own RNG stream, so the result is independent of scheduling.
pub fn simulate_selfloops(merged_ab: &MergedWalk, frozen: &FrozenAdjacency, rule: DegreeRule, seed: u64) -> Result<MergedWalk> {
    let stage = match rule {
        DegreeRule::A => "selfloops-a",
        DegreeRule::B { .. } => "selfloops-b",
    };
    let traces = par::map_slice(&merged_ab.traces, |t| {
        let mut rng = rng_for(seed, stage, t.walker as u64);
        inject_selfloops(t, frozen, rule, &mut rng)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(MergedWalk::from_traces(rule.kind(), merged_ab.walker_count, traces, merged_ab.stuck_walkers.clone()))
}
