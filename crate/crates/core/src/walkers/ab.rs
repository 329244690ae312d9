use rand::Rng;

use super::{Step, StepKind};
use crate::environment::{Environment, FrozenAdjacency};
use crate::webgraph::NodeId;

/// One step of Walk AB from `current`, which must already be frozen.
///
/// Picks uniformly among the frozen adjacency slots plus one selfloop slot.
/// If the chosen neighbour cannot be fetched, moves to a uniformly chosen
/// fetchable sibling instead; with no fetchable sibling the walk stays put.
/// The node moved to is frozen at `step_index`.
pub fn step_ab<R: Rng + ?Sized>(
    env: &Environment<'_>,
    frozen: &FrozenAdjacency,
    current: NodeId,
    step_index: u64,
    rng: &mut R,
) -> Step {
    let record = frozen.get(current).expect("step_ab: current node has no frozen adjacency");
    let slots = record.len();
    let pick = rng.random_range(0..=slots);
    if pick == slots {
        return Step::new(current, StepKind::SelfloopRun(1));
    }
    let (target, is_out) = record.slot(pick);
    if let Some(next) = env.resolve(target) {
        frozen.freeze(env, next, step_index);
        let kind = if is_out { StepKind::Outlink } else { StepKind::Inlink };
        return Step::new(next, kind);
    }
    let fetchable: Vec<NodeId> = (0..slots).filter_map(|i| env.resolve(record.slot(i).0)).collect();
    if fetchable.is_empty() {
        return Step::new(current, StepKind::SelfloopRun(1));
    }
    let next = fetchable[rng.random_range(0..fetchable.len())];
    frozen.freeze(env, next, step_index);
    Step::new(next, StepKind::SiblingFallback)
}
