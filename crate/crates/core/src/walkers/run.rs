use std::collections::BTreeSet;

use super::{step_ab, step_c, HostRunTracker, MergedWalk, SeenCatalog, Step, StepKind, WalkAlgorithm, WalkConfig, WalkKind, WalkerTrace};
use crate::environment::{Environment, FrozenAdjacency};
use crate::error::{Error, Result};
use crate::par;
use crate::seed::{rng_for, SimRng};
use crate::webgraph::NodeId;

/// Output of one walk phase. Stuck walkers keep their trace up to the step
/// that stopped them; use [`super::prune_stuck`] to drop them.
pub struct WalkRun {
    pub merged: MergedWalk,
    /// Shared adjacency store of a Walk AB run.
    pub frozen: Option<FrozenAdjacency>,
    /// Shared seen catalog of a Walk C run.
    pub catalog: Option<SeenCatalog>,
}

/// Run all walkers of one phase from `config.start_node`.
pub fn run_walks(env: &Environment<'_>, config: &WalkConfig) -> Result<WalkRun> {
    config.validate(env.graph())?;
    let start = env
        .resolve(config.start_node)
        .ok_or_else(|| Error::Startup(format!("start node {} cannot be fetched", config.start_node)))?;
    let run = match config.algorithm {
        WalkAlgorithm::AB => run_ab(env, config, start),
        WalkAlgorithm::C => run_c(env, config, start),
    };
    let m = &run.merged;
    log::info!(
        "walk {}: {} walkers, {} visits, {} distinct nodes, {} stuck",
        m.kind,
        m.walker_count,
        m.total_visits(),
        m.distinct_nodes(),
        m.stuck_walkers.len()
    );
    Ok(run)
}

fn run_ab(env: &Environment<'_>, config: &WalkConfig, start: NodeId) -> WalkRun {
    let graph = env.graph();
    let frozen = FrozenAdjacency::new(graph.node_count());
    frozen.freeze(env, start, 0);
    let results = par::map_range(config.walkers, |w| {
        let mut rng = rng_for(config.seed, "walk-ab", w as u64);
        let mut tracker = HostRunTracker::new(config.limits);
        let mut steps = vec![Step::new(start, StepKind::Start)];
        let mut stuck = tracker.observe(graph.host_id(start), 1).is_some();
        let mut current = start;
        let mut t = 1;
        while !stuck && t <= config.step_budget {
            let step = step_ab(env, &frozen, current, t, &mut rng);
            steps.push(step);
            stuck = tracker.observe(graph.host_id(step.node), step.visits()).is_some();
            current = step.node;
            t += 1;
        }
        (WalkerTrace { walker: w, steps }, stuck)
    });
    let (merged, _) = assemble(WalkKind::AB, config.walkers, results);
    WalkRun { merged, frozen: Some(frozen), catalog: None }
}

struct CWalker {
    rng: SimRng,
    tracker: HostRunTracker,
    steps: Vec<Step>,
    current: NodeId,
    stuck: bool,
}

// Walk C walkers share one growing catalog, so they advance in lockstep:
// step t of walker 0, then step t of walker 1, and so on.
fn run_c(env: &Environment<'_>, config: &WalkConfig, start: NodeId) -> WalkRun {
    let graph = env.graph();
    let mut catalog = SeenCatalog::new();
    catalog.visit(graph, start);
    let mut walkers: Vec<CWalker> = (0..config.walkers)
        .map(|w| {
            let mut tracker = HostRunTracker::new(config.limits);
            let stuck = tracker.observe(graph.host_id(start), 1).is_some();
            CWalker {
                rng: rng_for(config.seed, "walk-c", w as u64),
                tracker,
                steps: vec![Step::new(start, StepKind::Start)],
                current: start,
                stuck,
            }
        })
        .collect();
    for _ in 0..config.step_budget {
        let mut active = false;
        for w in walkers.iter_mut().filter(|w| !w.stuck) {
            active = true;
            let step = step_c(env, &catalog, w.current, config.d, config.jump_mode, &mut w.rng);
            if !catalog.is_visited(step.node) {
                catalog.visit(graph, step.node);
            }
            w.steps.push(step);
            w.stuck = w.tracker.observe(graph.host_id(step.node), 1).is_some();
            w.current = step.node;
        }
        if !active {
            break;
        }
    }
    let results = walkers
        .into_iter()
        .enumerate()
        .map(|(i, w)| (WalkerTrace { walker: i, steps: w.steps }, w.stuck))
        .collect();
    let (merged, _) = assemble(WalkKind::C, config.walkers, results);
    WalkRun { merged, frozen: None, catalog: Some(catalog) }
}

fn assemble(kind: WalkKind, walkers: usize, results: Vec<(WalkerTrace, bool)>) -> (MergedWalk, usize) {
    let stuck: BTreeSet<usize> = results.iter().filter(|(_, s)| *s).map(|(t, _)| t.walker).collect();
    let n = stuck.len();
    let traces = results.into_iter().map(|(t, _)| t).collect();
    (MergedWalk::from_traces(kind, walkers, traces, stuck), n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walkers::{JumpMode, StuckLimits};
    use crate::webgraph::{generate_power_law_web, generate_trap_graph, Behavior, GeneratorSpec, HazardRates, NodeMeta, WebGraph};

    fn config(algorithm: WalkAlgorithm, walkers: usize, budget: u64) -> WalkConfig {
        WalkConfig { algorithm, walkers, step_budget: budget, seed: 11, ..WalkConfig::default() }
    }

    #[test]
    fn zero_budget_is_start_only() {
        let g = generate_trap_graph(8).unwrap();
        let env = Environment::new(&g, 0);
        for alg in [WalkAlgorithm::AB, WalkAlgorithm::C] {
            let run = run_walks(&env, &WalkConfig { start_node: NodeId(5), ..config(alg, 7, 0) }).unwrap();
            assert_eq!(run.merged.visit_count.len(), 1);
            assert_eq!(run.merged.visit_count[&NodeId(5)], 7);
            assert_eq!(run.merged.tallies.total(), 0);
        }
    }

    #[test]
    fn single_dead_end_always_jumps() {
        let node = NodeMeta {
            url: "http://a.x.com/".into(),
            host: "a.x.com".into(),
            domain: "x.com".into(),
            tld: "com".into(),
            content_length: 1,
            behavior: Behavior::DeadEnd,
        };
        let g = WebGraph::new(vec![node], vec![vec![]]).unwrap();
        let env = Environment::new(&g, 0);
        let run = run_walks(&env, &WalkConfig { limits: StuckLimits::DISABLED, ..config(WalkAlgorithm::C, 2, 500) }).unwrap();
        assert_eq!(run.merged.tallies.jump_fraction(), 1.0);
        assert_eq!(run.merged.visit_count[&NodeId(0)], 1002);
    }

    #[test]
    fn unfetchable_start_is_startup_error() {
        let mut spec = GeneratorSpec { n: 50, seed: 3, ..GeneratorSpec::default() };
        spec.hazards = HazardRates { fetch_fail: 1.0, ..HazardRates::default() };
        let g = generate_power_law_web(&spec).unwrap();
        let env = Environment::new(&g, 0);
        assert!(matches!(run_walks(&env, &config(WalkAlgorithm::AB, 1, 10)), Err(Error::Startup(_))));
    }

    #[test]
    fn runs_are_deterministic() {
        let spec = GeneratorSpec { n: 300, seed: 5, ..GeneratorSpec::default() };
        let g = generate_power_law_web(&spec).unwrap();
        let env = Environment::new(&g, 9);
        for alg in [WalkAlgorithm::AB, WalkAlgorithm::C] {
            let a = run_walks(&env, &config(alg, 4, 2000)).unwrap();
            let b = run_walks(&env, &config(alg, 4, 2000)).unwrap();
            assert_eq!(a.merged, b.merged);
            assert!(a.merged.total_visits() > 4);
        }
    }

    #[test]
    fn c_hazard_free_jump_fraction() {
        let spec = GeneratorSpec { n: 400, seed: 8, ..GeneratorSpec::default() };
        let g = generate_power_law_web(&spec).unwrap();
        let env = Environment::new(&g, 0);
        let run = run_walks(&env, &config(WalkAlgorithm::C, 5, 40_000)).unwrap();
        let jf = run.merged.tallies.jump_fraction();
        assert!((jf - 1.0 / 7.0).abs() < 0.01, "jump fraction {jf}");
        assert_eq!(run.merged.tallies.forced_jump, 0);
    }

    #[test]
    fn ab_trap_walk_gets_stuck() {
        let g = generate_trap_graph(40).unwrap();
        let env = Environment::new(&g, 0);
        let limits = StuckLimits { consecutive_host_limit: 50, overload_limit: 3 };
        let run = run_walks(&env, &WalkConfig { limits, ..config(WalkAlgorithm::AB, 4, 20_000) }).unwrap();
        assert!(!run.merged.stuck_walkers.is_empty());
        for t in &run.merged.traces {
            if run.merged.stuck_walkers.contains(&t.walker) {
                assert!(t.len_visits() < 20_001);
            }
        }
        let run_c = run_walks(&env, &WalkConfig { limits, jump_mode: JumpMode::Hierarchical, ..config(WalkAlgorithm::C, 4, 20_000) }).unwrap();
        assert!(run_c.merged.stuck_walkers.is_empty());
    }
}
