//! Data-parallel hot paths on one thread versus the whole rayon pool.
//!
//! Built without the `parallel` feature (`cargo bench --no-default-features`)
//! every path runs the sequential fallback and only the `sequential` variant
//! is measured.

use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use websample::environment::Environment;
use websample::par;
use websample::subsampling::{extract_window, make_samples, pagerank, SampleSpec, SampleType, WeightSource, Window};
use websample::walkers::{run_walks, simulate_selfloops, DegreeRule, StuckLimits, WalkAlgorithm, WalkConfig};
use websample::webgraph::{generate_power_law_web, GeneratorSpec, WebGraph};

fn graph() -> WebGraph {
    generate_power_law_web(&GeneratorSpec { n: 20_000, seed: 1, ..GeneratorSpec::default() }).unwrap()
}

fn walk_config() -> WalkConfig {
    WalkConfig {
        algorithm: WalkAlgorithm::AB,
        walkers: 16,
        step_budget: 20_000,
        limits: StuckLimits::DISABLED,
        seed: 3,
        ..WalkConfig::default()
    }
}

/// Run `f` under each execution mode available in this build.
fn modes(c: &mut Criterion, name: &str, f: &(dyn Fn() + Sync)) {
    let mut group = c.benchmark_group(name);
    group.sample_size(10).warm_up_time(Duration::from_millis(500)).measurement_time(Duration::from_secs(3));
    if !par::is_parallel() {
        group.bench_function(BenchmarkId::from_parameter("sequential"), |b| b.iter(f));
    } else {
        for threads in [1, 0] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let label = match threads {
                1 => "single-thread".to_string(),
                _ => format!("pool-{}", pool.current_num_threads()),
            };
            group.bench_function(BenchmarkId::from_parameter(label), |b| b.iter(|| pool.install(f)));
        }
    }
    group.finish();
}

fn benches(c: &mut Criterion) {
    let g = graph();
    let env = Environment::new(&g, 5);

    modes(c, "walk_ab", &|| {
        run_walks(&env, &walk_config()).unwrap();
    });

    let run = run_walks(&env, &walk_config()).unwrap();
    let frozen = run.frozen.unwrap();
    modes(c, "selfloops_b", &|| {
        simulate_selfloops(&run.merged, &frozen, DegreeRule::B { max: 50_000 }, 7).unwrap();
    });

    let a = simulate_selfloops(&run.merged, &frozen, DegreeRule::A, 7).unwrap();
    let windowed = extract_window(&a, Window::LastHalf);
    modes(c, "samples", &|| {
        let spec = SampleSpec::new(SampleType::AStatesOnLastHalf, 500.0, 9);
        make_samples(&windowed, spec, WeightSource::Degree { frozen: &frozen, rule: DegreeRule::A }, 64).unwrap();
    });

    let out: Vec<Vec<usize>> = g.node_ids().map(|v| g.out_links(v).iter().map(|w| w.index()).collect()).collect();
    modes(c, "pagerank", &|| {
        pagerank(&out, 1.0 / 7.0);
    });
}

criterion_group!(walks, benches);
criterion_main!(walks);
