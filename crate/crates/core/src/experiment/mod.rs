//! The pipeline: generate, walk, sample, analyze, compare.
//!
//! Each stage reads its inputs from the output directory and writes its
//! results back there, so stages can be run one at a time or all at once.
//! Every random stream is seeded by `derive_seed(global seed, stage, index)`.

pub mod config;
mod manifest;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use sha2::{Digest, Sha256};

pub use config::{ExperimentConfig, GraphKind, JumpModeConfig};
pub use manifest::{emit_comparison, RunManifest, StageRecord, WalkRecord};

use crate::analysis::{
    average_reports, content_length_report, host_report, log_binned, pagerank_range_report, tld_report,
    DistributionKind, SampleSummary,
};
use crate::environment::{Environment, FrozenAdjacency};
use crate::error::{Error, Result};
use crate::seed::derive_seed;
use crate::subsampling::{
    extract_window, make_samples, subgraph_pagerank, visit_ratio, Sample, SampleSpec, SampleType, ScoreKind,
    ScoreVector, WeightSource, Windowed,
};
use crate::walkers::{
    prune_stuck, read_trace, run_walks, simulate_selfloops, write_summary, write_trace, DegreeRule, MergedWalk,
    WalkAlgorithm, WalkConfig, WalkKind,
};
use crate::webgraph::{generate_power_law_web, generate_trap_graph, load_graph, save_graph, WebGraph};

pub const STAGES: [&str; 5] = ["generate", "walk", "sample", "analyze", "compare"];

/// File locations inside an output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn graph(&self) -> PathBuf {
        self.root.join("graph.txt")
    }

    pub fn trace(&self, kind: WalkKind) -> PathBuf {
        self.root.join("walk").join(format!("{kind}.trace"))
    }

    pub fn walk_summary(&self, kind: WalkKind) -> PathBuf {
        self.root.join("walk").join(format!("{kind}.summary"))
    }

    pub fn frozen(&self) -> PathBuf {
        self.root.join("walk").join("frozen.txt")
    }

    pub fn walk_record(&self) -> PathBuf {
        self.root.join("walk").join("walks.json")
    }

    pub fn sample(&self, t: SampleType, rep: usize) -> PathBuf {
        self.root.join("samples").join(t.label()).join(format!("rep{rep}.txt"))
    }

    pub fn report(&self, t: SampleType, name: &str) -> PathBuf {
        self.root.join("reports").join(t.label()).join(format!("{name}.csv"))
    }

    pub fn subgraph_report(&self) -> PathBuf {
        self.root.join("reports").join("C_subgraph_pagerank_range.csv")
    }

    pub fn summary(&self) -> PathBuf {
        self.root.join("reports").join("summary.json")
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn comparison(&self) -> PathBuf {
        self.root.join("comparison.csv")
    }

    pub fn stage_record(&self, name: &str) -> PathBuf {
        self.root.join("stages").join(format!("{name}.json"))
    }

    pub fn partial(&self) -> PathBuf {
        self.root.join(".partial")
    }

    fn relative(&self, p: &Path) -> String {
        p.strip_prefix(&self.root).unwrap_or(p).to_string_lossy().replace('\\', "/")
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn env_seed(config: &ExperimentConfig) -> u64 {
    derive_seed(config.seed, "environment", 0)
}

fn load_stage_graph(layout: &Layout) -> Result<WebGraph> {
    let path = layout.graph();
    if !path.exists() {
        return Err(Error::Data(format!("{} is missing; run the generate stage first", path.display())));
    }
    load_graph(&path)
}

fn read_merged(path: &Path) -> Result<MergedWalk> {
    let file = File::open(path).map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    read_trace(std::io::BufReader::new(file))
}

/// Build the graph named by the config and write `graph.txt`.
pub fn stage_generate(config: &ExperimentConfig, layout: &Layout) -> Result<StageRecord> {
    let graph = match config.graph.kind {
        GraphKind::PowerLaw => {
            let seed = config.graph.seed.unwrap_or_else(|| derive_seed(config.seed, "generate", 0));
            generate_power_law_web(&config.graph.generator_spec(seed))?
        }
        GraphKind::Trap => generate_trap_graph(config.graph.trap_n)?,
        GraphKind::File => load_graph(config.graph.path.as_deref().expect("validated"))?,
    };
    log::info!("graph: {} nodes, {} edges", graph.node_count(), graph.edge_count());
    fs::create_dir_all(layout.root())?;
    save_graph(&graph, &layout.graph())?;
    Ok(StageRecord::new("generate", vec![layout.relative(&layout.graph())]))
}

fn walk_config(config: &ExperimentConfig, algorithm: WalkAlgorithm) -> WalkConfig {
    let w = &config.walk;
    WalkConfig {
        algorithm,
        d: w.c.d,
        max: w.ab.max.max(1),
        walkers: w.walkers,
        step_budget: w.step_budget,
        start_node: w.start(),
        limits: w.limits(),
        jump_mode: w.c.jump_mode.into(),
        seed: derive_seed(config.seed, "walk", algorithm as u64),
    }
}

/// Ten times the largest frozen degree (selfloop included), unless set.
fn b_max(config: &ExperimentConfig, frozen: &FrozenAdjacency) -> u64 {
    if config.walk.ab.max > 0 {
        return config.walk.ab.max;
    }
    10 * frozen.iter().map(|(_, r)| r.len() as u64 + 1).max().unwrap_or(1)
}

/// Walk AB and Walk C, plus the derived Walk B trace.
pub fn stage_walk(config: &ExperimentConfig, layout: &Layout) -> Result<StageRecord> {
    let graph = load_stage_graph(layout)?;
    let env = Environment::new(&graph, env_seed(config));
    let ab = run_walks(&env, &walk_config(config, WalkAlgorithm::AB))?;
    let frozen = ab.frozen.expect("AB runs keep their frozen store");
    let max = b_max(config, &frozen);
    let b = simulate_selfloops(&ab.merged, &frozen, DegreeRule::B { max }, derive_seed(config.seed, "selfloops", 0))?;
    let a = MergedWalk { kind: WalkKind::A, ..ab.merged.clone() };
    let c = run_walks(&env, &walk_config(config, WalkAlgorithm::C))?.merged;

    let mut files = Vec::new();
    for merged in [&ab.merged, &b, &c] {
        let path = layout.trace(merged.kind);
        write_file(&path, |w| write_trace(merged, w))?;
        files.push(layout.relative(&path));
    }
    write_file(&layout.frozen(), |w| frozen.write_snapshot(w))?;
    files.push(layout.relative(&layout.frozen()));
    let mut records = BTreeMap::new();
    for merged in [&ab.merged, &a, &b, &c] {
        let path = layout.walk_summary(merged.kind);
        write_file(&path, |w| write_summary(merged, &graph, w))?;
        files.push(layout.relative(&path));
        records.insert(merged.kind.to_string(), WalkRecord::from_merged(merged, &graph));
    }
    let record = serde_json::json!({ "b_max": max, "walks": records });
    write_file(&layout.walk_record(), |w| Ok(serde_json::to_writer_pretty(&mut *w, &record)?))?;
    files.push(layout.relative(&layout.walk_record()));
    Ok(StageRecord::new("walk", files))
}

struct Walks {
    a: MergedWalk,
    b: MergedWalk,
    c: MergedWalk,
    frozen: FrozenAdjacency,
    b_max: u64,
}

fn load_walks(layout: &Layout, env: &Environment<'_>) -> Result<Walks> {
    let ab = read_merged(&layout.trace(WalkKind::AB))?;
    let b = read_merged(&layout.trace(WalkKind::B))?;
    let c = read_merged(&layout.trace(WalkKind::C))?;
    let record: serde_json::Value = serde_json::from_reader(File::open(layout.walk_record())?)?;
    let b_max = record["b_max"].as_u64().ok_or_else(|| Error::Data("walks.json lacks b_max".into()))?;
    // adjacency records are a function of (node, seed), so freezing again
    // reproduces the walk's store
    let frozen = FrozenAdjacency::new(env.graph().node_count());
    for &v in ab.visit_count.keys() {
        frozen.freeze(env, v, 0);
    }
    let a = prune_stuck(&MergedWalk { kind: WalkKind::A, ..ab });
    Ok(Walks { a, b: prune_stuck(&b), c: prune_stuck(&c), frozen, b_max })
}

fn c_scores(env: &Environment<'_>, windowed: &Windowed, t: SampleType, d: f64) -> Result<Option<ScoreVector>> {
    if windowed.is_empty() {
        return Ok(None);
    }
    Ok(match t {
        SampleType::CPr => Some(subgraph_pagerank(env, &windowed.states(), d)?),
        SampleType::CVr => Some(visit_ratio(&windowed.visits)?),
        _ => None,
    })
}

fn draw_samples(config: &ExperimentConfig, env: &Environment<'_>, walks: &Walks, t: SampleType) -> Result<Vec<Sample>> {
    let merged = match t.walk() {
        WalkKind::A | WalkKind::AB => &walks.a,
        WalkKind::B => &walks.b,
        WalkKind::C => &walks.c,
    };
    let type_index = SampleType::ALL.iter().position(|&x| x == t).expect("listed") as u64;
    let spec = SampleSpec::new(t, config.sample.target_size, derive_seed(config.seed, "sample", type_index));
    let windowed = extract_window(merged, spec.window);
    let scores = c_scores(env, &windowed, t, config.walk.c.d)?;
    let source = match (t.walk(), &scores) {
        (_, _) if windowed.is_empty() => WeightSource::Uniform,
        (WalkKind::A, _) => WeightSource::Degree { frozen: &walks.frozen, rule: DegreeRule::A },
        (WalkKind::B, _) => WeightSource::Degree { frozen: &walks.frozen, rule: DegreeRule::B { max: walks.b_max } },
        (_, Some(s)) => WeightSource::Score(s),
        _ => WeightSource::Uniform,
    };
    make_samples(&windowed, spec, source, config.sample.repetitions)
}

/// All configured sample types, `repetitions` samples each.
pub fn stage_sample(config: &ExperimentConfig, layout: &Layout) -> Result<StageRecord> {
    let graph = load_stage_graph(layout)?;
    let env = Environment::new(&graph, env_seed(config));
    let walks = load_walks(layout, &env)?;
    let mut files = Vec::new();
    for t in config.sample_types()? {
        let samples = draw_samples(config, &env, &walks, t)?;
        let sizes: Vec<usize> = samples.iter().map(Sample::len).collect();
        log::info!("{t}: sample sizes {sizes:?}");
        for s in &samples {
            let path = layout.sample(t, s.repetition);
            write_file(&path, |w| s.write(w))?;
            files.push(layout.relative(&path));
        }
    }
    Ok(StageRecord::new("sample", files))
}

fn read_samples(config: &ExperimentConfig, layout: &Layout, t: SampleType) -> Result<Vec<Sample>> {
    (0..config.sample.repetitions)
        .map(|r| {
            let path = layout.sample(t, r);
            let file = File::open(&path).map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
            Sample::read(file)
        })
        .collect()
}

/// Reports per sample type (averaged over repetitions) and `summary.json`.
pub fn stage_analyze(config: &ExperimentConfig, layout: &Layout) -> Result<StageRecord> {
    let graph = load_stage_graph(layout)?;
    let env = Environment::new(&graph, env_seed(config));
    let types = config.sample_types()?;
    let mut files = Vec::new();
    let mut summaries = Vec::new();

    let need_pr = types.iter().any(|t| t.walk() == WalkKind::C);
    let subgraph_pr = if need_pr {
        let c = prune_stuck(&read_merged(&layout.trace(WalkKind::C))?);
        let windowed = extract_window(&c, SampleType::CPr.default_window());
        let scores = c_scores(&env, &windowed, SampleType::CPr, config.walk.c.d)?
            .unwrap_or_else(|| ScoreVector::new(ScoreKind::SubgraphPageRank, BTreeMap::new()));
        let path = layout.subgraph_report();
        write_file(&path, |w| pagerank_range_report(&scores, None).write_csv(w))?;
        files.push(layout.relative(&path));
        Some(scores)
    } else {
        None
    };

    for t in types {
        let samples = read_samples(config, layout, t)?;
        let pooled: Vec<_> = samples.iter().flat_map(|s| s.members.iter().copied()).collect();
        let mut emit = |name: &str, f: &dyn Fn(&mut BufWriter<File>) -> Result<()>| -> Result<()> {
            let path = layout.report(t, name);
            write_file(&path, f)?;
            files.push(layout.relative(&path));
            Ok(())
        };
        // host table pooled over repetitions; shares are then mean shares
        let hosts = host_report(&pooled, &graph, config.report.top_hosts);
        emit("hosts", &|w| hosts.write_csv(w))?;
        let max_deg = pooled.iter().map(|&v| graph.out_degree(v) as u64).max().unwrap_or(0);
        let per_rep = |f: &dyn Fn(&Sample) -> crate::analysis::DistributionReport| {
            average_reports(&samples.iter().map(f).collect::<Vec<_>>()).expect("at least one repetition")
        };
        let outdeg = per_rep(&|s| {
            let d: Vec<u64> = s.members.iter().map(|&v| graph.out_degree(v) as u64).collect();
            log_binned(&d, max_deg, DistributionKind::Outdegree)
        });
        emit("outdegree", &|w| outdeg.write_csv(w))?;
        let tld = per_rep(&|s| tld_report(&s.members, &graph));
        emit("tld", &|w| tld.write_csv(w))?;
        let content = per_rep(&|s| content_length_report(&s.members, &graph));
        emit("content_length", &|w| content.write_csv(w))?;
        if let (WalkKind::C, Some(scores)) = (t.walk(), &subgraph_pr) {
            let pr = per_rep(&|s| pagerank_range_report(scores, Some(&s.members)));
            emit("pagerank_range", &|w| pr.write_csv(w))?;
        }
        let rows: Vec<SampleSummary> = samples.iter().map(|s| SampleSummary::compute(t.label(), &s.members, &graph)).collect();
        summaries.push(SampleSummary::average(t.label(), &rows).expect("at least one repetition"));
    }
    write_file(&layout.summary(), |w| Ok(serde_json::to_writer_pretty(&mut *w, &summaries)?))?;
    files.push(layout.relative(&layout.summary()));
    Ok(StageRecord::new("analyze", files))
}

/// Run `f` as stage `name`: a `.partial` marker naming the stage exists
/// while it runs and stays behind, naming the failed stage, on error.
pub fn run_stage<T>(layout: &Layout, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    fs::create_dir_all(layout.root()).map_err(|e| Error::from(e).in_stage(name))?;
    fs::write(layout.partial(), format!("running {name}\n")).map_err(|e| Error::from(e).in_stage(name))?;
    let started = Instant::now();
    match f() {
        Ok(v) => {
            log::info!("stage {name} finished in {:.2?}", started.elapsed());
            fs::remove_file(layout.partial()).map_err(|e| Error::from(e).in_stage(name))?;
            Ok(v)
        }
        Err(e) => {
            // best effort: the stage error matters more than the marker
            let _ = fs::write(layout.partial(), format!("failed {name}\n{e}\n"));
            Err(e.in_stage(name))
        }
    }
}

/// Run one of `generate`, `walk`, `sample` or `analyze` and record the
/// files it wrote under `stages/<name>.json` for the manifest.
pub fn run_named_stage(config: &ExperimentConfig, layout: &Layout, name: &str) -> Result<StageRecord> {
    let record = run_stage(layout, name, || match name {
        "generate" => stage_generate(config, layout),
        "walk" => stage_walk(config, layout),
        "sample" => stage_sample(config, layout),
        "analyze" => stage_analyze(config, layout),
        other => Err(Error::Parameter(format!("unknown stage `{other}`"))),
    })?;
    write_file(&layout.stage_record(name), |w| Ok(serde_json::to_writer_pretty(&mut *w, &record)?))
        .map_err(|e| e.in_stage(name))?;
    Ok(record)
}

/// Build this run's manifest from the recorded stages, write it, and write
/// `comparison.csv` over it plus any `others`.
pub fn stage_compare(config: &ExperimentConfig, layout: &Layout, others: &[RunManifest]) -> Result<RunManifest> {
    run_stage(layout, "compare", || {
        let mut stages = Vec::new();
        for name in &STAGES[..4] {
            let path = layout.stage_record(name);
            let file = File::open(&path)
                .map_err(|e| Error::Data(format!("cannot open {}: {e}; run the {name} stage first", path.display())))?;
            stages.push(serde_json::from_reader(file)?);
        }
        stages.push(StageRecord::new("compare", vec![layout.relative(&layout.comparison())]));
        let manifest = RunManifest::collect(config, layout, stages)?;
        let mut all = vec![manifest.clone()];
        all.extend_from_slice(others);
        write_file(&layout.comparison(), |w| emit_comparison(&all, w))?;
        manifest.save(&layout.manifest())?;
        Ok(manifest)
    })
}

/// All stages, then `manifest.json` and `comparison.csv`.
pub fn run_experiment(config: &ExperimentConfig, out: &Path) -> Result<RunManifest> {
    config.validate()?;
    let layout = Layout::new(out);
    for name in &STAGES[..4] {
        run_named_stage(config, &layout, name)?;
    }
    stage_compare(config, &layout, &[])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig::parse(
            "seed = 5\n[graph]\nn = 400\nhazards.dead_end = 0.02\nhazards.fetch_fail = 0.02\n[walk]\nwalkers = 3\nstep_budget = 600\n[sample]\ntarget_size = 30\nrepetitions = 2\n",
        )
        .unwrap()
    }

    fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
        let mut out = BTreeMap::new();
        let mut stack = vec![root.to_path_buf()];
        while let Some(dir) = stack.pop() {
            for entry in fs::read_dir(dir).unwrap() {
                let p = entry.unwrap().path();
                if p.is_dir() {
                    stack.push(p);
                } else {
                    out.insert(p.strip_prefix(root).unwrap().display().to_string(), fs::read(&p).unwrap());
                }
            }
        }
        out
    }

    #[test]
    fn pipeline_is_deterministic_and_complete() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let config = small_config();
        let m = run_experiment(&config, a.path()).unwrap();
        run_experiment(&config, b.path()).unwrap();
        let ta = tree(a.path());
        assert_eq!(ta, tree(b.path()));
        assert!(!a.path().join(".partial").exists());
        for stage in &m.stages {
            for f in &stage.files {
                assert!(!ta[f].is_empty(), "{f} is empty");
            }
        }
        let csv = String::from_utf8(ta["comparison.csv"].clone()).unwrap();
        assert_eq!(csv.lines().count(), 12);
    }

    #[test]
    fn zero_budget_succeeds() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = small_config();
        config.walk.step_budget = 0;
        let m = run_experiment(&config, dir.path()).unwrap();
        assert_eq!(m.walks["AB"].total_visits, 3);
        for f in m.stages.iter().flat_map(|s| &s.files) {
            assert!(fs::metadata(dir.path().join(f)).unwrap().len() > 0, "{f} is empty");
        }
        assert_eq!(m.samples.len(), 11);
    }

    #[test]
    fn failing_stage_leaves_marker() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = small_config();
        config.graph.hazards.fetch_fail = 1.0;
        config.graph.hazards.dead_end = 0.0;
        let err = run_experiment(&config, dir.path()).unwrap_err();
        assert!(matches!(&err, Error::Stage { stage, .. } if stage == "walk"), "{err}");
        let marker = fs::read_to_string(dir.path().join(".partial")).unwrap();
        assert!(marker.starts_with("failed walk"));
        assert!(dir.path().join("graph.txt").exists());
    }
}
