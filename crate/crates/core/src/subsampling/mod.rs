//! Subsampling phases.
//!
//! Each phase weights the states of a walk window and keeps state `v`
//! independently with probability `min(1, c * w(v))`, where `c` is chosen so
//! that the expected sample size equals the target.

mod pagerank;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::Rng;

pub use pagerank::{
    pagerank, subgraph_pagerank, visit_ratio, PageRankResult, ScoreKind, ScoreVector, PAGERANK_MAX_ITERATIONS,
    PAGERANK_TOLERANCE,
};

use crate::environment::FrozenAdjacency;
use crate::error::{Error, Result};
use crate::par;
use crate::seed::{derive_seed, rng_for};
use crate::walkers::{modified_degree, DegreeRule, MergedWalk, WalkKind};
use crate::webgraph::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Unit {
    States,
    Steps,
    CRandom,
    CPageRank,
    CVisitRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Window {
    LastHalf,
    LastQuarter,
    All,
}

impl Window {
    /// Visits kept out of a trace of `len` visits.
    pub fn keep(self, len: u64) -> u64 {
        match self {
            Window::LastHalf => len.div_ceil(2),
            Window::LastQuarter => len.div_ceil(4),
            Window::All => len,
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Window::LastHalf => "LastHalf",
            Window::LastQuarter => "LastQuarter",
            Window::All => "All",
        })
    }
}

impl FromStr for Window {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "LastHalf" => Ok(Window::LastHalf),
            "LastQuarter" => Ok(Window::LastQuarter),
            "All" => Ok(Window::All),
            _ => Err(Error::Config(format!("unknown window `{s}`"))),
        }
    }
}

/// The eleven sample types, named as in the reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SampleType {
    AStatesOnLastHalf,
    AStatesOnLastQuarter,
    AStepsOnLastHalf,
    AStepsOnLastQuarter,
    BStatesOnLastHalf,
    BStatesOnLastQuarter,
    BStepsOnLastHalf,
    BStepsOnLastQuarter,
    CRandom,
    CPr,
    CVr,
}

impl SampleType {
    pub const ALL: [SampleType; 11] = [
        SampleType::AStatesOnLastHalf,
        SampleType::AStatesOnLastQuarter,
        SampleType::AStepsOnLastHalf,
        SampleType::AStepsOnLastQuarter,
        SampleType::BStatesOnLastHalf,
        SampleType::BStatesOnLastQuarter,
        SampleType::BStepsOnLastHalf,
        SampleType::BStepsOnLastQuarter,
        SampleType::CRandom,
        SampleType::CPr,
        SampleType::CVr,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SampleType::AStatesOnLastHalf => "A_StatesOnLastHalf",
            SampleType::AStatesOnLastQuarter => "A_StatesOnLastQuarter",
            SampleType::AStepsOnLastHalf => "A_StepsOnLastHalf",
            SampleType::AStepsOnLastQuarter => "A_StepsOnLastQuarter",
            SampleType::BStatesOnLastHalf => "B_StatesOnLastHalf",
            SampleType::BStatesOnLastQuarter => "B_StatesOnLastQuarter",
            SampleType::BStepsOnLastHalf => "B_StepsOnLastHalf",
            SampleType::BStepsOnLastQuarter => "B_StepsOnLastQuarter",
            SampleType::CRandom => "C_Random",
            SampleType::CPr => "C_PR",
            SampleType::CVr => "C_VR",
        }
    }

    /// Walk the sample is drawn from.
    pub fn walk(self) -> WalkKind {
        use SampleType::*;
        match self {
            AStatesOnLastHalf | AStatesOnLastQuarter | AStepsOnLastHalf | AStepsOnLastQuarter => WalkKind::A,
            BStatesOnLastHalf | BStatesOnLastQuarter | BStepsOnLastHalf | BStepsOnLastQuarter => WalkKind::B,
            CRandom | CPr | CVr => WalkKind::C,
        }
    }

    pub fn unit(self) -> Unit {
        use SampleType::*;
        match self {
            AStatesOnLastHalf | AStatesOnLastQuarter | BStatesOnLastHalf | BStatesOnLastQuarter => Unit::States,
            AStepsOnLastHalf | AStepsOnLastQuarter | BStepsOnLastHalf | BStepsOnLastQuarter => Unit::Steps,
            CRandom => Unit::CRandom,
            CPr => Unit::CPageRank,
            CVr => Unit::CVisitRatio,
        }
    }

    pub fn default_window(self) -> Window {
        use SampleType::*;
        match self {
            AStatesOnLastHalf | AStepsOnLastHalf | BStatesOnLastHalf | BStepsOnLastHalf => Window::LastHalf,
            AStatesOnLastQuarter | AStepsOnLastQuarter | BStatesOnLastQuarter | BStepsOnLastQuarter => {
                Window::LastQuarter
            }
            CRandom | CPr | CVr => Window::All,
        }
    }
}

impl fmt::Display for SampleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SampleType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SampleType::ALL
            .into_iter()
            .find(|t| t.label() == s)
            .ok_or_else(|| Error::Config(format!("unknown sample type `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSpec {
    pub sample_type: SampleType,
    pub window: Window,
    /// Expected number of members.
    pub target_size: f64,
    pub seed: u64,
}

impl SampleSpec {
    pub fn new(sample_type: SampleType, target_size: f64, seed: u64) -> Self {
        SampleSpec { sample_type, window: sample_type.default_window(), target_size, seed }
    }

    pub fn label(&self) -> &'static str {
        self.sample_type.label()
    }
}

/// Tail of a merged walk.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Windowed {
    /// Visits per node inside the window; the keys are the window's states.
    pub visits: BTreeMap<NodeId, u64>,
    pub total_visits: u64,
}

impl Windowed {
    pub fn states(&self) -> Vec<NodeId> {
        self.visits.keys().copied().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.visits.is_empty()
    }
}

/// Keep the last `window.keep(L)` visits of each trace of visit length `L`,
/// splitting a selfloop run that straddles the cut, then merge.
pub fn extract_window(merged: &MergedWalk, window: Window) -> Windowed {
    let mut out = Windowed::default();
    for trace in &merged.traces {
        let len = trace.len_visits();
        let mut skip = len - window.keep(len);
        for step in &trace.steps {
            let v = step.visits();
            if skip >= v {
                skip -= v;
                continue;
            }
            let kept = v - skip;
            skip = 0;
            *out.visits.entry(step.node).or_insert(0) += kept;
            out.total_visits += kept;
        }
    }
    out
}

/// Where per-state weights come from.
#[derive(Clone, Copy)]
pub enum WeightSource<'a> {
    /// Frozen degree under the A or B rule.
    Degree { frozen: &'a FrozenAdjacency, rule: DegreeRule },
    /// Subgraph PageRank or visit ratio.
    Score(&'a ScoreVector),
    Uniform,
}

/// Raw weight of every state of `windowed`, in node order.
pub fn weights(windowed: &Windowed, unit: Unit, source: WeightSource<'_>) -> Result<Vec<(NodeId, f64)>> {
    windowed
        .visits
        .iter()
        .map(|(&v, &visits)| {
            let w = match (unit, source) {
                (Unit::CRandom, _) => 1.0,
                (Unit::States | Unit::Steps, WeightSource::Degree { frozen, rule }) => {
                    let deg = modified_degree(frozen, v, rule)? as f64;
                    if unit == Unit::Steps {
                        visits as f64 / deg
                    } else {
                        1.0 / deg
                    }
                }
                (Unit::CPageRank | Unit::CVisitRatio, WeightSource::Score(s)) => 1.0 / s.get(v),
                _ => return Err(Error::Config(format!("{unit:?} cannot be weighted by the given source"))),
            };
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Data(format!("node {v} has weight {w}")));
            }
            Ok((v, w))
        })
        .collect()
}

/// Solve `sum_i min(1, c * w_i) = target` for `c`. Targets at or above the
/// number of weights saturate every probability.
pub fn calibrate(weights: &[f64], target: f64) -> Result<f64> {
    if weights.is_empty() {
        return Ok(0.0);
    }
    if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::Data("calibration weights must be positive and finite".into()));
    }
    if !(target > 0.0) {
        return Err(Error::Parameter(format!("target size must be positive, got {target}")));
    }
    let mut sorted = weights.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let n = sorted.len();
    if target >= n as f64 {
        return Ok(1.0 / sorted[n - 1]);
    }
    // suffix[m] = sum of the n - m smallest weights
    let mut suffix = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + sorted[i];
    }
    // with the m largest saturated, c = (target - m) / suffix[m]
    for m in 0..n {
        let c = (target - m as f64) / suffix[m];
        if c * sorted[m] <= 1.0 {
            return Ok(c);
        }
    }
    unreachable!("target < n always leaves an unsaturated weight")
}

/// One subsample: the members and the weights that selected them.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub spec: SampleSpec,
    /// Repetition index within a batch.
    pub repetition: usize,
    pub scale: f64,
    pub members: Vec<NodeId>,
    pub weights_used: BTreeMap<NodeId, f64>,
}

impl Sample {
    pub fn label(&self) -> &'static str {
        self.spec.label()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Header `sample v1 label=<L> window=<W> target=<t> seed=<s> rep=<r> c=<c>`
    /// then `S <nodeid> <weight>` per member.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "sample v1 label={} window={} target={} seed={} rep={} c={:e}",
            self.label(),
            self.spec.window,
            self.spec.target_size,
            self.spec.seed,
            self.repetition,
            self.scale
        )?;
        for v in &self.members {
            writeln!(w, "S {v} {:e}", self.weights_used[v])?;
        }
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Sample> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::parse(1, "empty sample file"))?;
        let fields: BTreeMap<&str, &str> = header.split_whitespace().filter_map(|f| f.split_once('=')).collect();
        if !header.starts_with("sample v1 ") {
            return Err(Error::parse(1, "expected `sample v1` header"));
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| Error::parse(1, format!("missing `{k}`")));
        let bad = |k: &str| Error::parse(1, format!("bad `{k}`"));
        let sample_type: SampleType = get("label")?.parse().map_err(|_| bad("label"))?;
        let spec = SampleSpec {
            sample_type,
            window: get("window")?.parse().map_err(|_| bad("window"))?,
            target_size: get("target")?.parse().map_err(|_| bad("target"))?,
            seed: get("seed")?.parse().map_err(|_| bad("seed"))?,
        };
        let repetition = get("rep")?.parse().map_err(|_| bad("rep"))?;
        let scale = get("c")?.parse().map_err(|_| bad("c"))?;
        let mut members = Vec::new();
        let mut weights_used = BTreeMap::new();
        for (i, line) in lines.enumerate() {
            let no = i + 2;
            let f: Vec<&str> = line.split_whitespace().collect();
            match f.as_slice() {
                [] => {}
                ["S", id, w] => {
                    let id = NodeId(id.parse().map_err(|_| Error::parse(no, format!("bad node id `{id}`")))?);
                    let w: f64 = w.parse().map_err(|_| Error::parse(no, format!("bad weight `{w}`")))?;
                    if weights_used.insert(id, w).is_some() {
                        return Err(Error::parse(no, format!("node {id} listed twice")));
                    }
                    members.push(id);
                }
                _ => return Err(Error::parse(no, format!("unrecognised line `{line}`"))),
            }
        }
        Ok(Sample { spec, repetition, scale, members, weights_used })
    }
}

fn draw(spec: SampleSpec, repetition: usize, weighted: &[(NodeId, f64)], scale: f64, seed: u64) -> Sample {
    let mut rng = rng_for(seed, "subsample", 0);
    let mut members = Vec::new();
    let mut weights_used = BTreeMap::new();
    for &(v, w) in weighted {
        // one uniform per state, drawn even when the outcome is certain
        let u: f64 = rng.random();
        if u < (scale * w).min(1.0) {
            members.push(v);
            weights_used.insert(v, w);
        }
    }
    Sample { spec, repetition, scale, members, weights_used }
}

/// Single subsample of `windowed` seeded by `spec.seed`.
pub fn subsample(windowed: &Windowed, spec: SampleSpec, source: WeightSource<'_>) -> Result<Sample> {
    let weighted = weights(windowed, spec.sample_type.unit(), source)?;
    let w: Vec<f64> = weighted.iter().map(|x| x.1).collect();
    let scale = calibrate(&w, spec.target_size)?;
    Ok(draw(spec, 0, &weighted, scale, spec.seed))
}

/// `repetitions` independent subsamples; repetition `r` is seeded by
/// `derive_seed(spec.seed, label, r)`. A single repetition reproduces
/// [`subsample`].
pub fn make_samples(windowed: &Windowed, spec: SampleSpec, source: WeightSource<'_>, repetitions: usize) -> Result<Vec<Sample>> {
    let weighted = weights(windowed, spec.sample_type.unit(), source)?;
    let w: Vec<f64> = weighted.iter().map(|x| x.1).collect();
    let scale = calibrate(&w, spec.target_size)?;
    if repetitions == 1 {
        return Ok(vec![draw(spec, 0, &weighted, scale, spec.seed)]);
    }
    Ok(par::map_range(repetitions, |r| {
        draw(spec, r, &weighted, scale, derive_seed(spec.seed, spec.label(), r as u64))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walkers::{Step, StepKind, WalkerTrace};
    use std::collections::BTreeSet;

    fn merged(traces: Vec<Vec<Step>>) -> MergedWalk {
        let traces = traces.into_iter().enumerate().map(|(walker, steps)| WalkerTrace { walker, steps }).collect();
        MergedWalk::from_traces(WalkKind::A, 1, traces, BTreeSet::new())
    }

    fn unit(nodes: &[u32]) -> Vec<Step> {
        nodes.iter().map(|&n| Step::new(NodeId(n), StepKind::Outlink)).collect()
    }

    // expand runs and slice, as a check on the run-splitting logic
    fn expand_oracle(steps: &[Step], keep: usize) -> BTreeMap<NodeId, u64> {
        let flat: Vec<NodeId> = steps.iter().flat_map(|s| std::iter::repeat_n(s.node, s.visits() as usize)).collect();
        let mut m = BTreeMap::new();
        for v in &flat[flat.len() - keep..] {
            *m.entry(*v).or_insert(0) += 1;
        }
        m
    }

    #[test]
    fn last_half_of_hundred_steps() {
        let nodes: Vec<u32> = (1..=100).collect();
        let w = extract_window(&merged(vec![unit(&nodes)]), Window::LastHalf);
        assert_eq!(w.states(), (51..=100).map(NodeId).collect::<Vec<_>>());
        assert_eq!(w.total_visits, 50);
    }

    #[test]
    fn small_windows() {
        let w = extract_window(&merged(vec![unit(&[0, 0, 1, 2])]), Window::LastHalf);
        assert_eq!(w.states(), vec![NodeId(1), NodeId(2)]);
        let mut steps = vec![Step::new(NodeId(9), StepKind::SelfloopRun(10))];
        steps.extend(unit(&[1, 2, 3, 4, 5]));
        let w = extract_window(&merged(vec![steps.clone()]), Window::LastQuarter);
        assert_eq!(w.states(), vec![NodeId(2), NodeId(3), NodeId(4), NodeId(5)]);
        assert_eq!(w.visits, expand_oracle(&steps, 4));
    }

    #[test]
    fn run_split_matches_expansion() {
        let steps = vec![
            Step::new(NodeId(0), StepKind::Start),
            Step::new(NodeId(0), StepKind::SelfloopRun(6)),
            Step::new(NodeId(1), StepKind::Outlink),
            Step::new(NodeId(1), StepKind::SelfloopRun(3)),
            Step::new(NodeId(2), StepKind::Inlink),
        ];
        let m = merged(vec![steps.clone()]);
        for (window, keep) in [(Window::LastHalf, 6), (Window::LastQuarter, 3), (Window::All, 12)] {
            assert_eq!(extract_window(&m, window).visits, expand_oracle(&steps, keep), "{window}");
        }
    }

    #[test]
    fn calibration_examples() {
        let c = calibrate(&[0.5, 0.25], 1.5).unwrap();
        assert!((c - 2.0).abs() < 1e-12);
        let c = calibrate(&[1.0, 1.0, 1.0], 3.0).unwrap();
        assert!(c >= 1.0);
        // saturated: weights 10, 1, 1 with target 2 -> c = 1/2, first saturates
        let c = calibrate(&[10.0, 1.0, 1.0], 2.0).unwrap();
        assert!((c - 0.5).abs() < 1e-12);
        assert!(calibrate(&[1.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn sample_types_round_trip_labels() {
        for t in SampleType::ALL {
            assert_eq!(t.label().parse::<SampleType>().unwrap(), t);
        }
        assert_eq!(SampleType::ALL.iter().filter(|t| t.walk() == WalkKind::C).count(), 3);
    }

    #[test]
    fn uniform_full_target_takes_everything() {
        let w = extract_window(&merged(vec![unit(&[0, 1, 2, 3, 4, 5])]), Window::LastHalf);
        let spec = SampleSpec::new(SampleType::CRandom, 3.0, 1);
        let s = subsample(&w, SampleSpec { window: Window::LastHalf, ..spec }, WeightSource::Uniform).unwrap();
        assert_eq!(s.members, vec![NodeId(3), NodeId(4), NodeId(5)]);
    }

    #[test]
    fn repetitions_are_deterministic_and_single_matches_subsample() {
        let nodes: Vec<u32> = (0..500).map(|i| i % 97).collect();
        let w = extract_window(&merged(vec![unit(&nodes)]), Window::All);
        let spec = SampleSpec::new(SampleType::CRandom, 20.0, 4);
        let a = make_samples(&w, spec, WeightSource::Uniform, 5).unwrap();
        assert_eq!(a, make_samples(&w, spec, WeightSource::Uniform, 5).unwrap());
        assert_eq!(a.len(), 5);
        assert_ne!(a[0].members, a[1].members);
        let one = make_samples(&w, spec, WeightSource::Uniform, 1).unwrap();
        assert_eq!(one[0], subsample(&w, spec, WeightSource::Uniform).unwrap());
    }

    #[test]
    fn sample_file_round_trip() {
        let nodes: Vec<u32> = (0..50).collect();
        let w = extract_window(&merged(vec![unit(&nodes)]), Window::All);
        let scores = visit_ratio(&w.visits).unwrap();
        let s = subsample(&w, SampleSpec::new(SampleType::CVr, 10.0, 2), WeightSource::Score(&scores)).unwrap();
        let mut buf = Vec::new();
        s.write(&mut buf).unwrap();
        assert_eq!(Sample::read(&buf[..]).unwrap(), s);
    }

    #[test]
    fn mismatched_source_is_rejected() {
        let w = extract_window(&merged(vec![unit(&[0, 1])]), Window::All);
        assert!(subsample(&w, SampleSpec::new(SampleType::CPr, 1.0, 0), WeightSource::Uniform).is_err());
    }
}
