//! Trace dump and merged-walk summary.
//!
//! ```text
//! trace v1 kind=AB walkers=2
//! X 1
//! W 0 0 17 start
//! W 0 1 4 out
//! W 0 2 4 self:3
//! ```

use std::collections::BTreeSet;
use std::io::{Read, Write};

use super::{JumpCause, MergedWalk, Step, StepKind, WalkKind, WalkerTrace};
use crate::error::{Error, Result};
use crate::webgraph::{NodeId, WebGraph};

fn kind_token(kind: StepKind) -> String {
    match kind {
        StepKind::Start => "start".into(),
        StepKind::Outlink => "out".into(),
        StepKind::Inlink => "in".into(),
        StepKind::SelfloopRun(n) => format!("self:{n}"),
        StepKind::Jump(JumpCause::Coin) => "jump".into(),
        StepKind::Jump(JumpCause::DeadEnd) => "jump-deadend".into(),
        StepKind::Jump(JumpCause::Unfetchable) => "jump-fail".into(),
        StepKind::SiblingFallback => "sibling".into(),
    }
}

fn parse_kind(token: &str) -> Option<StepKind> {
    Some(match token {
        "start" => StepKind::Start,
        "out" => StepKind::Outlink,
        "in" => StepKind::Inlink,
        "jump" => StepKind::Jump(JumpCause::Coin),
        "jump-deadend" => StepKind::Jump(JumpCause::DeadEnd),
        "jump-fail" => StepKind::Jump(JumpCause::Unfetchable),
        "sibling" => StepKind::SiblingFallback,
        _ => {
            let n: u64 = token.strip_prefix("self:")?.parse().ok()?;
            if n == 0 {
                return None;
            }
            StepKind::SelfloopRun(n)
        }
    })
}

pub fn write_trace<W: Write>(merged: &MergedWalk, mut w: W) -> Result<()> {
    writeln!(w, "trace v1 kind={} walkers={}", merged.kind, merged.walker_count)?;
    for s in &merged.stuck_walkers {
        writeln!(w, "X {s}")?;
    }
    for trace in &merged.traces {
        for (i, step) in trace.steps.iter().enumerate() {
            writeln!(w, "W {} {i} {} {}", trace.walker, step.node, kind_token(step.kind))?;
        }
    }
    Ok(())
}

pub fn read_trace<R: Read>(mut r: R) -> Result<MergedWalk> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    parse_trace(&text)
}

pub fn parse_trace(text: &str) -> Result<MergedWalk> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty trace file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (kind, walkers) = match fields.as_slice() {
        ["trace", "v1", k, w] => {
            let kind: WalkKind = k
                .strip_prefix("kind=")
                .and_then(|k| k.parse().ok())
                .ok_or_else(|| Error::parse(1, format!("bad kind field `{k}`")))?;
            let walkers: usize = w
                .strip_prefix("walkers=")
                .and_then(|w| w.parse().ok())
                .ok_or_else(|| Error::parse(1, format!("bad walkers field `{w}`")))?;
            (kind, walkers)
        }
        _ => return Err(Error::parse(1, "expected `trace v1 kind=<K> walkers=<W>`")),
    };
    let mut stuck = BTreeSet::new();
    let mut traces: Vec<WalkerTrace> = Vec::new();
    for (no, line) in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        match f.as_slice() {
            [] => {}
            ["X", w] => {
                stuck.insert(w.parse::<usize>().map_err(|e| Error::parse(no, e.to_string()))?);
            }
            ["W", w, i, node, kind] => {
                let num = |s: &str| s.parse::<u64>().map_err(|e| Error::parse(no, format!("`{s}`: {e}")));
                let walker = num(w)? as usize;
                let index = num(i)? as usize;
                let node = NodeId(u32::try_from(num(node)?).map_err(|e| Error::parse(no, e.to_string()))?);
                let kind = parse_kind(kind).ok_or_else(|| Error::parse(no, format!("unknown step kind `{kind}`")))?;
                if traces.last().is_none_or(|t| t.walker != walker) {
                    if traces.iter().any(|t| t.walker == walker) {
                        return Err(Error::parse(no, format!("walker {walker} is not contiguous")));
                    }
                    traces.push(WalkerTrace { walker, steps: Vec::new() });
                }
                let t = traces.last_mut().expect("just pushed");
                if index != t.steps.len() {
                    return Err(Error::parse(no, format!("expected step index {}, got {index}", t.steps.len())));
                }
                t.steps.push(Step::new(node, kind));
            }
            _ => return Err(Error::parse(no, format!("unrecognised line `{line}`"))),
        }
    }
    Ok(MergedWalk::from_traces(kind, walkers, traces, stuck))
}

/// Key-value summary of a merged walk.
pub fn write_summary<W: Write>(merged: &MergedWalk, graph: &WebGraph, mut w: W) -> Result<()> {
    let t = &merged.tallies;
    let stuck: Vec<String> = merged.stuck_walkers.iter().map(|s| s.to_string()).collect();
    writeln!(w, "kind = {}", merged.kind)?;
    writeln!(w, "walkers = {}", merged.walker_count)?;
    writeln!(w, "traces = {}", merged.traces.len())?;
    writeln!(w, "total_visits = {}", merged.total_visits())?;
    writeln!(w, "distinct_nodes = {}", merged.distinct_nodes())?;
    writeln!(w, "tally.outlink = {}", t.outlink)?;
    writeln!(w, "tally.inlink = {}", t.inlink)?;
    writeln!(w, "tally.selfloop = {}", t.selfloop)?;
    writeln!(w, "tally.jump = {}", t.jump)?;
    writeln!(w, "tally.forced_jump = {}", t.forced_jump)?;
    writeln!(w, "tally.sibling_fallback = {}", t.sibling_fallback)?;
    writeln!(w, "jump_fraction = {:.6}", t.jump_fraction())?;
    writeln!(w, "outlink_fraction = {:.6}", t.outlink_fraction())?;
    writeln!(w, "top_host_visit_share = {:.6}", merged.top_host_visit_share(graph))?;
    writeln!(w, "stuck = [{}]", stuck.join(", "))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let steps = vec![
            Step::new(NodeId(3), StepKind::Start),
            Step::new(NodeId(4), StepKind::Outlink),
            Step::new(NodeId(4), StepKind::SelfloopRun(7)),
            Step::new(NodeId(1), StepKind::Inlink),
            Step::new(NodeId(2), StepKind::SiblingFallback),
            Step::new(NodeId(0), StepKind::Jump(JumpCause::Coin)),
            Step::new(NodeId(0), StepKind::Jump(JumpCause::DeadEnd)),
            Step::new(NodeId(5), StepKind::Jump(JumpCause::Unfetchable)),
        ];
        let merged = MergedWalk::from_traces(
            WalkKind::B,
            3,
            vec![WalkerTrace { walker: 0, steps: steps.clone() }, WalkerTrace { walker: 2, steps }],
            BTreeSet::from([1]),
        );
        let mut buf = Vec::new();
        write_trace(&merged, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("W 0 2 4 self:7\n"));
        assert_eq!(parse_trace(&text).unwrap(), merged);
    }

    #[test]
    fn rejects_bad_lines() {
        let bad = ["", "trace v2 kind=A walkers=1", "trace v1 kind=A walkers=1\nW 0 1 3 out", "trace v1 kind=A walkers=1\nW 0 0 3 self:0"];
        for text in bad {
            assert!(parse_trace(text).is_err(), "{text:?}");
        }
        match parse_trace("trace v1 kind=C walkers=1\nW 0 0 1 start\nW 0 1 1 teleport") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
