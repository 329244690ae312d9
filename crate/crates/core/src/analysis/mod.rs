//! Measurements over samples and the oracles used to verify the walks.
//!
//! All buckets are half-open `[lo, hi)`.

mod oracle;
mod powerlaw;
mod stats;

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

pub use oracle::{stationary_oracle, Chain};
pub use powerlaw::{fit_power_law, hurwitz_zeta, mle_exponent, PowerLawFit, MIN_TAIL};
pub use stats::{chi_square_gof, chi_square_uniform, mean_std, tv_distance, ChiSquareTest};

use crate::error::Result;
use crate::subsampling::ScoreVector;
use crate::webgraph::{NodeId, WebGraph, TLD_POOL};

pub fn percentage(count: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * count as f64 / total as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistributionKind {
    Tld,
    ContentLength,
    PageRankRange,
    Outdegree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub label: String,
    /// Mean count when the report averages several samples.
    pub count: f64,
    pub percentage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub kind: DistributionKind,
    pub total: f64,
    pub buckets: Vec<Bucket>,
}

impl DistributionReport {
    pub fn from_counts(kind: DistributionKind, rows: Vec<(String, u64)>) -> Self {
        let total: u64 = rows.iter().map(|r| r.1).sum();
        let buckets = rows
            .into_iter()
            .map(|(label, count)| Bucket { percentage: percentage(count, total), count: count as f64, label })
            .collect();
        DistributionReport { kind, total: total as f64, buckets }
    }

    pub fn percentage_of(&self, label: &str) -> Option<f64> {
        self.buckets.iter().find(|b| b.label == label).map(|b| b.percentage)
    }

    /// `label,count,percentage` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "label,count,percentage")?;
        for b in &self.buckets {
            writeln!(w, "{},{},{:.2}", b.label, fmt_count(b.count), b.percentage)?;
        }
        Ok(())
    }
}

fn fmt_count(c: f64) -> String {
    if c.fract() == 0.0 {
        format!("{c:.0}")
    } else {
        format!("{c:.2}")
    }
}

/// Bucket-wise mean of reports with identical rows.
pub fn average_reports(reports: &[DistributionReport]) -> Option<DistributionReport> {
    let first = reports.first()?;
    let n = reports.len() as f64;
    let buckets = first
        .buckets
        .iter()
        .enumerate()
        .map(|(i, b)| Bucket {
            label: b.label.clone(),
            count: reports.iter().map(|r| r.buckets[i].count).sum::<f64>() / n,
            percentage: reports.iter().map(|r| r.buckets[i].percentage).sum::<f64>() / n,
        })
        .collect();
    Some(DistributionReport { kind: first.kind, total: reports.iter().map(|r| r.total).sum::<f64>() / n, buckets })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HostRow {
    pub host: String,
    pub count: u64,
    pub percentage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HostReport {
    pub sample_size: u64,
    pub unique_host_count: usize,
    /// Top `k` hosts, descending by count, ties by host name.
    pub top: Vec<HostRow>,
}

impl HostReport {
    pub fn top_share(&self) -> f64 {
        self.top.first().map_or(0.0, |r| r.percentage)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "host,count,percentage")?;
        for r in &self.top {
            writeln!(w, "{},{},{:.2}", r.host, r.count, r.percentage)?;
        }
        Ok(())
    }
}

pub fn host_report(members: &[NodeId], graph: &WebGraph, k: usize) -> HostReport {
    let mut counts: HashMap<u32, u64> = HashMap::new();
    for &v in members {
        *counts.entry(graph.host_id(v)).or_insert(0) += 1;
    }
    let total = members.len() as u64;
    let mut rows: Vec<HostRow> = counts
        .iter()
        .map(|(&h, &c)| HostRow { host: graph.host_name(h).to_string(), count: c, percentage: percentage(c, total) })
        .collect();
    rows.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.host.cmp(&b.host)));
    rows.truncate(k);
    HostReport { sample_size: total, unique_host_count: counts.len(), top: rows }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutdegreeReport {
    pub histogram: DistributionReport,
    pub average: f64,
    pub max: u64,
    pub fit: Option<PowerLawFit>,
}

fn log_bin_label(lo: u64, hi: u64) -> String {
    format!("[{lo},{hi})")
}

/// Rows `[0,1)`, `[1,2)`, `[2,4)`, `[4,8)`, ... covering every value and at
/// least `upto`, so reports over several samples can share their rows.
pub fn log_binned(values: &[u64], upto: u64, kind: DistributionKind) -> DistributionReport {
    let max = values.iter().copied().max().unwrap_or(0).max(upto);
    let mut edges = vec![0u64, 1];
    while *edges.last().unwrap() <= max {
        let e = *edges.last().unwrap();
        edges.push(e * 2);
    }
    let mut counts = vec![0u64; edges.len() - 1];
    for &x in values {
        let i = edges.partition_point(|&e| e <= x) - 1;
        counts[i] += 1;
    }
    let rows = edges.windows(2).zip(counts).map(|(w, c)| (log_bin_label(w[0], w[1]), c)).collect();
    DistributionReport::from_counts(kind, rows)
}

/// True graph outdegree of the members.
pub fn outdegree_report(members: &[NodeId], graph: &WebGraph) -> OutdegreeReport {
    let degrees: Vec<u64> = members.iter().map(|&v| graph.out_degree(v) as u64).collect();
    let average = if degrees.is_empty() { 0.0 } else { degrees.iter().sum::<u64>() as f64 / degrees.len() as f64 };
    OutdegreeReport {
        histogram: log_binned(&degrees, 0, DistributionKind::Outdegree),
        average,
        max: degrees.iter().copied().max().unwrap_or(0),
        fit: fit_power_law(&degrees),
    }
}

/// Share of members per TLD over the generator's TLD rows plus `other`.
pub fn tld_report(members: &[NodeId], graph: &WebGraph) -> DistributionReport {
    let mut counts: BTreeMap<&str, u64> = TLD_POOL.iter().map(|&t| (t, 0)).collect();
    let mut other = 0;
    for &v in members {
        match counts.get_mut(graph.meta(v).tld.as_str()) {
            Some(c) => *c += 1,
            None => other += 1,
        }
    }
    let mut rows: Vec<(String, u64)> = TLD_POOL.iter().map(|&t| (format!(".{t}"), counts[t])).collect();
    rows.push(("other".into(), other));
    DistributionReport::from_counts(DistributionKind::Tld, rows)
}

pub const CONTENT_BUCKET_WIDTH: u64 = 10_000;
pub const CONTENT_BUCKETS: usize = 11;

/// Eleven 10k-wide buckets; the last also takes everything from 100k up.
pub fn content_length_report(members: &[NodeId], graph: &WebGraph) -> DistributionReport {
    let mut counts = [0u64; CONTENT_BUCKETS];
    for &v in members {
        let i = (graph.meta(v).content_length / CONTENT_BUCKET_WIDTH).min(CONTENT_BUCKETS as u64 - 1);
        counts[i as usize] += 1;
    }
    let rows = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (format!("{}-{}k", i * 10, (i + 1) * 10), c))
        .collect();
    DistributionReport::from_counts(DistributionKind::ContentLength, rows)
}

/// Decade rows `[1e-k, 1e-(k-1))` for `k = 1..=PAGERANK_DECADES`, the first
/// row closed at 1, plus one row for anything smaller.
pub const PAGERANK_DECADES: u32 = 9;

pub fn pagerank_decade(score: f64) -> u32 {
    if score <= 0.0 {
        return PAGERANK_DECADES + 1;
    }
    let mut k = (-score.log10()).ceil().max(1.0) as u32;
    // guard the rounding of log10 at exact powers of ten
    while k > 1 && score >= 10f64.powi(-(k as i32) + 1) {
        k -= 1;
    }
    while score < 10f64.powi(-(k as i32)) && k <= PAGERANK_DECADES {
        k += 1;
    }
    k.min(PAGERANK_DECADES + 1)
}

/// Share of `population` (or every scored node) per score decade.
pub fn pagerank_range_report(scores: &ScoreVector, population: Option<&[NodeId]>) -> DistributionReport {
    let mut counts = vec![0u64; PAGERANK_DECADES as usize + 1];
    let mut add = |s: f64| counts[pagerank_decade(s) as usize - 1] += 1;
    match population {
        Some(members) => members.iter().for_each(|&v| add(scores.get(v))),
        None => scores.scores.values().for_each(|&s| add(s)),
    }
    let mut rows: Vec<(String, u64)> =
        (1..=PAGERANK_DECADES).map(|k| (format!("[1e-{k},1e-{})", k - 1), counts[k as usize - 1])).collect();
    rows.push((format!("<1e-{PAGERANK_DECADES}"), counts[PAGERANK_DECADES as usize]));
    DistributionReport::from_counts(DistributionKind::PageRankRange, rows)
}

/// Per-sample row of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub label: String,
    pub size: f64,
    pub unique_hosts: f64,
    /// Percent of members on the most common host.
    pub top_host_share: f64,
    pub avg_outdegree: f64,
    pub max_outdegree: f64,
    pub exponent: Option<f64>,
    pub tld: Vec<(String, f64)>,
}

impl SampleSummary {
    pub fn compute(label: &str, members: &[NodeId], graph: &WebGraph) -> Self {
        let hosts = host_report(members, graph, 1);
        let out = outdegree_report(members, graph);
        let tld = tld_report(members, graph);
        SampleSummary {
            label: label.to_string(),
            size: members.len() as f64,
            unique_hosts: hosts.unique_host_count as f64,
            top_host_share: hosts.top_share(),
            avg_outdegree: out.average,
            max_outdegree: out.max as f64,
            exponent: out.fit.map(|f| f.exponent),
            tld: tld.buckets.into_iter().map(|b| (b.label, b.percentage)).collect(),
        }
    }

    /// Field-wise mean; the exponent averages the available fits and is
    /// missing only if every fit is.
    pub fn average(label: &str, rows: &[SampleSummary]) -> Option<Self> {
        let first = rows.first()?;
        let n = rows.len() as f64;
        let mean = |f: fn(&SampleSummary) -> f64| rows.iter().map(f).sum::<f64>() / n;
        let fits: Vec<f64> = rows.iter().filter_map(|r| r.exponent).collect();
        Some(SampleSummary {
            label: label.to_string(),
            size: mean(|r| r.size),
            unique_hosts: mean(|r| r.unique_hosts),
            top_host_share: mean(|r| r.top_host_share),
            avg_outdegree: mean(|r| r.avg_outdegree),
            max_outdegree: mean(|r| r.max_outdegree),
            exponent: (!fits.is_empty()).then(|| fits.iter().sum::<f64>() / fits.len() as f64),
            tld: first
                .tld
                .iter()
                .enumerate()
                .map(|(i, (l, _))| (l.clone(), rows.iter().map(|r| r.tld[i].1).sum::<f64>() / n))
                .collect(),
        })
    }
}
