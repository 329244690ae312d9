use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Geometric;

use super::{Behavior, NodeId, NodeMeta, TruncationOutcome, WebGraph, MAX_CONTENT_LENGTH, MAX_PARALLEL_EDGES};
use crate::error::{Error, Result};
use crate::seed::rng_for;

const MIN_CONTENT_LENGTH: u64 = 1024;

/// Discrete power law `P(k) ∝ k^-exponent` on `xmin..=xmax`, sampled by
/// inverting the tabulated CDF.
#[derive(Debug, Clone)]
pub struct TruncatedPowerLaw {
    xmin: u64,
    exponent: f64,
    cdf: Vec<f64>,
}

impl TruncatedPowerLaw {
    pub fn new(exponent: f64, xmin: u64, xmax: u64) -> Result<Self> {
        if !(exponent > 1.0) || xmin == 0 || xmax < xmin {
            return Err(Error::Parameter(format!(
                "power law needs exponent > 1 and 1 <= xmin <= xmax (got {exponent}, {xmin}, {xmax})"
            )));
        }
        let mut cdf = Vec::with_capacity((xmax - xmin + 1) as usize);
        let mut acc = 0.0;
        for k in xmin..=xmax {
            acc += (k as f64).powf(-exponent);
            cdf.push(acc);
        }
        for c in &mut cdf {
            *c /= acc;
        }
        Ok(TruncatedPowerLaw { xmin, exponent, cdf })
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn xmax(&self) -> u64 {
        self.xmin + self.cdf.len() as u64 - 1
    }

    pub fn pmf(&self, k: u64) -> f64 {
        if k < self.xmin || k > self.xmax() {
            return 0.0;
        }
        let i = (k - self.xmin) as usize;
        if i == 0 {
            self.cdf[0]
        } else {
            self.cdf[i] - self.cdf[i - 1]
        }
    }

    pub fn mean(&self) -> f64 {
        (self.xmin..=self.xmax()).map(|k| k as f64 * self.pmf(k)).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        let i = self.cdf.partition_point(|&c| c < u).min(self.cdf.len() - 1);
        self.xmin + i as u64
    }
}

/// Per-node behaviour probabilities. Whatever mass is left is `Normal`.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HazardRates {
    pub dead_end: f64,
    pub fetch_fail: f64,
    pub timeout: f64,
    pub redirect: f64,
    pub session_id: f64,
    /// URLs longer than the 300-character fetch limit.
    pub long_url: f64,
}

impl HazardRates {
    fn as_array(&self) -> [f64; 6] {
        [self.dead_end, self.fetch_fail, self.timeout, self.redirect, self.session_id, self.long_url]
    }

    pub fn total(&self) -> f64 {
        self.as_array().iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct GeneratorSpec {
    pub n: usize,
    /// Exponent of the outdegree power law.
    pub target_exponent: f64,
    pub max_outdegree: usize,
    /// Mean number of hosts per second-level domain (geometric, at least 1).
    pub hosts_per_domain: f64,
    /// Power-law exponent of pages per host.
    pub pages_per_host_exponent: f64,
    pub max_pages_per_host: usize,
    /// Share of outlinks that stay on the source page's host.
    pub intra_host_fraction: f64,
    /// Link targets are drawn with weight `(outdegree + 1)^hub_bias`; 0 means uniform.
    pub hub_bias: f64,
    /// Optional hard cap on in-degree; targets at the cap are redrawn.
    pub max_indegree: Option<usize>,
    /// Relative weights of the TLD pool.
    pub tld_weights: Vec<(String, f64)>,
    pub hazards: HazardRates,
    pub seed: u64,
}

/// TLD row set shared by the generator and the TLD report.
pub const TLD_POOL: [&str; 11] = ["com", "org", "net", "de", "fr", "uk", "jp", "edu", "gov", "us", "ca"];

impl Default for GeneratorSpec {
    fn default() -> Self {
        let weights = [0.60, 0.07, 0.07, 0.06, 0.03, 0.04, 0.04, 0.03, 0.02, 0.02, 0.02];
        GeneratorSpec {
            n: 10_000,
            target_exponent: 2.72,
            max_outdegree: 1000,
            hosts_per_domain: 1.5,
            pages_per_host_exponent: 1.8,
            max_pages_per_host: 1000,
            intra_host_fraction: 0.3,
            hub_bias: 1.0,
            max_indegree: None,
            tld_weights: TLD_POOL.iter().zip(weights).map(|(t, w)| (t.to_string(), w)).collect(),
            hazards: HazardRates::default(),
            seed: 0,
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Parameter(m));
        if self.n == 0 {
            return fail("n must be at least 1".into());
        }
        if !(self.target_exponent > 1.0) {
            return fail(format!("target_exponent must exceed 1 (got {})", self.target_exponent));
        }
        if !(self.pages_per_host_exponent > 1.0) {
            return fail("pages_per_host_exponent must exceed 1".into());
        }
        if self.max_outdegree == 0 || self.max_pages_per_host == 0 {
            return fail("max_outdegree and max_pages_per_host must be positive".into());
        }
        if !(self.hosts_per_domain >= 1.0) {
            return fail("hosts_per_domain must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.intra_host_fraction) {
            return fail("intra_host_fraction must lie in [0, 1]".into());
        }
        if !(self.hub_bias >= 0.0) {
            return fail("hub_bias must be non-negative".into());
        }
        let rates = self.hazards.as_array();
        if rates.iter().any(|r| !(0.0..=1.0).contains(r)) || self.hazards.total() > 1.0 + 1e-12 {
            return fail("hazard rates must lie in [0, 1] and sum to at most 1".into());
        }
        if self.tld_weights.is_empty() || self.tld_weights.iter().any(|(t, w)| t.is_empty() || !(*w >= 0.0)) {
            return fail("tld_weights must be a non-empty list of non-negative weights".into());
        }
        if self.tld_weights.iter().map(|(_, w)| w).sum::<f64>() <= 0.0 {
            return fail("tld_weights must not all be zero".into());
        }
        Ok(())
    }
}

struct HostLayout {
    host: String,
    domain: String,
    tld: String,
    pages: Vec<NodeId>,
}

fn layout_hosts<R: Rng>(spec: &GeneratorSpec, rng: &mut R) -> Result<(Vec<HostLayout>, Vec<usize>)> {
    let tld_pick = WeightedIndex::new(spec.tld_weights.iter().map(|(_, w)| *w))
        .map_err(|e| Error::Parameter(format!("tld_weights: {e}")))?;
    let extra_hosts = Geometric::new(1.0 / spec.hosts_per_domain)
        .map_err(|e| Error::Parameter(format!("hosts_per_domain: {e}")))?;
    let host_size = TruncatedPowerLaw::new(spec.pages_per_host_exponent, 1, spec.max_pages_per_host as u64)?;

    let mut hosts = Vec::new();
    let mut host_of = Vec::with_capacity(spec.n);
    let mut domain_ix = 0usize;
    while host_of.len() < spec.n {
        let tld = &spec.tld_weights[tld_pick.sample(rng)].0;
        let domain = format!("d{domain_ix}.{tld}");
        domain_ix += 1;
        let n_hosts = 1 + extra_hosts.sample(rng);
        for j in 0..n_hosts {
            if host_of.len() >= spec.n {
                break;
            }
            let host = if j == 0 { format!("www.{domain}") } else { format!("h{j}.{domain}") };
            let size = (host_size.sample(rng) as usize).min(spec.n - host_of.len());
            let ix = hosts.len();
            let start = host_of.len();
            host_of.extend(std::iter::repeat_n(ix, size));
            hosts.push(HostLayout {
                host,
                domain: domain.clone(),
                tld: tld.clone(),
                pages: (start..start + size).map(NodeId::from).collect(),
            });
        }
    }
    Ok((hosts, host_of))
}

fn draw_behavior<R: Rng>(spec: &GeneratorSpec, n: usize, id: usize, rng: &mut R) -> (Behavior, bool) {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (slot, rate) in spec.hazards.as_array().into_iter().enumerate() {
        acc += rate;
        if u < acc {
            return match slot {
                0 => (Behavior::DeadEnd, false),
                1 => (Behavior::FetchFail, false),
                2 => (Behavior::Timeout, false),
                3 => {
                    // any node but itself; a single-node graph keeps the page normal
                    if n < 2 {
                        return (Behavior::Normal, false);
                    }
                    let mut t = rng.random_range(0..n - 1);
                    if t >= id {
                        t += 1;
                    }
                    (Behavior::RedirectTo(NodeId::from(t)), false)
                }
                4 => {
                    let v: f64 = rng.random();
                    let outcome = if v < 0.5 {
                        TruncationOutcome::Ok
                    } else if v < 0.75 {
                        TruncationOutcome::Err
                    } else {
                        TruncationOutcome::Redir
                    };
                    (Behavior::SessionIdUrl(outcome), false)
                }
                _ => (Behavior::Normal, true),
            };
        }
    }
    (Behavior::Normal, false)
}

fn page_url(host: &str, id: usize, behavior: Behavior, long: bool) -> String {
    match behavior {
        Behavior::SessionIdUrl(_) => format!("http://{host}/p{id}.php?sid={:08x}", (id as u64).wrapping_mul(0x9e37_79b9) as u32),
        _ if long => {
            let base = format!("http://{host}/p{id}/");
            let pad = 310usize.saturating_sub(base.len());
            format!("{base}{}", "x".repeat(pad))
        }
        _ => format!("http://{host}/p{id}.html"),
    }
}

/// Generate a web-like graph: power-law outdegrees, pages grouped into
/// hosts and domains, per-node fetch hazards. Pure in `spec`.
pub fn generate_power_law_web(spec: &GeneratorSpec) -> Result<WebGraph> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = rng_for(spec.seed, "generate", 0);
    let (hosts, host_of) = layout_hosts(spec, &mut rng)?;

    let mut behaviors = Vec::with_capacity(n);
    let mut long_urls = Vec::with_capacity(n);
    for id in 0..n {
        let (b, long) = draw_behavior(spec, n, id, &mut rng);
        behaviors.push(b);
        long_urls.push(long);
    }

    let degree_law = TruncatedPowerLaw::new(spec.target_exponent, 1, spec.max_outdegree.min(n.max(2) - 1) as u64)?;
    let wanted: Vec<usize> = behaviors
        .iter()
        .map(|b| match b {
            Behavior::DeadEnd | Behavior::RedirectTo(_) => 0,
            _ => degree_law.sample(&mut rng) as usize,
        })
        .collect();

    let popularity = WeightedIndex::new(wanted.iter().map(|&k| ((k + 1) as f64).powf(spec.hub_bias)))
        .map_err(|e| Error::Parameter(format!("popularity weights: {e}")))?;
    let mut indegree = vec![0usize; n];
    let mut out: Vec<Vec<NodeId>> = Vec::with_capacity(n);
    let mut pair_count: HashMap<usize, usize> = HashMap::new();
    for src in 0..n {
        let k = wanted[src];
        let mut targets = Vec::with_capacity(k);
        pair_count.clear();
        let host_pages = &hosts[host_of[src]].pages;
        let mut attempts = 50 * k + 100;
        while targets.len() < k && attempts > 0 {
            attempts -= 1;
            let dst = if host_pages.len() > 1 && rng.random::<f64>() < spec.intra_host_fraction {
                host_pages[rng.random_range(0..host_pages.len())].index()
            } else {
                popularity.sample(&mut rng)
            };
            if dst == src {
                continue;
            }
            if spec.max_indegree.is_some_and(|cap| indegree[dst] >= cap) {
                continue;
            }
            let c = pair_count.entry(dst).or_insert(0);
            if *c >= MAX_PARALLEL_EDGES {
                continue;
            }
            *c += 1;
            indegree[dst] += 1;
            targets.push(NodeId::from(dst));
        }
        out.push(targets);
    }

    let span = (MAX_CONTENT_LENGTH as f64 / MIN_CONTENT_LENGTH as f64).ln();
    let nodes = (0..n)
        .map(|id| {
            let h = &hosts[host_of[id]];
            let content_length = ((MIN_CONTENT_LENGTH as f64) * (rng.random::<f64>() * span).exp()).floor() as u64;
            NodeMeta {
                url: page_url(&h.host, id, behaviors[id], long_urls[id]),
                host: h.host.clone(),
                domain: h.domain.clone(),
                tld: h.tld.clone(),
                content_length: content_length.clamp(MIN_CONTENT_LENGTH, MAX_CONTENT_LENGTH),
                behavior: behaviors[id],
            }
        })
        .collect();
    WebGraph::new(nodes, out)
}

pub const TRAP_HOST: &str = "trap.example.com";

/// Complete graph on `n/2` nodes (one shared host) with a chain of `n/2`
/// nodes (one host each) hanging off node 0. All links are reciprocal.
pub fn generate_trap_graph(n: usize) -> Result<WebGraph> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::Parameter(format!("trap graph needs an even n >= 4 (got {n})")));
    }
    let half = n / 2;
    let mut out = vec![Vec::new(); n];
    for (u, links) in out.iter_mut().enumerate().take(half) {
        links.extend((0..half).filter(|&v| v != u).map(NodeId::from));
    }
    out[0].push(NodeId::from(half));
    out[half].push(NodeId(0));
    for v in half..n - 1 {
        out[v].push(NodeId::from(v + 1));
        out[v + 1].push(NodeId::from(v));
    }
    for links in &mut out {
        links.sort();
    }
    let nodes = (0..n)
        .map(|id| {
            let (host, domain, tld) = if id < half {
                (TRAP_HOST.to_string(), "example.com".to_string(), "com")
            } else {
                (format!("www.chain{id}.org"), format!("chain{id}.org"), "org")
            };
            NodeMeta {
                url: format!("http://{host}/p{id}.html"),
                host,
                domain,
                tld: tld.to_string(),
                content_length: 20_000,
                behavior: Behavior::Normal,
            }
        })
        .collect();
    WebGraph::new(nodes, out)
}
