//! Web graph data model, synthetic generators and the text file format.

mod generate;
mod io;

use std::collections::HashMap;
use std::fmt;

pub use generate::{
    generate_power_law_web, generate_trap_graph, GeneratorSpec, HazardRates, TruncatedPowerLaw, TLD_POOL, TRAP_HOST,
};
pub use io::{load_graph, parse_graph, read_graph, save_graph, write_graph};

use crate::error::{Error, Result};

/// Download cap applied to generated content lengths (5 MB).
pub const MAX_CONTENT_LENGTH: u64 = 5 * 1024 * 1024;
/// At most this many parallel hyperlinks are kept per ordered node pair.
pub const MAX_PARALLEL_EDGES: usize = 2;

/// Dense node identifier, `0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(u32::try_from(i).expect("node index exceeds u32"))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// What re-fetching a session-id URL without its query part produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TruncationOutcome {
    /// Truncated URL serves the same page; truncation sticks.
    Ok,
    /// Truncated URL returns an error page; truncation is undone.
    Err,
    /// Truncated URL issues a new redirect; truncation is undone.
    Redir,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Behavior {
    Normal,
    DeadEnd,
    FetchFail,
    Timeout,
    RedirectTo(NodeId),
    SessionIdUrl(TruncationOutcome),
}

impl fmt::Display for Behavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Behavior::Normal => f.write_str("normal"),
            Behavior::DeadEnd => f.write_str("deadend"),
            Behavior::FetchFail => f.write_str("fetchfail"),
            Behavior::Timeout => f.write_str("timeout"),
            Behavior::RedirectTo(id) => write!(f, "redirect:{id}"),
            Behavior::SessionIdUrl(TruncationOutcome::Ok) => f.write_str("sid:ok"),
            Behavior::SessionIdUrl(TruncationOutcome::Err) => f.write_str("sid:err"),
            Behavior::SessionIdUrl(TruncationOutcome::Redir) => f.write_str("sid:redir"),
        }
    }
}

impl std::str::FromStr for Behavior {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "normal" => Behavior::Normal,
            "deadend" => Behavior::DeadEnd,
            "fetchfail" => Behavior::FetchFail,
            "timeout" => Behavior::Timeout,
            "sid:ok" => Behavior::SessionIdUrl(TruncationOutcome::Ok),
            "sid:err" => Behavior::SessionIdUrl(TruncationOutcome::Err),
            "sid:redir" => Behavior::SessionIdUrl(TruncationOutcome::Redir),
            other => match other.strip_prefix("redirect:") {
                Some(id) => Behavior::RedirectTo(NodeId(
                    id.parse().map_err(|_| format!("bad redirect target `{id}`"))?,
                )),
                None => return Err(format!("unknown behavior `{other}`")),
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeMeta {
    pub url: String,
    pub host: String,
    /// Second-level domain, e.g. `epfl.ch`.
    pub domain: String,
    pub tld: String,
    pub content_length: u64,
    pub behavior: Behavior,
}

impl NodeMeta {
    fn validate(&self, id: usize) -> Result<()> {
        let bad = |what: &str| Err(Error::Data(format!("node {id}: {what}")));
        if self.url.is_empty() || self.url.contains(char::is_whitespace) {
            return bad("url must be non-empty without whitespace");
        }
        if !(self.host == self.domain || self.host.ends_with(&format!(".{}", self.domain))) {
            return bad("host does not extend its domain");
        }
        if self.host.rsplit('.').next() != Some(self.tld.as_str()) {
            return bad("tld is not the last label of the host");
        }
        if self.behavior == Behavior::Normal && self.content_length > MAX_CONTENT_LENGTH {
            return bad("content length above the 5 MB download cap");
        }
        Ok(())
    }
}

/// Directed multigraph of web pages. Immutable once built.
#[derive(Debug, Clone)]
pub struct WebGraph {
    nodes: Vec<NodeMeta>,
    out: Vec<Vec<NodeId>>,
    inn: Vec<Vec<NodeId>>,
    host_of: Vec<u32>,
    domain_of: Vec<u32>,
    host_names: Vec<String>,
    edge_count: usize,
}

impl PartialEq for WebGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.out == other.out
    }
}

impl WebGraph {
    /// Build a graph, checking edge endpoints, the parallel-edge cap and
    /// node metadata.
    pub fn new(nodes: Vec<NodeMeta>, out: Vec<Vec<NodeId>>) -> Result<Self> {
        let n = nodes.len();
        if out.len() != n {
            return Err(Error::Data(format!("{} adjacency lists for {n} nodes", out.len())));
        }
        if u32::try_from(n).is_err() {
            return Err(Error::Data("too many nodes".into()));
        }
        for (id, meta) in nodes.iter().enumerate() {
            meta.validate(id)?;
            if let Behavior::RedirectTo(t) = meta.behavior {
                if t.index() >= n {
                    return Err(Error::Data(format!("node {id} redirects to unknown node {t}")));
                }
            }
        }
        let mut inn = vec![Vec::new(); n];
        let mut edge_count = 0;
        let mut seen: HashMap<NodeId, usize> = HashMap::new();
        for (src, targets) in out.iter().enumerate() {
            seen.clear();
            for &dst in targets {
                if dst.index() >= n {
                    return Err(Error::Data(format!("edge {src} -> {dst} references unknown node {dst}")));
                }
                let c = seen.entry(dst).or_insert(0);
                *c += 1;
                if *c > MAX_PARALLEL_EDGES {
                    return Err(Error::Data(format!(
                        "more than {MAX_PARALLEL_EDGES} parallel edges {src} -> {dst}"
                    )));
                }
                inn[dst.index()].push(NodeId::from(src));
                edge_count += 1;
            }
        }

        let mut host_ix: HashMap<&str, u32> = HashMap::new();
        let mut domain_ix: HashMap<&str, u32> = HashMap::new();
        let mut host_names = Vec::new();
        let mut host_of = Vec::with_capacity(n);
        let mut domain_of = Vec::with_capacity(n);
        for meta in &nodes {
            let next = host_ix.len() as u32;
            let h = *host_ix.entry(meta.host.as_str()).or_insert_with(|| {
                host_names.push(meta.host.clone());
                next
            });
            let next = domain_ix.len() as u32;
            let d = *domain_ix.entry(meta.domain.as_str()).or_insert(next);
            host_of.push(h);
            domain_of.push(d);
        }

        Ok(WebGraph { nodes, out, inn, host_of, domain_of, host_names, edge_count })
    }

    pub fn empty() -> Self {
        WebGraph::new(Vec::new(), Vec::new()).expect("empty graph is valid")
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).map(NodeId::from)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.index() < self.nodes.len()
    }

    pub fn meta(&self, id: NodeId) -> &NodeMeta {
        &self.nodes[id.index()]
    }

    pub fn nodes(&self) -> &[NodeMeta] {
        &self.nodes
    }

    /// Outlinks in file order, parallel edges repeated.
    pub fn out_links(&self, id: NodeId) -> &[NodeId] {
        &self.out[id.index()]
    }

    /// Sources of in-edges, one entry per edge.
    pub fn in_links(&self, id: NodeId) -> &[NodeId] {
        &self.inn[id.index()]
    }

    pub fn out_degree(&self, id: NodeId) -> usize {
        self.out[id.index()].len()
    }

    pub fn in_degree(&self, id: NodeId) -> usize {
        self.inn[id.index()].len()
    }

    /// Interned host index of a node; equal indices mean equal host names.
    pub fn host_id(&self, id: NodeId) -> u32 {
        self.host_of[id.index()]
    }

    pub fn domain_id(&self, id: NodeId) -> u32 {
        self.domain_of[id.index()]
    }

    pub fn host_name(&self, host_id: u32) -> &str {
        &self.host_names[host_id as usize]
    }

    pub fn host_count(&self) -> usize {
        self.host_names.len()
    }

    /// Number of distinct unordered neighbour pairs, counting reciprocal and
    /// parallel links once.
    pub fn undirected_edge_count(&self) -> usize {
        let mut pairs = std::collections::HashSet::new();
        for (src, targets) in self.out.iter().enumerate() {
            for &dst in targets {
                let (a, b) = if src <= dst.index() { (src, dst.index()) } else { (dst.index(), src) };
                pairs.insert((a, b));
            }
        }
        pairs.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(host: &str) -> NodeMeta {
        let domain = host.split_once('.').map_or(host, |(_, d)| d).to_string();
        NodeMeta {
            url: format!("http://{host}/"),
            host: host.into(),
            domain,
            tld: host.rsplit('.').next().unwrap().into(),
            content_length: 10,
            behavior: Behavior::Normal,
        }
    }

    #[test]
    fn third_parallel_edge_is_rejected() {
        let nodes = vec![meta("a.x.com"), meta("b.x.com")];
        let ok = WebGraph::new(nodes.clone(), vec![vec![NodeId(1), NodeId(1)], vec![]]);
        assert!(ok.is_ok());
        let err = WebGraph::new(nodes, vec![vec![NodeId(1); 3], vec![]]).unwrap_err();
        assert!(err.to_string().contains("parallel"), "{err}");
    }

    #[test]
    fn unknown_endpoint_is_rejected() {
        let err = WebGraph::new(vec![meta("a.x.com")], vec![vec![NodeId(4)]]).unwrap_err();
        assert!(err.to_string().contains("unknown node 4"));
    }

    #[test]
    fn metadata_invariants() {
        let mut m = meta("a.x.com");
        m.tld = "org".into();
        assert!(WebGraph::new(vec![m], vec![vec![]]).is_err());
        let mut m = meta("a.x.com");
        m.domain = "y.com".into();
        assert!(WebGraph::new(vec![m], vec![vec![]]).is_err());
        let mut m = meta("a.x.com");
        m.content_length = MAX_CONTENT_LENGTH + 1;
        assert!(WebGraph::new(vec![m], vec![vec![]]).is_err());
    }

    #[test]
    fn behavior_text_round_trips() {
        for b in [
            Behavior::Normal,
            Behavior::DeadEnd,
            Behavior::FetchFail,
            Behavior::Timeout,
            Behavior::RedirectTo(NodeId(12)),
            Behavior::SessionIdUrl(TruncationOutcome::Ok),
            Behavior::SessionIdUrl(TruncationOutcome::Err),
            Behavior::SessionIdUrl(TruncationOutcome::Redir),
        ] {
            assert_eq!(b.to_string().parse::<Behavior>().unwrap(), b);
        }
        assert!("redirect:x".parse::<Behavior>().is_err());
    }

    #[test]
    fn in_links_mirror_out_links() {
        let nodes = vec![meta("a.x.com"), meta("b.x.com"), meta("c.y.org")];
        let g = WebGraph::new(nodes, vec![vec![NodeId(1), NodeId(2)], vec![NodeId(2)], vec![]]).unwrap();
        assert_eq!(g.in_links(NodeId(2)), &[NodeId(0), NodeId(1)]);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.host_count(), 3);
        assert_ne!(g.domain_id(NodeId(0)), g.domain_id(NodeId(2)));
        assert_eq!(g.domain_id(NodeId(0)), g.domain_id(NodeId(1)));
    }
}
