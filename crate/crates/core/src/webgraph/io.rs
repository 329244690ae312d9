//! Line-oriented graph file:
//!
//! ```text
//! webgraph v1 n=<N> m=<M>
//! N <id> <url> <host> <domain> <tld> <content_length> <behavior>
//! E <src> <dst>
//! ```
//!
//! Node lines come first, in id order; edge lines follow in source order,
//! preserving each node's outlink order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Behavior, NodeId, NodeMeta, WebGraph};
use crate::error::{Error, Result};

pub fn write_graph<W: Write>(graph: &WebGraph, mut w: W) -> Result<()> {
    writeln!(w, "webgraph v1 n={} m={}", graph.node_count(), graph.edge_count())?;
    for (id, m) in graph.nodes().iter().enumerate() {
        writeln!(w, "N {id} {} {} {} {} {} {}", m.url, m.host, m.domain, m.tld, m.content_length, m.behavior)?;
    }
    for v in graph.node_ids() {
        for dst in graph.out_links(v) {
            writeln!(w, "E {v} {dst}")?;
        }
    }
    Ok(())
}

pub fn save_graph(graph: &WebGraph, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_graph(graph, &mut w)?;
    w.flush()?;
    Ok(())
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut it = line.split_whitespace();
    if it.next()? != "webgraph" || it.next()? != "v1" {
        return None;
    }
    let n = it.next()?.strip_prefix("n=")?.parse().ok()?;
    let m = it.next()?.strip_prefix("m=")?.parse().ok()?;
    it.next().is_none().then_some((n, m))
}

pub fn read_graph<R: Read>(r: R) -> Result<WebGraph> {
    let mut lines = BufReader::new(r).lines();
    let header = lines.next().transpose()?.ok_or_else(|| Error::parse(1, "missing header"))?;
    let (n, m) = parse_header(&header).ok_or_else(|| Error::parse(1, format!("bad header `{header}`")))?;

    let mut nodes: Vec<NodeMeta> = Vec::with_capacity(n);
    let mut out: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    let mut edges = 0usize;
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields[0] {
            "N" => {
                if fields.len() != 8 {
                    return Err(Error::parse(lineno, "node line needs 8 fields"));
                }
                if edges > 0 {
                    return Err(Error::parse(lineno, "node line after edge lines"));
                }
                let id: usize = fields[1].parse().map_err(|_| Error::parse(lineno, format!("bad node id `{}`", fields[1])))?;
                if id != nodes.len() {
                    return Err(Error::parse(lineno, format!("expected node id {}, found {id}", nodes.len())));
                }
                if id >= n {
                    return Err(Error::parse(lineno, format!("node id {id} exceeds declared n={n}")));
                }
                let content_length = fields[6]
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("bad content length `{}`", fields[6])))?;
                let behavior: Behavior = fields[7].parse().map_err(|e: String| Error::parse(lineno, e))?;
                if let Behavior::RedirectTo(t) = behavior {
                    if t.index() >= n {
                        return Err(Error::parse(lineno, format!("redirect to unknown node id {t}")));
                    }
                }
                nodes.push(NodeMeta {
                    url: fields[2].to_string(),
                    host: fields[3].to_string(),
                    domain: fields[4].to_string(),
                    tld: fields[5].to_string(),
                    content_length,
                    behavior,
                });
            }
            "E" => {
                if fields.len() != 3 {
                    return Err(Error::parse(lineno, "edge line needs 3 fields"));
                }
                let mut ends = [0usize; 2];
                for (slot, raw) in ends.iter_mut().zip(&fields[1..]) {
                    let id: usize = raw.parse().map_err(|_| Error::parse(lineno, format!("bad node id `{raw}`")))?;
                    if id >= n {
                        return Err(Error::parse(lineno, format!("edge references unknown node id {id}")));
                    }
                    *slot = id;
                }
                out[ends[0]].push(NodeId::from(ends[1]));
                edges += 1;
            }
            other => return Err(Error::parse(lineno, format!("unknown record type `{other}`"))),
        }
    }
    if nodes.len() != n {
        return Err(Error::parse(0, format!("declared n={n} but found {} node lines", nodes.len())));
    }
    if edges != m {
        return Err(Error::parse(0, format!("declared m={m} but found {edges} edge lines")));
    }
    WebGraph::new(nodes, out)
}

pub fn parse_graph(text: &str) -> Result<WebGraph> {
    read_graph(text.as_bytes())
}

pub fn load_graph(path: &Path) -> Result<WebGraph> {
    read_graph(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::webgraph::{generate_power_law_web, generate_trap_graph, GeneratorSpec, HazardRates};

    fn to_text(g: &WebGraph) -> String {
        let mut buf = Vec::new();
        write_graph(g, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn empty_graph_round_trip() {
        let g = WebGraph::empty();
        let text = to_text(&g);
        assert_eq!(text, "webgraph v1 n=0 m=0\n");
        assert_eq!(parse_graph(&text).unwrap(), g);
    }

    #[test]
    fn trap_graph_round_trip() {
        let g = generate_trap_graph(8).unwrap();
        let back = parse_graph(&to_text(&g)).unwrap();
        assert_eq!(back, g);
        for v in g.node_ids() {
            assert_eq!(back.out_links(v), g.out_links(v));
        }
    }

    #[test]
    fn golden_trap_4() {
        let text = to_text(&generate_trap_graph(4).unwrap());
        let expected = "\
webgraph v1 n=4 m=6
N 0 http://trap.example.com/p0.html trap.example.com example.com com 20000 normal
N 1 http://trap.example.com/p1.html trap.example.com example.com com 20000 normal
N 2 http://www.chain2.org/p2.html www.chain2.org chain2.org org 20000 normal
N 3 http://www.chain3.org/p3.html www.chain3.org chain3.org org 20000 normal
E 0 1
E 0 2
E 1 0
E 2 0
E 2 3
E 3 2
";
        assert_eq!(text, expected);
    }

    #[test]
    fn hazardous_graph_round_trip() {
        let spec = GeneratorSpec {
            n: 400,
            seed: 11,
            hazards: HazardRates { dead_end: 0.05, fetch_fail: 0.05, timeout: 0.05, redirect: 0.05, session_id: 0.05, long_url: 0.05 },
            ..Default::default()
        };
        let g = generate_power_law_web(&spec).unwrap();
        assert_eq!(parse_graph(&to_text(&g)).unwrap(), g);
    }

    #[test]
    fn unknown_edge_endpoint_names_the_id() {
        let text = "webgraph v1 n=1 m=1\nN 0 http://a.b.com/ a.b.com b.com com 5 normal\nE 0 7\n";
        let err = parse_graph(text).unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains('7'), "{message}");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let cases = [
            ("graph v2\n", 1),
            ("webgraph v1 n=1 m=0\nN 0 u h d t x normal\n", 2),
            ("webgraph v1 n=1 m=0\nN 0 http://a.b.com/ a.b.com b.com com 5 weird\n", 2),
            ("webgraph v1 n=1 m=0\nN 0 http://a.b.com/ a.b.com b.com com 5 normal\nQ 1\n", 3),
            ("webgraph v1 n=2 m=0\nN 1 http://a.b.com/ a.b.com b.com com 5 normal\n", 2),
        ];
        for (text, want) in cases {
            match parse_graph(text) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, want, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn count_mismatch_is_an_error() {
        let text = "webgraph v1 n=1 m=2\nN 0 http://a.b.com/ a.b.com b.com com 5 normal\n";
        assert!(matches!(parse_graph(text), Err(Error::Parse { .. })));
    }
}
