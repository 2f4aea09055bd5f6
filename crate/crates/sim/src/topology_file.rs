//! Plain-text topology files.
//!
//! ```text
//! # comments start with '#'
//! nodes 3
//! 0 1 0.95
//! 1 0 0.9
//! 1 2 1
//! ```
//!
//! Every edge line is directed: `src dst prr`, with `prr` in `[0, 1]`.

use std::fmt::Write as _;
use std::path::Path;

use whisper_core::radio::LinkModel;

use crate::error::SimError;

pub fn parse_topology(text: &str) -> Result<LinkModel, SimError> {
    let mut links: Option<LinkModel> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: String| SimError::TopologyParse { line: line_no, msg };
        let fields: Vec<&str> = line.split_whitespace().collect();
        match (&mut links, fields.as_slice()) {
            (None, ["nodes", n]) => {
                let n: usize = n.parse().map_err(|_| bad(format!("invalid node count `{n}`")))?;
                links = Some(LinkModel::new(n));
            }
            (None, _) => return Err(bad("expected `nodes N` header".into())),
            (Some(_), ["nodes", ..]) => return Err(bad("duplicate `nodes` header".into())),
            (Some(model), [src, dst, prr]) => {
                let src: usize = src.parse().map_err(|_| bad(format!("invalid node id `{src}`")))?;
                let dst: usize = dst.parse().map_err(|_| bad(format!("invalid node id `{dst}`")))?;
                let prr: f64 = prr.parse().map_err(|_| bad(format!("invalid prr `{prr}`")))?;
                if model.link(src, dst).is_some() {
                    return Err(bad(format!("duplicate edge {src} -> {dst}")));
                }
                model.add_link(src, dst, prr).map_err(|e| bad(e.to_string()))?;
            }
            (Some(_), _) => return Err(bad("expected `src dst prr`".into())),
        }
    }
    links.ok_or(SimError::TopologyParse {
        line: 0,
        msg: "missing `nodes N` header".into(),
    })
}

/// Edges sorted by `(src, dst)`.
pub fn serialize_topology(links: &LinkModel) -> String {
    let mut edges: Vec<_> = links.links().collect();
    edges.sort_by_key(|l| (l.src, l.dst));
    let mut out = format!("nodes {}\n", links.n_nodes());
    for l in edges {
        let _ = writeln!(out, "{} {} {}", l.src, l.dst, l.prr);
    }
    out
}

pub fn read_topology(path: &Path) -> Result<LinkModel, SimError> {
    let text = std::fs::read_to_string(path).map_err(|source| SimError::TopologyRead {
        path: path.to_path_buf(),
        source,
    })?;
    parse_topology(&text).map_err(|e| match e {
        SimError::TopologyParse { line, msg } => SimError::TopologyParse {
            line,
            msg: format!("{}: {msg}", path.display()),
        },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blank_lines() {
        let text = "# demo\n\nnodes 3  # three\n0 1 0.95\n1 0 0.9 # back\n1 2 1\n";
        let links = parse_topology(text).unwrap();
        assert_eq!(links.n_nodes(), 3);
        assert_eq!(links.prr(0, 1), 0.95);
        assert_eq!(links.prr(2, 1), 0.0);
        assert_eq!(serialize_topology(&links), "nodes 3\n0 1 0.95\n1 0 0.9\n1 2 1\n");
    }

    #[test]
    fn rejects_malformed_input() {
        for text in [
            "0 1 0.5\n",
            "nodes x\n",
            "nodes 2\n0 1\n",
            "nodes 2\n0 2 0.5\n",
            "nodes 2\n0 1 1.5\n",
            "nodes 2\n0 1 0.5\n0 1 0.4\n",
            "",
        ] {
            assert!(parse_topology(text).is_err(), "{text:?}");
        }
    }
}
