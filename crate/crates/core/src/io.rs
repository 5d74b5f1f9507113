//! Edge-list TSV and Matrix Market readers, TSV writer.
//!
//! TSV lines are `u<TAB>v[<TAB>weight]` with 0-based ids; blank lines and
//! lines starting with `#` are skipped. A `# nodes: N` comment fixes the node
//! count so trailing isolated nodes survive a round trip. Matrix Market input
//! must be `coordinate` + `symmetric` with `real`, `integer` or `pattern`
//! values and 1-based ids.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

pub fn read_graph(path: &Path) -> Result<WeightedGraph> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    if text.trim_start().starts_with("%%MatrixMarket") {
        parse_matrix_market(&text)
    } else {
        parse_edge_list(&text)
    }
}

pub fn parse_edge_list(text: &str) -> Result<WeightedGraph> {
    let mut declared: Option<usize> = None;
    let mut edges = Vec::new();
    let mut max_id: Option<usize> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(rest) = comment.trim().strip_prefix("nodes:") {
                let n = rest.trim().parse().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    message: format!("bad node count {:?}", rest.trim()),
                })?;
                declared = Some(n);
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(Error::Parse { line: lineno + 1, message: format!("expected 2 or 3 fields, got {}", fields.len()) });
        }
        let parse_id = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Parse { line: lineno + 1, message: format!("bad node id {s:?}") })
        };
        let u = parse_id(fields[0])?;
        let v = parse_id(fields[1])?;
        let w = match fields.get(2) {
            Some(s) => s
                .parse::<f64>()
                .map_err(|_| Error::Parse { line: lineno + 1, message: format!("bad weight {s:?}") })?,
            None => 1.0,
        };
        max_id = Some(max_id.map_or(u.max(v), |m: usize| m.max(u).max(v)));
        edges.push((u, v, w));
    }
    let n = match (declared, max_id) {
        (Some(n), _) => n,
        (None, Some(m)) => m + 1,
        (None, None) => 0,
    };
    WeightedGraph::from_edge_list(n, edges)
}

pub fn parse_matrix_market(text: &str) -> Result<WeightedGraph> {
    let mut lines = text.lines().enumerate();
    let (_, banner) = lines.next().ok_or(Error::Parse { line: 1, message: "empty file".into() })?;
    let tokens: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" || tokens[2] != "coordinate" {
        return Err(Error::Parse { line: 1, message: "expected a coordinate MatrixMarket banner".into() });
    }
    let pattern = match tokens[3].as_str() {
        "real" | "integer" => false,
        "pattern" => true,
        other => return Err(Error::Parse { line: 1, message: format!("unsupported field {other:?}") }),
    };
    if tokens[4] != "symmetric" {
        return Err(Error::Parse { line: 1, message: format!("unsupported symmetry {:?}", tokens[4]) });
    }

    let mut size: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    for (lineno, raw) in lines {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let bad = |message: String| Error::Parse { line: lineno + 1, message };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if size.is_none() {
            if fields.len() != 3 {
                return Err(bad("expected `rows cols entries`".into()));
            }
            let rows: usize = fields[0].parse().map_err(|_| bad("bad row count".into()))?;
            let cols: usize = fields[1].parse().map_err(|_| bad("bad column count".into()))?;
            if rows != cols {
                return Err(bad(format!("matrix is {rows}x{cols}, not square")));
            }
            size = Some((rows, cols));
            continue;
        }
        let want = if pattern { 2 } else { 3 };
        if fields.len() != want {
            return Err(bad(format!("expected {want} fields")));
        }
        let i: usize = fields[0].parse().map_err(|_| bad("bad row index".into()))?;
        let j: usize = fields[1].parse().map_err(|_| bad("bad column index".into()))?;
        if i == 0 || j == 0 {
            return Err(bad("Matrix Market indices are 1-based".into()));
        }
        let w = if pattern { 1.0 } else { fields[2].parse::<f64>().map_err(|_| bad("bad value".into()))? };
        edges.push((i - 1, j - 1, w));
    }
    let (n, _) = size.ok_or(Error::Parse { line: 1, message: "missing size line".into() })?;
    WeightedGraph::from_edge_list(n, edges)
}

/// TSV with a `# nodes: N` header and one `u<TAB>v<TAB>w` line per edge.
pub fn format_edge_list(g: &WeightedGraph) -> String {
    let mut out = String::new();
    writeln!(out, "# nodes: {}", g.node_count()).unwrap();
    for (u, v, w) in g.edges() {
        writeln!(out, "{u}\t{v}\t{w}").unwrap();
    }
    out
}

pub fn write_edge_list(g: &WeightedGraph, path: &Path) -> Result<()> {
    fs::write(path, format_edge_list(g)).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}
