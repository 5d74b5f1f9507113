//! COO interchange for foreign-language callers.
//!
//! Arrays follow the common `edge_index` convention: both directions of every
//! undirected edge are listed, sorted by `(row, col)`.

use std::collections::BTreeMap;

use crate::augment::{augment_stream, AugmentorSpec};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::rlap::{rlap, RlapConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct Coo {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub weights: Vec<f64>,
}

impl Coo {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Builds a graph from directed COO entries. The entries must describe a
/// symmetric matrix unless `symmetrize` is set, in which case `(A + A^T) / 2`
/// is used. Missing weights mean 1. Diagonal entries are rejected.
pub fn from_coo(n: usize, rows: &[usize], cols: &[usize], weights: Option<&[f64]>, symmetrize: bool) -> Result<WeightedGraph> {
    if rows.len() != cols.len() || weights.is_some_and(|w| w.len() != rows.len()) {
        return Err(Error::InvalidParameter("COO arrays must have equal length".into()));
    }
    let mut directed: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for k in 0..rows.len() {
        let (u, v) = (rows[k], cols[k]);
        for x in [u, v] {
            if x >= n {
                return Err(Error::Index { node: x, n });
            }
        }
        if u == v {
            return Err(Error::SelfLoop { node: u });
        }
        let w = weights.map_or(1.0, |w| w[k]);
        *directed.entry((u, v)).or_insert(0.0) += w;
    }
    let mut edges = Vec::new();
    for (&(u, v), &w) in &directed {
        let back = directed.get(&(v, u)).copied();
        if symmetrize {
            if u < v || back.is_none() {
                edges.push((u, v, 0.5 * (w + back.unwrap_or(0.0))));
            }
        } else {
            match back {
                Some(b) if b == w => {
                    if u < v {
                        edges.push((u, v, w));
                    }
                }
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "entry ({u}, {v}) has no matching ({v}, {u}); pass symmetrize to average"
                    )))
                }
            }
        }
    }
    WeightedGraph::from_edge_list(n, edges)
}

pub fn to_coo(g: &WeightedGraph) -> Coo {
    let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(2 * g.edge_count());
    for (u, v, w) in g.edges() {
        entries.push((u, v, w));
        entries.push((v, u, w));
    }
    entries.sort_by_key(|e| (e.0, e.1));
    Coo {
        rows: entries.iter().map(|e| e.0).collect(),
        cols: entries.iter().map(|e| e.1).collect(),
        weights: entries.iter().map(|e| e.2).collect(),
    }
}

/// Randomized Schur complement on COO input; returns the output COO and a
/// per-node surviving mask.
pub fn rlap_coo(g: &WeightedGraph, config: &RlapConfig) -> Result<(Coo, Vec<bool>)> {
    let view = rlap(g, config)?;
    let mask = (0..g.node_count()).map(|v| view.graph.is_active(v)).collect();
    Ok((to_coo(&view.graph), mask))
}

/// Any graph augmentor from a JSON spec object (same fields as the TOML
/// config).
pub fn augment_coo(g: &WeightedGraph, spec_json: &str, stream: u64) -> Result<Coo> {
    let spec = AugmentorSpec::from_json(spec_json)?;
    Ok(to_coo(&augment_stream(g, &spec, stream)?))
}
