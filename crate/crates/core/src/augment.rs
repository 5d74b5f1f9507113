//! Baseline graph and feature augmentors behind one spec type.
//!
//! Every augmentor keeps the node dimension: dropped nodes become inactive
//! and feature rows stay aligned with node ids. Randomness comes from
//! `stream_rng(seed, stream)`, so two views of one spec differ only by the
//! stream index.

use std::collections::HashSet;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::diffusion::{diffuse, sparsify, DiffusionKind, DiffusionSpec};
use crate::error::{check_probability, Error, Result};
use crate::graph::WeightedGraph;
use crate::rlap::{rlap_with_rng, EliminationScheme, NeighborOrdering, RlapConfig};
use crate::rng::{stream_rng, StreamRng};

pub const PAGERANK_TOL: f64 = 1e-8;
pub const EVC_TOL: f64 = 1e-8;

fn half() -> f64 {
    0.5
}
fn default_gamma_tau() -> f64 {
    0.7
}
fn default_damping() -> f64 {
    0.85
}
fn default_iters() -> usize {
    10_000
}
fn default_restart() -> f64 {
    0.2
}
fn default_o_v() -> EliminationScheme {
    EliminationScheme::Random
}
fn default_o_n() -> NeighborOrdering {
    NeighborOrdering::Asc
}

/// Augmentor kind and its parameters, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum AugmentorKind {
    EdgeAddition {
        #[serde(default = "half")]
        gamma: f64,
    },
    EdgeDropping {
        #[serde(default = "half")]
        gamma: f64,
    },
    EdgeDroppingDegree {
        #[serde(default = "half")]
        gamma_e: f64,
        #[serde(default = "default_gamma_tau")]
        gamma_tau: f64,
    },
    #[serde(rename = "EdgeDroppingPR")]
    EdgeDroppingPr {
        #[serde(default = "half")]
        gamma_e: f64,
        #[serde(default = "default_gamma_tau")]
        gamma_tau: f64,
        #[serde(default = "default_damping")]
        damping: f64,
        #[serde(default = "default_iters")]
        iters: usize,
    },
    #[serde(rename = "EdgeDroppingEVC")]
    EdgeDroppingEvc {
        #[serde(default = "half")]
        gamma_e: f64,
        #[serde(default = "default_gamma_tau")]
        gamma_tau: f64,
        #[serde(default = "default_iters")]
        iters: usize,
    },
    NodeDropping {
        #[serde(default = "half")]
        gamma: f64,
    },
    RandomWalkSubgraph {
        #[serde(default = "default_restart")]
        restart_prob: f64,
        /// Distinct nodes to collect; defaults to `(1 - gamma) n`.
        target_nodes: Option<usize>,
        #[serde(default = "half")]
        gamma: f64,
    },
    #[serde(rename = "rLap", alias = "RLap")]
    RLap {
        #[serde(default = "half")]
        gamma: f64,
        #[serde(default = "default_o_v")]
        o_v: EliminationScheme,
        #[serde(default = "default_o_n")]
        o_n: NeighborOrdering,
    },
    #[serde(rename = "PPRDiffusion")]
    PprDiffusion {
        #[serde(default, flatten)]
        diffusion: DiffusionParams,
    },
    MarkovDiffusion {
        #[serde(default, flatten)]
        diffusion: DiffusionParams,
    },
    FeatureMasking {
        #[serde(default = "half")]
        gamma: f64,
    },
}

/// Diffusion parameters shared by the two diffusion augmentors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiffusionParams {
    pub alpha: f64,
    #[serde(rename = "K", alias = "k")]
    pub k: usize,
    pub eps: f64,
    pub dense_cap: usize,
    pub iterative: bool,
}

impl Default for DiffusionParams {
    fn default() -> Self {
        let d = DiffusionSpec::default();
        Self { alpha: d.alpha, k: d.k, eps: d.eps, dense_cap: d.dense_cap, iterative: d.iterative }
    }
}

impl DiffusionParams {
    fn spec(&self, kind: DiffusionKind) -> DiffusionSpec {
        DiffusionSpec {
            kind,
            alpha: self.alpha,
            k: self.k,
            eps: self.eps,
            dense_cap: self.dense_cap,
            iterative: self.iterative,
            ..DiffusionSpec::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentorSpec {
    #[serde(flatten)]
    pub kind: AugmentorKind,
    #[serde(default)]
    pub seed: u64,
}

impl AugmentorSpec {
    pub fn new(kind: AugmentorKind, seed: u64) -> Self {
        Self { kind, seed }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            AugmentorKind::EdgeAddition { .. } => "EdgeAddition",
            AugmentorKind::EdgeDropping { .. } => "EdgeDropping",
            AugmentorKind::EdgeDroppingDegree { .. } => "EdgeDroppingDegree",
            AugmentorKind::EdgeDroppingPr { .. } => "EdgeDroppingPR",
            AugmentorKind::EdgeDroppingEvc { .. } => "EdgeDroppingEVC",
            AugmentorKind::NodeDropping { .. } => "NodeDropping",
            AugmentorKind::RandomWalkSubgraph { .. } => "RandomWalkSubgraph",
            AugmentorKind::RLap { .. } => "rLap",
            AugmentorKind::PprDiffusion { .. } => "PPRDiffusion",
            AugmentorKind::MarkovDiffusion { .. } => "MarkovDiffusion",
            AugmentorKind::FeatureMasking { .. } => "FeatureMasking",
        }
    }

    /// Same spec with its perturbation level replaced, for dual views.
    /// Diffusions have no perturbation level and are returned unchanged.
    pub fn with_gamma(&self, g: f64) -> Self {
        let mut out = self.clone();
        match &mut out.kind {
            AugmentorKind::EdgeAddition { gamma }
            | AugmentorKind::EdgeDropping { gamma }
            | AugmentorKind::NodeDropping { gamma }
            | AugmentorKind::RandomWalkSubgraph { gamma, .. }
            | AugmentorKind::RLap { gamma, .. }
            | AugmentorKind::FeatureMasking { gamma } => *gamma = g,
            AugmentorKind::EdgeDroppingDegree { gamma_e, .. }
            | AugmentorKind::EdgeDroppingPr { gamma_e, .. }
            | AugmentorKind::EdgeDroppingEvc { gamma_e, .. } => *gamma_e = g,
            AugmentorKind::PprDiffusion { .. } | AugmentorKind::MarkovDiffusion { .. } => {}
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            AugmentorKind::EdgeAddition { gamma }
            | AugmentorKind::EdgeDropping { gamma }
            | AugmentorKind::NodeDropping { gamma }
            | AugmentorKind::RLap { gamma, .. }
            | AugmentorKind::FeatureMasking { gamma } => check_probability("gamma", *gamma),
            AugmentorKind::EdgeDroppingDegree { gamma_e, gamma_tau }
            | AugmentorKind::EdgeDroppingPr { gamma_e, gamma_tau, .. }
            | AugmentorKind::EdgeDroppingEvc { gamma_e, gamma_tau, .. } => {
                check_probability("gamma_e", *gamma_e)?;
                check_probability("gamma_tau", *gamma_tau)
            }
            AugmentorKind::RandomWalkSubgraph { restart_prob, gamma, .. } => {
                check_probability("gamma", *gamma)?;
                if !(0.0..1.0).contains(restart_prob) {
                    return Err(Error::InvalidParameter(format!("restart_prob must lie in [0, 1), got {restart_prob}")));
                }
                Ok(())
            }
            AugmentorKind::PprDiffusion { diffusion } => diffusion.spec(DiffusionKind::Ppr).validate(),
            AugmentorKind::MarkovDiffusion { diffusion } => diffusion.spec(DiffusionKind::Markov).validate(),
        }
    }
}

/// Dense row-major node features; row `i` belongs to node `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::InvalidParameter(format!(
                "{} values do not fill a {rows}x{cols} matrix",
                values.len()
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self { rows, cols, values: vec![value; rows * cols] }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }
}

/// Independently zeroes each entry with probability `gamma`.
pub fn feature_mask<R: Rng + ?Sized>(x: &FeatureMatrix, gamma: f64, rng: &mut R) -> Result<FeatureMatrix> {
    check_probability("gamma", gamma)?;
    let values = x.values.iter().map(|&v| if rng.random::<f64>() < gamma { 0.0 } else { v }).collect();
    Ok(FeatureMatrix { rows: x.rows, cols: x.cols, values })
}

/// Adds each absent pair among active nodes with probability `gamma`,
/// weight 1. The number of additions is drawn from the binomial law and the
/// pairs are then chosen uniformly without materializing all non-edges,
/// unless more than half of them are needed.
pub fn edge_add<R: Rng + ?Sized>(g: &WeightedGraph, gamma: f64, rng: &mut R) -> Result<WeightedGraph> {
    check_probability("gamma", gamma)?;
    let active: Vec<usize> = g.active_nodes().collect();
    let a = active.len();
    let pairs = a * a.saturating_sub(1) / 2;
    let non_edges = pairs - g.edge_count();
    let mut out = g.clone();
    if non_edges == 0 || gamma == 0.0 {
        return Ok(out);
    }
    let k = Binomial::new(non_edges as u64, gamma).map_err(|e| Error::InvalidParameter(e.to_string()))?.sample(rng) as usize;
    if 2 * k > non_edges {
        let mut all = Vec::with_capacity(non_edges);
        for (ia, &u) in active.iter().enumerate() {
            for &v in &active[ia + 1..] {
                if g.weight(u, v).is_none() {
                    all.push((u, v));
                }
            }
        }
        for idx in sample(rng, all.len(), k) {
            let (u, v) = all[idx];
            out.add_edge(u, v, 1.0)?;
        }
    } else {
        let mut chosen = HashSet::with_capacity(k);
        while chosen.len() < k {
            let u = active[rng.random_range(0..a)];
            let v = active[rng.random_range(0..a)];
            if u == v || g.weight(u, v).is_some() {
                continue;
            }
            let key = (u.min(v), u.max(v));
            if chosen.insert(key) {
                out.add_edge(key.0, key.1, 1.0)?;
            }
        }
    }
    Ok(out)
}

/// Removes each edge independently with probability `gamma`.
pub fn edge_drop<R: Rng + ?Sized>(g: &WeightedGraph, gamma: f64, rng: &mut R) -> Result<WeightedGraph> {
    check_probability("gamma", gamma)?;
    let probs = vec![gamma; g.edge_count()];
    drop_with_probs(g, &probs, rng)
}

/// Removes edge `k` of `g.edges()` with probability `probs[k]`.
pub fn drop_with_probs<R: Rng + ?Sized>(g: &WeightedGraph, probs: &[f64], rng: &mut R) -> Result<WeightedGraph> {
    let edges = g.edges();
    assert_eq!(edges.len(), probs.len(), "one probability per edge");
    let mut out = g.clone();
    for (&(u, v, _), &p) in edges.iter().zip(probs) {
        if rng.random::<f64>() < p {
            out.remove_edge(u, v);
        }
    }
    Ok(out)
}

/// Per-edge drop probabilities from centrality scores (one per edge, in
/// `g.edges()` order): `min((max log s - log s_e) / (max log s - mean log s) * gamma_e, gamma_tau)`.
/// If all scores are equal every edge gets `gamma_e`.
pub fn adaptive_drop_probs(scores: &[f64], gamma_e: f64, gamma_tau: f64) -> Result<Vec<f64>> {
    check_probability("gamma_e", gamma_e)?;
    check_probability("gamma_tau", gamma_tau)?;
    if let Some(bad) = scores.iter().find(|s| !(**s > 0.0)) {
        return Err(Error::Domain(format!("centrality scores must be positive, got {bad}")));
    }
    if scores.is_empty() {
        return Ok(Vec::new());
    }
    let logs: Vec<f64> = scores.iter().map(|s| s.ln()).collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let avg = logs.iter().sum::<f64>() / logs.len() as f64;
    let spread = max - avg;
    if !(spread > 0.0) {
        return Ok(vec![gamma_e; scores.len()]);
    }
    Ok(logs.iter().map(|l| ((max - l) / spread * gamma_e).min(gamma_tau)).collect())
}

fn edge_scores(g: &WeightedGraph, node: &[f64]) -> Vec<f64> {
    g.edges().iter().map(|&(u, v, _)| 0.5 * (node[u] + node[v])).collect()
}

/// `(deg(u) + deg(v)) / 2` per edge, with unweighted degrees.
pub fn degree_scores(g: &WeightedGraph) -> Vec<f64> {
    let deg: Vec<f64> = (0..g.node_count()).map(|v| g.degree(v) as f64).collect();
    edge_scores(g, &deg)
}

/// Node PageRank from the fixed point `p = damping * A D^-1 p + 1`.
pub fn pagerank(g: &WeightedGraph, damping: f64, iters: usize, tol: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&damping) {
        return Err(Error::InvalidParameter(format!("damping must lie in [0, 1), got {damping}")));
    }
    let n = g.node_count();
    let mut p = vec![1.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..iters {
        let mut next = vec![1.0; n];
        for (j, &pj) in p.iter().enumerate() {
            let wj = g.total_weight(j);
            if wj == 0.0 {
                continue;
            }
            let share = damping * pj / wj;
            for (i, w) in g.neighbors(j) {
                next[i] += w * share;
            }
        }
        residual = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        p = next;
        if residual <= tol {
            return Ok(p);
        }
    }
    Err(Error::Convergence { iterations: iters, residual })
}

pub fn pagerank_scores(g: &WeightedGraph, damping: f64, iters: usize, tol: f64) -> Result<Vec<f64>> {
    Ok(edge_scores(g, &pagerank(g, damping, iters, tol)?))
}

/// Leading eigenvector of the weighted adjacency, per connected component:
/// power iteration on `A + I` (the shift makes it converge on bipartite
/// components), each component scaled to unit 2-norm. Isolated nodes get 1.
pub fn eigenvector_centrality(g: &WeightedGraph, iters: usize, tol: f64) -> Result<Vec<f64>> {
    let n = g.node_count();
    let mut comp = vec![usize::MAX; n];
    let mut members: Vec<Vec<usize>> = Vec::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = members.len();
        let mut list = vec![s];
        comp[s] = id;
        let mut head = 0;
        while head < list.len() {
            let v = list[head];
            head += 1;
            for (x, _) in g.neighbors(v) {
                if comp[x] == usize::MAX {
                    comp[x] = id;
                    list.push(x);
                }
            }
        }
        members.push(list);
    }

    let mut u = vec![0.0; n];
    for nodes in &members {
        if nodes.len() == 1 {
            u[nodes[0]] = 1.0;
            continue;
        }
        let init = 1.0 / (nodes.len() as f64).sqrt();
        for &v in nodes {
            u[v] = init;
        }
        let mut next = vec![0.0; n];
        let mut converged = false;
        let mut residual = f64::INFINITY;
        for _ in 0..iters {
            for &v in nodes {
                next[v] = u[v] + g.neighbors(v).map(|(x, w)| w * u[x]).sum::<f64>();
            }
            let norm = nodes.iter().map(|&v| next[v] * next[v]).sum::<f64>().sqrt();
            residual = 0.0;
            for &v in nodes {
                let x = next[v] / norm;
                residual = f64::max(residual, (x - u[v]).abs());
                u[v] = x;
            }
            if residual <= tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Convergence { iterations: iters, residual });
        }
    }
    Ok(u)
}

pub fn evc_scores(g: &WeightedGraph, iters: usize, tol: f64) -> Result<Vec<f64>> {
    Ok(edge_scores(g, &eigenvector_centrality(g, iters, tol)?))
}

/// Drops each active node with probability `gamma`; dropped nodes lose all
/// edges and become inactive.
pub fn node_drop<R: Rng + ?Sized>(g: &WeightedGraph, gamma: f64, rng: &mut R) -> Result<WeightedGraph> {
    check_probability("gamma", gamma)?;
    let keep: Vec<bool> = (0..g.node_count()).map(|v| g.is_active(v) && rng.random::<f64>() >= gamma).collect();
    Ok(g.induced(&keep))
}

/// Result of [`random_walk_subgraph`].
#[derive(Debug, Clone)]
pub struct WalkSubgraph {
    pub graph: WeightedGraph,
    /// Nodes in order of first visit.
    pub visited: Vec<usize>,
    /// True when the step cap ended the walk before `target_nodes` were seen.
    pub capped: bool,
}

/// Random walk with restart from a uniformly chosen active node. Each step
/// returns to the start with probability `restart_prob`, otherwise moves to
/// a neighbor chosen proportionally to edge weight (a node without
/// neighbors restarts). Stops after `target_nodes` distinct nodes or
/// `100 * target_nodes` steps, and returns the induced subgraph.
pub fn random_walk_subgraph<R: Rng + ?Sized>(
    g: &WeightedGraph,
    restart_prob: f64,
    target_nodes: usize,
    rng: &mut R,
) -> Result<WalkSubgraph> {
    if !(0.0..1.0).contains(&restart_prob) {
        return Err(Error::InvalidParameter(format!("restart_prob must lie in [0, 1), got {restart_prob}")));
    }
    let active: Vec<usize> = g.active_nodes().collect();
    if target_nodes > active.len() {
        return Err(Error::InvalidParameter(format!(
            "target_nodes {target_nodes} exceeds the {} active nodes",
            active.len()
        )));
    }
    let n = g.node_count();
    let mut seen = vec![false; n];
    let mut visited = Vec::with_capacity(target_nodes);
    let mut capped = false;
    if target_nodes > 0 {
        let start = active[rng.random_range(0..active.len())];
        seen[start] = true;
        visited.push(start);
        let mut at = start;
        let mut steps = 0usize;
        let cap = 100 * target_nodes;
        while visited.len() < target_nodes {
            if steps == cap {
                capped = true;
                break;
            }
            steps += 1;
            if rng.random::<f64>() < restart_prob || g.degree(at) == 0 {
                at = start;
                continue;
            }
            let mut target = rng.random::<f64>() * g.total_weight(at);
            let mut next = at;
            for (x, w) in g.neighbors(at) {
                next = x;
                if target < w {
                    break;
                }
                target -= w;
            }
            at = next;
            if !seen[at] {
                seen[at] = true;
                visited.push(at);
            }
        }
    }
    Ok(WalkSubgraph { graph: g.induced(&seen), visited, capped })
}

/// Applies a graph augmentor using stream `stream` of `spec.seed`.
pub fn augment_stream(g: &WeightedGraph, spec: &AugmentorSpec, stream: u64) -> Result<WeightedGraph> {
    augment_with_rng(g, spec, &mut stream_rng(spec.seed, stream))
}

pub fn augment(g: &WeightedGraph, spec: &AugmentorSpec) -> Result<WeightedGraph> {
    augment_stream(g, spec, 0)
}

pub fn augment_with_rng(g: &WeightedGraph, spec: &AugmentorSpec, rng: &mut StreamRng) -> Result<WeightedGraph> {
    spec.validate()?;
    match &spec.kind {
        AugmentorKind::EdgeAddition { gamma } => edge_add(g, *gamma, rng),
        AugmentorKind::EdgeDropping { gamma } => edge_drop(g, *gamma, rng),
        AugmentorKind::EdgeDroppingDegree { gamma_e, gamma_tau } => {
            drop_with_probs(g, &adaptive_drop_probs(&degree_scores(g), *gamma_e, *gamma_tau)?, rng)
        }
        AugmentorKind::EdgeDroppingPr { gamma_e, gamma_tau, damping, iters } => {
            let scores = pagerank_scores(g, *damping, *iters, PAGERANK_TOL)?;
            drop_with_probs(g, &adaptive_drop_probs(&scores, *gamma_e, *gamma_tau)?, rng)
        }
        AugmentorKind::EdgeDroppingEvc { gamma_e, gamma_tau, iters } => {
            let scores = evc_scores(g, *iters, EVC_TOL)?;
            drop_with_probs(g, &adaptive_drop_probs(&scores, *gamma_e, *gamma_tau)?, rng)
        }
        AugmentorKind::NodeDropping { gamma } => node_drop(g, *gamma, rng),
        AugmentorKind::RandomWalkSubgraph { restart_prob, target_nodes, gamma } => {
            let active = g.active_count();
            let target = target_nodes.unwrap_or_else(|| active - crate::rlap::elimination_count(*gamma, active));
            Ok(random_walk_subgraph(g, *restart_prob, target, rng)?.graph)
        }
        AugmentorKind::RLap { gamma, o_v, o_n } => {
            let config = RlapConfig { gamma: *gamma, o_v: *o_v, o_n: *o_n, seed: spec.seed };
            Ok(rlap_with_rng(g, &config, rng.clone())?.graph)
        }
        AugmentorKind::PprDiffusion { diffusion } => {
            let s = diffusion.spec(DiffusionKind::Ppr);
            sparsify(&diffuse(g, &s)?, s.eps)
        }
        AugmentorKind::MarkovDiffusion { diffusion } => {
            let s = diffusion.spec(DiffusionKind::Markov);
            sparsify(&diffuse(g, &s)?, s.eps)
        }
        AugmentorKind::FeatureMasking { .. } => {
            Err(Error::Config("FeatureMasking acts on features; use augment_features".into()))
        }
    }
}

/// Applies a feature augmentor; only `FeatureMasking` is supported.
pub fn augment_features(x: &FeatureMatrix, spec: &AugmentorSpec, stream: u64) -> Result<FeatureMatrix> {
    match spec.kind {
        AugmentorKind::FeatureMasking { gamma } => feature_mask(x, gamma, &mut stream_rng(spec.seed, stream)),
        _ => Err(Error::Config(format!("{} does not act on features", spec.label()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{complete, cycle, path, random_connected, star};

    fn rng() -> StreamRng {
        stream_rng(42, 0)
    }

    #[test]
    fn gamma_extremes() {
        let g = random_connected(12, 10, true, &mut rng());
        assert_eq!(edge_drop(&g, 0.0, &mut rng()).unwrap().laplacian(), g.laplacian());
        assert_eq!(edge_drop(&g, 1.0, &mut rng()).unwrap().edge_count(), 0);
        assert_eq!(edge_add(&g, 0.0, &mut rng()).unwrap().laplacian(), g.laplacian());
        assert_eq!(edge_add(&g, 1.0, &mut rng()).unwrap().edge_count(), 66);
        assert_eq!(node_drop(&g, 0.0, &mut rng()).unwrap().laplacian(), g.laplacian());
        let none = node_drop(&g, 1.0, &mut rng()).unwrap();
        assert_eq!((none.edge_count(), none.active_count(), none.node_count()), (0, 0, 12));
    }

    #[test]
    fn edge_drop_survival_rate() {
        let g = complete(4);
        let mut r = rng();
        let trials = 50_000;
        let kept: usize = (0..trials).map(|_| edge_drop(&g, 0.5, &mut r).unwrap().edge_count()).sum();
        let frac = kept as f64 / (trials * 6) as f64;
        assert!((frac - 0.5).abs() < 0.01, "{frac}");
    }

    #[test]
    fn edge_add_rate_and_validity() {
        let g = path(30);
        let mut r = rng();
        let non_edges = (30 * 29 / 2 - 29) as f64;
        let trials = 2000;
        let mut added = 0usize;
        for _ in 0..trials {
            let h = edge_add(&g, 0.1, &mut r).unwrap();
            h.check_invariants().unwrap();
            for (u, v, w) in g.edges() {
                assert_eq!(h.weight(u, v), Some(w));
            }
            added += h.edge_count() - 29;
        }
        let rate = added as f64 / (trials as f64 * non_edges);
        assert!((rate - 0.1).abs() < 0.005, "{rate}");
    }

    #[test]
    fn node_drop_survival_rate() {
        let g = complete(4);
        let mut r = rng();
        let trials = 50_000;
        let kept: usize = (0..trials).map(|_| node_drop(&g, 0.5, &mut r).unwrap().active_count()).sum();
        let frac = kept as f64 / (trials * 4) as f64;
        assert!((frac - 0.5).abs() < 0.01, "{frac}");
    }

    #[test]
    fn adaptive_probs_examples() {
        let e = std::f64::consts::E;
        let p = adaptive_drop_probs(&[e, e * e, e * e * e], 0.3, 0.7).unwrap();
        let want = [0.6, 0.3, 0.0];
        for (a, b) in p.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        let capped = adaptive_drop_probs(&[e, e * e, e * e * e], 0.3, 0.5).unwrap();
        assert!((capped[0] - 0.5).abs() < 1e-12);
        assert_eq!(adaptive_drop_probs(&[2.0, 2.0], 0.3, 0.7).unwrap(), vec![0.3, 0.3]);
        assert!(adaptive_drop_probs(&[0.0, 1.0], 0.3, 0.7).is_err());
    }

    #[test]
    fn centrality_examples() {
        assert_eq!(degree_scores(&star(3)), vec![2.0, 2.0, 2.0]);
        let k2 = complete(2);
        let pr = pagerank(&k2, 0.85, 1000, 1e-12).unwrap();
        assert!((pr[0] - pr[1]).abs() < 1e-12);
        assert!((pr[0] - 1.0 / 0.15).abs() < 1e-9);
        let evc = evc_scores(&complete(3), 1000, 1e-12).unwrap();
        assert!(evc.iter().all(|s| (s - evc[0]).abs() < 1e-8));
        let u = eigenvector_centrality(&cycle(6), 10_000, 1e-12).unwrap();
        assert!(u.iter().all(|x| (x - 1.0 / 6f64.sqrt()).abs() < 1e-9));
    }

    #[test]
    fn evc_matches_dense_eigenvector() {
        let g = random_connected(15, 20, true, &mut rng());
        let u = eigenvector_centrality(&g, 100_000, 1e-13).unwrap();
        let a = {
            let mut a = faer::Mat::<f64>::zeros(15, 15);
            for (i, j, w) in g.edges() {
                a[(i, j)] = w;
                a[(j, i)] = w;
            }
            a
        };
        let eig = a.self_adjoint_eigen(faer::Side::Lower).unwrap();
        let top = eig.U().col(14);
        let sign = if top[0] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..15 {
            assert!((u[i] - sign * top[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn adaptive_probs_are_monotone_and_bounded() {
        let g = random_connected(40, 80, false, &mut rng());
        let s = degree_scores(&g);
        let p = adaptive_drop_probs(&s, 0.4, 0.6).unwrap();
        for a in 0..s.len() {
            assert!(p[a] <= 0.6 && p[a] >= 0.0);
            for b in 0..s.len() {
                if s[a] <= s[b] {
                    assert!(p[a] >= p[b] - 1e-15);
                }
            }
        }
    }

    #[test]
    fn feature_mask_rates() {
        let x = FeatureMatrix::filled(1000, 10, 1.0);
        assert_eq!(feature_mask(&x, 0.0, &mut rng()).unwrap(), x);
        assert!(feature_mask(&x, 1.0, &mut rng()).unwrap().values.iter().all(|v| *v == 0.0));
        let m = feature_mask(&x, 0.3, &mut rng()).unwrap();
        let frac = m.values.iter().sum::<f64>() / 10_000.0;
        assert!((frac - 0.7).abs() < 0.01, "{frac}");
    }

    #[test]
    fn walk_examples() {
        let g = random_connected(10, 5, true, &mut rng());
        let all = random_walk_subgraph(&g, 0.1, 10, &mut rng()).unwrap();
        assert!(!all.capped);
        assert_eq!(all.graph.laplacian(), g.laplacian());
        let one = random_walk_subgraph(&g, 0.1, 1, &mut rng()).unwrap();
        assert_eq!((one.graph.active_count(), one.graph.edge_count()), (1, 0));
        assert!(random_walk_subgraph(&g, 1.0, 3, &mut rng()).is_err());
    }

    #[test]
    fn walk_cap_is_flagged() {
        let g = WeightedGraph::from_unweighted(4, [(0, 1), (2, 3)]).unwrap();
        let w = random_walk_subgraph(&g, 0.2, 3, &mut rng()).unwrap();
        assert!(w.capped);
        assert_eq!(w.visited.len(), 2);
    }

    #[test]
    fn spec_round_trips_through_toml_and_json() {
        let t = "kind = \"EdgeDroppingEVC\"\ngamma_e = 0.4\nseed = 3\n";
        let s = AugmentorSpec::from_toml(t).unwrap();
        assert_eq!(s.label(), "EdgeDroppingEVC");
        assert_eq!(s.seed, 3);
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(AugmentorSpec::from_json(&j).unwrap(), s);
        let r = AugmentorSpec::from_toml("kind = \"rLap\"\ngamma = 0.3\no_v = \"deg\"\n").unwrap();
        assert!(matches!(r.kind, AugmentorKind::RLap { o_v: EliminationScheme::MinDegree, .. }));
        let d = AugmentorSpec::from_toml("kind = \"PPRDiffusion\"\nalpha = 0.15\n").unwrap();
        assert!(matches!(d.kind, AugmentorKind::PprDiffusion { ref diffusion } if diffusion.alpha == 0.15 && diffusion.k == 10));
        assert!(AugmentorSpec::from_toml("kind = \"Nope\"\n").is_err());
        assert!(AugmentorSpec::from_toml("kind = \"EdgeDropping\"\ngamma = 2.0\n").is_err());
    }

    #[test]
    fn every_kind_is_deterministic_and_valid() {
        let g = random_connected(25, 40, true, &mut rng());
        let kinds = [
            "kind = \"EdgeAddition\"\ngamma = 0.1",
            "kind = \"EdgeDropping\"",
            "kind = \"EdgeDroppingDegree\"",
            "kind = \"EdgeDroppingPR\"",
            "kind = \"EdgeDroppingEVC\"",
            "kind = \"NodeDropping\"",
            "kind = \"RandomWalkSubgraph\"",
            "kind = \"rLap\"",
            "kind = \"PPRDiffusion\"",
            "kind = \"MarkovDiffusion\"",
        ];
        for k in kinds {
            let spec = AugmentorSpec::from_toml(&format!("{k}\nseed = 5\n")).unwrap();
            let a = augment(&g, &spec).unwrap();
            let b = augment(&g, &spec).unwrap();
            assert_eq!(a.laplacian(), b.laplacian(), "{k}");
            assert_eq!(a.node_count(), 25);
            a.check_invariants().unwrap();
        }
    }

    #[test]
    fn feature_spec_dispatch() {
        let x = FeatureMatrix::filled(3, 2, 1.0);
        let spec = AugmentorSpec::new(AugmentorKind::FeatureMasking { gamma: 0.0 }, 1);
        assert_eq!(augment_features(&x, &spec, 0).unwrap(), x);
        assert!(augment(&path(3), &spec).is_err());
        assert!(augment_features(&x, &AugmentorSpec::new(AugmentorKind::EdgeDropping { gamma: 0.1 }, 1), 0).is_err());
    }
}
