//! Small deterministic graph families and seeded random graphs.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::WeightedGraph;

pub fn path(n: usize) -> WeightedGraph {
    WeightedGraph::from_unweighted(n, (1..n).map(|i| (i - 1, i))).expect("valid path")
}

pub fn cycle(n: usize) -> WeightedGraph {
    assert!(n >= 3, "a cycle needs at least 3 nodes");
    WeightedGraph::from_unweighted(n, (0..n).map(|i| (i, (i + 1) % n))).expect("valid cycle")
}

pub fn complete(n: usize) -> WeightedGraph {
    WeightedGraph::from_unweighted(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)))).expect("valid clique")
}

/// `K_{1,leaves}` with the center at node 0.
pub fn star(leaves: usize) -> WeightedGraph {
    WeightedGraph::from_unweighted(leaves + 1, (1..=leaves).map(|j| (0, j))).expect("valid star")
}

/// Connected graph: a random spanning tree plus `extra` random edges. With
/// `weighted`, weights are drawn from `[0.1, 5)`; otherwise all are 1.
pub fn random_connected<R: Rng>(n: usize, extra: usize, weighted: bool, rng: &mut R) -> WeightedGraph {
    let mut g = WeightedGraph::new(n);
    if n < 2 {
        return g;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let weight = |rng: &mut R| if weighted { rng.random_range(0.1..5.0) } else { 1.0 };
    for k in 1..n {
        let parent = order[rng.random_range(0..k)];
        let w = weight(rng);
        g.add_edge(order[k], parent, w).expect("tree edge");
    }
    let max_edges = n * (n - 1) / 2;
    let mut added = 0;
    while added < extra && g.edge_count() < max_edges {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v && g.weight(u, v).is_none() {
            let w = weight(rng);
            g.add_edge(u, v, w).expect("extra edge");
            added += 1;
        }
    }
    g
}

/// Erdős–Rényi `G(n, m)`: `m` distinct unit-weight edges chosen uniformly.
pub fn gnm<R: Rng>(n: usize, m: usize, rng: &mut R) -> WeightedGraph {
    let max_edges = n * n.saturating_sub(1) / 2;
    assert!(m <= max_edges, "G({n}, {m}) has too many edges");
    let mut g = WeightedGraph::new(n);
    while g.edge_count() < m {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v && g.weight(u, v).is_none() {
            g.add_edge(u, v, 1.0).expect("gnm edge");
        }
    }
    g
}
