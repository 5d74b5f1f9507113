//! Mutable weighted undirected graph.
//!
//! Each node owns a doubly linked list of half-edges living in a shared arena;
//! every half-edge knows its twin in the opposite direction. A pair index maps
//! an unordered node pair to its half-edge so parallel insertions merge in
//! O(1), and a whole star can be unlinked in O(deg).
//!
//! Eliminated nodes keep their index: the dimension of every matrix derived
//! from the graph stays `n`, with zero rows for inactive nodes.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::laplacian::SparseLaplacian;

const NIL: usize = usize::MAX;

/// `weight * (e_i - e_j)(e_i - e_j)^T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementaryLaplacian {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

#[derive(Debug, Clone)]
struct HalfEdge {
    target: usize,
    weight: f64,
    twin: usize,
    prev: usize,
    next: usize,
}

#[derive(Debug, Clone)]
pub struct WeightedGraph {
    heads: Vec<usize>,
    degree: Vec<usize>,
    total_weight: Vec<f64>,
    active: Vec<bool>,
    slots: Vec<HalfEdge>,
    free: Vec<usize>,
    pair_index: HashMap<(usize, usize), usize>,
    edge_count: usize,
}

fn pair(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

impl WeightedGraph {
    /// `n` isolated, active nodes.
    pub fn new(n: usize) -> Self {
        Self {
            heads: vec![NIL; n],
            degree: vec![0; n],
            total_weight: vec![0.0; n],
            active: vec![true; n],
            slots: Vec::new(),
            free: Vec::new(),
            pair_index: HashMap::new(),
            edge_count: 0,
        }
    }

    /// Builds a graph from weighted edges, merging parallel edges by summing
    /// their weights.
    pub fn from_edge_list(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut g = Self::new(n);
        for (u, v, w) in edges {
            g.add_edge(u, v, w)?;
        }
        Ok(g)
    }

    /// Unit-weight variant of [`Self::from_edge_list`].
    pub fn from_unweighted(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::from_edge_list(n, edges.into_iter().map(|(u, v)| (u, v, 1.0)))
    }

    pub fn node_count(&self) -> usize {
        self.heads.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn degree(&self, v: usize) -> usize {
        self.degree[v]
    }

    /// Cached `w(v)`, the sum of incident weights.
    pub fn total_weight(&self, v: usize) -> f64 {
        self.total_weight[v]
    }

    pub fn is_active(&self, v: usize) -> bool {
        self.active[v]
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    pub fn active_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.node_count()).filter(|&v| self.active[v])
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        self.pair_index.get(&pair(u, v)).map(|&s| self.slots[s].weight)
    }

    /// Neighbors of `v` with edge weights, in adjacency-list order.
    pub fn neighbors(&self, v: usize) -> Neighbors<'_> {
        Neighbors { graph: self, cursor: self.heads[v] }
    }

    /// All edges as `(u, v, w)` with `u < v`, sorted by `(u, v)`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(self.edge_count);
        for u in 0..self.node_count() {
            let start = out.len();
            for (v, w) in self.neighbors(u) {
                if u < v {
                    out.push((u, v, w));
                }
            }
            out[start..].sort_unstable_by_key(|e| e.1);
        }
        out
    }

    fn check_node(&self, v: usize) -> Result<()> {
        if v >= self.node_count() {
            return Err(Error::Index { node: v, n: self.node_count() });
        }
        Ok(())
    }

    fn check_active(&self, v: usize) -> Result<()> {
        self.check_node(v)?;
        if !self.active[v] {
            return Err(Error::NodeState { node: v, state: "eliminated" });
        }
        Ok(())
    }

    fn alloc(&mut self, slot: HalfEdge) -> usize {
        if let Some(idx) = self.free.pop() {
            self.slots[idx] = slot;
            idx
        } else {
            self.slots.push(slot);
            self.slots.len() - 1
        }
    }

    fn link_front(&mut self, owner: usize, s: usize) {
        let head = self.heads[owner];
        self.slots[s].prev = NIL;
        self.slots[s].next = head;
        if head != NIL {
            self.slots[head].prev = s;
        }
        self.heads[owner] = s;
    }

    fn unlink(&mut self, owner: usize, s: usize) {
        let HalfEdge { prev, next, .. } = self.slots[s];
        if prev == NIL {
            self.heads[owner] = next;
        } else {
            self.slots[prev].next = next;
        }
        if next != NIL {
            self.slots[next].prev = prev;
        }
    }

    fn shrink_total(&mut self, v: usize, w: f64) {
        self.degree[v] -= 1;
        if self.degree[v] == 0 {
            self.total_weight[v] = 0.0;
        } else {
            self.total_weight[v] -= w;
        }
    }

    /// Adds `w` to edge `(u, v)`, creating it if absent.
    pub fn add_edge(&mut self, u: usize, v: usize, w: f64) -> Result<()> {
        self.check_node(u)?;
        self.check_node(v)?;
        if u == v {
            return Err(Error::SelfLoop { node: u });
        }
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::Weight { u, v, weight: w });
        }
        self.check_active(u)?;
        self.check_active(v)?;
        let key = pair(u, v);
        if let Some(&s) = self.pair_index.get(&key) {
            let t = self.slots[s].twin;
            self.slots[s].weight += w;
            self.slots[t].weight += w;
        } else {
            let s = self.alloc(HalfEdge { target: key.1, weight: w, twin: NIL, prev: NIL, next: NIL });
            let t = self.alloc(HalfEdge { target: key.0, weight: w, twin: s, prev: NIL, next: NIL });
            self.slots[s].twin = t;
            self.link_front(key.0, s);
            self.link_front(key.1, t);
            self.pair_index.insert(key, s);
            self.degree[u] += 1;
            self.degree[v] += 1;
            self.edge_count += 1;
        }
        self.total_weight[u] += w;
        self.total_weight[v] += w;
        Ok(())
    }

    /// Removes edge `(u, v)` and returns its weight.
    pub fn remove_edge(&mut self, u: usize, v: usize) -> Option<f64> {
        let key = pair(u, v);
        let s = self.pair_index.remove(&key)?;
        let t = self.slots[s].twin;
        let w = self.slots[s].weight;
        self.unlink(key.0, s);
        self.unlink(key.1, t);
        self.free.push(s);
        self.free.push(t);
        self.shrink_total(key.0, w);
        self.shrink_total(key.1, w);
        self.edge_count -= 1;
        Some(w)
    }

    /// Detaches every edge incident to `v`, returning `(neighbor, weight)` in
    /// adjacency order. `v` stays active.
    pub fn remove_star(&mut self, v: usize) -> Result<Vec<(usize, f64)>> {
        self.check_node(v)?;
        let mut removed = Vec::with_capacity(self.degree[v]);
        let mut s = self.heads[v];
        while s != NIL {
            let HalfEdge { target: x, weight: w, twin: t, next, .. } = self.slots[s];
            self.unlink(x, t);
            self.shrink_total(x, w);
            self.pair_index.remove(&pair(v, x));
            self.free.push(s);
            self.free.push(t);
            removed.push((x, w));
            s = next;
        }
        self.heads[v] = NIL;
        self.edge_count -= removed.len();
        self.degree[v] = 0;
        self.total_weight[v] = 0.0;
        Ok(removed)
    }

    /// Marks an isolated node inactive.
    pub fn deactivate(&mut self, v: usize) -> Result<()> {
        self.check_node(v)?;
        if self.degree[v] != 0 {
            return Err(Error::NodeState { node: v, state: "still connected" });
        }
        self.active[v] = false;
        Ok(())
    }

    /// Removes the star of `v` and deactivates it.
    pub fn drop_node(&mut self, v: usize) -> Result<Vec<(usize, f64)>> {
        let star = self.remove_star(v)?;
        self.deactivate(v)?;
        Ok(star)
    }

    /// Weighted Laplacian: `-w(i,j)` off the diagonal, `w(i)` on it. The
    /// diagonal is recomputed from adjacency (summed in neighbor-id order, so
    /// the result does not depend on adjacency layout) and rows sum to zero.
    pub fn laplacian(&self) -> SparseLaplacian {
        let mut t = Vec::with_capacity(2 * self.edge_count + self.node_count());
        for v in 0..self.node_count() {
            let start = t.len();
            t.extend(self.neighbors(v).map(|(x, w)| (v, x, -w)));
            t[start..].sort_unstable_by_key(|e| e.1);
            let diag: f64 = t[start..].iter().map(|e| -e.2).sum();
            t.push((v, v, diag));
        }
        SparseLaplacian::from_triplets(self.node_count(), t).expect("graph indices are in range")
    }

    /// Laplacian of all edges incident to `v`.
    pub fn star(&self, v: usize) -> Result<SparseLaplacian> {
        self.check_active(v)?;
        SparseLaplacian::from_edges(self.node_count(), self.neighbors(v).map(|(x, w)| (v, x, w)))
    }

    /// Edges of the exact clique induced by eliminating `v`:
    /// weight `w(v,j) w(v,k) / w(v)` for every unordered neighbor pair.
    pub fn clique_edges(&self, v: usize) -> Result<Vec<ElementaryLaplacian>> {
        self.check_active(v)?;
        let nbrs: Vec<(usize, f64)> = self.neighbors(v).collect();
        let wv: f64 = nbrs.iter().map(|n| n.1).sum();
        let mut out = Vec::with_capacity(nbrs.len() * nbrs.len().saturating_sub(1) / 2);
        for (a, &(j, wj)) in nbrs.iter().enumerate() {
            for &(k, wk) in &nbrs[a + 1..] {
                out.push(ElementaryLaplacian { i: j, j: k, weight: wj * wk / wv });
            }
        }
        Ok(out)
    }

    /// Laplacian of [`Self::clique_edges`]; zero when `deg(v) < 2`.
    pub fn clique_exact(&self, v: usize) -> Result<SparseLaplacian> {
        let edges = self.clique_edges(v)?;
        SparseLaplacian::from_edges(self.node_count(), edges.into_iter().map(|e| (e.i, e.j, e.weight)))
    }

    /// Keeps only the nodes with `keep[v] == true`; the rest are dropped
    /// (made inactive), preserving the dimension.
    pub fn induced(&self, keep: &[bool]) -> Self {
        assert_eq!(keep.len(), self.node_count());
        let mut g = Self::new(self.node_count());
        for (v, &k) in keep.iter().enumerate() {
            if !k || !self.active[v] {
                g.active[v] = false;
            }
        }
        for (u, v, w) in self.edges() {
            if keep[u] && keep[v] {
                g.add_edge(u, v, w).expect("edge copied from a valid graph");
            }
        }
        g
    }

    /// Validates every structural invariant; used by tests and the CLI.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let n = self.node_count();
        let mut seen_edges = 0usize;
        for v in 0..n {
            if !self.active[v] && self.heads[v] != NIL {
                return Err(format!("inactive node {v} still has edges"));
            }
            let mut deg = 0usize;
            let mut sum = 0.0;
            let mut targets = std::collections::HashSet::new();
            let mut prev = NIL;
            let mut s = self.heads[v];
            while s != NIL {
                let slot = &self.slots[s];
                if slot.prev != prev {
                    return Err(format!("broken back-link in adjacency of {v}"));
                }
                let x = slot.target;
                if x == v {
                    return Err(format!("self-loop on {v}"));
                }
                if !targets.insert(x) {
                    return Err(format!("duplicate edge ({v},{x})"));
                }
                if !(slot.weight > 0.0 && slot.weight.is_finite()) {
                    return Err(format!("edge ({v},{x}) has weight {}", slot.weight));
                }
                let twin = &self.slots[slot.twin];
                if twin.target != v || twin.weight != slot.weight {
                    return Err(format!("edge ({v},{x}) is not mirrored"));
                }
                deg += 1;
                sum += slot.weight;
                prev = s;
                s = slot.next;
            }
            if deg != self.degree[v] {
                return Err(format!("degree cache of {v} is {} but {deg} edges exist", self.degree[v]));
            }
            let cached = self.total_weight[v];
            if (cached - sum).abs() > 1e-9 * sum.abs().max(cached.abs()).max(f64::MIN_POSITIVE) {
                return Err(format!("total weight cache of {v} is {cached} but edges sum to {sum}"));
            }
            seen_edges += deg;
        }
        if seen_edges != 2 * self.edge_count || self.pair_index.len() != self.edge_count {
            return Err(format!("edge count {} inconsistent with adjacency", self.edge_count));
        }
        Ok(())
    }
}

pub struct Neighbors<'a> {
    graph: &'a WeightedGraph,
    cursor: usize,
}

impl Iterator for Neighbors<'_> {
    type Item = (usize, f64);

    fn next(&mut self) -> Option<Self::Item> {
        if self.cursor == NIL {
            return None;
        }
        let slot = &self.graph.slots[self.cursor];
        self.cursor = slot.next;
        Some((slot.target, slot.weight))
    }
}
