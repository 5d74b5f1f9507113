//! Randomized Schur complements.
//!
//! Eliminating a node exactly replaces its star with a clique, which costs
//! `O(deg^2)` edges. Here the clique is replaced by `deg - 1` sampled edges
//! whose Laplacian is an unbiased estimate of the clique's: neighbors are put
//! in a fixed order `x_0..x_{d-1}` with weights `w_0..w_{d-1}` (snapshotted
//! before sampling) and `W = sum w`. For each `l < d - 1` one partner
//! `x_q`, `q > l`, is drawn with probability `w_q / sum_{j>l} w_j` and the
//! edge `(x_l, x_q)` gets weight `w_l * sum_{j>l} w_j / W`.
//!
//! The variant is named `rLap-<o_v>-<o_n>`: `o_v` picks the next node
//! (`rand` uniform over active nodes, `deg` minimum current degree) and
//! `o_n` orders its neighbors (`asc`/`desc` by weight, `rand` shuffled).

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::exact::SddmMatrix;
use crate::graph::{ElementaryLaplacian, WeightedGraph};
use crate::laplacian::SparseLaplacian;
use crate::rng::{stream_rng, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EliminationScheme {
    #[serde(rename = "rand", alias = "random")]
    Random,
    #[serde(rename = "deg", alias = "min_degree")]
    MinDegree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NeighborOrdering {
    #[serde(rename = "asc")]
    Asc,
    #[serde(rename = "desc")]
    Desc,
    #[serde(rename = "rand", alias = "random")]
    Random,
}

impl EliminationScheme {
    pub fn label(self) -> &'static str {
        match self {
            Self::Random => "rand",
            Self::MinDegree => "deg",
        }
    }
}

impl NeighborOrdering {
    pub fn label(self) -> &'static str {
        match self {
            Self::Asc => "asc",
            Self::Desc => "desc",
            Self::Random => "rand",
        }
    }
}

/// An `(o_v, o_n)` pair, displayed as `rLap-<o_v>-<o_n>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Variant {
    pub o_v: EliminationScheme,
    pub o_n: NeighborOrdering,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant { o_v: EliminationScheme::Random, o_n: NeighborOrdering::Asc },
        Variant { o_v: EliminationScheme::Random, o_n: NeighborOrdering::Desc },
        Variant { o_v: EliminationScheme::Random, o_n: NeighborOrdering::Random },
        Variant { o_v: EliminationScheme::MinDegree, o_n: NeighborOrdering::Asc },
        Variant { o_v: EliminationScheme::MinDegree, o_n: NeighborOrdering::Desc },
        Variant { o_v: EliminationScheme::MinDegree, o_n: NeighborOrdering::Random },
    ];
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rLap-{}-{}", self.o_v.label(), self.o_n.label())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown rLap variant {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RlapConfig {
    pub gamma: f64,
    #[serde(default = "default_o_v")]
    pub o_v: EliminationScheme,
    #[serde(default = "default_o_n")]
    pub o_n: NeighborOrdering,
    #[serde(default)]
    pub seed: u64,
}

fn default_o_v() -> EliminationScheme {
    EliminationScheme::Random
}

fn default_o_n() -> NeighborOrdering {
    NeighborOrdering::Asc
}

impl RlapConfig {
    pub fn new(gamma: f64, variant: Variant, seed: u64) -> Self {
        Self { gamma, o_v: variant.o_v, o_n: variant.o_n, seed }
    }

    pub fn variant(&self) -> Variant {
        Variant { o_v: self.o_v, o_n: self.o_n }
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("gamma", self.gamma)
    }
}

/// `floor(gamma * n)`, nudged so that e.g. `gamma = 1/3, n = 3` gives 1 even
/// when the product rounds just below an integer.
pub fn elimination_count(gamma: f64, n: usize) -> usize {
    (((gamma * n as f64) + 1e-9).floor() as usize).min(n)
}

/// Output of one randomized elimination run.
#[derive(Debug, Clone)]
pub struct AugmentedView {
    pub laplacian: SparseLaplacian,
    pub surviving: Vec<usize>,
    pub eliminated: Vec<usize>,
    pub edge_count: usize,
    pub graph: WeightedGraph,
}

impl AugmentedView {
    fn from_state(graph: WeightedGraph, eliminated: Vec<usize>) -> Self {
        let laplacian = graph.laplacian();
        let surviving = graph.active_nodes().collect();
        Self { edge_count: graph.edge_count(), laplacian, surviving, eliminated, graph }
    }
}

/// Neighbors of `v` in `o_n` order. Asc/Desc break ties by smaller id; the
/// random order shuffles the id-sorted list so it does not depend on
/// adjacency layout.
pub fn ordered_neighbors<R: Rng + ?Sized>(
    state: &WeightedGraph,
    v: usize,
    o_n: NeighborOrdering,
    rng: &mut R,
) -> Vec<(usize, f64)> {
    let mut nbrs: Vec<(usize, f64)> = state.neighbors(v).collect();
    match o_n {
        NeighborOrdering::Asc => nbrs.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))),
        NeighborOrdering::Desc => nbrs.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))),
        NeighborOrdering::Random => {
            nbrs.sort_by_key(|n| n.0);
            nbrs.shuffle(rng);
        }
    }
    nbrs
}

/// Samples the `d - 1` clique edges for an already ordered neighbor list.
pub fn sample_ordered<R: Rng + ?Sized>(nbrs: &[(usize, f64)], rng: &mut R) -> Vec<ElementaryLaplacian> {
    let d = nbrs.len();
    if d < 2 {
        return Vec::new();
    }
    let mut prefix = Vec::with_capacity(d);
    let mut acc = 0.0;
    for &(_, w) in nbrs {
        acc += w;
        prefix.push(acc);
    }
    let mut suffix = vec![0.0; d + 1];
    for l in (0..d).rev() {
        suffix[l] = suffix[l + 1] + nbrs[l].1;
    }
    let total = suffix[0];

    let mut out = Vec::with_capacity(d - 1);
    for l in 0..d - 1 {
        let remaining = suffix[l + 1];
        let q = if l + 2 == d {
            d - 1
        } else {
            let target = prefix[l] + rng.random::<f64>() * remaining;
            let offset = prefix[l + 1..d].partition_point(|&p| p <= target);
            (l + 1 + offset).min(d - 1)
        };
        out.push(ElementaryLaplacian { i: nbrs[l].0, j: nbrs[q].0, weight: nbrs[l].1 * remaining / total });
    }
    out
}

/// Randomized clique for `v` in the current `state`.
pub fn sample_clique<R: Rng + ?Sized>(
    state: &WeightedGraph,
    v: usize,
    o_n: NeighborOrdering,
    rng: &mut R,
) -> Result<Vec<ElementaryLaplacian>> {
    if v >= state.node_count() {
        return Err(Error::Index { node: v, n: state.node_count() });
    }
    if !state.is_active(v) {
        return Err(Error::NodeState { node: v, state: "eliminated" });
    }
    Ok(sample_ordered(&ordered_neighbors(state, v, o_n, rng), rng))
}

/// Removes `v`'s star, deactivates it and merges `clique` into the graph.
pub fn eliminate_node(state: &mut WeightedGraph, v: usize, clique: &[ElementaryLaplacian]) -> Result<()> {
    state.drop_node(v)?;
    for e in clique {
        state.add_edge(e.i, e.j, e.weight)?;
    }
    Ok(())
}

enum Selector {
    Random(Vec<usize>),
    MinDegree(BinaryHeap<Reverse<(usize, usize)>>),
    Fixed(VecDeque<usize>),
}

/// Step-by-step randomized elimination; lets callers observe intermediate
/// states on a single trajectory. With a surplus vector it eliminates the
/// SDDM matrix `L + diag(surplus)` instead of a plain Laplacian.
pub struct Elimination {
    state: WeightedGraph,
    surplus: Option<Vec<f64>>,
    o_n: NeighborOrdering,
    selector: Selector,
    candidates: Option<Vec<bool>>,
    rng: StreamRng,
    eliminated: Vec<usize>,
}

impl Elimination {
    pub fn new(graph: WeightedGraph, o_v: EliminationScheme, o_n: NeighborOrdering, rng: StreamRng) -> Self {
        Self::build(graph, None, o_v, o_n, None, rng)
    }

    /// Like [`Self::new`], but only nodes with `candidates[v]` are ever picked.
    pub fn restricted(
        graph: WeightedGraph,
        candidates: Vec<bool>,
        o_v: EliminationScheme,
        o_n: NeighborOrdering,
        rng: StreamRng,
    ) -> Self {
        assert_eq!(candidates.len(), graph.node_count());
        Self::build(graph, None, o_v, o_n, Some(candidates), rng)
    }

    /// Eliminates exactly the nodes of `order`, in that order.
    pub fn with_order(graph: WeightedGraph, order: &[usize], o_n: NeighborOrdering, rng: StreamRng) -> Result<Self> {
        validate_order(&graph, order)?;
        Ok(Self {
            state: graph,
            surplus: None,
            o_n,
            selector: Selector::Fixed(order.iter().copied().collect()),
            candidates: None,
            rng,
            eliminated: Vec::new(),
        })
    }

    fn build(
        graph: WeightedGraph,
        surplus: Option<Vec<f64>>,
        o_v: EliminationScheme,
        o_n: NeighborOrdering,
        candidates: Option<Vec<bool>>,
        rng: StreamRng,
    ) -> Self {
        let allowed = |v: usize| candidates.as_ref().is_none_or(|c| c[v]);
        let selector = match o_v {
            EliminationScheme::Random => Selector::Random(graph.active_nodes().filter(|&v| allowed(v)).collect()),
            EliminationScheme::MinDegree => Selector::MinDegree(
                graph.active_nodes().filter(|&v| allowed(v)).map(|v| Reverse((graph.degree(v), v))).collect(),
            ),
        };
        Self { state: graph, surplus, o_n, selector, candidates, rng, eliminated: Vec::new() }
    }

    /// Switches to SDDM mode: eliminating `v` uses pivot `w(v) + s_v`.
    pub fn with_surplus(mut self, surplus: Vec<f64>) -> Self {
        assert_eq!(surplus.len(), self.state.node_count());
        self.surplus = Some(surplus);
        self
    }

    pub fn state(&self) -> &WeightedGraph {
        &self.state
    }

    pub fn eliminated(&self) -> &[usize] {
        &self.eliminated
    }

    fn next_node(&mut self) -> Option<usize> {
        match &mut self.selector {
            Selector::Random(pool) => {
                if pool.is_empty() {
                    return None;
                }
                let i = self.rng.random_range(0..pool.len());
                Some(pool.swap_remove(i))
            }
            Selector::MinDegree(heap) => {
                while let Some(Reverse((deg, v))) = heap.pop() {
                    if self.state.is_active(v) && self.state.degree(v) == deg {
                        return Some(v);
                    }
                }
                None
            }
            Selector::Fixed(queue) => queue.pop_front(),
        }
    }

    /// Eliminates one more node; `None` once the scheme is exhausted.
    pub fn step(&mut self) -> Result<Option<usize>> {
        let Some(v) = self.next_node() else { return Ok(None) };
        if !self.state.is_active(v) {
            return Err(Error::NodeState { node: v, state: "eliminated" });
        }
        let nbrs = ordered_neighbors(&self.state, v, self.o_n, &mut self.rng);
        let clique = sample_ordered(&nbrs, &mut self.rng);
        self.state.drop_node(v)?;
        let scale = match &mut self.surplus {
            None => 1.0,
            Some(surplus) => {
                let wv: f64 = nbrs.iter().map(|n| n.1).sum();
                let sv = std::mem::take(&mut surplus[v]);
                let pivot = wv + sv;
                if pivot > 0.0 {
                    for &(j, wj) in &nbrs {
                        surplus[j] += wj * sv / pivot;
                    }
                }
                if pivot > 0.0 { wv / pivot } else { 0.0 }
            }
        };
        for e in &clique {
            self.state.add_edge(e.i, e.j, e.weight * scale)?;
        }
        if let Selector::MinDegree(heap) = &mut self.selector {
            for &(x, _) in &nbrs {
                if self.candidates.as_ref().is_none_or(|c| c[x]) {
                    heap.push(Reverse((self.state.degree(x), x)));
                }
            }
        }
        self.eliminated.push(v);
        Ok(Some(v))
    }

    pub fn run(&mut self, steps: usize) -> Result<()> {
        for _ in 0..steps {
            if self.step()?.is_none() {
                break;
            }
        }
        Ok(())
    }

    /// Runs until the scheme has no candidates left.
    pub fn run_to_end(&mut self) -> Result<()> {
        while self.step()?.is_some() {}
        Ok(())
    }

    pub fn into_view(self) -> AugmentedView {
        AugmentedView::from_state(self.state, self.eliminated)
    }

    /// The eliminated matrix in SDDM form (zero surplus in Laplacian mode).
    pub fn into_sddm(self) -> SddmMatrix {
        let n = self.state.node_count();
        SddmMatrix { graph: self.state, surplus: self.surplus.unwrap_or_else(|| vec![0.0; n]) }
    }
}

fn validate_order(g: &WeightedGraph, order: &[usize]) -> Result<()> {
    let mut seen = vec![false; g.node_count()];
    for &v in order {
        if v >= g.node_count() {
            return Err(Error::Index { node: v, n: g.node_count() });
        }
        if seen[v] {
            return Err(Error::DuplicateNode { node: v });
        }
        if !g.is_active(v) {
            return Err(Error::NodeState { node: v, state: "eliminated" });
        }
        seen[v] = true;
    }
    Ok(())
}

/// Runs the randomized elimination on a copy of `g` using stream 0 of
/// `config.seed`.
pub fn rlap(g: &WeightedGraph, config: &RlapConfig) -> Result<AugmentedView> {
    rlap_with_rng(g, config, stream_rng(config.seed, 0))
}

pub fn rlap_with_rng(g: &WeightedGraph, config: &RlapConfig, rng: StreamRng) -> Result<AugmentedView> {
    config.validate()?;
    let k = elimination_count(config.gamma, g.node_count());
    let mut run = Elimination::new(g.clone(), config.o_v, config.o_n, rng);
    run.run(k)?;
    Ok(run.into_view())
}

/// Randomized elimination conditioned on a fixed order.
pub fn rlap_with_order(g: &WeightedGraph, order: &[usize], o_n: NeighborOrdering, rng: StreamRng) -> Result<AugmentedView> {
    let mut run = Elimination::with_order(g.clone(), order, o_n, rng)?;
    run.run(order.len())?;
    Ok(run.into_view())
}

/// Elimination order that `o_v` would produce on `g`. For `deg` it is
/// deterministic; for `rand` it depends on the stream.
pub fn elimination_order(g: &WeightedGraph, config: &RlapConfig) -> Result<Vec<usize>> {
    Ok(rlap(g, config)?.eliminated)
}

/// Randomized elimination of an SDDM matrix `L + diag(s)` in a fixed
/// order: the graph clique is sampled as above and rescaled by
/// `w(v) / (w(v) + s_v)`; the surplus update is exact.
pub fn rlap_sddm_with_order(m: &SddmMatrix, order: &[usize], o_n: NeighborOrdering, rng: StreamRng) -> Result<SddmMatrix> {
    let mut run = Elimination::with_order(m.graph.clone(), order, o_n, rng)?.with_surplus(m.surplus.clone());
    run.run_to_end()?;
    Ok(run.into_sddm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::schur_by_elimination;
    use crate::generators::{cycle, path, random_connected, star};
    use proptest::prelude::*;

    #[test]
    fn labels_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.to_string().parse::<Variant>().unwrap(), v);
        }
        assert_eq!(Variant::ALL[0].to_string(), "rLap-rand-asc");
        assert!("rLap-foo-asc".parse::<Variant>().is_err());
    }

    #[test]
    fn config_from_toml() {
        let c: RlapConfig = toml::from_str("gamma = 0.5\no_v = \"deg\"\no_n = \"desc\"\nseed = 9\n").unwrap();
        assert_eq!(c.variant().to_string(), "rLap-deg-desc");
        assert_eq!(c.seed, 9);
    }

    #[test]
    fn elimination_count_floors() {
        assert_eq!(elimination_count(1.0 / 3.0, 3), 1);
        assert_eq!(elimination_count(0.5, 7), 3);
        assert_eq!(elimination_count(1.0, 7), 7);
        assert_eq!(elimination_count(0.0, 7), 0);
    }

    #[test]
    fn two_neighbors_is_exact() {
        let g = WeightedGraph::from_edge_list(3, [(0, 1, 2.0), (1, 2, 3.0)]).unwrap();
        let e = sample_clique(&g, 1, NeighborOrdering::Random, &mut stream_rng(0, 0)).unwrap();
        assert_eq!(e.len(), 1);
        assert!((e[0].weight - 1.2).abs() < 1e-15);
    }

    #[test]
    fn worked_three_neighbor_example() {
        // ordered weights (1, 2, 3): step 0 emits 1 * 5/6 to x1 or x2, step 1 emits 2 * 3/6 to x2
        let nbrs = [(10, 1.0), (11, 2.0), (12, 3.0)];
        let mut rng = stream_rng(5, 0);
        let mut to_x1 = 0usize;
        let trials = 20_000;
        for _ in 0..trials {
            let e = sample_ordered(&nbrs, &mut rng);
            assert_eq!(e.len(), 2);
            assert_eq!(e[0].i, 10);
            assert!((e[0].weight - 5.0 / 6.0).abs() < 1e-15);
            assert_eq!((e[1].i, e[1].j), (11, 12));
            assert!((e[1].weight - 1.0).abs() < 1e-15);
            if e[0].j == 11 {
                to_x1 += 1;
            }
        }
        let p = to_x1 as f64 / trials as f64;
        let se = (0.4f64 * 0.6 / trials as f64).sqrt();
        assert!((p - 0.4).abs() < 4.0 * se, "P(x1 | x0) = {p}");
    }

    #[test]
    fn star_center_monte_carlo_matches_clique() {
        let g = star(3);
        let mut rng = stream_rng(6, 0);
        let trials = 100_000;
        let mut sum = [[0.0f64; 4]; 4];
        let mut sq = [[0.0f64; 4]; 4];
        for _ in 0..trials {
            let mut m = [[0.0f64; 4]; 4];
            for e in sample_clique(&g, 0, NeighborOrdering::Asc, &mut rng).unwrap() {
                m[e.i][e.j] += e.weight;
                m[e.j][e.i] += e.weight;
            }
            for i in 1..4 {
                for j in 1..4 {
                    sum[i][j] += m[i][j];
                    sq[i][j] += m[i][j] * m[i][j];
                }
            }
        }
        for i in 1..4 {
            for j in (i + 1)..4 {
                let mean = sum[i][j] / trials as f64;
                let var = sq[i][j] / trials as f64 - mean * mean;
                let se = (var / trials as f64).sqrt();
                assert!((mean - 1.0 / 3.0).abs() <= 3.0 * se, "({i},{j}) mean {mean} se {se}");
            }
        }
    }

    #[test]
    fn eliminate_node_examples() {
        let mut g = path(3);
        let c = sample_clique(&g, 1, NeighborOrdering::Asc, &mut stream_rng(0, 0)).unwrap();
        eliminate_node(&mut g, 1, &c).unwrap();
        assert_eq!(g.weight(0, 2), Some(0.5));
        assert_eq!(g.active_nodes().collect::<Vec<_>>(), vec![0, 2]);

        let mut iso = WeightedGraph::from_unweighted(3, [(0, 1)]).unwrap();
        eliminate_node(&mut iso, 2, &[]).unwrap();
        assert_eq!(iso.edge_count(), 1);
        assert!(!iso.is_active(2));

        let mut s = star(3);
        let c = sample_clique(&s, 0, NeighborOrdering::Random, &mut stream_rng(1, 0)).unwrap();
        eliminate_node(&mut s, 0, &c).unwrap();
        assert_eq!(s.edge_count(), 2);
    }

    #[test]
    fn gamma_extremes() {
        let g = random_connected(9, 6, true, &mut stream_rng(2, 0));
        let id = rlap(&g, &RlapConfig::new(0.0, Variant::ALL[0], 1)).unwrap();
        assert_eq!(id.laplacian, g.laplacian());
        for v in Variant::ALL {
            let all = rlap(&g, &RlapConfig::new(1.0, v, 1)).unwrap();
            assert_eq!(all.laplacian.max_abs(), 0.0);
            assert!(all.surviving.is_empty());
            assert_eq!(all.eliminated.len(), 9);
        }
    }

    #[test]
    fn invalid_gamma_is_rejected() {
        assert!(rlap(&path(3), &RlapConfig::new(1.5, Variant::ALL[0], 1)).is_err());
    }

    #[test]
    fn input_is_not_mutated_and_seed_is_deterministic() {
        let g = random_connected(20, 30, true, &mut stream_rng(3, 0));
        let before = g.laplacian();
        for v in Variant::ALL {
            let c = RlapConfig::new(0.5, v, 77);
            let a = rlap(&g, &c).unwrap();
            let b = rlap(&g, &c).unwrap();
            assert_eq!(a.laplacian, b.laplacian);
            assert_eq!(a.eliminated, b.eliminated);
        }
        assert_eq!(g.laplacian(), before);
    }

    #[test]
    fn paths_and_cycles_are_exact() {
        for g in [path(12), cycle(9)] {
            // eliminating every other node keeps eliminated degrees at most 2
            let order: Vec<usize> = (0..g.node_count()).step_by(2).collect();
            let view = rlap_with_order(&g, &order, NeighborOrdering::Random, stream_rng(4, 0)).unwrap();
            let exact = schur_by_elimination(&g, &order).unwrap();
            assert!(view.laplacian.max_abs_diff(&exact) <= 1e-12);
        }
    }

    #[test]
    fn sddm_rescaling_is_exact_for_two_neighbors() {
        let g = path(5);
        let m = SddmMatrix::shifted(&g, 0.9).unwrap();
        let order = [1, 3];
        let a = rlap_sddm_with_order(&m, &order, NeighborOrdering::Asc, stream_rng(1, 0)).unwrap();
        let b = crate::exact::sddm_schur_by_elimination(&m, &order).unwrap();
        assert!(a.to_sparse().max_abs_diff(&b.to_sparse()) <= 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn min_degree_picks_a_minimum(seed in any::<u64>(), n in 3usize..25, extra in 0usize..40) {
            let g = random_connected(n, extra, true, &mut stream_rng(seed, 1));
            let mut run = Elimination::new(g, EliminationScheme::MinDegree, NeighborOrdering::Random, stream_rng(seed, 2));
            loop {
                let before = run.state().clone();
                let Some(v) = run.step().unwrap() else { break };
                let dv = before.degree(v);
                for u in before.active_nodes() {
                    prop_assert!(dv < before.degree(u) || (dv == before.degree(u) && v <= u));
                }
            }
        }

        #[test]
        fn edge_count_never_grows(seed in any::<u64>(), n in 2usize..30, extra in 0usize..60, vi in 0usize..6) {
            let g = random_connected(n, extra, true, &mut stream_rng(seed, 1));
            let v = Variant::ALL[vi];
            let mut run = Elimination::new(g, v.o_v, v.o_n, stream_rng(seed, 2));
            let mut last = run.state().edge_count();
            while run.step().unwrap().is_some() {
                let now = run.state().edge_count();
                prop_assert!(now <= last);
                last = now;
            }
            prop_assert_eq!(last, 0);
        }

        #[test]
        fn output_is_a_laplacian(seed in any::<u64>(), n in 2usize..24, extra in 0usize..50, gamma in 0.0f64..=1.0, vi in 0usize..6) {
            let g = random_connected(n, extra, seed % 2 == 0, &mut stream_rng(seed, 1));
            let view = rlap(&g, &RlapConfig::new(gamma, Variant::ALL[vi], seed)).unwrap();
            prop_assert!(view.laplacian.check_structure().is_ok());
            prop_assert!(view.laplacian.check_psd().is_ok());
            prop_assert!(view.graph.check_invariants().is_ok());
            prop_assert_eq!(view.edge_count, view.laplacian.edge_count());
            prop_assert_eq!(view.eliminated.len(), elimination_count(gamma, n));
            for &v in &view.eliminated {
                prop_assert_eq!(view.laplacian.get(v, v), 0.0);
            }
        }
    }
}
