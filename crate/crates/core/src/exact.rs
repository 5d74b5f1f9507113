//! Exact Schur complements.
//!
//! Two independent routes: sequential star/clique elimination on the sparse
//! graph, and the dense block formula `L_KK - L_KE L_EE^{-1} L_EK`. They are
//! the oracles for everything randomized in this crate.
//!
//! Elimination also works for SDDM matrices `L + diag(s)` with a nonnegative
//! surplus `s`. Eliminating `v` with pivot `d = w(v) + s_v` adds clique edges
//! `w(v,j) w(v,k) / d` and raises each neighbor's surplus by `w(v,j) s_v / d`;
//! with `s = 0` this is exactly `R - STAR(R, v) + CLIQUE(R, v)`.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::laplacian::SparseLaplacian;

/// Default dimension cap for the dense block route.
pub const DENSE_BLOCK_CAP: usize = 512;

/// Symmetric diagonally dominant matrix `L(graph) + diag(surplus)`.
#[derive(Debug, Clone)]
pub struct SddmMatrix {
    pub graph: WeightedGraph,
    pub surplus: Vec<f64>,
}

impl SddmMatrix {
    pub fn from_graph(graph: WeightedGraph) -> Self {
        let n = graph.node_count();
        Self { graph, surplus: vec![0.0; n] }
    }

    /// `D - beta * A` for `beta` in `(0, 1]`: edge weights scaled by `beta`,
    /// surplus `(1 - beta) w(v)`.
    pub fn shifted(g: &WeightedGraph, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidParameter(format!("beta must lie in (0, 1], got {beta}")));
        }
        let n = g.node_count();
        let mut graph = WeightedGraph::new(n);
        for v in 0..n {
            if !g.is_active(v) {
                graph.deactivate(v)?;
            }
        }
        let mut surplus = vec![0.0; n];
        for (u, v, w) in g.edges() {
            graph.add_edge(u, v, beta * w)?;
            surplus[u] += (1.0 - beta) * w;
            surplus[v] += (1.0 - beta) * w;
        }
        Ok(Self { graph, surplus })
    }

    pub fn n(&self) -> usize {
        self.graph.node_count()
    }

    pub fn to_sparse(&self) -> SparseLaplacian {
        let extra: Vec<_> = self
            .surplus
            .iter()
            .enumerate()
            .filter(|(_, s)| **s != 0.0)
            .map(|(v, &s)| (v, v, s))
            .collect();
        self.graph.laplacian().add(&SparseLaplacian::from_triplets(self.n(), extra).expect("in range"))
    }

    pub fn to_dense(&self) -> Mat<f64> {
        self.to_sparse().to_dense()
    }

    /// One exact Gaussian elimination step on `v`.
    pub fn eliminate(&mut self, v: usize) -> Result<()> {
        if v >= self.n() {
            return Err(Error::Index { node: v, n: self.n() });
        }
        if !self.graph.is_active(v) {
            return Err(Error::NodeState { node: v, state: "eliminated" });
        }
        let star = self.graph.drop_node(v)?;
        let sv = std::mem::take(&mut self.surplus[v]);
        let pivot: f64 = star.iter().map(|e| e.1).sum::<f64>() + sv;
        if pivot == 0.0 {
            return Ok(());
        }
        for (a, &(j, wj)) in star.iter().enumerate() {
            self.surplus[j] += wj * sv / pivot;
            for &(k, wk) in &star[a + 1..] {
                self.graph.add_edge(j, k, wj * wk / pivot)?;
            }
        }
        Ok(())
    }
}

fn validate_order(g: &WeightedGraph, eliminate: &[usize]) -> Result<()> {
    let mut seen = vec![false; g.node_count()];
    for &v in eliminate {
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

/// Eliminates `eliminate` in order from an SDDM matrix.
pub fn sddm_schur_by_elimination(m: &SddmMatrix, eliminate: &[usize]) -> Result<SddmMatrix> {
    validate_order(&m.graph, eliminate)?;
    let mut out = m.clone();
    for &v in eliminate {
        out.eliminate(v)?;
    }
    Ok(out)
}

/// Exact Schur complement after eliminating `eliminate` in order. The result
/// stays `n x n`; eliminated rows and columns are zero.
pub fn schur_by_elimination(g: &WeightedGraph, eliminate: &[usize]) -> Result<SparseLaplacian> {
    Ok(sddm_schur_by_elimination(&SddmMatrix::from_graph(g.clone()), eliminate)?.graph.laplacian())
}

/// Dense block formula over `keep` (result rows/cols follow `keep`'s order).
pub fn schur_by_block(l: &SparseLaplacian, keep: &[usize]) -> Result<Mat<f64>> {
    schur_by_block_with_cap(l, keep, DENSE_BLOCK_CAP)
}

pub fn schur_by_block_with_cap(l: &SparseLaplacian, keep: &[usize], cap: usize) -> Result<Mat<f64>> {
    let n = l.n();
    if n > cap {
        return Err(Error::Size { n, cap });
    }
    if keep.is_empty() {
        return Err(Error::InvalidParameter("keep set must be nonempty".into()));
    }
    let mut kept = vec![false; n];
    for &k in keep {
        if k >= n {
            return Err(Error::Index { node: k, n });
        }
        if kept[k] {
            return Err(Error::DuplicateNode { node: k });
        }
        kept[k] = true;
    }

    let mut row_nnz = vec![false; n];
    for &(i, _, v) in l.triplets() {
        if v != 0.0 {
            row_nnz[i] = true;
        }
    }
    // Isolated eliminated nodes contribute nothing and would make the block singular.
    let elim: Vec<usize> = (0..n).filter(|&v| !kept[v] && row_nnz[v]).collect();
    check_block_nonsingular(l, &kept, &elim)?;

    let dense = l.to_dense();
    let block = |rows: &[usize], cols: &[usize]| Mat::from_fn(rows.len(), cols.len(), |i, j| dense[(rows[i], cols[j])]);
    let l_kk = block(keep, keep);
    if elim.is_empty() {
        return Ok(l_kk);
    }
    let l_ee = block(&elim, &elim);
    let l_ek = block(&elim, keep);
    let chol = l_ee.llt(Side::Lower).map_err(|_| Error::SingularBlock)?;
    let x = chol.solve(&l_ek);
    Ok(&l_kk - l_ek.transpose() * &x)
}

/// The eliminated block of a diagonally dominant matrix is invertible iff
/// every connected component of the eliminated nodes either touches a kept
/// node or carries positive diagonal surplus.
fn check_block_nonsingular(l: &SparseLaplacian, kept: &[bool], elim: &[usize]) -> Result<()> {
    let n = l.n();
    let mut in_elim = vec![false; n];
    for &v in elim {
        in_elim[v] = true;
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut anchored = vec![false; n];
    let mut row_sum = vec![0.0; n];
    let mut scale = vec![0.0f64; n];
    for &(i, j, v) in l.triplets() {
        row_sum[i] += v;
        scale[i] = scale[i].max(v.abs());
        if i != j && v != 0.0 && in_elim[i] {
            if kept[j] {
                anchored[i] = true;
            } else if in_elim[j] {
                adj[i].push(j);
            }
        }
    }
    for &v in elim {
        if row_sum[v] > 1e-12 * scale[v] {
            anchored[v] = true;
        }
    }
    let mut comp_seen = vec![false; n];
    for &start in elim {
        if comp_seen[start] {
            continue;
        }
        let mut stack = vec![start];
        comp_seen[start] = true;
        let mut ok = false;
        while let Some(v) = stack.pop() {
            ok |= anchored[v];
            for &x in &adj[v] {
                if !comp_seen[x] {
                    comp_seen[x] = true;
                    stack.push(x);
                }
            }
        }
        if !ok {
            return Err(Error::SingularBlock);
        }
    }
    Ok(())
}

/// Places a dense matrix over `keep` back into an `n x n` sparse matrix.
pub fn embed(n: usize, keep: &[usize], m: &Mat<f64>) -> SparseLaplacian {
    let mut t = Vec::new();
    for (a, &i) in keep.iter().enumerate() {
        for (b, &j) in keep.iter().enumerate() {
            if m[(a, b)] != 0.0 {
                t.push((i, j, m[(a, b)]));
            }
        }
    }
    SparseLaplacian::from_triplets(n, t).expect("keep indices in range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{cycle, path, random_connected};
    use crate::rng::stream_rng;
    use rand::seq::SliceRandom;

    fn dense_max_diff(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
        let mut m = 0.0f64;
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                m = m.max((a[(i, j)] - b[(i, j)]).abs());
            }
        }
        m
    }

    #[test]
    fn eliminating_path_middle() {
        let r = schur_by_elimination(&path(3), &[1]).unwrap();
        assert_eq!(r.get(0, 2), -0.5);
        assert_eq!(r.get(1, 1), 0.0);
        assert_eq!(r.edge_count(), 1);
    }

    #[test]
    fn empty_elimination_is_identity() {
        let g = cycle(5);
        assert_eq!(schur_by_elimination(&g, &[]).unwrap(), g.laplacian());
    }

    #[test]
    fn repeated_node_is_rejected() {
        assert!(matches!(schur_by_elimination(&path(4), &[1, 1]), Err(Error::DuplicateNode { node: 1 })));
    }

    #[test]
    fn cycle_elimination_matches_block() {
        let g = cycle(4);
        let by_elim = schur_by_elimination(&g, &[0, 2]).unwrap();
        let keep = [1, 3];
        let by_block = embed(4, &keep, &schur_by_block(&g.laplacian(), &keep).unwrap());
        assert!(by_elim.max_abs_diff(&by_block) <= 1e-10);
        // two parallel 2-paths between 1 and 3 collapse to weight 1
        assert!((by_elim.get(1, 3) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_by_two_block_formula() {
        let m = SparseLaplacian::from_triplets(2, vec![(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0)]).unwrap();
        let s = schur_by_block(&m, &[1]).unwrap();
        assert!((s[(0, 0)] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn keeping_everything_returns_l() {
        let g = random_connected(6, 4, true, &mut stream_rng(1, 0));
        let keep: Vec<usize> = (0..6).collect();
        let s = schur_by_block(&g.laplacian(), &keep).unwrap();
        assert_eq!(dense_max_diff(&s, &g.laplacian().to_dense()), 0.0);
    }

    #[test]
    fn eliminating_a_whole_component_is_singular() {
        let g = WeightedGraph::from_unweighted(4, [(0, 1), (2, 3)]).unwrap();
        assert!(matches!(schur_by_block(&g.laplacian(), &[0, 1]), Err(Error::SingularBlock)));
        // isolated eliminated nodes are dropped, not singular
        let h = WeightedGraph::from_unweighted(3, [(0, 1)]).unwrap();
        assert!(schur_by_block(&h.laplacian(), &[0, 1]).is_ok());
    }

    #[test]
    fn block_route_respects_the_cap() {
        let g = path(10);
        assert!(matches!(schur_by_block_with_cap(&g.laplacian(), &[0], 5), Err(Error::Size { n: 10, cap: 5 })));
    }

    #[test]
    fn random_graphs_agree_across_routes() {
        let mut rng = stream_rng(11, 0);
        for _ in 0..20 {
            let g = random_connected(8, 6, true, &mut rng);
            let mut nodes: Vec<usize> = (0..8).collect();
            nodes.shuffle(&mut rng);
            let (elim, keep) = nodes.split_at(4);
            let a = schur_by_elimination(&g, elim).unwrap();
            let b = embed(8, keep, &schur_by_block(&g.laplacian(), keep).unwrap());
            assert!(a.max_abs_diff(&b) <= 1e-10);
            a.check_structure().unwrap();
            a.check_psd().unwrap();
        }
    }

    #[test]
    fn sddm_elimination_matches_block() {
        let mut rng = stream_rng(12, 0);
        for beta in [0.5, 0.9, 0.99] {
            let g = random_connected(7, 5, true, &mut rng);
            let m = SddmMatrix::shifted(&g, beta).unwrap();
            let keep = [1, 4, 6];
            let elim = [0, 2, 3, 5];
            let r = sddm_schur_by_elimination(&m, &elim).unwrap();
            let by_block = embed(7, &keep, &schur_by_block(&m.to_sparse(), &keep).unwrap());
            assert!(r.to_sparse().max_abs_diff(&by_block) <= 1e-10);
            assert!(r.surplus.iter().all(|s| *s >= 0.0));
        }
    }

    /// Kept-node random walks: the trace chain of `D^-1 A` on the kept set,
    /// renormalized to exclude returns to the start, equals the Schur
    /// complement's transition matrix.
    #[test]
    fn schur_complement_preserves_walk_transitions() {
        let mut rng = stream_rng(13, 0);
        for n in 4..=8 {
            let g = random_connected(n, n, true, &mut rng);
            let mut nodes: Vec<usize> = (0..n).collect();
            nodes.shuffle(&mut rng);
            let (elim, keep) = nodes.split_at(n / 2);
            let r = schur_by_elimination(&g, elim).unwrap();

            let a = {
                let mut a = Mat::<f64>::zeros(n, n);
                for (u, v, w) in g.edges() {
                    a[(u, v)] = w;
                    a[(v, u)] = w;
                }
                a
            };
            let p = Mat::from_fn(n, n, |i, j| a[(i, j)] / g.total_weight(i));
            let sub = |rows: &[usize], cols: &[usize]| Mat::from_fn(rows.len(), cols.len(), |i, j| p[(rows[i], cols[j])]);
            let i_minus_pee = Mat::from_fn(elim.len(), elim.len(), |i, j| {
                (if i == j { 1.0 } else { 0.0 }) - p[(elim[i], elim[j])]
            });
            let absorb = i_minus_pee.partial_piv_lu().solve(sub(elim, keep));
            let q = sub(keep, keep) + sub(keep, elim) * absorb;

            for (a_idx, &i) in keep.iter().enumerate() {
                let wi: f64 = keep.iter().filter(|&&j| j != i).map(|&j| -r.get(i, j)).sum();
                for (b_idx, &j) in keep.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    let trace = q[(a_idx, b_idx)] / (1.0 - q[(a_idx, a_idx)]);
                    let sc = -r.get(i, j) / wi;
                    assert!((trace - sc).abs() <= 1e-8, "n={n} ({i},{j}): {trace} vs {sc}");
                }
            }
        }
    }
}
