//! Graph diffusions `S = sum_i rho_i T^i` and their randomized composition.
//!
//! All operators are dense `n x n` matrices over the full index set. The
//! random-walk transition `T_rw = A D^-1` is column-stochastic, so every
//! diffusion built from it has unit column sums. The symmetric flavor
//! `D^-1/2 A D^-1/2` keeps `S` symmetric.
//!
//! [`rlap_then_diffuse`] replaces "diffuse, then restrict to `keep`" by
//! "randomly eliminate the complement of `keep` from `D - beta A`, then
//! invert the small reduced matrix":
//! `c * D_keep * (D - beta A)/keep ^-1` where `/keep` is the Schur
//! complement onto `keep`. With `c = alpha`, `beta = 1 - alpha` this is the
//! keep block of the PPR operator.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::exact::{sddm_schur_by_elimination, SddmMatrix};
use crate::graph::WeightedGraph;
use crate::rlap::{Elimination, RlapConfig};
use crate::rng::StreamRng;

/// Tolerance for the iterative series and the heat-kernel truncation.
pub const SERIES_TOL: f64 = 1e-10;
pub const DEFAULT_DENSE_CAP: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffusionKind {
    Ppr,
    Heat,
    Markov,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transition {
    #[serde(rename = "rw")]
    RowStochasticRW,
    #[serde(rename = "sym")]
    Symmetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiffusionSpec {
    pub kind: DiffusionKind,
    pub alpha: f64,
    pub t: f64,
    #[serde(rename = "K", alias = "k")]
    pub k: usize,
    /// Heat truncation; `None` picks the smallest count with tail below
    /// [`SERIES_TOL`].
    pub heat_terms: Option<usize>,
    pub eps: f64,
    pub transition: Transition,
    pub dense_cap: usize,
    /// Allow the series route above `dense_cap` instead of failing.
    pub iterative: bool,
    /// Scale of the reduced pipeline; `None` means `alpha`.
    pub c: Option<f64>,
}

impl Default for DiffusionSpec {
    fn default() -> Self {
        Self {
            kind: DiffusionKind::Ppr,
            alpha: 0.2,
            t: 5.0,
            k: 10,
            heat_terms: None,
            eps: 1e-4,
            transition: Transition::RowStochasticRW,
            dense_cap: DEFAULT_DENSE_CAP,
            iterative: false,
            c: None,
        }
    }
}

impl DiffusionSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) && self.kind != DiffusionKind::Heat {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.kind == DiffusionKind::Heat && !(self.t > 0.0) {
            return Err(Error::InvalidParameter(format!("t must be positive, got {}", self.t)));
        }
        if self.k == 0 {
            return Err(Error::InvalidParameter("K must be at least 1".into()));
        }
        if !(self.eps >= 0.0) {
            return Err(Error::InvalidParameter(format!("eps must be nonnegative, got {}", self.eps)));
        }
        Ok(())
    }
}

/// Nonzeros `(row, col, value)` of the transition matrix.
pub fn transition_entries(g: &WeightedGraph, flavor: Transition) -> Result<Vec<(usize, usize, f64)>> {
    for v in g.active_nodes() {
        if g.degree(v) == 0 {
            return Err(Error::SingularDegree { node: v });
        }
    }
    let mut out = Vec::with_capacity(2 * g.edge_count());
    for j in 0..g.node_count() {
        for (i, w) in g.neighbors(j) {
            let value = match flavor {
                Transition::RowStochasticRW => w / g.total_weight(j),
                Transition::Symmetric => w / (g.total_weight(i) * g.total_weight(j)).sqrt(),
            };
            out.push((i, j, value));
        }
    }
    Ok(out)
}

pub fn transition_matrix(g: &WeightedGraph, flavor: Transition) -> Result<Mat<f64>> {
    let n = g.node_count();
    let mut t = Mat::zeros(n, n);
    for (i, j, v) in transition_entries(g, flavor)? {
        t[(i, j)] = v;
    }
    Ok(t)
}

/// `T * X` with `T` given by its nonzeros.
fn sparse_mul(entries: &[(usize, usize, f64)], x: &Mat<f64>) -> Mat<f64> {
    let mut out = Mat::zeros(x.nrows(), x.ncols());
    for c in 0..x.ncols() {
        let src = x.col(c);
        let mut dst = out.col_mut(c);
        for &(i, j, v) in entries {
            dst[i] += v * src[j];
        }
    }
    out
}

fn check_cap(n: usize, spec: &DiffusionSpec) -> Result<()> {
    if n > spec.dense_cap && !spec.iterative {
        return Err(Error::Size { n, cap: spec.dense_cap });
    }
    Ok(())
}

/// `alpha (I - (1 - alpha) T)^-1`, densely up to the cap, otherwise by
/// summing `alpha sum_k ((1 - alpha) T)^k` until the geometric tail is
/// below [`SERIES_TOL`].
pub fn ppr_diffuse(g: &WeightedGraph, spec: &DiffusionSpec) -> Result<Mat<f64>> {
    let alpha = spec.alpha;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let n = g.node_count();
    check_cap(n, spec)?;
    let entries = transition_entries(g, spec.transition)?;
    if n <= spec.dense_cap {
        let mut m = Mat::<f64>::identity(n, n);
        for &(i, j, v) in &entries {
            m[(i, j)] -= (1.0 - alpha) * v;
        }
        let inv = m.partial_piv_lu().inverse();
        return Ok(inv * faer::Scale(alpha));
    }
    let beta = 1.0 - alpha;
    let mut term = Mat::<f64>::identity(n, n) * faer::Scale(alpha);
    let mut sum = term.clone();
    let mut tail = beta;
    while tail > SERIES_TOL {
        term = sparse_mul(&entries, &term) * faer::Scale(beta);
        sum += &term;
        tail *= beta;
    }
    Ok(sum)
}

/// Number of Poisson(t) terms needed for the dropped tail to fall below `tol`.
pub fn heat_terms_for(t: f64, tol: f64) -> usize {
    let mut p = (-t).exp();
    let mut cdf = p;
    let mut i = 0usize;
    while 1.0 - cdf > tol && i < 10_000 {
        i += 1;
        p *= t / i as f64;
        cdf += p;
    }
    i + 1
}

/// `e^-t sum_{i < terms} t^i T^i / i!`.
pub fn heat_diffuse(g: &WeightedGraph, t: f64, terms: Option<usize>, spec: &DiffusionSpec) -> Result<Mat<f64>> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
    }
    let n = g.node_count();
    check_cap(n, spec)?;
    let entries = transition_entries(g, spec.transition)?;
    let terms = terms.unwrap_or_else(|| heat_terms_for(t, SERIES_TOL)).max(1);
    let mut term = Mat::<f64>::identity(n, n) * faer::Scale((-t).exp());
    let mut sum = term.clone();
    for i in 1..terms {
        term = sparse_mul(&entries, &term) * faer::Scale(t / i as f64);
        sum += &term;
    }
    Ok(sum)
}

/// `alpha I + (1 - alpha) / K * sum_{i=1..K} T^i`.
pub fn markov_diffuse(g: &WeightedGraph, alpha: f64, k: usize, spec: &DiffusionSpec) -> Result<Mat<f64>> {
    check_probability("alpha", alpha)?;
    if k == 0 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }
    let n = g.node_count();
    check_cap(n, spec)?;
    let entries = transition_entries(g, spec.transition)?;
    let mut power = Mat::<f64>::identity(n, n);
    let mut acc = Mat::<f64>::zeros(n, n);
    for _ in 0..k {
        power = sparse_mul(&entries, &power);
        acc += &power;
    }
    Ok(acc * faer::Scale((1.0 - alpha) / k as f64) + Mat::<f64>::identity(n, n) * faer::Scale(alpha))
}

/// Dispatches on `spec.kind`.
pub fn diffuse(g: &WeightedGraph, spec: &DiffusionSpec) -> Result<Mat<f64>> {
    spec.validate()?;
    match spec.kind {
        DiffusionKind::Ppr => ppr_diffuse(g, spec),
        DiffusionKind::Heat => heat_diffuse(g, spec.t, spec.heat_terms, spec),
        DiffusionKind::Markov => markov_diffuse(g, spec.alpha, spec.k, spec),
    }
}

/// Zeroes entries below `eps` in magnitude, symmetrizes, drops the diagonal
/// and nonpositive entries, and returns the rest as a weighted graph.
pub fn sparsify(s: &Mat<f64>, eps: f64) -> Result<WeightedGraph> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be nonnegative, got {eps}")));
    }
    let n = s.nrows();
    let keep = |v: f64| if v.abs() < eps { 0.0 } else { v };
    let mut g = WeightedGraph::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let w = 0.5 * (keep(s[(i, j)]) + keep(s[(j, i)]));
            if w > 0.0 {
                g.add_edge(i, j, w)?;
            }
        }
    }
    Ok(g)
}

/// Which reduced matrix is inverted by [`rlap_then_diffuse`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PipelineMode {
    /// Randomly eliminate the SDDM matrix `D - beta A`; the reduced block is
    /// `D~_R - beta A~_R` including the surplus carried to kept nodes.
    #[default]
    Sddm,
    /// Randomly eliminate the Laplacian `L`, then form `D~_R - beta A~_R`
    /// from the reduced Laplacian. Cheaper, but biased for `beta < 1`.
    Laplacian,
}

/// Nodes to keep in [`rlap_then_diffuse`].
#[derive(Debug, Clone, PartialEq)]
pub enum KeepSet {
    /// Keep exactly these nodes; the rest are eliminated in `o_v` order.
    Nodes(Vec<usize>),
    /// Eliminate `floor(gamma n)` nodes chosen by `o_v`.
    FromConfig,
}

/// Dense operator over `keep` (ascending), rows and columns in that order.
#[derive(Debug, Clone)]
pub struct KeepMatrix {
    pub keep: Vec<usize>,
    pub matrix: Mat<f64>,
}

fn resolve_keep(n: usize, keep: &KeepSet, config: &RlapConfig) -> Result<Option<Vec<bool>>> {
    match keep {
        KeepSet::FromConfig => Ok(None),
        KeepSet::Nodes(nodes) => {
            if nodes.is_empty() {
                return Err(Error::InvalidParameter("keep set must be nonempty".into()));
            }
            let mut mask = vec![false; n];
            for &v in nodes {
                if v >= n {
                    return Err(Error::Index { node: v, n });
                }
                if mask[v] {
                    return Err(Error::DuplicateNode { node: v });
                }
                mask[v] = true;
            }
            let want = n - nodes.len();
            if config.gamma > 0.0 && crate::rlap::elimination_count(config.gamma, n) != want {
                return Err(Error::Config(format!(
                    "gamma = {} eliminates {} nodes but the keep set leaves {want} to eliminate",
                    config.gamma,
                    crate::rlap::elimination_count(config.gamma, n)
                )));
            }
            Ok(Some(mask))
        }
    }
}

/// `c * D_keep * M^-1` where `M` is the reduced SDDM block over `keep`.
fn scaled_inverse(g: &WeightedGraph, reduced: &SddmMatrix, keep: &[usize], c: f64, cap: usize) -> Result<Mat<f64>> {
    if keep.len() > cap {
        return Err(Error::Size { n: keep.len(), cap });
    }
    let dense = reduced.to_dense();
    let m = Mat::from_fn(keep.len(), keep.len(), |a, b| dense[(keep[a], keep[b])]);
    for (a, &v) in keep.iter().enumerate() {
        if m[(a, a)] <= 0.0 {
            return Err(Error::SingularDegree { node: v });
        }
    }
    let rhs = Mat::from_fn(keep.len(), keep.len(), |a, b| if a == b { c * g.total_weight(keep[a]) } else { 0.0 });
    // (D_keep M^-1)^T = M^-1 D_keep since M is symmetric
    let x = m.partial_piv_lu().solve(&rhs);
    Ok(x.transpose().to_owned())
}

/// Randomized "eliminate, then diffuse" pipeline for PPR.
pub fn rlap_then_diffuse(
    g: &WeightedGraph,
    keep: &KeepSet,
    spec: &DiffusionSpec,
    config: &RlapConfig,
    mode: PipelineMode,
    rng: StreamRng,
) -> Result<KeepMatrix> {
    if spec.kind != DiffusionKind::Ppr {
        return Err(Error::Config("the randomized pipeline is defined for PPR only".into()));
    }
    spec.validate()?;
    config.validate()?;
    let n = g.node_count();
    let mask = resolve_keep(n, keep, config)?;
    let beta = 1.0 - spec.alpha;
    let c = spec.c.unwrap_or(spec.alpha);

    let start = match mode {
        PipelineMode::Sddm => SddmMatrix::shifted(g, beta)?,
        PipelineMode::Laplacian => SddmMatrix::from_graph(g.clone()),
    };
    let mut run = match &mask {
        Some(keep_mask) => {
            let candidates: Vec<bool> = keep_mask.iter().map(|k| !k).collect();
            Elimination::restricted(start.graph, candidates, config.o_v, config.o_n, rng)
        }
        None => Elimination::new(start.graph, config.o_v, config.o_n, rng),
    }
    .with_surplus(start.surplus);
    match &mask {
        Some(_) => run.run_to_end()?,
        None => run.run(crate::rlap::elimination_count(config.gamma, n))?,
    }
    let mut reduced = run.into_sddm();
    let keep_nodes: Vec<usize> = match &mask {
        Some(m) => (0..n).filter(|&v| m[v]).collect(),
        None => reduced.graph.active_nodes().collect(),
    };
    if keep_nodes.is_empty() {
        return Err(Error::Config("every node was eliminated".into()));
    }
    if mode == PipelineMode::Laplacian {
        reduced = SddmMatrix::shifted(&reduced.graph, beta)?;
    }
    let matrix = scaled_inverse(g, &reduced, &keep_nodes, c, spec.dense_cap)?;
    Ok(KeepMatrix { keep: keep_nodes, matrix })
}

/// Deterministic counterpart of [`rlap_then_diffuse`]: exact Schur
/// complement of `D - beta A` onto `keep`, then `c * D_keep * SC^-1`.
pub fn exact_reduced_diffusion(g: &WeightedGraph, keep: &[usize], alpha: f64, c: f64) -> Result<Mat<f64>> {
    let n = g.node_count();
    let mut kept = vec![false; n];
    for &v in keep {
        if v >= n {
            return Err(Error::Index { node: v, n });
        }
        kept[v] = true;
    }
    let elim: Vec<usize> = (0..n).filter(|&v| !kept[v] && g.is_active(v)).collect();
    let m = SddmMatrix::shifted(g, 1.0 - alpha)?;
    let reduced = sddm_schur_by_elimination(&m, &elim)?;
    scaled_inverse(g, &reduced, keep, c, usize::MAX)
}

/// Keep block of `c * D (D - beta A)^-1`, computed from the full inverse.
pub fn full_then_restrict(g: &WeightedGraph, keep: &[usize], alpha: f64, c: f64) -> Result<Mat<f64>> {
    let m = SddmMatrix::shifted(g, 1.0 - alpha)?.to_dense();
    let inv = m.partial_piv_lu().inverse();
    Ok(Mat::from_fn(keep.len(), keep.len(), |a, b| c * g.total_weight(keep[a]) * inv[(keep[a], keep[b])]))
}
