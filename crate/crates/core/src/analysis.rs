//! Verification and trend instrumentation.
//!
//! - [`sigma_max`]: largest singular value of a sparse symmetric matrix.
//! - [`trend_scan`]: `sigma_max` and edge count along one elimination
//!   trajectory per variant.
//! - [`monte_carlo_unbiasedness`]: sample mean of randomized eliminations
//!   against the exact Schur complement, in units of standard error.
//! - [`martingale_deviation`]: `sigma_max(L_i - L_0)` where
//!   `L_i = R_i + sum_{k<=i} s_k s_k^T` and `s_k = R_{k-1} e_v / sqrt((R_{k-1})_vv)`.
//! - [`tail_bound`]: `2N min_theta exp(-eps theta + g(theta) eta^2)` with
//!   `g(theta) = 2 / (B_R min|V|) * (exp(B_R B_C theta^2 / (2 (1 - B_U theta / 3))) - 1)`.

use std::fmt::Write as _;

use faer::{Mat, Side};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::schur_by_elimination;
use crate::graph::WeightedGraph;
use crate::laplacian::SparseLaplacian;
use crate::rlap::{elimination_count, rlap_with_order, Elimination, NeighborOrdering, RlapConfig, Variant};
use crate::rng::{stream_rng, StreamRng};

pub const SIGMA_TOL: f64 = 1e-10;
pub const SIGMA_MAX_ITERS: usize = 200_000;

/// Deviations this small relative to the entry scale count as exact; a
/// deterministic entry has zero sample variance, and its mean only differs
/// from the oracle by summation rounding.
pub const EXACT_FLOOR: f64 = 1e-9;

/// Largest corrector exponent the default theta grid reaches.
const MAX_EXPONENT: f64 = 600.0;

/// Largest singular value by power iteration on `M^2`, which converges for
/// indefinite symmetric `M` too. Stops when the residual of `M^2 x = l x`
/// is below `tol * l`.
pub fn sigma_max(m: &SparseLaplacian, tol: f64, max_iters: usize) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    let n = m.n();
    if n == 0 || m.max_abs() == 0.0 {
        return Ok(0.0);
    }
    let mut rng = stream_rng(0x5EED, 0);
    let mut x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    normalize(&mut x);
    let mut residual = f64::INFINITY;
    for _ in 0..max_iters {
        let y = m.mul_vec(&m.mul_vec(&x));
        let lambda: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        if lambda <= 0.0 {
            // x fell into the null space; restart from y's direction
            x = y;
            if norm(&x) == 0.0 {
                return Ok(0.0);
            }
            normalize(&mut x);
            continue;
        }
        residual = x.iter().zip(&y).map(|(a, b)| (b - lambda * a).powi(2)).sum::<f64>().sqrt();
        if residual <= tol * lambda {
            return Ok(lambda.sqrt());
        }
        x = y;
        normalize(&mut x);
    }
    Err(Error::Convergence { iterations: max_iters, residual })
}

/// Dense reference: largest absolute eigenvalue of a symmetric matrix.
pub fn sigma_max_dense(m: &Mat<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let eig = m.self_adjoint_eigenvalues(Side::Lower).expect("symmetric eigensolver converges");
    eig.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn normalize(x: &mut [f64]) {
    let s = norm(x);
    for v in x.iter_mut() {
        *v /= s;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendRecord {
    pub variant: String,
    pub gamma: f64,
    pub sigma_max: f64,
    pub edge_count: usize,
}

/// One trajectory per variant (stream = variant position), with checkpoints
/// at `floor(gamma n)` eliminations for every gamma. Records come out per
/// variant in ascending gamma order.
pub fn trend_scan(g: &WeightedGraph, variants: &[Variant], gammas: &[f64], seed: u64) -> Result<Vec<TrendRecord>> {
    for &gamma in gammas {
        crate::error::check_probability("gamma", gamma)?;
    }
    let mut sorted = gammas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = g.node_count();
    let mut out = Vec::with_capacity(variants.len() * sorted.len());
    for (idx, v) in variants.iter().enumerate() {
        let mut run = Elimination::new(g.clone(), v.o_v, v.o_n, stream_rng(seed, idx as u64));
        for &gamma in &sorted {
            let target = elimination_count(gamma, n);
            run.run(target - run.eliminated().len())?;
            let l = run.state().laplacian();
            out.push(TrendRecord {
                variant: v.to_string(),
                gamma,
                sigma_max: sigma_max(&l, SIGMA_TOL, SIGMA_MAX_ITERS)?,
                edge_count: run.state().edge_count(),
            });
        }
    }
    Ok(out)
}

pub fn trend_csv(records: &[TrendRecord]) -> String {
    let mut s = String::from("variant,gamma,sigma_max,edge_count\n");
    for r in records {
        writeln!(s, "{},{},{},{}", r.variant, r.gamma, r.sigma_max, r.edge_count).unwrap();
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntryReport {
    pub i: usize,
    pub j: usize,
    pub mean: f64,
    pub exact: f64,
    pub stderr: f64,
    pub stderr_units: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnbiasednessReport {
    pub trials: usize,
    pub max_abs_dev: f64,
    pub max_dev_in_stderr: f64,
    /// Upper triangle including the diagonal.
    pub entries: Vec<EntryReport>,
}

impl UnbiasednessReport {
    pub fn within(&self, units: f64) -> bool {
        self.max_dev_in_stderr <= units
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("entry_i,entry_j,mean,exact,stderr_units\n");
        for e in &self.entries {
            writeln!(s, "{},{},{},{},{}", e.i, e.j, e.mean, e.exact, e.stderr_units).unwrap();
        }
        s
    }
}

const TRIAL_BLOCK: usize = 256;

/// Randomized eliminations along the fixed `order`, trial `t` on stream `t`
/// of `seed`. Trials run in parallel in fixed-size blocks whose sums are
/// combined in block order, so the report does not depend on thread count.
///
/// A single sampled elimination is an unbiased clique estimate, but a later
/// pivot divides by a degree that earlier samples perturbed, so the mean of
/// a multi-step run sits below the exact complement (in the PSD order) unless
/// no eliminated node neighbors an earlier one.
pub fn monte_carlo_unbiasedness(
    g: &WeightedGraph,
    order: &[usize],
    o_n: NeighborOrdering,
    trials: usize,
    seed: u64,
) -> Result<UnbiasednessReport> {
    let n = g.node_count();
    if n > 16 {
        return Err(Error::InvalidParameter(format!("unbiasedness check is limited to n <= 16, got {n}")));
    }
    if trials < 1000 {
        return Err(Error::InvalidParameter(format!("need at least 1000 trials, got {trials}")));
    }
    let exact = schur_by_elimination(g, order)?.to_dense();
    let blocks: Vec<(usize, usize)> =
        (0..trials).step_by(TRIAL_BLOCK).map(|s| (s, (s + TRIAL_BLOCK).min(trials))).collect();
    let partial: Vec<Result<(Vec<f64>, Vec<f64>)>> = blocks
        .par_iter()
        .map(|&(lo, hi)| {
            let mut sum = vec![0.0; n * n];
            let mut sq = vec![0.0; n * n];
            for t in lo..hi {
                let view = rlap_with_order(g, order, o_n, stream_rng(seed, t as u64))?;
                let mut dense = vec![0.0; n * n];
                for &(i, j, v) in view.laplacian.triplets() {
                    dense[i * n + j] = v;
                }
                for k in 0..n * n {
                    sum[k] += dense[k];
                    sq[k] += dense[k] * dense[k];
                }
            }
            Ok((sum, sq))
        })
        .collect();
    let mut sum = vec![0.0; n * n];
    let mut sq = vec![0.0; n * n];
    for p in partial {
        let (s, q) = p?;
        for k in 0..n * n {
            sum[k] += s[k];
            sq[k] += q[k];
        }
    }

    let t = trials as f64;
    let mut entries = Vec::new();
    let (mut max_abs_dev, mut max_units) = (0.0f64, 0.0f64);
    for i in 0..n {
        for j in i..n {
            let k = i * n + j;
            let mean = sum[k] / t;
            let var = ((sq[k] - t * mean * mean) / (t - 1.0)).max(0.0);
            let stderr = (var / t).sqrt();
            let ex = exact[(i, j)];
            let dev = (mean - ex).abs();
            let units = if dev <= EXACT_FLOOR * ex.abs().max(1.0) {
                0.0
            } else if stderr > 0.0 {
                dev / stderr
            } else {
                f64::INFINITY
            };
            max_abs_dev = max_abs_dev.max(dev);
            max_units = max_units.max(units);
            entries.push(EntryReport { i, j, mean, exact: ex, stderr, stderr_units: units });
        }
    }
    Ok(UnbiasednessReport { trials, max_abs_dev, max_dev_in_stderr: max_units, entries })
}

/// `sigma_max(L_k - L_0)` after each of the first `floor(gamma n)`
/// eliminations of `config`, as `(k, deviation)` pairs. `checkpoints`
/// selects which `k` to report; empty means every step. Dense, so meant
/// for small graphs.
pub fn martingale_deviation(g: &WeightedGraph, config: &RlapConfig, checkpoints: &[usize]) -> Result<Vec<(usize, f64)>> {
    config.validate()?;
    let steps = elimination_count(config.gamma, g.node_count());
    let run = Elimination::new(g.clone(), config.o_v, config.o_n, stream_rng(config.seed, 0));
    deviation_path(g, run, steps, checkpoints)
}

/// [`martingale_deviation`] along a fixed elimination order.
pub fn martingale_deviation_with_order(
    g: &WeightedGraph,
    order: &[usize],
    o_n: NeighborOrdering,
    rng: StreamRng,
    checkpoints: &[usize],
) -> Result<Vec<(usize, f64)>> {
    let run = Elimination::with_order(g.clone(), order, o_n, rng)?;
    deviation_path(g, run, order.len(), checkpoints)
}

fn deviation_path(g: &WeightedGraph, mut run: Elimination, steps: usize, checkpoints: &[usize]) -> Result<Vec<(usize, f64)>> {
    let n = g.node_count();
    let l0 = g.laplacian().to_dense();
    let mut correction = Mat::<f64>::zeros(n, n);
    let mut out = Vec::new();
    for k in 1..=steps {
        let prev = run.state().clone();
        let Some(v) = run.step()? else { break };
        let pivot = prev.total_weight(v);
        if pivot > 0.0 {
            let mut s = vec![(v, pivot.sqrt())];
            s.extend(prev.neighbors(v).map(|(x, w)| (x, -w / pivot.sqrt())));
            for &(a, sa) in &s {
                for &(b, sb) in &s {
                    correction[(a, b)] += sa * sb;
                }
            }
        }
        if checkpoints.is_empty() || checkpoints.contains(&k) {
            let lk = run.state().laplacian().to_dense() + &correction;
            out.push((k, sigma_max_dense(&(lk - &l0))));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundParams {
    pub theta: Vec<f64>,
    pub eps: f64,
    pub b_r: f64,
    pub b_c: f64,
    pub b_u: f64,
    pub eta2: f64,
    pub n: usize,
    pub active_counts: Vec<usize>,
}

impl BoundParams {
    /// `points` log-spaced values over six decades, ending just inside
    /// `(0, 3 / b_u)` or where the corrector exponent would overflow.
    pub fn default_grid(b_r: f64, b_c: f64, b_u: f64, points: usize) -> Vec<f64> {
        let overflow = (2.0 * MAX_EXPONENT / (b_r * b_c)).sqrt();
        let hi = (3.0 / b_u * (1.0 - 1e-6)).min(overflow);
        let lo = hi * 1e-6;
        if points == 1 {
            return vec![hi];
        }
        let ratio = (hi / lo).ln() / (points - 1) as f64;
        (0..points).map(|k| lo * (ratio * k as f64).exp()).collect()
    }

    pub fn with_default_grid(mut self) -> Self {
        self.theta = Self::default_grid(self.b_r, self.b_c, self.b_u, 96);
        self
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("b_r", self.b_r), ("b_c", self.b_c), ("b_u", self.b_u), ("eta2", self.eta2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.eps >= 0.0) {
            return Err(Error::InvalidParameter(format!("eps must be nonnegative, got {}", self.eps)));
        }
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        if self.active_counts.is_empty() || self.active_counts.contains(&0) {
            return Err(Error::InvalidParameter("active_counts must be nonempty and positive".into()));
        }
        if self.theta.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter("theta grid must be strictly increasing".into()));
        }
        Ok(())
    }
}

/// The composite-corrector scalar `g(theta)`.
pub fn corrector_scalar(p: &BoundParams, theta: f64) -> f64 {
    let min_v = *p.active_counts.iter().min().expect("validated") as f64;
    let inner = p.b_r * p.b_c * theta * theta / (2.0 * (1.0 - p.b_u * theta / 3.0));
    2.0 / (p.b_r * min_v) * inner.exp_m1()
}

/// Natural log of the tail bound before clamping.
pub fn log_tail_bound(p: &BoundParams) -> Result<f64> {
    p.validate()?;
    let limit = 3.0 / p.b_u;
    let best = p
        .theta
        .iter()
        .filter(|&&t| t > 0.0 && t < limit)
        .map(|&t| -p.eps * t + corrector_scalar(p, t) * p.eta2)
        .fold(f64::INFINITY, f64::min);
    if !p.theta.iter().any(|&t| t > 0.0 && t < limit) {
        return Err(Error::Domain(format!("no theta in the grid lies inside (0, {limit})")));
    }
    Ok((2.0 * p.n as f64).ln() + best)
}

/// Deviation tail bound, clamped to at most 1.
pub fn tail_bound(p: &BoundParams) -> Result<f64> {
    Ok(log_tail_bound(p)?.exp().min(1.0))
}

/// Heuristic bound constants from one trajectory of `config` (dense, small
/// graphs): `B_R` is the running max of `sigma_max(R_i)`, `B_C` of the
/// sampled clique Laplacians, `B_U` of their deviation from the exact
/// clique, and `eta^2 = sigma_max(sum_j R_{j-1})`.
pub fn estimate_bound_params(g: &WeightedGraph, config: &RlapConfig, eps: f64) -> Result<BoundParams> {
    config.validate()?;
    let n = g.node_count();
    let steps = elimination_count(config.gamma, n);
    let mut run = Elimination::new(g.clone(), config.o_v, config.o_n, stream_rng(config.seed, 0));
    let (mut b_r, mut b_c, mut b_u) = (0.0f64, 0.0f64, 0.0f64);
    let mut w_sum = Mat::<f64>::zeros(n, n);
    let mut active_counts = Vec::new();
    for _ in 0..steps {
        let prev = run.state().clone();
        let r_prev = prev.laplacian().to_dense();
        b_r = b_r.max(sigma_max_dense(&r_prev));
        w_sum += &r_prev;
        active_counts.push(prev.active_count());
        let Some(v) = run.step()? else { break };
        // R_k = R_{k-1} - STAR + C, so C = R_k - R_{k-1} + STAR
        let star = prev.star(v)?.to_dense();
        let c = run.state().laplacian().to_dense() - &r_prev + &star;
        let exact = prev.clique_exact(v)?.to_dense();
        b_c = b_c.max(sigma_max_dense(&c));
        b_u = b_u.max(sigma_max_dense(&(c - exact)));
    }
    let tiny = f64::MIN_POSITIVE.sqrt();
    Ok(BoundParams {
        theta: Vec::new(),
        eps,
        b_r: b_r.max(tiny),
        b_c: b_c.max(tiny),
        b_u: b_u.max(tiny),
        eta2: sigma_max_dense(&w_sum).max(tiny),
        n,
        active_counts: if active_counts.is_empty() { vec![n.max(1)] } else { active_counts },
    }
    .with_default_grid())
}
