//! Symmetric matrices in coordinate form.
//!
//! [`SparseLaplacian`] stores a sorted, duplicate-free triplet list. It is the
//! exchange type between graph assembly, the exact oracles and the randomized
//! eliminator, and it can be expanded into a dense [`faer::Mat`] for checks.

use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// Relative symmetry tolerance used by [`SparseLaplacian::check_structure`].
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Row-sum tolerance, scaled by the largest diagonal entry.
pub const ROW_SUM_TOL: f64 = 1e-9;
/// PSD tolerance, scaled by the largest eigenvalue.
pub const PSD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseLaplacian {
    n: usize,
    triplets: Vec<(usize, usize, f64)>,
}

/// A failed structural check, with the offending entry when there is one.
#[derive(Debug, Clone, PartialEq)]
pub enum StructureViolation {
    Asymmetric { i: usize, j: usize, a: f64, b: f64 },
    RowSum { row: usize, sum: f64 },
    PositiveOffDiagonal { i: usize, j: usize, value: f64 },
    NegativeDiagonal { i: usize, value: f64 },
    NotPsd { min_eigenvalue: f64, max_eigenvalue: f64 },
}

impl std::fmt::Display for StructureViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Asymmetric { i, j, a, b } => write!(f, "entry ({i},{j})={a} but ({j},{i})={b}"),
            Self::RowSum { row, sum } => write!(f, "row {row} sums to {sum:e}"),
            Self::PositiveOffDiagonal { i, j, value } => {
                write!(f, "off-diagonal ({i},{j}) is positive: {value}")
            }
            Self::NegativeDiagonal { i, value } => write!(f, "diagonal {i} is negative: {value}"),
            Self::NotPsd { min_eigenvalue, max_eigenvalue } => write!(
                f,
                "minimum eigenvalue {min_eigenvalue:e} below tolerance (max {max_eigenvalue:e})"
            ),
        }
    }
}

impl SparseLaplacian {
    /// Builds a matrix from raw triplets. Duplicates are summed and exact
    /// zeros are dropped.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(i, j, _) in &triplets {
            if i >= n {
                return Err(Error::Index { node: i, n });
            }
            if j >= n {
                return Err(Error::Index { node: j, n });
            }
        }
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for (i, j, v) in triplets {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }
        merged.retain(|t| t.2 != 0.0);
        Ok(Self { n, triplets: merged })
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, triplets: Vec::new() }
    }

    /// Laplacian of a list of weighted edges `(i, j, w)`.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut t = Vec::new();
        for (i, j, w) in edges {
            t.push((i, i, w));
            t.push((j, j, w));
            t.push((i, j, -w));
            t.push((j, i, -w));
        }
        Self::from_triplets(n, t)
    }

    /// Converts a dense matrix, dropping entries with magnitude `<= drop_tol`.
    pub fn from_dense(m: &Mat<f64>, drop_tol: f64) -> Self {
        let n = m.nrows();
        let mut triplets = Vec::new();
        for i in 0..n {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v.abs() > drop_tol {
                    triplets.push((i, j, v));
                }
            }
        }
        Self { n, triplets }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Row-major sorted, duplicate-free entries.
    pub fn triplets(&self) -> &[(usize, usize, f64)] {
        &self.triplets
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.triplets
            .binary_search_by(|t| (t.0, t.1).cmp(&(i, j)))
            .map(|k| self.triplets[k].2)
            .unwrap_or(0.0)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for &(i, j, v) in &self.triplets {
            if i == j {
                d[i] = v;
            }
        }
        d
    }

    /// Number of strictly negative off-diagonal pairs, i.e. graph edges.
    pub fn edge_count(&self) -> usize {
        self.triplets.iter().filter(|t| t.0 < t.1 && t.2 < 0.0).count()
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.n, self.n);
        for &(i, j, v) in &self.triplets {
            m[(i, j)] += v;
        }
        m
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for &(i, j, v) in &self.triplets {
            y[i] += v * x[j];
        }
        y
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_triplets(self.n, self.triplets.iter().map(|&(i, j, v)| (i, j, v * factor)).collect())
            .expect("indices already validated")
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let mut t = self.triplets.clone();
        t.extend_from_slice(&other.triplets);
        Self::from_triplets(self.n, t).expect("indices already validated")
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(-1.0))
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).triplets.iter().fold(0.0, |m, t| m.max(t.2.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.triplets.iter().fold(0.0, |m, t| m.max(t.2.abs()))
    }

    /// Symmetry, zero row sums and sign pattern. Does not check PSD.
    pub fn check_structure(&self) -> std::result::Result<(), StructureViolation> {
        let max_diag = self.diagonal().iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let mut row_sums = vec![0.0; self.n];
        for &(i, j, v) in &self.triplets {
            row_sums[i] += v;
            if i == j {
                if v < 0.0 {
                    return Err(StructureViolation::NegativeDiagonal { i, value: v });
                }
            } else {
                if v > 0.0 {
                    return Err(StructureViolation::PositiveOffDiagonal { i, j, value: v });
                }
                let w = self.get(j, i);
                if (v - w).abs() > SYMMETRY_TOL * v.abs().max(w.abs()) {
                    return Err(StructureViolation::Asymmetric { i, j, a: v, b: w });
                }
            }
        }
        for (row, &sum) in row_sums.iter().enumerate() {
            if sum.abs() > ROW_SUM_TOL * max_diag.max(f64::MIN_POSITIVE) {
                return Err(StructureViolation::RowSum { row, sum });
            }
        }
        Ok(())
    }

    /// Eigenvalues of the dense expansion, ascending.
    pub fn dense_eigenvalues(&self) -> Vec<f64> {
        if self.n == 0 {
            return Vec::new();
        }
        self.to_dense()
            .self_adjoint_eigenvalues(Side::Lower)
            .expect("symmetric eigensolver failed to converge")
    }

    /// Dense PSD check: smallest eigenvalue `>= -PSD_TOL * sigma_max`.
    pub fn check_psd(&self) -> std::result::Result<(), StructureViolation> {
        let eig = self.dense_eigenvalues();
        let (Some(&lo), Some(&hi)) = (eig.first(), eig.last()) else {
            return Ok(());
        };
        let scale = lo.abs().max(hi.abs());
        if lo < -PSD_TOL * scale {
            return Err(StructureViolation::NotPsd { min_eigenvalue: lo, max_eigenvalue: hi });
        }
        Ok(())
    }

    /// Reads the strictly negative off-diagonals back as a weighted graph.
    /// Nodes with an all-zero row are marked inactive when `zero_rows_inactive`.
    pub fn to_graph(&self, zero_rows_inactive: bool) -> Result<WeightedGraph> {
        let mut g = WeightedGraph::new(self.n);
        let mut touched = vec![false; self.n];
        for &(i, j, v) in &self.triplets {
            touched[i] = true;
            if i < j && v < 0.0 {
                g.add_edge(i, j, -v)?;
            }
        }
        if zero_rows_inactive {
            for (v, t) in touched.iter().enumerate() {
                if !t {
                    g.deactivate(v)?;
                }
            }
        }
        Ok(g)
    }
}
