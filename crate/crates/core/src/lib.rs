//! Randomized Schur complement views of graphs.
//!
//! The core object is [`WeightedGraph`], an undirected graph with positive
//! edge weights that supports cheap star removal and clique insertion. On top
//! of it sit exact Schur complements ([`exact`]), the randomized
//! approximation ([`mod@rlap`]), graph diffusions ([`diffusion`]), the baseline
//! augmentors ([`mod@augment`]), the unbiasedness and concentration analysis
//! ([`analysis`]) and the cost benchmark ([`mod@bench`]). [`coo`] adapts all
//! of it to COO arrays for foreign callers.

// parameter checks use `!(x > 0.0)` so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod augment;
pub mod bench;
pub mod coo;
pub mod diffusion;
pub mod error;
pub mod exact;
pub mod generators;
pub mod graph;
pub mod io;
pub mod laplacian;
pub mod rlap;
pub mod rng;

pub use augment::{augment, AugmentorKind, AugmentorSpec, FeatureMatrix};
pub use diffusion::{DiffusionKind, DiffusionSpec, Transition};
pub use error::{Error, Result};
pub use graph::{ElementaryLaplacian, WeightedGraph};
pub use laplacian::{SparseLaplacian, StructureViolation};
pub use rlap::{rlap, AugmentedView, EliminationScheme, NeighborOrdering, RlapConfig, Variant};
