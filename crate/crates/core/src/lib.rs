//! Top-K recommendation from sparse binary interactions, enriched with
//! pseudo-implicit feedback.
//!
//! The pipeline:
//!
//! 1. [`dataset`]: ingest, binarize, filter, split and sparsify interactions.
//! 2. [`graph`] and [`walks`]: uniform truncated random walks over the
//!    user–item bipartite graph.
//! 3. [`pairs`]: windowed user–item pair counts from the walks.
//! 4. [`confidence`]: co-occurrence or shifted positive PMI matrix `S`.
//! 5. [`factorization`]: ALS on `S` with a ridge penalty.
//! 6. [`recommend`] and [`evaluation`]: masked top-K lists and P/R/F1@k.
//!
//! [`experiment`] wires the stages into seeded grids, and [`config`] holds
//! the TOML-backed settings.
//!
//! ```
//! use psirec::{confidence, graph::BipartiteGraph, pairs, walks};
//!
//! let train = [(0, 0), (0, 1), (1, 1), (1, 2), (2, 2), (2, 3)].into();
//! let g = BipartiteGraph::build(&train, 3, 4).unwrap();
//! let corpus = walks::generate_walks(&g, &walks::WalkConfig { beta: 10, gamma: 80, seed: 1 }).unwrap();
//! let stats = pairs::sample_pairs(&corpus, 3).unwrap();
//! let s = confidence::sppmi_matrix(&stats, 1.0).unwrap();
//! assert!(s.nnz() > 0);
//! ```

pub mod confidence;
pub mod config;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod factorization;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod pairs;
pub mod recommend;
pub mod rng;
pub mod sparse;
pub mod synthetic;
pub mod walks;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/walks.md")]
    mod walks {}
    #[doc = include_str!("../../../book/src/pairs.md")]
    mod pairs {}
    #[doc = include_str!("../../../book/src/confidence.md")]
    mod confidence {}
    #[doc = include_str!("../../../book/src/factorization.md")]
    mod factorization {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
