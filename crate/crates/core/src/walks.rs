//! Truncated uniform random walks over the bipartite graph.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, Vertex};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkConfig {
    /// Walks launched from every vertex.
    pub beta: usize,
    /// Vertices per walk.
    pub gamma: usize,
    pub seed: u64,
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beta == 0 {
            return Err(Error::config("walk.beta", "must be >= 1"));
        }
        if self.gamma == 0 {
            return Err(Error::config("walk.gamma", "must be >= 1"));
        }
        Ok(())
    }
}

/// The walk corpus, ordered by start vertex (users, then items) and walk number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkCorpus {
    pub num_users: usize,
    pub num_items: usize,
    pub walks: Vec<Vec<Vertex>>,
}

fn vertex_key(v: Vertex) -> u64 {
    match v {
        Vertex::User(u) => u as u64,
        Vertex::Item(i) => (1u64 << 32) | i as u64,
    }
}

/// Launches `beta` walks of `gamma` vertices from every non-isolated vertex.
///
/// Each walk draws from its own stream keyed by `(seed, start, walk number)`,
/// so the corpus does not depend on the thread count.
pub fn generate_walks(graph: &BipartiteGraph, cfg: &WalkConfig) -> Result<WalkCorpus> {
    cfg.validate()?;
    let starts: Vec<Vertex> = graph
        .vertices()
        .filter(|&v| graph.degree(v).unwrap_or(0) > 0)
        .collect();
    let walks: Vec<Vec<Vertex>> = starts
        .par_iter()
        .flat_map_iter(|&start| (0..cfg.beta).map(move |w| walk_from(graph, start, w as u64, cfg)))
        .collect();
    Ok(WalkCorpus {
        num_users: graph.num_users(),
        num_items: graph.num_items(),
        walks,
    })
}

fn walk_from(graph: &BipartiteGraph, start: Vertex, walk_no: u64, cfg: &WalkConfig) -> Vec<Vertex> {
    let mut rng = rng::keyed_stream(cfg.seed, vertex_key(start), walk_no);
    let mut walk = Vec::with_capacity(cfg.gamma);
    let mut current = start;
    walk.push(current);
    while walk.len() < cfg.gamma {
        // Non-isolated start in a bipartite graph: every visited vertex has a neighbor.
        let adj = graph.adjacent(current).expect("walk stays in range");
        let next = adj[rng.gen_range(0..adj.len())];
        current = match current {
            Vertex::User(_) => Vertex::Item(next),
            Vertex::Item(_) => Vertex::User(next),
        };
        walk.push(current);
    }
    walk
}

impl WalkCorpus {
    pub fn len(&self) -> usize {
        self.walks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walks.is_empty()
    }

    /// Checks that every step of every walk is an edge of `graph`.
    pub fn validate_against(&self, graph: &BipartiteGraph) -> Result<()> {
        for (n, walk) in self.walks.iter().enumerate() {
            for pair in walk.windows(2) {
                let edge = match (pair[0], pair[1]) {
                    (Vertex::User(u), Vertex::Item(i)) | (Vertex::Item(i), Vertex::User(u)) => {
                        graph.has_edge(u as usize, i as usize)
                    }
                    _ => false,
                };
                if !edge {
                    return Err(Error::InvalidWalk(format!(
                        "walk {n}: {} -> {} is not an edge",
                        pair[0], pair[1]
                    )));
                }
            }
        }
        Ok(())
    }

    /// One walk per line, vertices as space-separated `u<idx>` / `i<idx>` tokens.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for walk in &self.walks {
            for (k, v) in walk.iter().enumerate() {
                if k > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str, num_users: usize, num_items: usize) -> Result<Self> {
        let mut walks = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let walk = line
                .split(' ')
                .map(|tok| {
                    let v: Vertex = tok.parse().map_err(|e: String| Error::parse(n as u64 + 1, e))?;
                    let size = if v.is_user() { num_users } else { num_items };
                    if v.index() >= size {
                        return Err(Error::parse(n as u64 + 1, format!("vertex {v} out of range")));
                    }
                    Ok(v)
                })
                .collect::<Result<Vec<_>>>()?;
            walks.push(walk);
        }
        Ok(WalkCorpus { num_users, num_items, walks })
    }
}
