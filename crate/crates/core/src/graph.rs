//! User–item bipartite graph over the training interactions.

use std::fmt;

use crate::dataset::Interactions;
use crate::error::{Error, Result};

/// A vertex of the bipartite graph: a user or an item, by dense index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Vertex {
    User(u32),
    Item(u32),
}

impl Vertex {
    pub fn is_user(self) -> bool {
        matches!(self, Vertex::User(_))
    }

    pub fn index(self) -> usize {
        match self {
            Vertex::User(i) | Vertex::Item(i) => i as usize,
        }
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Vertex::User(i) => write!(f, "u{i}"),
            Vertex::Item(i) => write!(f, "i{i}"),
        }
    }
}

impl std::str::FromStr for Vertex {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let bad = || format!("bad vertex token {s:?}");
        let (kind, rest) = s.split_at_checked(1).ok_or_else(bad)?;
        let idx: u32 = rest.parse().map_err(|_| bad())?;
        match kind {
            "u" => Ok(Vertex::User(idx)),
            "i" => Ok(Vertex::Item(idx)),
            _ => Err(bad()),
        }
    }
}

/// Adjacency lists for both sides, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    user_adj: Vec<Vec<u32>>,
    item_adj: Vec<Vec<u32>>,
}

impl BipartiteGraph {
    /// Builds the graph with an edge for every training interaction.
    /// Users and items without interactions stay as isolated vertices.
    pub fn build(train: &Interactions, num_users: usize, num_items: usize) -> Result<Self> {
        if num_users > u32::MAX as usize || num_items > u32::MAX as usize {
            return Err(Error::InvalidArgument("graph too large for u32 indices".into()));
        }
        let mut user_adj = vec![Vec::new(); num_users];
        let mut item_adj = vec![Vec::new(); num_items];
        for &(u, i) in train {
            if u >= num_users {
                return Err(Error::OutOfRange { what: "user", index: u, size: num_users });
            }
            if i >= num_items {
                return Err(Error::OutOfRange { what: "item", index: i, size: num_items });
            }
            user_adj[u].push(i as u32);
            item_adj[i].push(u as u32);
        }
        // `train` iterates in (u, i) order, so user lists are already sorted
        // and item lists receive users in ascending order too.
        debug_assert!(user_adj.iter().chain(&item_adj).all(|a| a.windows(2).all(|w| w[0] < w[1])));
        Ok(BipartiteGraph { user_adj, item_adj })
    }

    pub fn num_users(&self) -> usize {
        self.user_adj.len()
    }

    pub fn num_items(&self) -> usize {
        self.item_adj.len()
    }

    pub fn num_edges(&self) -> usize {
        self.user_adj.iter().map(Vec::len).sum()
    }

    /// Neighbor indices of `v` (items for a user, users for an item).
    pub fn adjacent(&self, v: Vertex) -> Result<&[u32]> {
        let (adj, what) = match v {
            Vertex::User(_) => (&self.user_adj, "user"),
            Vertex::Item(_) => (&self.item_adj, "item"),
        };
        adj.get(v.index())
            .map(Vec::as_slice)
            .ok_or(Error::OutOfRange { what, index: v.index(), size: adj.len() })
    }

    pub fn neighbors(&self, v: Vertex) -> Result<Vec<Vertex>> {
        let adj = self.adjacent(v)?;
        Ok(match v {
            Vertex::User(_) => adj.iter().map(|&i| Vertex::Item(i)).collect(),
            Vertex::Item(_) => adj.iter().map(|&u| Vertex::User(u)).collect(),
        })
    }

    pub fn degree(&self, v: Vertex) -> Result<usize> {
        self.adjacent(v).map(<[u32]>::len)
    }

    pub fn has_edge(&self, user: usize, item: usize) -> bool {
        self.user_adj
            .get(user)
            .is_some_and(|adj| adj.binary_search(&(item as u32)).is_ok())
    }

    /// All vertices, users first, then items.
    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.num_users() as u32)
            .map(Vertex::User)
            .chain((0..self.num_items() as u32).map(Vertex::Item))
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    /// The six-edge toy graph: u1..u3 and i1..i4 mapped to indices 0..
    pub(crate) fn toy_graph() -> BipartiteGraph {
        let edges: Interactions = [(0, 0), (0, 1), (1, 1), (1, 2), (2, 2), (2, 3)].into();
        BipartiteGraph::build(&edges, 3, 4).unwrap()
    }

    #[test]
    fn empty_graph_has_isolated_vertices() {
        let g = BipartiteGraph::build(&Interactions::new(), 2, 2).unwrap();
        assert_eq!(g.vertices().count(), 4);
        for v in g.vertices() {
            assert_eq!(g.degree(v).unwrap(), 0);
            assert!(g.neighbors(v).unwrap().is_empty());
        }
    }

    #[test]
    fn toy_degrees_and_neighbors() {
        let g = toy_graph();
        for u in 0..3 {
            assert_eq!(g.degree(Vertex::User(u)).unwrap(), 2);
        }
        let item_deg: Vec<_> = (0..4).map(|i| g.degree(Vertex::Item(i)).unwrap()).collect();
        assert_eq!(item_deg, vec![1, 2, 2, 1]);
        assert_eq!(
            g.neighbors(Vertex::User(0)).unwrap(),
            vec![Vertex::Item(0), Vertex::Item(1)]
        );
        assert_eq!(
            g.neighbors(Vertex::Item(2)).unwrap(),
            vec![Vertex::User(1), Vertex::User(2)]
        );
    }

    #[test]
    fn single_edge() {
        let g = BipartiteGraph::build(&[(0, 0)].into(), 1, 1).unwrap();
        assert_eq!(g.adjacent(Vertex::User(0)).unwrap(), &[0]);
        assert_eq!(g.adjacent(Vertex::Item(0)).unwrap(), &[0]);
    }

    #[test]
    fn out_of_range() {
        assert!(BipartiteGraph::build(&[(2, 0)].into(), 2, 2).is_err());
        assert!(BipartiteGraph::build(&[(0, 5)].into(), 2, 2).is_err());
        assert!(toy_graph().neighbors(Vertex::Item(4)).is_err());
    }

    #[test]
    fn vertex_tokens() {
        assert_eq!("u12".parse::<Vertex>().unwrap(), Vertex::User(12));
        assert_eq!(Vertex::Item(3).to_string(), "i3");
        assert!("x1".parse::<Vertex>().is_err());
        assert!("u".parse::<Vertex>().is_err());
    }

    proptest! {
        #[test]
        fn adjacency_is_symmetric(edges in proptest::collection::btree_set((0usize..10, 0usize..10), 0..60)) {
            let g = BipartiteGraph::build(&edges, 10, 10).unwrap();
            let user_sum: usize = (0..10).map(|u| g.degree(Vertex::User(u)).unwrap()).sum();
            let item_sum: usize = (0..10).map(|i| g.degree(Vertex::Item(i)).unwrap()).sum();
            prop_assert_eq!(user_sum, edges.len());
            prop_assert_eq!(item_sum, edges.len());
            for v in g.vertices() {
                for w in g.neighbors(v).unwrap() {
                    prop_assert_ne!(v.is_user(), w.is_user());
                    prop_assert!(g.neighbors(w).unwrap().contains(&v));
                }
            }
            for &(u, i) in &edges {
                prop_assert!(g.has_edge(u, i));
            }
        }
    }
}
