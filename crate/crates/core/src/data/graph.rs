use crate::{Error, Result};

/// Bipartite user–item interaction graph.
///
/// Edges are stored sorted by `(user, item)` and deduplicated; an edge's
/// position in that order is its edge id, which masks index by. Both
/// directions are available as compressed rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InteractionGraph {
    num_users: usize,
    num_items: usize,
    edges: Vec<(usize, usize)>,
    user_ptr: Vec<usize>,
    item_ptr: Vec<usize>,
    // (user, edge id) per item, users ascending
    item_adj: Vec<(usize, usize)>,
}

impl InteractionGraph {
    /// Builds the graph, dropping duplicate edges. Returns the graph and the
    /// number of duplicates removed.
    pub fn from_edges(
        num_users: usize,
        num_items: usize,
        mut edges: Vec<(usize, usize)>,
    ) -> Result<(Self, usize)> {
        if let Some(&(u, i)) = edges.iter().find(|&&(u, i)| u >= num_users || i >= num_items) {
            return Err(Error::invalid(format!(
                "edge ({u}, {i}) out of bounds for {num_users} users x {num_items} items"
            )));
        }
        let before = edges.len();
        edges.sort_unstable();
        edges.dedup();
        let dups = before - edges.len();

        let mut user_ptr = vec![0usize; num_users + 1];
        let mut item_ptr = vec![0usize; num_items + 1];
        for &(u, i) in &edges {
            user_ptr[u + 1] += 1;
            item_ptr[i + 1] += 1;
        }
        for k in 0..num_users {
            user_ptr[k + 1] += user_ptr[k];
        }
        for k in 0..num_items {
            item_ptr[k + 1] += item_ptr[k];
        }
        let mut fill = item_ptr.clone();
        let mut item_adj = vec![(0, 0); edges.len()];
        for (e, &(u, i)) in edges.iter().enumerate() {
            item_adj[fill[i]] = (u, e);
            fill[i] += 1;
        }
        Ok((
            InteractionGraph {
                num_users,
                num_items,
                edges,
                user_ptr,
                item_ptr,
                item_adj,
            },
            dups,
        ))
    }

    #[inline]
    pub fn num_users(&self) -> usize {
        self.num_users
    }

    #[inline]
    pub fn num_items(&self) -> usize {
        self.num_items
    }

    #[inline]
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Edge id range of user `u`; edges are contiguous per user.
    #[inline]
    pub fn user_edge_range(&self, u: usize) -> std::ops::Range<usize> {
        self.user_ptr[u]..self.user_ptr[u + 1]
    }

    /// Items of user `u`, ascending.
    pub fn user_items(&self, u: usize) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.edges[self.user_edge_range(u)].iter().map(|&(_, i)| i)
    }

    /// `(user, edge id)` pairs of item `i`, users ascending.
    #[inline]
    pub fn item_users(&self, i: usize) -> &[(usize, usize)] {
        &self.item_adj[self.item_ptr[i]..self.item_ptr[i + 1]]
    }

    #[inline]
    pub fn user_degree(&self, u: usize) -> usize {
        self.user_ptr[u + 1] - self.user_ptr[u]
    }

    #[inline]
    pub fn item_degree(&self, i: usize) -> usize {
        self.item_ptr[i + 1] - self.item_ptr[i]
    }

    pub fn has_edge(&self, u: usize, i: usize) -> bool {
        self.edges[self.user_edge_range(u)]
            .binary_search(&(u, i))
            .is_ok()
    }
}
