//! Immutable user-object bipartite network.
//!
//! Both orientations are stored in compressed sparse row form: the objects
//! collected by each user and the users that collected each object, each
//! list sorted ascending. Degrees are offset differences, so lookups are
//! constant time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BipartiteGraph {
    num_users: usize,
    num_objects: usize,
    user_offsets: Vec<usize>,
    user_objects: Vec<u32>,
    object_offsets: Vec<usize>,
    object_users: Vec<u32>,
}

/// Builds a graph whose shape is inferred from the largest indices present.
///
/// Duplicate pairs collapse to one link. An empty input yields the empty
/// graph (no users, no objects, no links).
pub fn build_graph(links: &[(usize, usize)]) -> BipartiteGraph {
    let num_users = links.iter().map(|&(u, _)| u + 1).max().unwrap_or(0);
    let num_objects = links.iter().map(|&(_, o)| o + 1).max().unwrap_or(0);
    BipartiteGraph::with_shape(num_users, num_objects, links).expect("inferred shape covers every index")
}

impl BipartiteGraph {
    pub fn empty() -> Self {
        Self::with_shape(0, 0, &[]).expect("empty graph")
    }

    /// Builds a graph with an explicit shape, so users and objects without
    /// links still occupy an index (degree zero).
    pub fn with_shape(num_users: usize, num_objects: usize, links: &[(usize, usize)]) -> Result<Self> {
        if num_users > u32::MAX as usize || num_objects > u32::MAX as usize {
            return Err(Error::InvalidParameter(format!(
                "graph shape {num_users}x{num_objects} exceeds 32-bit index space"
            )));
        }
        if let Some(&(u, o)) = links.iter().find(|&&(u, o)| u >= num_users || o >= num_objects) {
            return Err(Error::InvalidParameter(format!(
                "link ({u}, {o}) out of range for shape {num_users}x{num_objects}"
            )));
        }

        let mut sorted: Vec<(u32, u32)> = links.iter().map(|&(u, o)| (u as u32, o as u32)).collect();
        sorted.sort_unstable();
        sorted.dedup();

        let (user_offsets, user_objects) = csr(num_users, sorted.iter().copied());

        let mut transposed: Vec<(u32, u32)> = sorted.iter().map(|&(u, o)| (o, u)).collect();
        transposed.sort_unstable();
        let (object_offsets, object_users) = csr(num_objects, transposed.into_iter());

        Ok(Self {
            num_users,
            num_objects,
            user_offsets,
            user_objects,
            object_offsets,
            object_users,
        })
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_objects(&self) -> usize {
        self.num_objects
    }

    pub fn num_links(&self) -> usize {
        self.user_objects.len()
    }

    /// Objects collected by `user`, ascending.
    pub fn objects_of(&self, user: usize) -> &[u32] {
        &self.user_objects[self.user_offsets[user]..self.user_offsets[user + 1]]
    }

    /// Users that collected `object`, ascending.
    pub fn users_of(&self, object: usize) -> &[u32] {
        &self.object_users[self.object_offsets[object]..self.object_offsets[object + 1]]
    }

    pub fn user_degree(&self, user: usize) -> usize {
        self.user_offsets[user + 1] - self.user_offsets[user]
    }

    pub fn object_degree(&self, object: usize) -> usize {
        self.object_offsets[object + 1] - self.object_offsets[object]
    }

    pub fn user_degrees(&self) -> Vec<usize> {
        self.user_offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn object_degrees(&self) -> Vec<usize> {
        self.object_offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn has_link(&self, user: usize, object: usize) -> bool {
        self.objects_of(user).binary_search(&(object as u32)).is_ok()
    }

    /// All links in user-major order.
    pub fn links(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_users).flat_map(move |u| self.objects_of(u).iter().map(move |&o| (u, o as usize)))
    }

    /// Links read off the object orientation, object-major order.
    pub fn links_by_object(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_objects).flat_map(move |o| self.users_of(o).iter().map(move |&u| (u as usize, o)))
    }

    /// Fraction of the user-object matrix that is filled, `q / (m n)`.
    pub fn sparsity(&self) -> Result<f64> {
        if self.num_users == 0 || self.num_objects == 0 {
            return Err(Error::UndefinedSparsity);
        }
        Ok(self.num_links() as f64 / (self.num_users as f64 * self.num_objects as f64))
    }
}

fn csr(rows: usize, sorted_pairs: impl Iterator<Item = (u32, u32)>) -> (Vec<usize>, Vec<u32>) {
    let mut offsets = vec![0usize; rows + 1];
    let mut cols = Vec::new();
    for (r, c) in sorted_pairs {
        offsets[r as usize + 1] += 1;
        cols.push(c);
    }
    for i in 0..rows {
        offsets[i + 1] += offsets[i];
    }
    (offsets, cols)
}
