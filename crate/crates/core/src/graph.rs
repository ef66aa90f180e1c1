//! Symmetric k-nearest-neighbor graph and connected components of its
//! induced subgraphs.

use rayon::prelude::*;

use crate::density::{check_k, kth_excluding};
use crate::error::{Error, Result};
use crate::metrics::Dissimilarity;
use crate::scalar::Scalar;
use crate::union_find::DisjointSet;

/// Undirected graph on `n` items plus the k-th neighbor radius of each item.
///
/// Adjacency lists are sorted ascending, without self-loops or duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph<T> {
    adjacency: Vec<Vec<usize>>,
    radii: Vec<T>,
    k: usize,
}

impl<T: Scalar> NeighborGraph<T> {
    /// Builds a graph from an explicit edge list. Self-loops are rejected,
    /// duplicate edges collapsed.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], radii: Vec<T>, k: usize) -> Result<Self> {
        if radii.len() != n {
            return Err(Error::invalid("one radius per vertex required"));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::invalid(format!("edge ({a},{b}) out of range")));
            }
            if a == b {
                return Err(Error::invalid(format!("self-loop at {a}")));
            }
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { adjacency, radii, k })
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn radii(&self) -> &[T] {
        &self.radii
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
            .collect()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }
}

/// Union kNN graph: `(i, j)` is an edge iff `dist(i, j) <= max(r_k(i), r_k(j))`.
///
/// Computed in one pass over distance rows; each row contributes the items
/// inside its own k-th neighbor ball.
pub fn knn_graph<T: Scalar, D: Dissimilarity<T>>(data: &D, k: usize) -> Result<NeighborGraph<T>> {
    let n = data.len();
    check_k(n, k)?;
    let per_row: Vec<(T, Vec<usize>)> = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![T::zero(); n], vec![T::zero(); n]),
            |(row, scratch), i| {
                data.row(i, row);
                scratch.copy_from_slice(row);
                let radius = kth_excluding(scratch, i, k);
                let ball = row
                    .iter()
                    .enumerate()
                    .filter(|&(j, &d)| j != i && d <= radius)
                    .map(|(j, _)| j)
                    .collect();
                (radius, ball)
            },
        )
        .collect();

    let mut adjacency: Vec<Vec<usize>> = per_row.iter().map(|(_, b)| b.clone()).collect();
    for (i, (_, ball)) in per_row.iter().enumerate() {
        for &j in ball {
            adjacency[j].push(i);
        }
    }
    adjacency.par_iter_mut().for_each(|list| {
        list.sort_unstable();
        list.dedup();
    });
    let radii = per_row.into_iter().map(|(r, _)| r).collect();
    Ok(NeighborGraph { adjacency, radii, k })
}

/// Connected components of the subgraph induced by the active vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentLabeling {
    /// Component id per vertex (the smallest vertex index in the component),
    /// `None` for inactive vertices.
    pub labels: Vec<Option<usize>>,
}

impl ComponentLabeling {
    /// Number of distinct components.
    pub fn count(&self) -> usize {
        self.labels
            .iter()
            .enumerate()
            .filter(|&(v, l)| *l == Some(v))
            .count()
    }

    /// Member lists, ordered by component id.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut slot = vec![usize::MAX; self.labels.len()];
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (v, l) in self.labels.iter().enumerate() {
            if let Some(l) = *l {
                if slot[l] == usize::MAX {
                    slot[l] = groups.len();
                    groups.push(Vec::new());
                }
                groups[slot[l]].push(v);
            }
        }
        groups
    }
}

pub fn components<T: Scalar>(g: &NeighborGraph<T>, active: &[usize]) -> Result<ComponentLabeling> {
    let n = g.n();
    let mut is_active = vec![false; n];
    for &v in active {
        if v >= n {
            return Err(Error::invalid(format!("vertex {v} out of range")));
        }
        is_active[v] = true;
    }
    let mut ds = DisjointSet::new(n);
    for &v in active {
        for &u in g.neighbors(v) {
            if u > v && is_active[u] {
                ds.union(u, v);
            }
        }
    }
    let mut smallest = vec![usize::MAX; n];
    for v in 0..n {
        if is_active[v] {
            let r = ds.find(v);
            smallest[r] = smallest[r].min(v);
        }
    }
    let labels = (0..n)
        .map(|v| is_active[v].then(|| smallest[ds.find(v)]))
        .collect();
    Ok(ComponentLabeling { labels })
}
