//! Level set trees: construction, pruning, mass indexing and structural queries.
//!
//! A node is a connected component of an upper level set `{i : f(i) >= λ}` of
//! the kNN graph, followed from the level where it first appears (as a root or
//! by splitting off its parent) to the level where it splits or vanishes.
//! Members are recorded at the start level; ids follow birth order with the
//! largest root at id 0.

mod build;
mod document;
mod prune;

pub use build::{build_tree, build_unpruned};
pub use document::{NodeDocument, TreeDocument, TREE_FORMAT_VERSION};
pub use prune::prune;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{total_cmp, Scalar};

/// Vertical scale of a tree rendering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    /// Raw density level λ.
    Level,
    /// Background fraction: share of items with density below λ.
    Mass,
    /// Retained probability content, `1 - mass`.
    Alpha,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode<T> {
    pub id: usize,
    pub start_level: T,
    pub end_level: T,
    pub start_mass: f64,
    pub end_mass: f64,
    /// Items in the component at `start_level`, ascending.
    pub members: Vec<usize>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

impl<T: Scalar> TreeNode<T> {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Whether the component is alive at density level `level`.
    ///
    /// Spans are half-open `[start, end)` for internal nodes, whose children take
    /// over at `end`, and closed for leaves, which still hold their densest
    /// item at `end`.
    pub fn spans_level(&self, level: T) -> bool {
        self.start_level <= level && (level < self.end_level || (self.is_leaf() && level == self.end_level))
    }

    /// [`spans_level`](Self::spans_level) on the mass scale.
    pub fn spans_mass(&self, mass: f64) -> bool {
        self.start_mass <= mass && (mass < self.end_mass || (self.is_leaf() && mass == self.end_mass))
    }

    /// `(start, end)` on the requested scale. On the alpha scale start > end.
    pub fn span(&self, scale: Scale) -> (f64, f64) {
        match scale {
            Scale::Level => (self.start_level.as_f64(), self.end_level.as_f64()),
            Scale::Mass => (self.start_mass, self.end_mass),
            Scale::Alpha => (1.0 - self.start_mass, 1.0 - self.end_mass),
        }
    }
}

/// Hierarchy of high-density clusters, indexed by node id.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetTree<T> {
    nodes: Vec<TreeNode<T>>,
    n: usize,
    k: usize,
    gamma: f64,
    density: Vec<T>,
    sorted_density: Vec<T>,
}

impl<T: Scalar> LevelSetTree<T> {
    /// Assembles a tree and checks its structural invariants.
    pub fn from_parts(nodes: Vec<TreeNode<T>>, k: usize, gamma: f64, density: Vec<T>) -> Result<Self> {
        let tree = Self::new_unchecked(nodes, k, gamma, density);
        tree.validate()?;
        Ok(tree)
    }

    pub(crate) fn new_unchecked(nodes: Vec<TreeNode<T>>, k: usize, gamma: f64, density: Vec<T>) -> Self {
        let mut sorted_density = density.clone();
        sorted_density.sort_by(total_cmp);
        Self {
            nodes,
            n: density.len(),
            k,
            gamma,
            density,
            sorted_density,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn density_values(&self) -> &[T] {
        &self.density
    }

    pub fn nodes(&self) -> &[TreeNode<T>] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn query_node(&self, id: usize) -> Result<&TreeNode<T>> {
        self.nodes.get(id).ok_or(Error::NotFound(id))
    }

    pub fn roots(&self) -> Vec<usize> {
        self.nodes.iter().filter(|n| n.parent.is_none()).map(|n| n.id).collect()
    }

    /// Leaf ids by descending size, ties by id.
    pub fn leaves(&self) -> Vec<usize> {
        let mut out: Vec<&TreeNode<T>> = self.nodes.iter().filter(|n| n.is_leaf()).collect();
        out.sort_by(|a, b| b.size().cmp(&a.size()).then(a.id.cmp(&b.id)));
        out.into_iter().map(|n| n.id).collect()
    }

    /// Members of node `id` whose density is at least `level`.
    pub fn members_at(&self, id: usize, level: T) -> Result<Vec<usize>> {
        let node = self.query_node(id)?;
        if !node.spans_level(level) {
            return Err(Error::invalid(format!(
                "level {level} outside the span [{}, {}] of node {id}",
                node.start_level, node.end_level
            )));
        }
        Ok(self.members_above(node, level))
    }

    pub(crate) fn members_above(&self, node: &TreeNode<T>, level: T) -> Vec<usize> {
        node.members
            .iter()
            .copied()
            .filter(|&i| self.density[i] >= level)
            .collect()
    }

    /// Fraction of items with density strictly below `level`.
    pub fn mass_of_level(&self, level: T) -> f64 {
        mass_in_sorted(&self.sorted_density, level)
    }

    /// Retained fraction `1 - mass_of_level(level)`.
    pub fn alpha_of_level(&self, level: T) -> f64 {
        1.0 - self.mass_of_level(level)
    }

    /// Smallest sample density whose background fraction reaches `mass`, or
    /// `None` when no level leaves that much in the background.
    pub fn level_of_mass(&self, mass: f64) -> Option<T> {
        let n = self.sorted_density.len();
        let mut i = 0;
        while i < n {
            let v = self.sorted_density[i];
            // i items lie strictly below v
            if i as f64 / n as f64 >= mass {
                return Some(v);
            }
            while i < n && self.sorted_density[i] == v {
                i += 1;
            }
        }
        None
    }

    /// Structural checks: id layout, parent/child symmetry, nesting, disjoint siblings.
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        for (pos, node) in self.nodes.iter().enumerate() {
            let fail = |msg: String| Err(Error::invalid(format!("node {}: {msg}", node.id)));
            if node.id != pos {
                return fail(format!("stored at position {pos}"));
            }
            if !(node.start_level <= node.end_level) {
                return fail("start level above end level".into());
            }
            if !(node.start_mass <= node.end_mass) {
                return fail("start mass above end mass".into());
            }
            if node.members.windows(2).any(|w| w[0] >= w[1]) {
                return fail("members not strictly ascending".into());
            }
            if node.members.last().is_some_and(|&m| m >= n) {
                return fail("member index out of range".into());
            }
            if node.children.len() == 1 {
                return fail("exactly one child".into());
            }
            match node.parent {
                Some(p) => {
                    let Some(parent) = self.nodes.get(p) else {
                        return fail(format!("unknown parent {p}"));
                    };
                    if p >= node.id {
                        return fail(format!("parent {p} is not born earlier"));
                    }
                    if !parent.children.contains(&node.id) {
                        return fail(format!("parent {p} does not list it as a child"));
                    }
                    if !is_subset(&node.members, &parent.members) {
                        return fail("members not contained in the parent".into());
                    }
                }
                None => {
                    if node.start_mass != 0.0 || node.start_level != T::zero() {
                        return fail("root does not start at level 0 / mass 0".into());
                    }
                }
            }
            let mut seen: Vec<usize> = Vec::new();
            for &c in &node.children {
                let Some(child) = self.nodes.get(c) else {
                    return fail(format!("unknown child {c}"));
                };
                if child.parent != Some(node.id) {
                    return fail(format!("child {c} names a different parent"));
                }
                seen.extend_from_slice(&child.members);
            }
            let total = seen.len();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != total {
                return fail("children overlap".into());
            }
        }
        Ok(())
    }
}

pub(crate) fn mass_in_sorted<T: Scalar>(sorted: &[T], level: T) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let below = sorted.partition_point(|&v| v < level);
    below as f64 / sorted.len() as f64
}

fn is_subset(small: &[usize], big: &[usize]) -> bool {
    let mut it = big.iter();
    small.iter().all(|s| it.any(|b| b == s))
}

/// Renumbers nodes in birth order: ascending start level, then descending size,
/// then smallest member. Children lists are sorted by the new ids.
pub(crate) fn canonicalize<T: Scalar>(nodes: Vec<TreeNode<T>>) -> Vec<TreeNode<T>> {
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (&nodes[a], &nodes[b]);
        total_cmp(&x.start_level, &y.start_level)
            .then(y.size().cmp(&x.size()))
            .then(x.members.first().cmp(&y.members.first()))
    });
    let mut new_id = vec![0; nodes.len()];
    for (new, &old) in order.iter().enumerate() {
        new_id[old] = new;
    }
    let mut slots: Vec<Option<TreeNode<T>>> = nodes.into_iter().map(Some).collect();
    order
        .iter()
        .enumerate()
        .map(|(new, &old)| {
            let mut node = slots[old].take().expect("each node moved once");
            node.id = new;
            node.parent = node.parent.map(|p| new_id[p]);
            for c in &mut node.children {
                *c = new_id[*c];
            }
            node.children.sort_unstable();
            node
        })
        .collect()
}
