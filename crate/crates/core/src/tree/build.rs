use crate::density::DensityEstimate;
use crate::error::{Error, Result};
use crate::graph::NeighborGraph;
use crate::scalar::{total_cmp, Scalar};
use crate::union_find::DisjointSet;

use super::{canonicalize, mass_in_sorted, prune, LevelSetTree, TreeNode};

/// A node whose start is discovered later: components are tracked from the
/// densest level downwards, so a node's end is known first.
struct Proto<T> {
    start_level: Option<T>,
    end_level: T,
    members: Vec<usize>,
    children: Vec<usize>,
}

/// Level set tree of `density` over `graph`, pruned with threshold `gamma`.
pub fn build_tree<T: Scalar>(
    density: &DensityEstimate<T>,
    graph: &NeighborGraph<T>,
    gamma: f64,
) -> Result<LevelSetTree<T>> {
    prune(&build_unpruned(density, graph)?, gamma)
}

/// The full, unpruned level set tree.
///
/// Items are added in descending density order, one distinct level at a time,
/// while a disjoint-set forest tracks the components of the induced subgraph.
/// A level that joins two or more previously separate components marks a
/// split: those components become children born at the previous (higher)
/// level, and the merged component becomes a new node ending there.
pub fn build_unpruned<T: Scalar>(
    density: &DensityEstimate<T>,
    graph: &NeighborGraph<T>,
) -> Result<LevelSetTree<T>> {
    let values = &density.values;
    let n = values.len();
    if n == 0 {
        return Err(Error::invalid("cannot build a tree on an empty sample"));
    }
    if graph.n() != n {
        return Err(Error::invalid(format!(
            "density has {n} items but the graph has {} vertices",
            graph.n()
        )));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite() || *v <= T::zero()) {
        return Err(Error::invalid(format!("density of item {i} is not a positive finite number")));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| total_cmp(&values[b], &values[a]).then(a.cmp(&b)));

    let mut ds = DisjointSet::new(n);
    let mut active = vec![false; n];
    // indexed by disjoint-set root
    let mut node_of = vec![usize::MAX; n];
    let mut members_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut protos: Vec<Proto<T>> = Vec::new();

    let mut prev_level: Option<T> = None;
    let mut start = 0;
    while start < n {
        let level = values[order[start]];
        let mut end = start;
        while end < n && values[order[end]] == level {
            end += 1;
        }
        let fresh = &order[start..end];

        // components from higher levels touched by this level
        let mut touched: Vec<usize> = Vec::new();
        for &v in fresh {
            for &u in graph.neighbors(v) {
                if active[u] {
                    touched.push(ds.find(u));
                }
            }
        }
        touched.sort_unstable();
        touched.dedup();
        let old_parts: Vec<(usize, usize, Vec<usize>)> = touched
            .iter()
            .map(|&r| (r, node_of[r], std::mem::take(&mut members_of[r])))
            .collect();

        for &v in fresh {
            active[v] = true;
        }
        for &v in fresh {
            for &u in graph.neighbors(v) {
                if active[u] {
                    ds.union(u, v);
                }
            }
        }

        // group old components and fresh items by their new root
        let mut groups: Vec<(usize, Vec<usize>, Vec<usize>)> = Vec::new();
        let mut group_of = std::collections::HashMap::new();
        for (idx, (r, _, _)) in old_parts.iter().enumerate() {
            let g = ds.find(*r);
            let slot = *group_of.entry(g).or_insert_with(|| {
                groups.push((g, Vec::new(), Vec::new()));
                groups.len() - 1
            });
            groups[slot].1.push(idx);
        }
        for &v in fresh {
            let g = ds.find(v);
            let slot = *group_of.entry(g).or_insert_with(|| {
                groups.push((g, Vec::new(), Vec::new()));
                groups.len() - 1
            });
            groups[slot].2.push(v);
        }

        let mut parts: Vec<Option<(usize, Vec<usize>)>> =
            old_parts.into_iter().map(|(_, node, m)| Some((node, m))).collect();
        for (root, part_idx, new_items) in groups {
            match part_idx.len() {
                0 => {
                    protos.push(Proto {
                        start_level: None,
                        end_level: level,
                        members: Vec::new(),
                        children: Vec::new(),
                    });
                    node_of[root] = protos.len() - 1;
                    members_of[root] = new_items;
                }
                1 => {
                    let (node, mut members) = parts[part_idx[0]].take().expect("part used once");
                    members.extend(new_items);
                    node_of[root] = node;
                    members_of[root] = members;
                }
                _ => {
                    let born = prev_level.expect("older components imply a higher level");
                    let mut merged = Vec::new();
                    let mut children = Vec::with_capacity(part_idx.len());
                    for idx in part_idx {
                        let (node, members) = parts[idx].take().expect("part used once");
                        merged.extend_from_slice(&members);
                        let p = &mut protos[node];
                        p.start_level = Some(born);
                        p.members = members;
                        children.push(node);
                    }
                    merged.extend(new_items);
                    protos.push(Proto {
                        start_level: None,
                        end_level: born,
                        members: Vec::new(),
                        children,
                    });
                    node_of[root] = protos.len() - 1;
                    members_of[root] = merged;
                }
            }
        }

        prev_level = Some(level);
        start = end;
    }

    // whatever is still open is a root
    for v in 0..n {
        if ds.find(v) == v {
            let p = &mut protos[node_of[v]];
            p.start_level = Some(T::zero());
            p.members = std::mem::take(&mut members_of[v]);
        }
    }

    let mut parent = vec![None; protos.len()];
    for (id, p) in protos.iter().enumerate() {
        for &c in &p.children {
            parent[c] = Some(id);
        }
    }

    let mut sorted = values.clone();
    sorted.sort_by(total_cmp);
    let nodes = protos
        .into_iter()
        .enumerate()
        .map(|(id, p)| {
            let start_level = p.start_level.expect("every node receives a start level");
            let mut members = p.members;
            members.sort_unstable();
            TreeNode {
                id,
                start_level,
                end_level: p.end_level,
                start_mass: mass_in_sorted(&sorted, start_level),
                end_mass: mass_in_sorted(&sorted, p.end_level),
                members,
                parent: parent[id],
                children: p.children,
            }
        })
        .collect();

    Ok(LevelSetTree::new_unchecked(
        canonicalize(nodes),
        density.k,
        0.0,
        values.clone(),
    ))
}
