use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{canonicalize, LevelSetTree, TreeNode};

/// Dissolves every non-root node with fewer than `gamma · n` members.
///
/// Works bottom-up. A dissolved child's items fall back into its parent's
/// continuing component. When fewer than two children of a split survive, the
/// split disappears: a lone survivor is spliced into the parent, and a parent
/// left without children becomes a leaf ending at its densest member.
/// Pruning twice with the same `gamma` changes nothing.
pub fn prune<T: Scalar>(tree: &LevelSetTree<T>, gamma: f64) -> Result<LevelSetTree<T>> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::invalid(format!("gamma must lie in [0, 1), got {gamma}")));
    }
    let threshold = gamma * tree.n() as f64;
    let small = |node: &TreeNode<T>| (node.size() as f64) < threshold;

    let mut slots: Vec<Option<TreeNode<T>>> = tree.nodes().iter().cloned().map(Some).collect();

    // parents are born strictly earlier, so descending id is a valid bottom-up order
    for id in (0..slots.len()).rev() {
        let Some(node) = slots[id].as_ref() else { continue };
        if node.children.is_empty() {
            continue;
        }
        let (keep, drop): (Vec<usize>, Vec<usize>) = node
            .children
            .iter()
            .partition(|&&c| !small(slots[c].as_ref().expect("children are live")));
        if drop.is_empty() {
            continue;
        }
        for c in drop {
            remove_subtree(&mut slots, c);
        }
        match keep.len() {
            0 => become_leaf(&mut slots, id, tree.density_values()),
            1 => {
                let survivor = slots[keep[0]].take().expect("survivor is live");
                for &g in &survivor.children {
                    slots[g].as_mut().expect("grandchild is live").parent = Some(id);
                }
                let node = slots[id].as_mut().expect("node is live");
                node.children = survivor.children;
                node.end_level = survivor.end_level;
                if node.children.is_empty() {
                    become_leaf(&mut slots, id, tree.density_values());
                }
            }
            _ => slots[id].as_mut().expect("node is live").children = keep,
        }
    }

    let mut compact = vec![usize::MAX; slots.len()];
    let mut next = 0;
    for (old, s) in slots.iter().enumerate() {
        if s.is_some() {
            compact[old] = next;
            next += 1;
        }
    }
    let mut nodes: Vec<TreeNode<T>> = slots
        .into_iter()
        .flatten()
        .map(|mut node| {
            node.parent = node.parent.map(|p| compact[p]);
            for c in &mut node.children {
                *c = compact[*c];
            }
            node
        })
        .collect();
    for node in &mut nodes {
        node.end_mass = tree.mass_of_level(node.end_level);
    }
    for (pos, node) in nodes.iter_mut().enumerate() {
        node.id = pos;
    }

    Ok(LevelSetTree::new_unchecked(
        canonicalize(nodes),
        tree.k(),
        gamma.max(tree.gamma()),
        tree.density_values().to_vec(),
    ))
}

fn remove_subtree<T>(slots: &mut [Option<TreeNode<T>>], root: usize) {
    let mut stack = vec![root];
    while let Some(id) = stack.pop() {
        if let Some(node) = slots[id].take() {
            stack.extend(node.children);
        }
    }
}

fn become_leaf<T: Scalar>(slots: &mut [Option<TreeNode<T>>], id: usize, density: &[T]) {
    let node = slots[id].as_mut().expect("node is live");
    node.children.clear();
    node.end_level = node
        .members
        .iter()
        .map(|&i| density[i])
        .fold(node.start_level, T::max);
}
