#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use levelset::{knn_density, knn_graph, LevelSetTree, NeighborGraph, PointCloud};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// A tree node described by its member set instead of its id.
#[derive(Debug, Clone, PartialEq)]
pub struct Shape {
    pub start_level: f64,
    pub end_level: f64,
    pub parent: Option<Vec<usize>>,
    pub children: BTreeSet<Vec<usize>>,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Connected components of the subgraph induced by `active`, by BFS.
fn bfs_components(graph: &NeighborGraph<f64>, active: &[bool]) -> Vec<Vec<usize>> {
    let n = active.len();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if !active[s] || seen[s] {
            continue;
        }
        let mut comp = Vec::new();
        let mut queue = VecDeque::from([s]);
        seen[s] = true;
        while let Some(v) = queue.pop_front() {
            comp.push(v);
            for &u in graph.neighbors(v) {
                if active[u] && !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

struct Open {
    members: Vec<usize>,
    start: f64,
    parent: Option<Vec<usize>>,
    children: BTreeSet<Vec<usize>>,
    /// Component at the most recent level.
    current: Vec<usize>,
}

/// The literal construction: at each distinct density level, ascending,
/// recompute the components of `{i : f(i) >= level}` and link them to the
/// components one level down.
pub fn naive_tree(density: &[f64], graph: &NeighborGraph<f64>) -> BTreeMap<Vec<usize>, Shape> {
    let mut levels: Vec<f64> = density.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();

    let mut done: BTreeMap<Vec<usize>, Shape> = BTreeMap::new();
    let mut open: Vec<Open> = Vec::new();
    let mut prev_level = 0.0;
    for (j, &level) in levels.iter().enumerate() {
        let active: Vec<bool> = density.iter().map(|&f| f >= level).collect();
        let comps = bfs_components(graph, &active);
        if j == 0 {
            open = comps
                .into_iter()
                .map(|c| Open {
                    members: c.clone(),
                    start: 0.0,
                    parent: None,
                    children: BTreeSet::new(),
                    current: c,
                })
                .collect();
            prev_level = level;
            continue;
        }
        let mut next = Vec::new();
        for mut node in open {
            let held: BTreeSet<usize> = node.current.iter().copied().collect();
            let continuations: Vec<&Vec<usize>> = comps.iter().filter(|c| held.contains(&c[0])).collect();
            match continuations.len() {
                0 => {
                    done.insert(
                        node.members,
                        Shape {
                            start_level: node.start,
                            end_level: prev_level,
                            parent: node.parent,
                            children: node.children,
                        },
                    );
                }
                1 => {
                    node.current = continuations[0].clone();
                    next.push(node);
                }
                _ => {
                    for c in &continuations {
                        node.children.insert((*c).clone());
                        next.push(Open {
                            members: (*c).clone(),
                            start: level,
                            parent: Some(node.members.clone()),
                            children: BTreeSet::new(),
                            current: (*c).clone(),
                        });
                    }
                    done.insert(
                        node.members,
                        Shape {
                            start_level: node.start,
                            end_level: level,
                            parent: node.parent,
                            children: node.children,
                        },
                    );
                }
            }
        }
        open = next;
        prev_level = level;
    }
    for node in open {
        done.insert(
            node.members,
            Shape {
                start_level: node.start,
                end_level: prev_level,
                parent: node.parent,
                children: node.children,
            },
        );
    }
    done
}

/// The same id-free description of a built tree.
pub fn shapes(tree: &LevelSetTree<f64>) -> BTreeMap<Vec<usize>, Shape> {
    let nodes = tree.nodes();
    nodes
        .iter()
        .map(|node| {
            (
                node.members.clone(),
                Shape {
                    start_level: node.start_level,
                    end_level: node.end_level,
                    parent: node.parent.map(|p| nodes[p].members.clone()),
                    children: node.children.iter().map(|&c| nodes[c].members.clone()).collect(),
                },
            )
        })
        .collect()
}

/// Gaussian blobs in `dim` dimensions; every `quantize`d data set is rounded
/// to a coarse grid so density ties occur.
pub fn random_cloud(seed: u64, n: usize, dim: usize, quantize: bool) -> PointCloud<f64> {
    let mut r = rng(seed);
    let blobs = r.random_range(1..=4);
    let centers: Vec<Vec<f64>> = (0..blobs)
        .map(|_| (0..dim).map(|_| r.random_range(-6.0..6.0)).collect())
        .collect();
    let rows = (0..n)
        .map(|_| {
            let c = &centers[r.random_range(0..blobs)];
            c.iter()
                .map(|&m| {
                    let z: f64 = StandardNormal.sample(&mut r);
                    let x = m + z;
                    if quantize {
                        (x * 4.0).round() / 4.0
                    } else {
                        x
                    }
                })
                .collect()
        })
        .collect();
    PointCloud::new(rows).unwrap()
}

/// The parameter sweep used for oracle comparisons.
pub fn oracle_case(i: u64) -> (PointCloud<f64>, usize) {
    let mut r = rng(1000 + i);
    let n = r.random_range(50..=300);
    let dim = r.random_range(1..=3);
    let k = if r.random_bool(0.5) { 5 } else { 15 };
    (random_cloud(7919 * i + 1, n, dim, i % 5 == 4), k)
}

/// Builds the unpruned tree and the oracle for one data set and returns both.
pub fn both_trees(points: &PointCloud<f64>, k: usize) -> (BTreeMap<Vec<usize>, Shape>, BTreeMap<Vec<usize>, Shape>) {
    let density = knn_density(points, k).unwrap();
    let graph = knn_graph(points, k).unwrap();
    let tree = levelset::build_unpruned(&density, &graph).unwrap();
    tree.validate().unwrap();
    (shapes(&tree), naive_tree(&density.values, &graph))
}

/// Draws from a mixture of 1D Gaussians.
pub fn mixture_1d(seed: u64, n: usize, means: &[f64], sds: &[f64], weights: &[f64]) -> PointCloud<f64> {
    let mut r = rng(seed);
    let rows = (0..n)
        .map(|_| {
            let mut u: f64 = r.random();
            let mut g = weights.len() - 1;
            for (i, &w) in weights.iter().enumerate() {
                if u < w {
                    g = i;
                    break;
                }
                u -= w;
            }
            let z: f64 = StandardNormal.sample(&mut r);
            vec![means[g] + sds[g] * z]
        })
        .collect();
    PointCloud::new(rows).unwrap()
}
