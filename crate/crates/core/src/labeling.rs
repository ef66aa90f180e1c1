//! Cluster extraction from a level set tree: level cuts, all-mode, first-K,
//! and nearest-neighbor assignment of background items.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::metrics::Dissimilarity;
use crate::scalar::{total_cmp, Scalar};
use crate::tree::LevelSetTree;

pub const LABELING_FORMAT_VERSION: u32 = 1;

/// Where to cut across a tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cut<T> {
    Level(T),
    Mass(f64),
}

/// Per-item cluster ids (tree node ids); `None` marks background items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterLabeling {
    pub method: String,
    pub params: Map<String, Value>,
    pub labels: Vec<Option<usize>>,
}

impl ClusterLabeling {
    fn from_clusters(n: usize, method: &str, params: Value, clusters: &[(usize, Vec<usize>)]) -> Self {
        let mut labels = vec![None; n];
        for (id, members) in clusters {
            for &i in members {
                labels[i] = Some(*id);
            }
        }
        let params = match params {
            Value::Object(m) => m,
            _ => Map::new(),
        };
        Self {
            method: method.to_string(),
            params,
            labels,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn foreground(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i].is_some()).collect()
    }

    pub fn background(&self) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i].is_none()).collect()
    }

    /// Distinct cluster ids, ascending.
    pub fn cluster_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.labels.iter().flatten().copied().collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Member lists keyed by cluster id.
    pub fn clusters(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, l) in self.labels.iter().enumerate() {
            if let Some(l) = l {
                out.entry(*l).or_default().push(i);
            }
        }
        out
    }

    pub fn to_document(&self) -> LabelingDocument {
        LabelingDocument {
            format_version: LABELING_FORMAT_VERSION,
            method: self.method.clone(),
            params: self.params.clone(),
            labels: self.labels.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("labelings always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: LabelingDocument = serde_json::from_str(text)?;
        if doc.format_version != LABELING_FORMAT_VERSION {
            return Err(Error::Unsupported(format!(
                "labeling format version {}",
                doc.format_version
            )));
        }
        Ok(Self {
            method: doc.method,
            params: doc.params,
            labels: doc.labels,
        })
    }
}

/// Serialized form of a [`ClusterLabeling`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelingDocument {
    pub format_version: u32,
    pub method: String,
    pub params: Map<String, Value>,
    pub labels: Vec<Option<usize>>,
}

/// One cluster per node alive at the cut; items below the cut are background.
pub fn cut_at<T: Scalar>(tree: &LevelSetTree<T>, cut: Cut<T>) -> Result<ClusterLabeling> {
    let (level, params) = match cut {
        Cut::Level(level) => {
            if !(level >= T::zero()) {
                return Err(Error::invalid(format!("cut level must be nonnegative, got {level}")));
            }
            (Some(level), json!({ "level": level.as_f64() }))
        }
        Cut::Mass(mass) => {
            if !(0.0..=1.0).contains(&mass) {
                return Err(Error::invalid(format!("cut mass must lie in [0, 1], got {mass}")));
            }
            (tree.level_of_mass(mass), json!({ "mass": mass }))
        }
    };
    let clusters: Vec<(usize, Vec<usize>)> = match level {
        Some(level) => tree
            .nodes()
            .iter()
            .filter(|node| node.spans_level(level))
            .map(|node| (node.id, tree.members_above(node, level)))
            .collect(),
        None => Vec::new(),
    };
    Ok(ClusterLabeling::from_clusters(tree.n(), "cut", params, &clusters))
}

/// One cluster per leaf, holding the leaf's members at its start level.
pub fn all_mode<T: Scalar>(tree: &LevelSetTree<T>) -> ClusterLabeling {
    let clusters: Vec<(usize, Vec<usize>)> = tree
        .leaves()
        .into_iter()
        .map(|id| (id, tree.nodes()[id].members.clone()))
        .collect();
    ClusterLabeling::from_clusters(tree.n(), "leaf", json!({}), &clusters)
}

/// Node ids of the first `k` disjoint components to appear as the level rises.
///
/// Starting from the roots, the live node that splits lowest is replaced by
/// its children until exactly `k` nodes remain. Equal split levels go to the
/// larger node first, then the smaller id.
pub fn first_k_nodes<T: Scalar>(tree: &LevelSetTree<T>, k: usize) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::invalid("K must be at least 1"));
    }
    let nodes = tree.nodes();
    let mut frontier = tree.roots();
    while frontier.len() < k {
        let next = frontier
            .iter()
            .enumerate()
            .filter(|(_, &id)| !nodes[id].is_leaf())
            .min_by(|(_, &a), (_, &b)| {
                let (x, y) = (&nodes[a], &nodes[b]);
                total_cmp(&x.end_level, &y.end_level)
                    .then(y.size().cmp(&x.size()))
                    .then(a.cmp(&b))
            })
            .map(|(pos, _)| pos);
        let Some(pos) = next else { break };
        let id = frontier.swap_remove(pos);
        frontier.extend_from_slice(&nodes[id].children);
    }
    if frontier.len() != k {
        return Err(Error::UnachievableK { requested: k });
    }
    frontier.sort_unstable();
    Ok(frontier)
}

pub fn first_k<T: Scalar>(tree: &LevelSetTree<T>, k: usize) -> Result<ClusterLabeling> {
    let ids = first_k_nodes(tree, k)?;
    let clusters: Vec<(usize, Vec<usize>)> = ids
        .into_iter()
        .map(|id| (id, tree.nodes()[id].members.clone()))
        .collect();
    Ok(ClusterLabeling::from_clusters(tree.n(), "first-k", json!({ "K": k }), &clusters))
}

/// Labels every background item by majority vote among its `k_assign` nearest
/// foreground items (distance ties go to the lower index, vote ties to the
/// smaller cluster id). Foreground labels are left untouched.
pub fn assign_background<T: Scalar, D: Dissimilarity<T>>(
    labeling: &ClusterLabeling,
    data: &D,
    k_assign: usize,
) -> Result<ClusterLabeling> {
    if data.len() != labeling.len() {
        return Err(Error::invalid(format!(
            "labeling covers {} items but the data has {}",
            labeling.len(),
            data.len()
        )));
    }
    if k_assign == 0 {
        return Err(Error::invalid("k_assign must be at least 1"));
    }
    let foreground = labeling.foreground();
    if foreground.is_empty() {
        return Err(Error::invalid("cannot assign background items without a foreground"));
    }
    let background = labeling.background();
    let k = k_assign.min(foreground.len());
    let n = data.len();

    let assigned: Vec<usize> = background
        .par_iter()
        .map_init(
            || vec![T::zero(); n],
            |row, &i| {
                data.row(i, row);
                let mut near: Vec<(T, usize)> = foreground.iter().map(|&j| (row[j], j)).collect();
                let by_distance = |a: &(T, usize), b: &(T, usize)| total_cmp(&a.0, &b.0).then(a.1.cmp(&b.1));
                if k < near.len() {
                    near.select_nth_unstable_by(k - 1, by_distance);
                    near.truncate(k);
                }
                let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
                for (_, j) in near {
                    *votes.entry(labeling.labels[j].expect("foreground item")).or_default() += 1;
                }
                // BTreeMap iterates ids ascending; keep the first maximum
                votes
                    .into_iter()
                    .fold((usize::MAX, 0), |best, (id, c)| if c > best.1 { (id, c) } else { best })
                    .0
            },
        )
        .collect();

    let mut out = labeling.clone();
    for (&i, &label) in background.iter().zip(&assigned) {
        out.labels[i] = Some(label);
    }
    out.params.insert("assign_background".into(), json!({ "k_assign": k_assign }));
    Ok(out)
}

/// A labeling recipe as accepted by the command line and the HTTP service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRequest {
    /// `cut`, `leaf` or `first-k`.
    pub method: String,
    #[serde(default)]
    pub params: ClusterParams,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default)]
    pub assign_background: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_assign: Option<usize>,
}

impl ClusterRequest {
    /// Runs the request. `data` is needed only for background assignment.
    pub fn run<T: Scalar, D: Dissimilarity<T>>(
        &self,
        tree: &LevelSetTree<T>,
        data: Option<&D>,
    ) -> Result<ClusterLabeling> {
        let p = &self.params;
        let labeling = match self.method.as_str() {
            "cut" => match (p.level, p.mass) {
                (Some(level), None) => cut_at(tree, Cut::Level(T::from_f64_lossy(level)))?,
                (None, Some(mass)) => cut_at(tree, Cut::Mass(mass))?,
                _ => return Err(Error::invalid("a cut needs exactly one of level or mass")),
            },
            "leaf" => all_mode(tree),
            "first-k" => {
                let k = p.k.ok_or_else(|| Error::invalid("first-k needs K"))?;
                first_k(tree, k)?
            }
            other => return Err(Error::invalid(format!("unknown method {other:?}"))),
        };
        if !p.assign_background {
            return Ok(labeling);
        }
        let data = data.ok_or_else(|| Error::invalid("background assignment needs the data set"))?;
        assign_background(&labeling, data, p.k_assign.unwrap_or(1))
    }
}
