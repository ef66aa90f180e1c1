//! End-to-end estimation: density, kNN graph, tree, prune.

use serde::{Deserialize, Serialize};

use crate::density::{density_from_radii, DensityEstimate, DensityKind};
use crate::error::Result;
use crate::graph::{knn_graph, NeighborGraph};
use crate::metrics::{Dissimilarity, FiberSet, PointCloud};
use crate::scalar::{unit_ball_volume, Scalar};
use crate::tree::{build_tree, LevelSetTree};

/// Parameters of a tree estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub k: usize,
    pub gamma: f64,
    /// Max-average-min cutoff; only used for fiber data.
    #[serde(default)]
    pub cutoff: f64,
}

impl TreeParams {
    pub fn new(k: usize, gamma: f64) -> Self {
        Self { k, gamma, cutoff: 0.0 }
    }
}

/// Everything produced along the way, for callers that need more than the tree.
#[derive(Debug, Clone)]
pub struct Estimate<T> {
    pub density: DensityEstimate<T>,
    pub graph: NeighborGraph<T>,
    pub tree: LevelSetTree<T>,
}

/// Runs the pipeline over any distance source; `volume` and `exponent` turn
/// radii into densities (`v_d`, `d` for points; `1`, `1` for pseudo-densities).
pub fn estimate_with<T: Scalar, D: Dissimilarity<T>>(
    data: &D,
    volume: T,
    exponent: usize,
    kind: DensityKind,
    k: usize,
    gamma: f64,
) -> Result<Estimate<T>> {
    let graph = knn_graph(data, k)?;
    let density = density_from_radii(graph.radii(), k, volume, exponent, kind)?;
    let tree = build_tree(&density, &graph, gamma)?;
    Ok(Estimate { density, graph, tree })
}

pub fn estimate_points<T: Scalar>(points: &PointCloud<T>, k: usize, gamma: f64) -> Result<Estimate<T>> {
    estimate_with(
        points,
        unit_ball_volume(points.dim()),
        points.dim(),
        DensityKind::Density,
        k,
        gamma,
    )
}

pub fn estimate_fibers<T: Scalar>(
    fibers: &FiberSet<T>,
    k: usize,
    gamma: f64,
    cutoff: T,
) -> Result<Estimate<T>> {
    estimate_with(
        &fibers.metric(cutoff),
        T::one(),
        1,
        DensityKind::PseudoDensity,
        k,
        gamma,
    )
}

/// A loaded data set of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset<T> {
    Points(PointCloud<T>),
    Fibers(FiberSet<T>),
}

impl<T: Scalar> Dataset<T> {
    pub fn len(&self) -> usize {
        match self {
            Dataset::Points(p) => p.len(),
            Dataset::Fibers(f) => f.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        match self {
            Dataset::Points(p) => Dataset::Points(p.subset(indices)),
            Dataset::Fibers(f) => Dataset::Fibers(f.subset(indices)),
        }
    }

    pub fn estimate(&self, params: &TreeParams) -> Result<Estimate<T>> {
        match self {
            Dataset::Points(p) => estimate_points(p, params.k, params.gamma),
            Dataset::Fibers(f) => {
                estimate_fibers(f, params.k, params.gamma, T::from_f64_lossy(params.cutoff))
            }
        }
    }

    pub fn tree(&self, params: &TreeParams) -> Result<LevelSetTree<T>> {
        self.estimate(params).map(|e| e.tree)
    }

    /// Distance between items `i` and `j` under the data set's own metric.
    pub fn distance(&self, i: usize, j: usize, cutoff: T) -> T {
        match self {
            Dataset::Points(p) => p.distance(i, j),
            Dataset::Fibers(f) => f.metric(cutoff).distance(i, j),
        }
    }
}

/// [`Dataset`] with the fiber cutoff bound, usable wherever distances are needed.
#[derive(Debug, Clone, Copy)]
pub struct DatasetMetric<'a, T> {
    pub data: &'a Dataset<T>,
    pub cutoff: T,
}

impl<T: Scalar> Dissimilarity<T> for DatasetMetric<'_, T> {
    fn len(&self) -> usize {
        self.data.len()
    }

    fn distance(&self, i: usize, j: usize) -> T {
        self.data.distance(i, j, self.cutoff)
    }

    fn row(&self, i: usize, out: &mut [T]) {
        match self.data {
            Dataset::Points(p) => p.row(i, out),
            Dataset::Fibers(f) => f.metric(self.cutoff).row(i, out),
        }
    }
}
