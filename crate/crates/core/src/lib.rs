//! Density-based hierarchical clustering with level set trees.
//!
//! The pipeline estimates a kNN density (or, for fiber tracks, a pseudo-density
//! under the max-average-min distance), links items in a union kNN graph, and
//! records how the connected components of the upper level sets
//! `{i : f(i) >= λ}` split as λ rises. Small branches are pruned away and the
//! resulting tree can be cut into clusters in several ways.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below name the common double precision instantiations.
//!
//! ```
//! use levelset::{estimate_points, labeling::all_mode, PointCloud64};
//!
//! let xs: Vec<Vec<f64>> = (0..40)
//!     .map(|i| vec![if i < 20 { i as f64 * 0.01 } else { 5.0 + i as f64 * 0.01 }])
//!     .collect();
//! let est = estimate_points(&PointCloud64::new(xs).unwrap(), 5, 0.1).unwrap();
//! let clusters = all_mode(&est.tree);
//! assert_eq!(clusters.cluster_ids().len(), 2);
//! ```

pub mod benchmark;
pub mod density;
pub mod error;
pub mod graph;
pub mod io;
pub mod labeling;
pub mod metrics;
pub mod pipeline;
pub mod scalar;
pub mod stability;
pub mod tree;
mod union_find;

pub use density::{knn_density, knn_radius, pseudo_density, DensityEstimate, DensityKind};
pub use error::{Error, Result};
pub use graph::{components, knn_graph, ComponentLabeling, NeighborGraph};
pub use labeling::{ClusterLabeling, ClusterRequest, Cut};
pub use metrics::{
    euclidean, fiber_distance, pairwise_distances, DistanceMatrix, Dissimilarity, FiberSet,
    PointCloud,
};
pub use pipeline::{estimate_fibers, estimate_points, Dataset, Estimate, TreeParams};
pub use scalar::Scalar;
pub use tree::{build_tree, build_unpruned, prune, LevelSetTree, Scale, TreeNode};

pub type PointCloud64 = PointCloud<f64>;
pub type PointCloud32 = PointCloud<f32>;
pub type FiberSet64 = FiberSet<f64>;
pub type FiberSet32 = FiberSet<f32>;
pub type LevelSetTree64 = LevelSetTree<f64>;
pub type LevelSetTree32 = LevelSetTree<f32>;
pub type Dataset64 = Dataset<f64>;
