//! Tree variability under subsampling: split masses matched by rank and mode
//! functions (live node counts along the mass scale).

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmark::{derive_seed, seeded_rng};
use crate::error::{Error, Result};
use crate::pipeline::{Dataset, TreeParams};
use crate::scalar::{total_cmp, Scalar};
use crate::tree::LevelSetTree;

pub const STABILITY_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_GRID_POINTS: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityConfig {
    /// Subsample size.
    pub m: usize,
    /// Number of subsamples.
    pub b: usize,
    pub params: TreeParams,
    pub seed: u64,
    /// Draw with replacement instead of plain subsampling.
    #[serde(default)]
    pub bootstrap: bool,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

fn default_grid_points() -> usize {
    DEFAULT_GRID_POINTS
}

impl StabilityConfig {
    pub fn new(m: usize, b: usize, params: TreeParams, seed: u64) -> Self {
        Self {
            m,
            b,
            params,
            seed,
            bootstrap: false,
            grid_points: DEFAULT_GRID_POINTS,
        }
    }
}

/// Node spans of one subsample tree, without members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSummary {
    pub id: usize,
    pub start_level: f64,
    pub end_level: f64,
    pub start_mass: f64,
    pub end_mass: f64,
    pub size: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSummary {
    pub subsample_id: usize,
    pub n: usize,
    pub leaves: usize,
    pub nodes: Vec<NodeSummary>,
}

impl TreeSummary {
    pub fn of<T: Scalar>(subsample_id: usize, tree: &LevelSetTree<T>) -> Self {
        Self {
            subsample_id,
            n: tree.n(),
            leaves: tree.leaves().len(),
            nodes: tree
                .nodes()
                .iter()
                .map(|node| NodeSummary {
                    id: node.id,
                    start_level: node.start_level.as_f64(),
                    end_level: node.end_level.as_f64(),
                    start_mass: node.start_mass,
                    end_mass: node.end_mass,
                    size: node.size(),
                    parent: node.parent,
                    children: node.children.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub format_version: u32,
    pub n: usize,
    pub m: usize,
    pub subsamples: usize,
    pub bootstrap: bool,
    pub params: TreeParams,
    pub seed: u64,
    pub trees: Vec<TreeSummary>,
    /// Ascending split masses per subsample.
    pub split_masses: Vec<Vec<f64>>,
    pub mass_grid: Vec<f64>,
    /// `mode_function[g][s]`: live nodes of subsample `s` at `mass_grid[g]`.
    pub mode_function: Vec<Vec<usize>>,
}

impl StabilityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Long-format mode functions: `mass,subsample_id,count`.
    pub fn mode_function_csv(&self) -> String {
        let mut out = format!("# format_version: {STABILITY_FORMAT_VERSION}\nmass,subsample_id,count\n");
        for (mass, counts) in self.mass_grid.iter().zip(&self.mode_function) {
            for (s, c) in counts.iter().enumerate() {
                let _ = writeln!(out, "{mass},{s},{c}");
            }
        }
        out
    }

    pub fn write(&self, json_path: impl AsRef<Path>, csv_path: Option<&Path>) -> Result<()> {
        std::fs::write(json_path, self.to_json())?;
        if let Some(p) = csv_path {
            std::fs::write(p, self.mode_function_csv())?;
        }
        Ok(())
    }
}

/// `points` equally spaced values covering `[0, 1]`.
pub fn mass_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        p => (0..p).map(|i| i as f64 / (p - 1) as f64).collect(),
    }
}

/// Number of nodes alive at each mass value.
pub fn mode_function<T: Scalar>(tree: &LevelSetTree<T>, grid: &[f64]) -> Vec<usize> {
    grid.iter()
        .map(|&m| tree.nodes().iter().filter(|node| node.spans_mass(m)).count())
        .collect()
}

/// Masses at which nodes split, ascending.
pub fn split_masses<T: Scalar>(tree: &LevelSetTree<T>) -> Vec<f64> {
    let mut masses: Vec<f64> = tree
        .nodes()
        .iter()
        .filter(|node| !node.is_leaf())
        .map(|node| node.end_mass)
        .collect();
    masses.sort_by(total_cmp);
    masses
}

/// Sorted item indices of subsample `id`.
pub fn subsample_indices(n: usize, config: &StabilityConfig, id: usize) -> Vec<usize> {
    let mut rng = seeded_rng(derive_seed(config.seed, &[id as u64]));
    let mut idx: Vec<usize> = if config.bootstrap {
        (0..config.m).map(|_| rng.random_range(0..n)).collect()
    } else {
        index::sample(&mut rng, n, config.m).into_vec()
    };
    idx.sort_unstable();
    idx
}

/// Builds a pruned tree on each of `config.b` random subsamples.
pub fn subsample_trees<T: Scalar>(data: &Dataset<T>, config: &StabilityConfig) -> Result<StabilityReport> {
    let n = data.len();
    if config.b == 0 {
        return Err(Error::invalid("at least one subsample is required"));
    }
    if config.m == 0 || (!config.bootstrap && config.m > n) {
        return Err(Error::invalid(format!("subsample size {} is out of range for {n} items", config.m)));
    }
    let grid = mass_grid(config.grid_points);
    let results: Vec<(TreeSummary, Vec<f64>, Vec<usize>)> = (0..config.b)
        .into_par_iter()
        .map(|id| {
            let idx = subsample_indices(n, config, id);
            let tree = data.subset(&idx).tree(&config.params)?;
            tracing::debug!(subsample = id, nodes = tree.len(), "subsample tree built");
            Ok((TreeSummary::of(id, &tree), split_masses(&tree), mode_function(&tree, &grid)))
        })
        .collect::<Result<_>>()?;

    let mut trees = Vec::with_capacity(config.b);
    let mut splits = Vec::with_capacity(config.b);
    let mut modes = vec![Vec::with_capacity(config.b); grid.len()];
    for (summary, s, counts) in results {
        trees.push(summary);
        splits.push(s);
        for (g, c) in counts.into_iter().enumerate() {
            modes[g].push(c);
        }
    }
    Ok(StabilityReport {
        format_version: STABILITY_FORMAT_VERSION,
        n,
        m: config.m,
        subsamples: config.b,
        bootstrap: config.bootstrap,
        params: config.params,
        seed: config.seed,
        trees,
        split_masses: splits,
        mass_grid: grid,
        mode_function: modes,
    })
}

/// Pooled split masses of one rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankHistogram {
    /// 1 for the lowest split of each subsample.
    pub rank: usize,
    /// Fraction of subsamples that have a split of this rank.
    pub coverage: f64,
    pub values: Vec<f64>,
    /// Bin edges, one more than `counts`.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl RankHistogram {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Sample standard deviation; zero for a single value.
    pub fn sd(&self) -> f64 {
        let k = self.values.len();
        if k < 2 {
            return 0.0;
        }
        let mean = self.mean();
        (self.values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1) as f64).sqrt()
    }
}

/// Histograms of the j-th smallest split mass pooled over subsamples, one
/// per rank up to the largest split count. Ranks not present in every
/// subsample carry a coverage below 1.
pub fn split_mass_histogram(report: &StabilityReport, bins: usize) -> Result<Vec<RankHistogram>> {
    if report.split_masses.len() < 2 {
        return Err(Error::invalid("split mass histograms need at least two subsamples"));
    }
    if bins == 0 {
        return Err(Error::invalid("bins must be at least 1"));
    }
    let b = report.split_masses.len();
    let max_rank = report.split_masses.iter().map(Vec::len).max().unwrap_or(0);
    Ok((0..max_rank)
        .map(|j| {
            let values: Vec<f64> = report.split_masses.iter().filter_map(|s| s.get(j).copied()).collect();
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let (edges, counts) = if lo == hi {
                (vec![lo, hi], vec![values.len()])
            } else {
                let width = (hi - lo) / bins as f64;
                let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
                let mut counts = vec![0; bins];
                for v in &values {
                    counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
                }
                (edges, counts)
            };
            RankHistogram {
                rank: j + 1,
                coverage: values.len() as f64 / b as f64,
                values,
                edges,
                counts,
            }
        })
        .collect())
}
