//! Grid runner: every (scenario, r) cell gets `replicates` fresh data sets and
//! every configured method is scored on each of them.
//!
//! Configuration is a TOML file; all keys are optional:
//!
//! ```toml
//! master_seed = 1            # root of all derived seeds
//! n = 5000                   # points per data set
//! replicates = 20            # data sets per (scenario, r) cell
//! scenarios = ["six-gaussians", "arcs-and-gaussians", "endpoint-surrogate"]
//! r_min = 0.1                # contraction grid, r_count evenly spaced values
//! r_max = 1.2
//! r_count = 20
//! # r_values = [0.5, 1.2]    # explicit grid, overrides r_min/r_max/r_count
//! methods = ["level-set-tree", "kmeans++", "single-linkage", "ward", "dbscan"]
//!
//! [level_set_tree]
//! k = 50                     # neighbors for density and graph
//! gamma = 0.05               # pruning threshold
//! k_assign = 1               # neighbors voting on background items
//!
//! [kmeans]
//! n_init = 10
//! max_iter = 300
//!
//! [dbscan]
//! eps_percentile = 2.0
//! core_percentile = 1.0
//! ```

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labeling::{assign_background, first_k};
use crate::metrics::PointCloud;
use crate::pipeline::estimate_points;

use super::baselines::{dbscan, kmeans_pp, single_linkage, ward_linkage, DbscanConfig, KMeansConfig};
use super::evaluation::error_rate;
use super::scenario::{generate, ScenarioKind};
use super::derive_seed;

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "level-set-tree")]
    LevelSetTree,
    #[serde(rename = "kmeans++")]
    KMeansPP,
    #[serde(rename = "single-linkage")]
    SingleLinkage,
    #[serde(rename = "ward")]
    Ward,
    #[serde(rename = "dbscan")]
    Dbscan,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::LevelSetTree,
        Method::KMeansPP,
        Method::SingleLinkage,
        Method::Ward,
        Method::Dbscan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::LevelSetTree => "level-set-tree",
            Method::KMeansPP => "kmeans++",
            Method::SingleLinkage => "single-linkage",
            Method::Ward => "ward",
            Method::Dbscan => "dbscan",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method {s:?}")))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Level set tree settings for the benchmark: fixed-K extraction followed by
/// background assignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LstConfig {
    pub k: usize,
    pub gamma: f64,
    pub k_assign: usize,
}

impl Default for LstConfig {
    fn default() -> Self {
        Self {
            k: 50,
            gamma: 0.05,
            k_assign: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub master_seed: u64,
    pub n: usize,
    pub replicates: usize,
    pub scenarios: Vec<ScenarioKind>,
    pub r_min: f64,
    pub r_max: f64,
    pub r_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_values: Option<Vec<f64>>,
    pub methods: Vec<Method>,
    pub level_set_tree: LstConfig,
    pub kmeans: KMeansConfig,
    pub dbscan: DbscanConfig,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            master_seed: 1,
            n: 5000,
            replicates: 20,
            scenarios: ScenarioKind::ALL.to_vec(),
            r_min: 0.1,
            r_max: 1.2,
            r_count: 20,
            r_values: None,
            methods: Method::ALL.to_vec(),
            level_set_tree: LstConfig::default(),
            kmeans: KMeansConfig::default(),
            dbscan: DbscanConfig::default(),
        }
    }
}

impl BenchmarkConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::Parse {
                line,
                message: e.message().to_string(),
            }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// The contraction grid, in order.
    pub fn r_grid(&self) -> Vec<f64> {
        if let Some(values) = &self.r_values {
            return values.clone();
        }
        match self.r_count {
            0 => Vec::new(),
            1 => vec![self.r_min],
            c => (0..c)
                .map(|i| self.r_min + (self.r_max - self.r_min) * i as f64 / (c - 1) as f64)
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::invalid("replicates must be at least 1"));
        }
        if self.scenarios.is_empty() || self.methods.is_empty() {
            return Err(Error::invalid("at least one scenario and one method are required"));
        }
        let grid = self.r_grid();
        if grid.is_empty() {
            return Err(Error::invalid("the r grid is empty"));
        }
        if grid.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::invalid("r values must be positive"));
        }
        if self.level_set_tree.k == 0 || self.level_set_tree.k_assign == 0 {
            return Err(Error::invalid("level_set_tree.k and k_assign must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.level_set_tree.gamma) {
            return Err(Error::invalid("level_set_tree.gamma must lie in [0, 1)"));
        }
        let pct = |p: f64| (0.0..=100.0).contains(&p);
        if !pct(self.dbscan.eps_percentile) || !pct(self.dbscan.core_percentile) {
            return Err(Error::invalid("dbscan percentiles must lie in [0, 100]"));
        }
        Ok(())
    }
}

/// Mean and sample standard deviation of one method's errors in one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub scenario: ScenarioKind,
    pub r: f64,
    pub method: Method,
    pub mean_error: f64,
    pub sd_error: f64,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
}

impl ErrorReport {
    pub fn row(&self, scenario: ScenarioKind, method: Method, r: f64) -> Option<&ErrorRow> {
        self.rows
            .iter()
            .find(|row| row.scenario == scenario && row.method == method && row.r == r)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# format_version: {REPORT_FORMAT_VERSION}\n");
        out.push_str("scenario,r,method,mean_error,sd_error,replicates\n");
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                row.scenario, row.r, row.method, row.mean_error, row.sd_error, row.replicates
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Level set tree labels for a fixed number of groups. When `groups` clusters
/// cannot be extracted the largest achievable smaller count is used, and the
/// background is then assigned to the nearest foreground clusters.
pub fn level_set_tree_labels(points: &PointCloud<f64>, groups: usize, config: &LstConfig) -> Result<Vec<Option<usize>>> {
    let est = estimate_points(points, config.k, config.gamma)?;
    let mut target = groups;
    let labeling = loop {
        match first_k(&est.tree, target) {
            Ok(l) => break l,
            Err(Error::UnachievableK { .. }) if target > 1 => target -= 1,
            Err(e) => return Err(e),
        }
    };
    Ok(assign_background(&labeling, points, config.k_assign)?.labels)
}

fn score(
    method: Method,
    points: &PointCloud<f64>,
    truth: &[usize],
    groups: usize,
    seed: u64,
    config: &BenchmarkConfig,
) -> Result<f64> {
    let some = |v: Vec<usize>| v.into_iter().map(Some).collect::<Vec<_>>();
    let predicted = match method {
        Method::LevelSetTree => level_set_tree_labels(points, groups, &config.level_set_tree)?,
        Method::KMeansPP => some(kmeans_pp(points, groups, seed, &config.kmeans)?),
        Method::SingleLinkage => some(single_linkage(points, groups)?),
        Method::Ward => some(ward_linkage(points, groups)?),
        Method::Dbscan => dbscan(points, &config.dbscan.params(points)?)?,
    };
    error_rate(&predicted, truth)
}

/// Runs the whole grid. Every data set and every randomized method draws from
/// a seed derived from the master seed and its grid position, so results do
/// not depend on scheduling or thread count.
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<ErrorReport> {
    config.validate()?;
    let grid = config.r_grid();
    let tasks: Vec<(usize, usize, usize)> = (0..config.scenarios.len())
        .flat_map(|s| (0..grid.len()).flat_map(move |r| (0..config.replicates).map(move |rep| (s, r, rep))))
        .collect();

    let scores: Vec<Vec<f64>> = tasks
        .par_iter()
        .map(|&(s, r, rep)| {
            let kind = config.scenarios[s];
            let data_seed = derive_seed(config.master_seed, &[kind as u64, r as u64, rep as u64]);
            let scenario = generate(kind, config.n, grid[r], data_seed)?;
            let groups = scenario.groups();
            let errors = config
                .methods
                .iter()
                .map(|&m| {
                    let seed = derive_seed(data_seed, &[m as u64]);
                    score(m, &scenario.points, &scenario.truth, groups, seed, config)
                })
                .collect::<Result<Vec<f64>>>()?;
            tracing::debug!(scenario = %kind, r = grid[r], replicate = rep, "replicate done");
            Ok(errors)
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let reps = config.replicates;
    for (s, &kind) in config.scenarios.iter().enumerate() {
        for (ri, &r) in grid.iter().enumerate() {
            let base = (s * grid.len() + ri) * reps;
            for (mi, &method) in config.methods.iter().enumerate() {
                let errs: Vec<f64> = scores[base..base + reps].iter().map(|e| e[mi]).collect();
                let mean = errs.iter().sum::<f64>() / reps as f64;
                let sd = if reps > 1 {
                    (errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (reps - 1) as f64).sqrt()
                } else {
                    0.0
                };
                rows.push(ErrorRow {
                    scenario: kind,
                    r,
                    method,
                    mean_error: mean,
                    sd_error: sd,
                    replicates: reps,
                });
            }
        }
    }
    Ok(ErrorReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> BenchmarkConfig {
        BenchmarkConfig {
            n: 300,
            replicates: 2,
            scenarios: vec![ScenarioKind::SixGaussians],
            r_values: Some(vec![1.2]),
            level_set_tree: LstConfig {
                k: 15,
                gamma: 0.05,
                k_assign: 1,
            },
            kmeans: KMeansConfig { n_init: 3, max_iter: 100 },
            ..BenchmarkConfig::default()
        }
    }

    #[test]
    fn default_grid() {
        let g = BenchmarkConfig::default().r_grid();
        assert_eq!(g.len(), 20);
        assert_eq!(g[0], 0.1);
        assert!((g[19] - 1.2).abs() < 1e-15);
    }

    #[test]
    fn single_row() {
        let config = BenchmarkConfig {
            replicates: 1,
            methods: vec![Method::KMeansPP],
            ..small()
        };
        let report = run_benchmark(&config).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.rows[0].replicates, 1);
        assert_eq!(report.rows[0].sd_error, 0.0);
    }

    #[test]
    fn reproducible_and_bounded() {
        let config = small();
        let a = run_benchmark(&config).unwrap();
        let b = run_benchmark(&config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 5);
        for row in &a.rows {
            assert!((0.0..=1.0).contains(&row.mean_error));
        }
        let csv = a.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("# format_version: 1"));
        assert_eq!(lines.next(), Some("scenario,r,method,mean_error,sd_error,replicates"));
        assert!(lines.next().unwrap().starts_with("six-gaussians,1.2,level-set-tree,"));
    }

    #[test]
    fn toml_round_trip_and_errors() {
        let config = small();
        assert_eq!(BenchmarkConfig::from_toml(&config.to_toml()).unwrap(), config);
        let parsed = BenchmarkConfig::from_toml("n = 100\nmethods = [\"ward\"]\n").unwrap();
        assert_eq!(parsed.methods, vec![Method::Ward]);
        assert_eq!(parsed.replicates, 20);
        match BenchmarkConfig::from_toml("n = 100\nbogus = 3\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(BenchmarkConfig::from_toml("replicates = 0").is_err());
        assert!(BenchmarkConfig::from_toml("methods = [\"gmm\"]").is_err());
    }
}
