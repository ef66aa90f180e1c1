//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Run with `cargo test -p levelset --test acceptance`.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use common::*;
use levelset::benchmark::{error_rate, run_benchmark, BenchmarkConfig, Method, ScenarioKind};
use levelset::error::Error;
use levelset::labeling::{all_mode, cut_at, first_k, Cut};
use levelset::stability::{split_mass_histogram, subsample_trees, StabilityConfig};
use levelset::{estimate_points, knn_density, Dataset, LevelSetTree64, PointCloud, TreeParams};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

const FIVE_NODE: &str = include_str!("../fixtures/five_node_tree.json");

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn single_threaded<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(f)
}

fn secs(d: Duration) -> String {
    format!("{:.1} s", d.as_secs_f64())
}

fn oracle_equivalence() -> Outcome {
    let started = Instant::now();
    let same = (0..50)
        .filter(|&i| {
            let (points, k) = oracle_case(i);
            let (fast, naive) = both_trees(&points, k);
            fast == naive
        })
        .count();
    let elapsed = started.elapsed();
    outcome(
        same == 50 && elapsed < Duration::from_secs(60),
        format!("{same}/50 identical to per-level recomputation in {} (limit 60 s)", secs(elapsed)),
    )
}

fn three_mode_mixture() -> Outcome {
    let counts: Vec<usize> = (0..20)
        .map(|seed| {
            let points = mixture_1d(seed, 2000, &[-4.0, 0.0, 5.0], &[1.0, 1.0, 1.0], &[0.25, 0.4, 0.35]);
            estimate_points(&points, 100, 0.05).unwrap().tree.leaves().len()
        })
        .collect();
    let hits = counts.iter().filter(|&&c| c == 3).count();
    outcome(hits >= 18, format!("{hits}/20 seeds give exactly 3 leaves (need 18), leaf counts {counts:?}"))
}

fn five_node_fixture() -> Outcome {
    let expected: [(usize, f64, f64, f64, f64, usize, Option<usize>, &[usize]); 5] = [
        (0, 0.000, 0.005, 0.000, 0.021, 2001, None, &[1, 2]),
        (1, 0.005, 0.061, 0.021, 0.528, 1309, Some(0), &[3, 4]),
        (2, 0.005, 0.165, 0.021, 0.998, 649, Some(0), &[]),
        (3, 0.061, 0.167, 0.528, 0.999, 359, Some(1), &[]),
        (4, 0.061, 0.172, 0.528, 0.999, 295, Some(1), &[]),
    ];
    let tree = LevelSetTree64::from_json(&LevelSetTree64::from_json(FIVE_NODE).unwrap().to_json()).unwrap();
    let fields = tree.len() == 5
        && tree.nodes().iter().zip(expected).all(|(n, (id, sl, el, sm, em, size, parent, children))| {
            n.id == id
                && n.start_level == sl
                && n.end_level == el
                && n.start_mass == sm
                && n.end_mass == em
                && n.size() == size
                && n.parent == parent
                && n.children == children
        });
    let at = |m: f64| cut_at(&tree, Cut::Mass(m)).map(|l| l.cluster_ids().len()).unwrap_or(0);
    let (c30, c60) = (at(0.30), at(0.60));
    let leaves = all_mode(&tree).cluster_ids();
    let unachievable = matches!(first_k(&tree, 4), Err(Error::UnachievableK { requested: 4 }));
    outcome(
        fields && c30 == 2 && c60 == 3 && leaves == [2, 3, 4] && unachievable,
        format!(
            "fields match after round trip: {fields}; cut 0.30 -> {c30}, cut 0.60 -> {c60}, leaves {leaves:?}, first_k(4) unachievable: {unachievable}"
        ),
    )
}

fn density_spot_checks() -> Outcome {
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    let line = knn_density(&PointCloud::new(vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap(), 2).unwrap();
    let pair = knn_density(&PointCloud::new(vec![vec![0.0], vec![1.0]]).unwrap(), 1).unwrap();
    let square = PointCloud::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
    let corners = knn_density(&square, 1).unwrap();
    let mut worst: f64 = 0.0;
    for (got, want) in line.values.iter().zip([1.0 / 6.0, 1.0 / 3.0, 1.0 / 6.0]) {
        worst = worst.max(rel(*got, want));
    }
    for got in &pair.values {
        worst = worst.max(rel(*got, 0.25));
    }
    for got in &corners.values {
        worst = worst.max(rel(*got, 1.0 / (4.0 * std::f64::consts::PI)));
    }
    outcome(worst <= 1e-12, format!("largest relative error {worst:e} (limit 1e-12)"))
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

fn benchmark_endpoint() -> Outcome {
    let config = BenchmarkConfig::default();
    let started = Instant::now();
    let report = run_benchmark(&config).unwrap();
    let grid_time = started.elapsed();
    let mean = |s: ScenarioKind, m: Method, r: f64| {
        report
            .rows
            .iter()
            .find(|row| row.scenario == s && row.method == m && near(row.r, r))
            .map(|row| row.mean_error)
            .unwrap_or(f64::NAN)
    };

    let six: Vec<(Method, f64)> = [Method::KMeansPP, Method::Ward, Method::LevelSetTree]
        .into_iter()
        .map(|m| (m, mean(ScenarioKind::SixGaussians, m, 1.2)))
        .collect();
    let separated = six.iter().all(|(_, e)| *e <= 0.02);

    let chain_config = BenchmarkConfig {
        scenarios: vec![ScenarioKind::SixGaussians],
        r_values: Some(vec![0.5]),
        methods: vec![Method::SingleLinkage, Method::Ward],
        ..BenchmarkConfig::default()
    };
    let chain = run_benchmark(&chain_config).unwrap();
    let at_half = |m| chain.rows.iter().find(|row| row.method == m).unwrap().mean_error;
    let (single, ward) = (at_half(Method::SingleLinkage), at_half(Method::Ward));
    let chaining = single > ward;

    let s = ScenarioKind::EndpointSurrogate;
    let nonparametric = mean(s, Method::LevelSetTree, 1.2).max(mean(s, Method::Dbscan, 1.2));
    let parametric = mean(s, Method::KMeansPP, 1.2).min(mean(s, Method::Ward, 1.2));
    let margin = parametric - nonparametric;
    let surrogate = margin >= 0.1;

    let in_time = grid_time < Duration::from_secs(30 * 60);
    let six_text: Vec<String> = six.iter().map(|(m, e)| format!("{m} {e:.4}")).collect();
    outcome(
        separated && chaining && surrogate && in_time,
        format!(
            "six-gaussians r=1.2: {} (limit 0.02); r=0.5 single-linkage {single:.4} vs ward {ward:.4}; \
             surrogate r=1.2 margin {margin:.4} (need 0.1); full grid of {} rows in {} (limit 30 min)",
            six_text.join(", "),
            report.rows.len(),
            secs(grid_time)
        ),
    )
}

/// Two unit-variance Gaussians in the plane, centers 6 apart.
fn two_cluster_data(n: usize) -> Dataset<f64> {
    let mut r = rng(7);
    let rows = (0..n)
        .map(|_| {
            let c = if r.random::<f64>() < 0.5 { -3.0 } else { 3.0 };
            let a: f64 = StandardNormal.sample(&mut r);
            let b: f64 = StandardNormal.sample(&mut r);
            vec![c + a, b]
        })
        .collect();
    Dataset::Points(PointCloud::new(rows).unwrap())
}

fn stability() -> Outcome {
    let data = two_cluster_data(20_000);
    let config = StabilityConfig::new(10_000, 28, TreeParams::new(100, 0.05), 1);
    let report = subsample_trees(&data, &config).unwrap();
    let two = report.trees.iter().filter(|t| t.leaves == 2).count();
    let ranks = split_mass_histogram(&report, 20).unwrap();
    let sd = ranks.first().map(|h| h.sd()).unwrap_or(f64::NAN);
    outcome(
        two == 28 && sd <= 0.05,
        format!("{two}/28 subsample trees have 2 leaves; rank-1 split mass sd {sd:.4} (limit 0.05)"),
    )
}

fn invariants() -> Outcome {
    // dyadic scale factors keep every floating point step exact
    let mut r = rng(5);
    let rows: Vec<Vec<f64>> = (0..400)
        .map(|_| (0..3).map(|_| r.random_range(-64i32..64) as f64 / 8.0).collect())
        .collect();
    let points = PointCloud::new(rows.clone()).unwrap();
    let base = knn_density(&points, 10).unwrap().values;
    let scale_exact = [0.25, 2.0, 8.0].iter().all(|&s: &f64| {
        let scaled: Vec<Vec<f64>> = rows.iter().map(|p| p.iter().map(|c| c * s).collect()).collect();
        let got = knn_density(&PointCloud::new(scaled).unwrap(), 10).unwrap().values;
        got.iter().zip(&base).all(|(g, b)| *g == b / s.powi(3))
    });

    let truth: Vec<usize> = (0..300).map(|i| 1 + i % 5).collect();
    let predicted: Vec<Option<usize>> = (0..300)
        .map(|_| if r.random_bool(0.1) { None } else { Some(r.random_range(0..6)) })
        .collect();
    let base_error = error_rate(&predicted, &truth).unwrap();
    let mut perm: Vec<usize> = (0..6).collect();
    let mut order: Vec<usize> = (0..300).collect();
    let permutation_exact = (0..10).all(|_| {
        perm.shuffle(&mut r);
        order.shuffle(&mut r);
        let relabeled: Vec<Option<usize>> = order.iter().map(|&i| predicted[i].map(|c| perm[c] + 10)).collect();
        let reordered: Vec<usize> = order.iter().map(|&i| truth[i]).collect();
        error_rate(&relabeled, &reordered).unwrap() == base_error
    });

    let cloud = random_cloud(21, 3000, 3, false);
    let build = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate_points(&cloud, 30, 0.02).unwrap().tree.to_json())
    };
    let one = build(1);
    let deterministic = [2, 4, 8].iter().all(|&t| build(t) == one);

    outcome(
        scale_exact && permutation_exact && deterministic,
        format!(
            "scale law exact: {scale_exact}; error rate permutation invariant: {permutation_exact}; \
             tree bytes equal across 1/2/4/8 threads: {deterministic}"
        ),
    )
}

fn performance() -> Outcome {
    let mut r = rng(99);
    let rows: Vec<Vec<f64>> = (0..10_000)
        .map(|_| (0..3).map(|_| StandardNormal.sample(&mut r)).collect())
        .collect();
    let points = PointCloud::new(rows).unwrap();
    let started = Instant::now();
    let nodes = single_threaded(|| estimate_points(&points, 100, 0.05).unwrap().tree.len());
    let elapsed = started.elapsed();
    outcome(
        elapsed < Duration::from_secs(10),
        format!("10000 points in R^3, k = 100, one thread: {} for {nodes} nodes (limit 10 s)", secs(elapsed)),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("oracle-equivalence", oracle_equivalence),
        ("three-mode-mixture", three_mode_mixture),
        ("five-node-fixture", five_node_fixture),
        ("density-spot-checks", density_spot_checks),
        ("invariants", invariants),
        ("performance", performance),
        ("stability", stability),
        ("benchmark-endpoint", benchmark_endpoint),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let result = check();
        if !result.pass {
            failed += 1;
        }
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!("{tag} {name}: {} [{}]", result.detail, secs(started.elapsed()));
        std::io::stdout().flush().unwrap();
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
