//! Reference clusterers: k-means++, single and Ward linkage, DBSCAN.
//!
//! All of them run on dense coordinates with O(n) extra memory except DBSCAN's
//! automatic parameter choice, which needs every pairwise distance once.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{Dissimilarity, PointCloud};
use crate::scalar::total_cmp;
use crate::union_find::DisjointSet;

use super::seeded_rng;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_k(points: &PointCloud<f64>, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("K must be at least 1"));
    }
    if points.len() < k {
        return Err(Error::invalid(format!("{} points cannot form {k} clusters", points.len())));
    }
    Ok(())
}

/// Relabels components `0..K` in order of their smallest member.
fn labels_from_sets(ds: &mut DisjointSet, n: usize) -> Vec<usize> {
    let mut id_of_root = vec![usize::MAX; n];
    let mut next = 0;
    (0..n)
        .map(|i| {
            let r = ds.find(i);
            if id_of_root[r] == usize::MAX {
                id_of_root[r] = next;
                next += 1;
            }
            id_of_root[r]
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansConfig {
    /// Independent seedings; the run with the lowest inertia wins.
    pub n_init: usize,
    pub max_iter: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            n_init: 10,
            max_iter: 300,
        }
    }
}

/// Lloyd's algorithm from k-means++ (D²-weighted) seeds.
pub fn kmeans_pp(points: &PointCloud<f64>, k: usize, seed: u64, config: &KMeansConfig) -> Result<Vec<usize>> {
    check_k(points, k)?;
    let mut rng = seeded_rng(seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..config.n_init.max(1) {
        let centers = kmeans_pp_seeds(points, k, &mut rng);
        let (inertia, labels) = lloyd(points, centers, config.max_iter);
        if best.as_ref().is_none_or(|(b, _)| inertia < *b) {
            best = Some((inertia, labels));
        }
    }
    Ok(best.expect("at least one run").1)
}

fn kmeans_pp_seeds(points: &PointCloud<f64>, k: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = vec![points.point(rng.random_range(0..n)).to_vec()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if u < w {
                    chosen = i;
                    break;
                }
                u -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = points.point(pick).to_vec();
        for (slot, p) in d2.iter_mut().zip(points.iter()) {
            *slot = slot.min(sq_dist(p, &c));
        }
        centers.push(c);
    }
    centers
}

fn lloyd(points: &PointCloud<f64>, mut centers: Vec<Vec<f64>>, max_iter: usize) -> (f64, Vec<usize>) {
    let n = points.len();
    let dim = points.dim();
    let k = centers.len();
    let mut labels = vec![usize::MAX; n];
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut best = (f64::INFINITY, 0);
            for (c, center) in centers.iter().enumerate() {
                let d = sq_dist(p, center);
                if d < best.0 {
                    best = (d, c);
                }
            }
            if labels[i] != best.1 {
                labels[i] = best.1;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            // an emptied cluster keeps its old center
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    let inertia = points
        .iter()
        .zip(&labels)
        .map(|(p, &l)| sq_dist(p, &centers[l]))
        .sum();
    (inertia, labels)
}

/// Single linkage cut at `k` clusters: drop the `k - 1` longest edges of a
/// minimum spanning tree (dense Prim, O(n²) time, O(n) memory).
pub fn single_linkage(points: &PointCloud<f64>, k: usize) -> Result<Vec<usize>> {
    check_k(points, k)?;
    let n = points.len();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut from = vec![0usize; n];
    let mut edges: Vec<(f64, usize, usize)> = Vec::with_capacity(n.saturating_sub(1));
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let p = points.point(current);
        let mut next = usize::MAX;
        let mut next_d = f64::INFINITY;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let d = sq_dist(p, points.point(j));
            if d < best[j] {
                best[j] = d;
                from[j] = current;
            }
            if best[j] < next_d {
                next_d = best[j];
                next = j;
            }
        }
        in_tree[next] = true;
        edges.push((next_d, from[next], next));
        current = next;
    }
    edges.sort_by(|a, b| total_cmp(&a.0, &b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut ds = DisjointSet::new(n);
    for &(_, a, b) in edges.iter().take(n - k) {
        ds.union(a, b);
    }
    Ok(labels_from_sets(&mut ds, n))
}

/// Ward linkage cut at `k` clusters.
///
/// Nearest-neighbor chain over cluster centroids, using the merge cost
/// `|A||B| / (|A| + |B|) · ‖c_A − c_B‖²`; merges are then replayed in cost
/// order up to `n - k`.
pub fn ward_linkage(points: &PointCloud<f64>, k: usize) -> Result<Vec<usize>> {
    check_k(points, k)?;
    let n = points.len();
    let mut centroid: Vec<Vec<f64>> = points.iter().map(<[f64]>::to_vec).collect();
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut active_count = n;
    let cost = |ca: &[f64], na: usize, cb: &[f64], nb: usize| {
        let (na, nb) = (na as f64, nb as f64);
        na * nb / (na + nb) * sq_dist(ca, cb)
    };

    let mut merges: Vec<(f64, usize, usize)> = Vec::with_capacity(n.saturating_sub(1));
    let mut chain: Vec<usize> = Vec::new();
    while active_count > 1 {
        if chain.is_empty() {
            chain.push(active.iter().position(|&a| a).expect("an active cluster"));
        }
        let a = *chain.last().expect("nonempty chain");
        let prev = (chain.len() >= 2).then(|| chain[chain.len() - 2]);
        let mut nearest = usize::MAX;
        let mut nearest_d = f64::INFINITY;
        if let Some(p) = prev {
            nearest = p;
            nearest_d = cost(&centroid[a], size[a], &centroid[p], size[p]);
        }
        for b in 0..n {
            if !active[b] || b == a {
                continue;
            }
            let d = cost(&centroid[a], size[a], &centroid[b], size[b]);
            if d < nearest_d {
                nearest_d = d;
                nearest = b;
            }
        }
        if Some(nearest) == prev {
            chain.pop();
            chain.pop();
            let (keep, gone) = (a.min(nearest), a.max(nearest));
            let total = (size[keep] + size[gone]) as f64;
            let merged: Vec<f64> = centroid[keep]
                .iter()
                .zip(&centroid[gone])
                .map(|(x, y)| (x * size[keep] as f64 + y * size[gone] as f64) / total)
                .collect();
            centroid[keep] = merged;
            size[keep] += size[gone];
            active[gone] = false;
            active_count -= 1;
            merges.push((nearest_d, keep, gone));
        } else {
            chain.push(nearest);
        }
    }
    // stable: equal costs keep discovery order
    merges.sort_by(|a, b| total_cmp(&a.0, &b.0));
    let mut ds = DisjointSet::new(n);
    for &(_, a, b) in merges.iter().take(n - k) {
        ds.union(a, b);
    }
    Ok(labels_from_sets(&mut ds, n))
}

/// DBSCAN neighborhood radius and core-point threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbscanParams {
    pub eps: f64,
    /// Neighbors within `eps`, the point itself included, needed to be a core point.
    pub min_samples: usize,
}

/// How [`DbscanParams`] are derived from the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DbscanConfig {
    /// `eps` is this percentile of all pairwise distances.
    pub eps_percentile: f64,
    /// `min_samples` is this percentile of the per-point neighbor counts within `eps`.
    pub core_percentile: f64,
}

impl Default for DbscanConfig {
    fn default() -> Self {
        Self {
            eps_percentile: 2.0,
            core_percentile: 1.0,
        }
    }
}

/// Linear-interpolation percentile of `values` (reordered in place).
fn percentile(values: &mut [f64], pct: f64) -> f64 {
    let pos = pct / 100.0 * (values.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    let (_, lo_v, rest) = values.select_nth_unstable_by(lo, total_cmp);
    let lo_v = *lo_v;
    if frac == 0.0 || rest.is_empty() {
        return lo_v;
    }
    let hi_v = rest.iter().copied().fold(f64::INFINITY, f64::min);
    lo_v + frac * (hi_v - lo_v)
}

impl DbscanConfig {
    pub fn params(&self, points: &PointCloud<f64>) -> Result<DbscanParams> {
        let n = points.len();
        if n < 2 {
            return Err(Error::invalid("DBSCAN needs at least 2 points"));
        }
        let mut all = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                all.push(points.distance(i, j));
            }
        }
        let eps = percentile(&mut all, self.eps_percentile);
        drop(all);
        let mut counts: Vec<f64> = (0..n)
            .map(|i| (0..n).filter(|&j| points.distance(i, j) <= eps).count() as f64)
            .collect();
        let min_samples = percentile(&mut counts, self.core_percentile).floor().max(1.0) as usize;
        Ok(DbscanParams { eps, min_samples })
    }
}

/// Density-connected clusters of core points; border points join the cluster
/// of their nearest core neighbor, the rest are noise (`None`).
pub fn dbscan(points: &PointCloud<f64>, params: &DbscanParams) -> Result<Vec<Option<usize>>> {
    if !(params.eps >= 0.0) {
        return Err(Error::invalid("eps must be nonnegative"));
    }
    let n = points.len();
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| points.distance(i, j) <= params.eps).collect())
        .collect();
    let core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= params.min_samples).collect();

    let mut ds = DisjointSet::new(n);
    for i in (0..n).filter(|&i| core[i]) {
        for &j in &neighbors[i] {
            if j > i && core[j] {
                ds.union(i, j);
            }
        }
    }
    let mut id_of_root = vec![usize::MAX; n];
    let mut next = 0;
    let mut labels = vec![None; n];
    for i in (0..n).filter(|&i| core[i]) {
        let r = ds.find(i);
        if id_of_root[r] == usize::MAX {
            id_of_root[r] = next;
            next += 1;
        }
        labels[i] = Some(id_of_root[r]);
    }
    for i in (0..n).filter(|&i| !core[i]) {
        let nearest_core = neighbors[i]
            .iter()
            .copied()
            .filter(|&j| core[j])
            .min_by(|&a, &b| total_cmp(&points.distance(i, a), &points.distance(i, b)).then(a.cmp(&b)));
        labels[i] = nearest_core.and_then(|j| labels[j]);
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::error_rate;
    use rand_distr::{Distribution, StandardNormal};

    fn blobs(n_each: usize, centers: &[[f64; 3]], sd: f64, seed: u64) -> (PointCloud<f64>, Vec<usize>) {
        let mut rng = seeded_rng(seed);
        let mut coords = Vec::new();
        let mut truth = Vec::new();
        for (g, c) in centers.iter().enumerate() {
            for _ in 0..n_each {
                for a in 0..3 {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    coords.push(c[a] + sd * z);
                }
                truth.push(g);
            }
        }
        (PointCloud::from_flat(3, coords).unwrap(), truth)
    }

    fn some(v: Vec<usize>) -> Vec<Option<usize>> {
        v.into_iter().map(Some).collect()
    }

    #[test]
    fn separated_blobs_are_recovered() {
        let (pc, truth) = blobs(60, &[[0.0; 3], [20.0, 0.0, 0.0]], 0.5, 1);
        let km = kmeans_pp(&pc, 2, 7, &KMeansConfig::default()).unwrap();
        assert_eq!(error_rate(&some(km), &truth).unwrap(), 0.0);
        assert_eq!(error_rate(&some(single_linkage(&pc, 2).unwrap()), &truth).unwrap(), 0.0);
        assert_eq!(error_rate(&some(ward_linkage(&pc, 2).unwrap()), &truth).unwrap(), 0.0);
        let db = dbscan(&pc, &DbscanParams { eps: 3.0, min_samples: 4 }).unwrap();
        assert!(db.iter().all(Option::is_some));
        assert_eq!(error_rate(&db, &truth).unwrap(), 0.0);
    }

    #[test]
    fn dbscan_auto_params_follow_percentiles() {
        let (pc, _) = blobs(25, &[[0.0; 3], [6.0, 0.0, 0.0]], 1.0, 2);
        let n = pc.len();
        let mut all = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                all.push(pc.distance(i, j));
            }
        }
        all.sort_by(total_cmp);
        let pos = 0.02 * (all.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let eps = all[lo] + (pos - lo as f64) * (all[lo + 1] - all[lo]);
        let mut counts: Vec<usize> = (0..n)
            .map(|i| (0..n).filter(|&j| pc.distance(i, j) <= eps).count())
            .collect();
        counts.sort_unstable();
        let pos = 0.01 * (n - 1) as f64;
        let lo = pos.floor() as usize;
        let core = counts[lo] as f64 + (pos - lo as f64) * (counts[lo + 1] - counts[lo]) as f64;

        let params = DbscanConfig::default().params(&pc).unwrap();
        assert_eq!(params.eps, eps);
        assert_eq!(params.min_samples, (core.floor() as usize).max(1));
    }

    #[test]
    fn dbscan_marks_isolated_points_as_noise() {
        let pc = PointCloud::new(vec![
            vec![0.0, 0.0, 0.0],
            vec![0.1, 0.0, 0.0],
            vec![0.2, 0.0, 0.0],
            vec![0.3, 0.0, 0.0],
            vec![5.0, 0.0, 0.0],
        ])
        .unwrap();
        let labels = dbscan(&pc, &DbscanParams { eps: 0.15, min_samples: 3 }).unwrap();
        assert_eq!(labels, vec![Some(0), Some(0), Some(0), Some(0), None]);
    }

    #[test]
    fn kmeans_single_cluster_scores_majority() {
        let (pc, truth) = blobs(30, &[[0.0; 3], [9.0, 0.0, 0.0], [0.0, 9.0, 0.0]], 1.0, 4);
        let truth: Vec<usize> = truth.into_iter().map(|t| if t == 2 { 0 } else { t }).collect();
        let km = kmeans_pp(&pc, 1, 3, &KMeansConfig::default()).unwrap();
        assert!(km.iter().all(|&l| l == 0));
        let err = error_rate(&some(km), &truth).unwrap();
        assert!((err - (1.0 - 60.0 / 90.0)).abs() < 1e-12);
    }

    #[test]
    fn single_linkage_chains_where_ward_does_not() {
        // two blobs joined by a sparse bridge of points
        let (mut pc, mut truth) = blobs(80, &[[0.0; 3], [10.0, 0.0, 0.0]], 1.0, 5);
        let mut coords = pc.as_flat().to_vec();
        for i in 0..20 {
            coords.extend_from_slice(&[2.0 + 6.0 * i as f64 / 19.0, 0.0, 0.0]);
            truth.push(if i < 10 { 0 } else { 1 });
        }
        // an outlier that single linkage isolates as its own cluster
        coords.extend_from_slice(&[5.0, 30.0, 0.0]);
        truth.push(0);
        pc = PointCloud::from_flat(3, coords).unwrap();
        let sl = error_rate(&some(single_linkage(&pc, 2).unwrap()), &truth).unwrap();
        let ward = error_rate(&some(ward_linkage(&pc, 2).unwrap()), &truth).unwrap();
        assert!(sl > ward, "single {sl} ward {ward}");
    }

    /// Ward on a tiny input against exhaustive greedy agglomeration.
    #[test]
    fn ward_matches_naive_agglomeration() {
        let (pc, _) = blobs(7, &[[0.0; 3], [3.0, 1.0, 0.0], [1.0, 4.0, 2.0]], 1.0, 9);
        let n = pc.len();
        for k in 1..=5 {
            let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
            let centroid = |c: &Vec<usize>| -> Vec<f64> {
                (0..3).map(|a| c.iter().map(|&i| pc.point(i)[a]).sum::<f64>() / c.len() as f64).collect()
            };
            while clusters.len() > k {
                let mut best = (f64::INFINITY, 0, 0);
                for i in 0..clusters.len() {
                    for j in (i + 1)..clusters.len() {
                        let (a, b) = (&clusters[i], &clusters[j]);
                        let (na, nb) = (a.len() as f64, b.len() as f64);
                        let d = na * nb / (na + nb) * sq_dist(&centroid(a), &centroid(b));
                        if d < best.0 {
                            best = (d, i, j);
                        }
                    }
                }
                let merged = clusters.remove(best.2);
                clusters[best.1].extend(merged);
            }
            let mut naive = vec![0; n];
            for (id, c) in clusters.iter().enumerate() {
                for &i in c {
                    naive[i] = id;
                }
            }
            let fast = ward_linkage(&pc, k).unwrap();
            assert_eq!(error_rate(&some(fast), &naive).unwrap(), 0.0, "k = {k}");
        }
    }

    #[test]
    fn degenerate_inputs() {
        let pc = PointCloud::new(vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]]).unwrap();
        assert!(kmeans_pp(&pc, 3, 0, &KMeansConfig::default()).is_err());
        assert!(single_linkage(&pc, 3).is_err());
        assert!(ward_linkage(&pc, 0).is_err());
    }

    #[test]
    fn percentile_interpolates() {
        let mut v = vec![4.0, 1.0, 3.0, 2.0, 5.0];
        assert_eq!(percentile(&mut v, 50.0), 3.0);
        let mut v = vec![1.0, 2.0];
        assert_eq!(percentile(&mut v, 25.0), 1.25);
    }
}
