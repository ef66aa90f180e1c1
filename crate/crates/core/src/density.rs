//! k-nearest-neighbor density and fiber pseudo-density estimates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{Dissimilarity, FiberSet, PointCloud};
use crate::scalar::{total_cmp, unit_ball_volume, Scalar};

/// Multiplier applied to the largest finite density to rank coincident items first.
pub const DUPLICATE_BOOST: f64 = 1.0 + 1.0 / 1_048_576.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityKind {
    Density,
    PseudoDensity,
}

/// Per-item density values and the `k` that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate<T> {
    pub values: Vec<T>,
    pub k: usize,
    pub kind: DensityKind,
}

impl<T: Scalar> DensityEstimate<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub(crate) fn check_k(n: usize, k: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 items, got {n}")));
    }
    if k == 0 || k >= n {
        return Err(Error::invalid(format!("k must lie in [1, {}], got {k}", n - 1)));
    }
    Ok(())
}

/// Value of the k-th smallest entry of `row` other than position `skip`.
/// `row` is reordered.
pub(crate) fn kth_excluding<T: Scalar>(row: &mut [T], skip: usize, k: usize) -> T {
    row[skip] = T::infinity();
    let (_, kth, _) = row.select_nth_unstable_by(k - 1, total_cmp);
    *kth
}

/// Distance from item `i` to its `k`-th nearest other item.
pub fn knn_radius<T: Scalar, D: Dissimilarity<T>>(data: &D, i: usize, k: usize) -> Result<T> {
    let n = data.len();
    check_k(n, k)?;
    if i >= n {
        return Err(Error::invalid(format!("item {i} out of range for {n} items")));
    }
    let mut row = vec![T::zero(); n];
    data.row(i, &mut row);
    Ok(kth_excluding(&mut row, i, k))
}

/// k-th neighbor radius of every item.
pub fn knn_radii<T: Scalar, D: Dissimilarity<T>>(data: &D, k: usize) -> Result<Vec<T>> {
    let n = data.len();
    check_k(n, k)?;
    Ok((0..n)
        .into_par_iter()
        .map_init(
            || vec![T::zero(); n],
            |row, i| {
                data.row(i, row);
                kth_excluding(row, i, k)
            },
        )
        .collect())
}

/// Converts k-th neighbor radii into density values `k / (n · volume · r^exponent)`.
///
/// Items with a zero radius get the largest finite value times [`DUPLICATE_BOOST`].
pub fn density_from_radii<T: Scalar>(
    radii: &[T],
    k: usize,
    volume: T,
    exponent: usize,
    kind: DensityKind,
) -> Result<DensityEstimate<T>> {
    let n = radii.len();
    check_k(n, k)?;
    let numer = T::from_usize_lossy(k);
    let scale = T::from_usize_lossy(n) * volume;
    let mut values: Vec<T> = radii
        .iter()
        .map(|&r| numer / (scale * r.powi(exponent as i32)))
        .collect();

    let max_finite = values
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(None, |acc: Option<T>, v| Some(acc.map_or(v, |a| a.max(v))));
    if values.iter().any(|v| !v.is_finite()) {
        let Some(top) = max_finite else {
            return Err(Error::invalid("every item coincides with its k nearest neighbors"));
        };
        let boosted = top * T::from_f64_lossy(DUPLICATE_BOOST);
        if !boosted.is_finite() {
            return Err(Error::invalid("density values overflow"));
        }
        for v in values.iter_mut().filter(|v| !v.is_finite()) {
            *v = boosted;
        }
    }
    Ok(DensityEstimate { values, k, kind })
}

/// kNN density estimate `k / (n · v_d · r_k^d)` at every point.
pub fn knn_density<T: Scalar>(points: &PointCloud<T>, k: usize) -> Result<DensityEstimate<T>> {
    let radii = knn_radii(points, k)?;
    density_from_radii(
        &radii,
        k,
        unit_ball_volume(points.dim()),
        points.dim(),
        DensityKind::Density,
    )
}

/// Pseudo-density `k / (n · r_k)` of every fiber under the max-average-min distance.
pub fn pseudo_density<T: Scalar>(
    fibers: &FiberSet<T>,
    k: usize,
    cutoff: T,
) -> Result<DensityEstimate<T>> {
    let radii = knn_radii(&fibers.metric(cutoff), k)?;
    density_from_radii(&radii, k, T::one(), 1, DensityKind::PseudoDensity)
}
