//! Euclidean and fiber distances, plus dense pairwise matrices.
//!
//! Anything that can report the distance between two of its items implements
//! [`Dissimilarity`]; the density, graph and labeling code only ever talks to
//! that trait, so rows can be computed on demand when a dense matrix would not
//! fit in memory.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest item count for which [`pairwise_distances`] materializes a dense matrix.
pub const DENSE_MATRIX_CAP: usize = 25_000;

/// A source of pairwise distances between `len()` items.
pub trait Dissimilarity<T: Scalar>: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Distance between items `i` and `j`. Must be symmetric and zero on the diagonal.
    fn distance(&self, i: usize, j: usize) -> T;

    /// Distances from item `i` to every item, written into `out` (length `len()`).
    fn row(&self, i: usize, out: &mut [T]) {
        for (j, slot) in out.iter_mut().enumerate() {
            *slot = self.distance(i, j);
        }
    }
}

impl<T: Scalar, D: Dissimilarity<T> + ?Sized> Dissimilarity<T> for &D {
    fn len(&self) -> usize {
        (**self).len()
    }
    fn distance(&self, i: usize, j: usize) -> T {
        (**self).distance(i, j)
    }
    fn row(&self, i: usize, out: &mut [T]) {
        (**self).row(i, out)
    }
}

/// `n` points in `R^d`, stored row-major. The point index is its identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud<T> {
    dim: usize,
    coords: Vec<T>,
}

impl<T: Scalar> PointCloud<T> {
    pub fn new(points: Vec<Vec<T>>) -> Result<Self> {
        let dim = points.first().map(Vec::len).unwrap_or(0);
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.into_iter().enumerate() {
            if p.len() != dim {
                return Err(Error::invalid(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            coords.extend(p);
        }
        Self::from_flat(dim.max(1), coords)
    }

    /// Builds a cloud from row-major coordinates.
    pub fn from_flat(dim: usize, coords: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if coords.len() % dim != 0 {
            return Err(Error::invalid(format!(
                "{} coordinates do not divide into rows of {dim}",
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::invalid(format!(
                "point {} has a non-finite coordinate",
                pos / dim
            )));
        }
        Ok(Self { dim, coords })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[T]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[T] {
        &self.coords
    }

    /// The points at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        Self {
            dim: self.dim,
            coords,
        }
    }

    /// Multiplies every coordinate by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            dim: self.dim,
            coords: self.coords.iter().map(|&c| c * factor).collect(),
        }
    }
}

impl<T: Scalar> Dissimilarity<T> for PointCloud<T> {
    fn len(&self) -> usize {
        PointCloud::len(self)
    }

    fn distance(&self, i: usize, j: usize) -> T {
        l2(self.point(i), self.point(j))
    }

    fn row(&self, i: usize, out: &mut [T]) {
        let p = self.point(i);
        for (slot, q) in out.iter_mut().zip(self.iter()) {
            *slot = l2(p, q);
        }
    }
}

/// A polyline in R³ (millimeters).
pub type Polyline<T> = Vec<[T; 3]>;

/// `n` fiber tracks; the fiber index is its identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberSet<T> {
    fibers: Vec<Polyline<T>>,
}

impl<T: Scalar> FiberSet<T> {
    /// Every fiber needs at least two finite vertices.
    pub fn new(fibers: Vec<Polyline<T>>) -> Result<Self> {
        for (i, f) in fibers.iter().enumerate() {
            if f.len() < 2 {
                return Err(Error::invalid(format!(
                    "fiber {i} has {} vertices, need at least 2",
                    f.len()
                )));
            }
            if f.iter().flatten().any(|c| !c.is_finite()) {
                return Err(Error::invalid(format!("fiber {i} has a non-finite vertex")));
            }
        }
        Ok(Self { fibers })
    }

    pub fn len(&self) -> usize {
        self.fibers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fibers.is_empty()
    }

    pub fn fiber(&self, i: usize) -> &[[T; 3]] {
        &self.fibers[i]
    }

    pub fn fibers(&self) -> &[Polyline<T>] {
        &self.fibers
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            fibers: indices.iter().map(|&i| self.fibers[i].clone()).collect(),
        }
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            fibers: self
                .fibers
                .iter()
                .map(|f| f.iter().map(|v| v.map(|c| c * factor)).collect())
                .collect(),
        }
    }

    /// Both endpoints of every fiber, as a point cloud of `2n` points.
    pub fn endpoints(&self) -> PointCloud<T> {
        let mut coords = Vec::with_capacity(self.len() * 6);
        for f in &self.fibers {
            coords.extend_from_slice(&f[0]);
            coords.extend_from_slice(&f[f.len() - 1]);
        }
        PointCloud { dim: 3, coords }
    }

    /// The fiber set viewed through the max-average-min distance.
    pub fn metric(&self, cutoff: T) -> FiberMetric<'_, T> {
        FiberMetric {
            fibers: self,
            cutoff,
        }
    }
}

/// A [`FiberSet`] paired with the cutoff of its max-average-min distance.
#[derive(Debug, Clone, Copy)]
pub struct FiberMetric<'a, T> {
    fibers: &'a FiberSet<T>,
    cutoff: T,
}

impl<T: Scalar> Dissimilarity<T> for FiberMetric<'_, T> {
    fn len(&self) -> usize {
        self.fibers.len()
    }

    fn distance(&self, i: usize, j: usize) -> T {
        if i == j {
            return T::zero();
        }
        mam_distance(self.fibers.fiber(i), self.fibers.fiber(j), self.cutoff)
    }
}

/// Dense symmetric distance matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix<T> {
    n: usize,
    values: Vec<T>,
}

impl<T: Scalar> DistanceMatrix<T> {
    /// Validates symmetry, zero diagonal and nonnegativity.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n = rows.len();
        let mut values = Vec::with_capacity(n * n);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != n {
                return Err(Error::invalid(format!("row {i} has length {}, expected {n}", r.len())));
            }
            values.extend(r);
        }
        for i in 0..n {
            if values[i * n + i] != T::zero() {
                return Err(Error::invalid(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !v.is_finite() || v < T::zero() {
                    return Err(Error::invalid(format!("entry ({i},{j}) is not a nonnegative finite number")));
                }
                if v != values[j * n + i] {
                    return Err(Error::invalid(format!("asymmetric entry ({i},{j})")));
                }
            }
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.n + j]
    }

    pub fn row_slice(&self, i: usize) -> &[T] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.values.chunks(self.n).map(<[T]>::to_vec).collect()
    }
}

impl<T: Scalar> Dissimilarity<T> for DistanceMatrix<T> {
    fn len(&self) -> usize {
        self.n
    }
    fn distance(&self, i: usize, j: usize) -> T {
        self.get(i, j)
    }
    fn row(&self, i: usize, out: &mut [T]) {
        out.copy_from_slice(self.row_slice(i));
    }
}

fn l2<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| {
            let d = x - y;
            acc + d * d
        })
        .sqrt()
}

/// Euclidean distance between two coordinate vectors.
pub fn euclidean<T: Scalar>(a: &[T], b: &[T]) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|c| !c.is_finite()) {
        return Err(Error::invalid("non-finite coordinate"));
    }
    Ok(l2(a, b))
}

/// Mean of the per-vertex nearest distances from `from` to `to` that exceed `cutoff`;
/// zero when none do.
fn directional_mean<T: Scalar>(from: &[[T; 3]], to: &[[T; 3]], cutoff: T) -> T {
    let keep_all = cutoff == T::zero();
    let mut sum = T::zero();
    let mut count = 0usize;
    for a in from {
        let nearest = to
            .iter()
            .map(|b| l2(a, b))
            .fold(T::infinity(), T::min);
        if keep_all || nearest > cutoff {
            sum = sum + nearest;
            count += 1;
        }
    }
    if count == 0 {
        T::zero()
    } else {
        sum / T::from_usize_lossy(count)
    }
}

fn mam_distance<T: Scalar>(u: &[[T; 3]], w: &[[T; 3]], cutoff: T) -> T {
    directional_mean(u, w, cutoff).max(directional_mean(w, u, cutoff))
}

/// Max-average-min distance between two polylines.
///
/// Each vertex is matched to its nearest vertex on the other polyline; matched
/// distances at or below a positive `cutoff` are dropped, the rest averaged,
/// and the larger of the two directional averages returned. A zero cutoff
/// keeps every match.
pub fn fiber_distance<T: Scalar>(u: &[[T; 3]], w: &[[T; 3]], cutoff: T) -> Result<T> {
    if u.is_empty() || w.is_empty() {
        return Err(Error::invalid("fiber distance needs nonempty polylines"));
    }
    if !(cutoff >= T::zero()) {
        return Err(Error::invalid("cutoff must be nonnegative"));
    }
    Ok(mam_distance(u, w, cutoff))
}

/// All pairwise distances of `data`, computed in parallel over rows.
///
/// Only the upper triangle is evaluated; the lower triangle is mirrored so the
/// result is exactly symmetric.
pub fn pairwise_distances<T: Scalar, D: Dissimilarity<T>>(data: &D) -> Result<DistanceMatrix<T>> {
    let n = data.len();
    if n < 2 {
        return Err(Error::invalid("pairwise distances need at least 2 items"));
    }
    if n > DENSE_MATRIX_CAP {
        return Err(Error::Unsupported(format!(
            "{n} items exceed the dense matrix cap of {DENSE_MATRIX_CAP}; use row-wise distances"
        )));
    }
    let upper: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|i| ((i + 1)..n).map(|j| data.distance(i, j)).collect())
        .collect();
    let mut values = vec![T::zero(); n * n];
    for (i, row) in upper.iter().enumerate() {
        for (off, &d) in row.iter().enumerate() {
            let j = i + 1 + off;
            values[i * n + j] = d;
            values[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix { n, values })
}
