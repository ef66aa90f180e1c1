//! Synthetic three-dimensional mixtures with a contraction knob `r` that pulls
//! every group mean toward the grand mean.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::PointCloud;

use super::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    SixGaussians,
    ArcsAndGaussians,
    /// Synthetic stand-in for resampled fiber endpoints: three curved shells,
    /// each cupping an anisotropic blob.
    EndpointSurrogate,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [
        ScenarioKind::SixGaussians,
        ScenarioKind::ArcsAndGaussians,
        ScenarioKind::EndpointSurrogate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::SixGaussians => "six-gaussians",
            ScenarioKind::ArcsAndGaussians => "arcs-and-gaussians",
            ScenarioKind::EndpointSurrogate => "endpoint-surrogate",
        }
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown scenario {s:?}")))
    }
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Zero-mean offset distribution of one mixture component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Shape {
    /// Axis-aligned Gaussian with per-axis standard deviations.
    Gaussian { sd: [f64; 3] },
    /// Half circle of `radius` in the plane spanned by `u` and `v`, with
    /// isotropic Gaussian jitter.
    Arc {
        radius: f64,
        u: [f64; 3],
        v: [f64; 3],
        jitter: f64,
    },
    /// Spherical cap of `radius` around `axis`, covering polar angles up to
    /// `opening` radians, with radial Gaussian jitter. The cap opens toward
    /// `-axis`.
    Shell {
        radius: f64,
        axis: [f64; 3],
        opening: f64,
        jitter: f64,
    },
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn add(a: [f64; 3], b: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

fn normalize(a: [f64; 3]) -> [f64; 3] {
    let len = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    [a[0] / len, a[1] / len, a[2] / len]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Two unit vectors completing `axis` to an orthonormal frame.
fn frame(axis: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let helper = if axis[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let e1 = normalize(cross(axis, helper));
    let e2 = cross(axis, e1);
    (e1, e2)
}

impl Shape {
    /// Offset whose expectation is the origin.
    fn sample(&self, rng: &mut ChaCha8Rng) -> [f64; 3] {
        match self {
            Shape::Gaussian { sd } => [sd[0] * normal(rng), sd[1] * normal(rng), sd[2] * normal(rng)],
            Shape::Arc { radius, u, v, jitter } => {
                let theta = rng.random_range(0.0..PI);
                let (u, v) = (normalize(*u), normalize(*v));
                // centroid of the half circle sits 2r/π along v
                let along_v = radius * theta.sin() - 2.0 * radius / PI;
                let mut p = add([0.0; 3], u, radius * theta.cos());
                p = add(p, v, along_v);
                [
                    p[0] + jitter * normal(rng),
                    p[1] + jitter * normal(rng),
                    p[2] + jitter * normal(rng),
                ]
            }
            Shape::Shell { radius, axis, opening, jitter } => {
                let axis = normalize(*axis);
                let (e1, e2) = frame(axis);
                // uniform on the cap: cos φ uniform on [cos opening, 1]
                let lo = opening.cos();
                let cos_phi = rng.random_range(lo..=1.0);
                let sin_phi = (1.0 - cos_phi * cos_phi).max(0.0).sqrt();
                let psi = rng.random_range(0.0..2.0 * PI);
                let rad = radius + jitter * normal(rng);
                let mut p = add([0.0; 3], axis, rad * cos_phi);
                p = add(p, e1, rad * sin_phi * psi.cos());
                p = add(p, e2, rad * sin_phi * psi.sin());
                // cap centroid lies radius·(1 + cos opening)/2 along the axis
                add(p, axis, -radius * (1.0 + lo) / 2.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub mean: [f64; 3],
    pub shape: Shape,
}

/// Mixture definition; the presets are the defaults of each scenario kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub components: Vec<Component>,
}

impl MixtureSpec {
    pub fn preset(kind: ScenarioKind) -> Self {
        match kind {
            ScenarioKind::SixGaussians => six_gaussians(5.0, 1.0),
            ScenarioKind::ArcsAndGaussians => arcs_and_gaussians(),
            ScenarioKind::EndpointSurrogate => endpoint_surrogate(),
        }
    }

    /// Weighted average of the component means.
    pub fn grand_mean(&self) -> [f64; 3] {
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        let mut m = [0.0; 3];
        for c in &self.components {
            m = add(m, c.mean, c.weight / total);
        }
        m
    }

    /// Component means after contraction by `r` toward the grand mean.
    pub fn contracted_means(&self, r: f64) -> Vec<[f64; 3]> {
        let g = self.grand_mean();
        self.components
            .iter()
            .map(|c| {
                // written as a shift of the mean so r = 1 is exact
                let s = r - 1.0;
                [
                    c.mean[0] + s * (c.mean[0] - g[0]),
                    c.mean[1] + s * (c.mean[1] - g[1]),
                    c.mean[2] + s * (c.mean[2] - g[2]),
                ]
            })
            .collect()
    }
}

/// Unit-variance spherical Gaussians at the vertices of an octahedron.
pub fn six_gaussians(radius: f64, sd: f64) -> MixtureSpec {
    let vertices = [
        [radius, 0.0, 0.0],
        [-radius, 0.0, 0.0],
        [0.0, radius, 0.0],
        [0.0, -radius, 0.0],
        [0.0, 0.0, radius],
        [0.0, 0.0, -radius],
    ];
    MixtureSpec {
        components: vertices
            .into_iter()
            .map(|mean| Component {
                weight: 1.0 / 6.0,
                mean,
                shape: Shape::Gaussian { sd: [sd; 3] },
            })
            .collect(),
    }
}

/// Gaussians and noisy half circles alternating around a ring of radius 8.
fn arcs_and_gaussians() -> MixtureSpec {
    let planes = [
        ([1.0, 0.0, 0.0], [0.0, 0.0, 1.0]),
        ([0.0, 1.0, 0.0], [0.0, 0.0, 1.0]),
        ([1.0, 1.0, 0.0], [0.0, 0.0, -1.0]),
    ];
    let components = (0..6)
        .map(|i| {
            let angle = i as f64 * PI / 3.0;
            let mean = [8.0 * angle.cos(), 8.0 * angle.sin(), 0.0];
            let shape = if i % 2 == 0 {
                Shape::Gaussian { sd: [1.0; 3] }
            } else {
                let (u, v) = planes[i / 2];
                Shape::Arc {
                    radius: 2.5,
                    u,
                    v,
                    jitter: 0.25,
                }
            };
            Component {
                weight: 1.0 / 6.0,
                mean,
                shape,
            }
        })
        .collect();
    MixtureSpec { components }
}

fn endpoint_surrogate() -> MixtureSpec {
    let sites: [([f64; 3], [f64; 3]); 3] = [
        ([0.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
        ([16.0, 9.0, 0.0], [0.0, 1.0, 0.0]),
        ([5.0, 14.0, 11.0], [0.0, 0.0, 1.0]),
    ];
    let (radius, opening) = (4.5_f64, 2.0_f64);
    let cap_offset = radius * (1.0 + opening.cos()) / 2.0;
    let mut components = Vec::new();
    for (center, axis) in sites {
        components.push(Component {
            weight: 0.2,
            mean: add(center, axis, cap_offset),
            shape: Shape::Shell {
                radius,
                axis,
                opening,
                jitter: 0.2,
            },
        });
    }
    for (center, axis) in sites {
        let sd = [
            0.3 + 0.2 * axis[0].abs(),
            0.3 + 0.2 * axis[1].abs(),
            0.3 + 0.2 * axis[2].abs(),
        ];
        components.push(Component {
            weight: 0.4 / 3.0,
            mean: center,
            shape: Shape::Gaussian { sd },
        });
    }
    MixtureSpec { components }
}

/// A generated data set with its true group labels (`1..=K`).
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub n: usize,
    pub r: f64,
    pub seed: u64,
    pub points: PointCloud<f64>,
    pub truth: Vec<usize>,
}

impl Scenario {
    pub fn groups(&self) -> usize {
        self.truth.iter().copied().max().unwrap_or(0)
    }
}

pub fn generate(kind: ScenarioKind, n: usize, r: f64, seed: u64) -> Result<Scenario> {
    generate_from(kind, &MixtureSpec::preset(kind), n, r, seed)
}

/// Draws `n` points: a component per point by weight, then its contracted mean
/// plus a shape offset.
pub fn generate_from(kind: ScenarioKind, spec: &MixtureSpec, n: usize, r: f64, seed: u64) -> Result<Scenario> {
    let groups = spec.components.len();
    if groups == 0 {
        return Err(Error::invalid("mixture has no components"));
    }
    if n < groups {
        return Err(Error::invalid(format!("n = {n} is smaller than K = {groups}")));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::invalid(format!("contraction r must be a nonnegative number, got {r}")));
    }
    let total: f64 = spec.components.iter().map(|c| c.weight).sum();
    if !(total > 0.0) || spec.components.iter().any(|c| !(c.weight >= 0.0)) {
        return Err(Error::invalid("mixture weights must be nonnegative with a positive sum"));
    }
    let means = spec.contracted_means(r);
    let mut rng = seeded_rng(seed);
    let mut coords = Vec::with_capacity(n * 3);
    let mut truth = Vec::with_capacity(n);
    for _ in 0..n {
        let mut u = rng.random::<f64>() * total;
        let mut g = groups - 1;
        for (i, c) in spec.components.iter().enumerate() {
            if u < c.weight {
                g = i;
                break;
            }
            u -= c.weight;
        }
        let off = spec.components[g].shape.sample(&mut rng);
        coords.extend_from_slice(&add(means[g], off, 1.0));
        truth.push(g + 1);
    }
    Ok(Scenario {
        kind,
        n,
        r,
        seed,
        points: PointCloud::from_flat(3, coords)?,
        truth,
    })
}
