//! Integral probability metrics on finite distributions, Minkowski functionals,
//! contraction factors and the surrogate losses used for learning.
//!
//! Total variation is the un-halved `Σ|p − q|`, so it ranges over `[0, 2]`.

mod ipm;
pub mod lp;
mod surrogate;
pub mod transport;

pub use ipm::{
    bounded_lipschitz_distance, contraction_factor, kantorovich_distance, minkowski_functional,
    mmd_distance, tv_distance,
};
pub use surrogate::{
    cross_entropy_surrogate, kl_divergence, mmd2_surrogate, mmd2_surrogate_grad, pinsker_bound,
};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Finite metric space given by its distance table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSpace {
    dist: Vec<Vec<f64>>,
}

impl MetricSpace {
    /// Validates symmetry, zero diagonal, nonnegativity and the triangle
    /// inequality (within 1e-9).
    pub fn new(dist: Vec<Vec<f64>>) -> Result<Self> {
        let n = dist.len();
        for (i, row) in dist.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    field: format!("metric row {i}"),
                    expected: n,
                    got: row.len(),
                });
            }
            for (j, &d) in row.iter().enumerate() {
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "metric entry ({i},{j}) = {d} is not a finite nonnegative number"
                    )));
                }
                if (d - dist[j][i]).abs() > 1e-9 {
                    return Err(Error::InvalidArgument(format!("metric not symmetric at ({i},{j})")));
                }
            }
            if row[i] != 0.0 {
                return Err(Error::InvalidArgument(format!("metric diagonal ({i},{i}) nonzero")));
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if dist[i][k] > dist[i][j] + dist[j][k] + 1e-9 {
                        return Err(Error::InvalidArgument(format!(
                            "triangle inequality fails for ({i},{j},{k})"
                        )));
                    }
                }
            }
        }
        Ok(MetricSpace { dist })
    }

    /// Discrete metric: distance 1 between distinct points.
    pub fn discrete(n: usize) -> Self {
        MetricSpace {
            dist: (0..n)
                .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
                .collect(),
        }
    }

    /// Points on the real line.
    pub fn line(coords: &[f64]) -> Self {
        MetricSpace {
            dist: coords
                .iter()
                .map(|a| coords.iter().map(|b| (a - b).abs()).collect())
                .collect(),
        }
    }

    /// ℓ1 distance between vectors (the un-halved TV distance between beliefs).
    pub fn l1(points: &[Vec<f64>]) -> Self {
        MetricSpace {
            dist: points
                .iter()
                .map(|a| {
                    points
                        .iter()
                        .map(|b| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum())
                        .collect()
                })
                .collect(),
        }
    }

    /// Euclidean distance between vectors.
    pub fn euclidean(points: &[Vec<f64>]) -> Self {
        MetricSpace {
            dist: points
                .iter()
                .map(|a| points.iter().map(|b| euclid(a, b)).collect())
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i][j]
    }

    pub fn table(&self) -> &[Vec<f64>] {
        &self.dist
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().flatten().fold(0.0, |m, &d| m.max(d))
    }

    /// Sub-metric on the listed points.
    pub fn restrict(&self, idx: &[usize]) -> MetricSpace {
        MetricSpace {
            dist: idx
                .iter()
                .map(|&i| idx.iter().map(|&j| self.dist[i][j]).collect())
                .collect(),
        }
    }
}

pub(crate) fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Points of ℝ^m used by the distance-based MMD.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedPoints {
    pub coords: Vec<Vec<f64>>,
}

impl EmbeddedPoints {
    pub fn new(coords: Vec<Vec<f64>>) -> Result<Self> {
        let dim = coords.first().map(Vec::len).unwrap_or(0);
        for (i, c) in coords.iter().enumerate() {
            if c.len() != dim {
                return Err(Error::DimensionMismatch {
                    field: format!("point {i}"),
                    expected: dim,
                    got: c.len(),
                });
            }
            if c.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument(format!("point {i} has a non-finite coordinate")));
            }
        }
        Ok(EmbeddedPoints { coords })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn restrict(&self, idx: &[usize]) -> EmbeddedPoints {
        EmbeddedPoints {
            coords: idx.iter().map(|&i| self.coords[i].clone()).collect(),
        }
    }
}

/// Which IPM, without its ground space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionClass {
    TotalVariation,
    Kantorovich,
    BoundedLipschitz,
    Mmd { exponent: f64 },
}

impl FunctionClass {
    pub fn needs_metric(&self) -> bool {
        matches!(self, FunctionClass::Kantorovich | FunctionClass::BoundedLipschitz)
    }

    pub const NAMES: [&'static str; 4] = ["tv", "kantorovich", "bl", "mmd[:p]"];
}

impl fmt::Display for FunctionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionClass::TotalVariation => write!(f, "tv"),
            FunctionClass::Kantorovich => write!(f, "kantorovich"),
            FunctionClass::BoundedLipschitz => write!(f, "bl"),
            FunctionClass::Mmd { exponent } => write!(f, "mmd:{exponent}"),
        }
    }
}

impl FromStr for FunctionClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "tv" | "total-variation" | "total_variation" => Ok(FunctionClass::TotalVariation),
            "kantorovich" | "wasserstein" | "w1" => Ok(FunctionClass::Kantorovich),
            "bl" | "bounded-lipschitz" | "bounded_lipschitz" | "dudley" => {
                Ok(FunctionClass::BoundedLipschitz)
            }
            "mmd" => Ok(FunctionClass::Mmd { exponent: 2.0 }),
            other => {
                if let Some(p) = other.strip_prefix("mmd:") {
                    let exponent: f64 = p.trim_start_matches("p=").parse().map_err(|_| {
                        Error::InvalidArgument(format!("bad MMD exponent '{p}'"))
                    })?;
                    if !(exponent > 0.0 && exponent <= 2.0) {
                        return Err(Error::InvalidArgument(format!(
                            "MMD exponent {exponent} outside (0, 2]"
                        )));
                    }
                    return Ok(FunctionClass::Mmd { exponent });
                }
                Err(Error::InvalidArgument(format!(
                    "unknown function class '{s}'; allowed: {}",
                    FunctionClass::NAMES.join(", ")
                )))
            }
        }
    }
}

/// An IPM function class bound to its ground space.
#[derive(Clone, Debug, PartialEq)]
pub enum FunctionClassSpec {
    TotalVariation,
    Kantorovich(MetricSpace),
    BoundedLipschitz(MetricSpace),
    Mmd { points: EmbeddedPoints, exponent: f64 },
}

impl FunctionClassSpec {
    pub fn class(&self) -> FunctionClass {
        match self {
            FunctionClassSpec::TotalVariation => FunctionClass::TotalVariation,
            FunctionClassSpec::Kantorovich(_) => FunctionClass::Kantorovich,
            FunctionClassSpec::BoundedLipschitz(_) => FunctionClass::BoundedLipschitz,
            FunctionClassSpec::Mmd { exponent, .. } => FunctionClass::Mmd { exponent: *exponent },
        }
    }

    /// Binds `class` to a ground space; errors when the space it needs is absent.
    pub fn bind(
        class: FunctionClass,
        metric: Option<&MetricSpace>,
        points: Option<&EmbeddedPoints>,
    ) -> Result<Self> {
        let missing = |what: &str| {
            Error::InvalidArgument(format!("function class {class} needs a ground {what}"))
        };
        Ok(match class {
            FunctionClass::TotalVariation => FunctionClassSpec::TotalVariation,
            FunctionClass::Kantorovich => {
                FunctionClassSpec::Kantorovich(metric.ok_or_else(|| missing("metric"))?.clone())
            }
            FunctionClass::BoundedLipschitz => {
                FunctionClassSpec::BoundedLipschitz(metric.ok_or_else(|| missing("metric"))?.clone())
            }
            FunctionClass::Mmd { exponent } => FunctionClassSpec::Mmd {
                points: points.ok_or_else(|| missing("embedding"))?.clone(),
                exponent,
            },
        })
    }

    /// `d_𝔉(p, q)`.
    pub fn distance(&self, p: &[f64], q: &[f64]) -> Result<f64> {
        match self {
            FunctionClassSpec::TotalVariation => tv_distance(p, q),
            FunctionClassSpec::Kantorovich(m) => kantorovich_distance(m, p, q),
            FunctionClassSpec::BoundedLipschitz(m) => bounded_lipschitz_distance(m, p, q),
            FunctionClassSpec::Mmd { points, exponent } => mmd_distance(points, p, q, *exponent),
        }
    }

    /// Distance between two sparse distributions, solved on the union of their
    /// supports only.
    pub fn sparse_distance(&self, p: &[(usize, f64)], q: &[(usize, f64)]) -> Result<f64> {
        let mut idx: Vec<usize> = p.iter().chain(q).map(|&(i, _)| i).collect();
        idx.sort_unstable();
        idx.dedup();
        let pos = |i: usize| idx.binary_search(&i).expect("index in support");
        let mut dp = vec![0.0; idx.len()];
        let mut dq = vec![0.0; idx.len()];
        for &(i, w) in p {
            dp[pos(i)] += w;
        }
        for &(i, w) in q {
            dq[pos(i)] += w;
        }
        self.restrict(&idx).distance(&dp, &dq)
    }

    /// Same class on a subset of the ground points.
    pub fn restrict(&self, idx: &[usize]) -> FunctionClassSpec {
        match self {
            FunctionClassSpec::TotalVariation => FunctionClassSpec::TotalVariation,
            FunctionClassSpec::Kantorovich(m) => FunctionClassSpec::Kantorovich(m.restrict(idx)),
            FunctionClassSpec::BoundedLipschitz(m) => {
                FunctionClassSpec::BoundedLipschitz(m.restrict(idx))
            }
            FunctionClassSpec::Mmd { points, exponent } => FunctionClassSpec::Mmd {
                points: points.restrict(idx),
                exponent: *exponent,
            },
        }
    }

    pub fn minkowski(&self, f: &[f64]) -> Result<f64> {
        minkowski_functional(self, f)
    }
}
