//! Vector comparison metrics.
//!
//! | metric          | value                              | better |
//! |-----------------|------------------------------------|--------|
//! | `minkowski:p`   | `(Σ |xᵢ−yᵢ|^p)^(1/p)`, `p ≥ 1`      | lower  |
//! | `euclidean`     | Minkowski with `p = 2`             | lower  |
//! | `manhattan`     | Minkowski with `p = 1`             | lower  |
//! | `chebyshev`     | `max |xᵢ−yᵢ|` (the `p → ∞` limit)  | lower  |
//! | `cosine`        | `x·y / (|x| |y|)`                  | higher |
//! | `inner_product` | `x·y = |x| |y| cos θ`              | higher |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::StoreError;
use crate::embed::EmbeddingVector;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Metric {
    Minkowski(f64),
    Euclidean,
    Manhattan,
    Chebyshev,
    #[default]
    Cosine,
    InnerProduct,
}

impl Metric {
    pub fn minkowski(p: f64) -> Result<Self, StoreError> {
        let m = Metric::Minkowski(p);
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), StoreError> {
        match self {
            Metric::Minkowski(p) if !(p.is_finite() && *p >= 1.0) => Err(StoreError::InvalidMetric(format!(
                "minkowski needs a finite p >= 1, got {p}"
            ))),
            _ => Ok(()),
        }
    }

    /// Distances rank ascending; cosine and inner product rank descending.
    pub fn is_distance(&self) -> bool {
        !matches!(self, Metric::Cosine | Metric::InnerProduct)
    }

    /// Maps a raw metric value onto a scale where higher always means more similar.
    pub fn preference(&self, raw: f64) -> f64 {
        if self.is_distance() {
            -raw
        } else {
            raw
        }
    }

    pub fn eval<T: Copy + Into<f64>>(&self, x: &[T], y: &[T]) -> Result<f64, StoreError> {
        if x.len() != y.len() {
            return Err(StoreError::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        let pairs = || x.iter().zip(y).map(|(&a, &b)| -> (f64, f64) { (a.into(), b.into()) });
        let diffs = || pairs().map(|(a, b)| (a - b).abs());
        let value = match *self {
            Metric::Minkowski(p) => {
                self.validate()?;
                // Factor out the largest difference so |d|^p cannot overflow.
                let peak = diffs().fold(0.0f64, f64::max);
                if peak == 0.0 {
                    0.0
                } else {
                    peak * diffs().map(|d| (d / peak).powf(p)).sum::<f64>().powf(1.0 / p)
                }
            }
            Metric::Euclidean => diffs().map(|d| d * d).sum::<f64>().sqrt(),
            Metric::Manhattan => diffs().sum(),
            Metric::Chebyshev => diffs().fold(0.0f64, f64::max),
            Metric::Cosine => {
                let (dot, xx, yy) = pairs().fold((0.0f64, 0.0f64, 0.0f64), |(d, a2, b2), (a, b)| {
                    (d + a * b, a2 + a * a, b2 + b * b)
                });
                if xx == 0.0 || yy == 0.0 {
                    return Err(StoreError::ZeroVector);
                }
                (dot / (xx.sqrt() * yy.sqrt())).clamp(-1.0, 1.0)
            }
            Metric::InnerProduct => pairs().map(|(a, b)| a * b).sum(),
        };
        Ok(value)
    }
}

/// Raw metric value between two embeddings.
pub fn similarity(x: &EmbeddingVector, y: &EmbeddingVector, m: Metric) -> Result<f64, StoreError> {
    m.eval(x.values(), y.values())
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Minkowski(p) => write!(f, "minkowski:{p}"),
            Metric::Euclidean => f.write_str("euclidean"),
            Metric::Manhattan => f.write_str("manhattan"),
            Metric::Chebyshev => f.write_str("chebyshev"),
            Metric::Cosine => f.write_str("cosine"),
            Metric::InnerProduct => f.write_str("inner_product"),
        }
    }
}

impl FromStr for Metric {
    type Err = StoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "euclidean" | "l2" => Ok(Metric::Euclidean),
            "manhattan" | "l1" => Ok(Metric::Manhattan),
            "chebyshev" | "chebychev" => Ok(Metric::Chebyshev),
            "cosine" => Ok(Metric::Cosine),
            "inner_product" | "dot" => Ok(Metric::InnerProduct),
            other => {
                let p = other
                    .strip_prefix("minkowski:")
                    .or_else(|| other.strip_prefix("minkowski="))
                    .ok_or_else(|| StoreError::InvalidMetric(format!("unknown metric `{other}`")))?;
                let p: f64 = p
                    .parse()
                    .map_err(|_| StoreError::InvalidMetric(format!("bad minkowski exponent `{p}`")))?;
                Metric::minkowski(p)
            }
        }
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Metric {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
