//! Difference shapes of value series.
//!
//! A shape is the vector of forward first differences of a series. It keeps
//! how a signal moves from one pattern to the next and forgets where it sits,
//! which is what the wave-shape neuron matches on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Forward first differences of a value series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ShapeVector(Vec<f64>);

impl ShapeVector {
    pub fn new(deltas: Vec<f64>) -> Result<Self> {
        if deltas.iter().any(|d| !d.is_finite()) {
            return Err(Error::NonFinite("shape"));
        }
        Ok(Self(deltas))
    }

    pub fn deltas(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Mean absolute delta; zero for an empty shape.
    pub fn magnitude(&self) -> f64 {
        if self.0.is_empty() {
            0.0
        } else {
            self.0.iter().map(|d| d.abs()).sum::<f64>() / self.0.len() as f64
        }
    }

    pub fn scaled(&self, factor: f64) -> ShapeVector {
        ShapeVector(self.0.iter().map(|d| d * factor).collect())
    }

    pub fn dot(&self, other: &ShapeVector) -> Result<f64> {
        check_len(self.len(), other.len())?;
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

fn check_len(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch { left, right });
    }
    Ok(())
}

fn check_finite(series: &[f64]) -> Result<()> {
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("series"));
    }
    Ok(())
}

pub fn shape_of(series: &[f64]) -> Result<ShapeVector> {
    if series.len() < 2 {
        return Err(Error::ShapeTooShort);
    }
    check_finite(series)?;
    Ok(ShapeVector(series.windows(2).map(|w| w[1] - w[0]).collect()))
}

/// Inverse of [`shape_of`]: cumulative sum starting at `first`.
pub fn reconstruct(first: f64, shape: &ShapeVector) -> Result<Vec<f64>> {
    if !first.is_finite() {
        return Err(Error::NonFinite("first value"));
    }
    let mut values = Vec::with_capacity(shape.len() + 1);
    values.push(first);
    let mut level = first;
    for d in shape.deltas() {
        level += d;
        values.push(level);
    }
    Ok(values)
}

/// Euclidean distance between two shapes. With `sign_aware`, a shape and its
/// mirror image count as identical (the smaller of `|a - b|` and `|a + b|`).
pub fn shape_distance(a: &ShapeVector, b: &ShapeVector, sign_aware: bool) -> Result<f64> {
    check_len(a.len(), b.len())?;
    let norm = |s: f64| -> f64 {
        a.deltas()
            .iter()
            .zip(b.deltas())
            .map(|(x, y)| (x - s * y).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let direct = norm(1.0);
    if sign_aware {
        Ok(direct.min(norm(-1.0)))
    } else {
        Ok(direct)
    }
}

pub fn mean(series: &[f64]) -> f64 {
    series.iter().sum::<f64>() / series.len() as f64
}

/// Shifts the whole series so that its mean lands on `target_mean`. The
/// shape is unchanged.
pub fn transpose_to_level(series: &[f64], target_mean: f64) -> Result<Vec<f64>> {
    if series.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_finite(series)?;
    let shift = target_mean - mean(series);
    Ok(series.iter().map(|v| v + shift).collect())
}

pub fn shape_change_average(series: &[f64]) -> Result<f64> {
    Ok(shape_of(series)?.magnitude())
}
