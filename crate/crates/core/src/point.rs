use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite vector in the ambient space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::ParameterOutOfRange("point must have dimension >= 1".into()));
        }
        if let Some(i) = coords.iter().position(|v| !v.is_finite()) {
            return Err(Error::ParameterOutOfRange(format!(
                "coordinate {i} is not finite"
            )));
        }
        Ok(Point(coords))
    }

    pub fn zeros(n: usize) -> Self {
        Point(vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    // Unchecked constructor for values produced by the projections themselves.
    pub(crate) fn from_vec(coords: Vec<f64>) -> Self {
        Point(coords)
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn l1_norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).sum()
}

/// `base + scale * dir`, written into a fresh vector.
pub fn axpy(base: &[f64], scale: f64, dir: &[f64]) -> Vec<f64> {
    base.iter().zip(dir).map(|(b, d)| b + scale * d).collect()
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}
