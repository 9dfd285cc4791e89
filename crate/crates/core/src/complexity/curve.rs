use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::complexity::path::RadialPath;
use crate::error::{Error, Result};
use crate::point::{check_dim, Point};
use crate::rng::gaussian_vector;
use crate::sets::{ConstraintSet, DEFAULT_TOL};

/// Monte Carlo estimate of `f_mu` on a grid of radii.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityCurve {
    pub mu: Point,
    pub grid: Vec<f64>,
    /// `m_hat - t^2 / 2`; `-inf` below `t_c_hat`.
    pub f_hat: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Sample mean of `M(t)`.
    pub m_hat: Vec<f64>,
    pub t_c_hat: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl ComplexityCurve {
    /// Assembles a curve from precomputed means, deriving `f_hat`.
    pub fn from_parts(
        mu: Point,
        grid: Vec<f64>,
        m_hat: Vec<f64>,
        stderr: Vec<f64>,
        t_c_hat: f64,
        n_samples: usize,
        seed: u64,
    ) -> Self {
        let f_hat = grid.iter().zip(&m_hat).map(|(t, m)| m - t * t / 2.0).collect();
        ComplexityCurve {
            mu,
            grid,
            f_hat,
            stderr,
            m_hat,
            t_c_hat,
            n_samples,
            seed,
        }
    }

    /// Grid point with the largest `f_hat`.
    pub fn grid_argmax(&self) -> f64 {
        let mut best = (f64::NEG_INFINITY, self.grid[0]);
        for (t, f) in self.grid.iter().zip(&self.f_hat) {
            if *f > best.0 {
                best = (*f, *t);
            }
        }
        best.1
    }

    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.grid
            .iter()
            .position(|g| (g - t).abs() <= 1e-12 * (1.0 + t.abs()))
    }

    /// CSV with header `t,f_hat,stderr,m_hat`; `-inf` is written literally.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,f_hat,stderr,m_hat\n");
        for i in 0..self.grid.len() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                self.grid[i], self.f_hat[i], self.stderr[i], self.m_hat[i]
            );
        }
        out
    }
}

pub fn log_grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(min > 0.0) || !(max > min) {
        return Err(Error::InvalidGrid(format!(
            "log grid needs 0 < min < max and >= 2 points (got {min}, {max}, {points})"
        )));
    }
    let (a, b) = (min.ln(), max.ln());
    Ok((0..points)
        .map(|i| {
            if i == points - 1 {
                max
            } else {
                (a + (b - a) * i as f64 / (points - 1) as f64).exp()
            }
        })
        .collect())
}

pub fn linear_grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(min > 0.0) || !(max > min) {
        return Err(Error::InvalidGrid(format!(
            "linear grid needs 0 < min < max and >= 2 points (got {min}, {max}, {points})"
        )));
    }
    Ok((0..points)
        .map(|i| min + (max - min) * i as f64 / (points - 1) as f64)
        .collect())
}

/// 40 log-spaced radii over `[max(t_c, 0.01), 4 sqrt(n)]`.
pub fn default_grid(t_c: f64, n: usize) -> Vec<f64> {
    let lo = t_c.max(1e-2);
    let hi = (4.0 * (n as f64).sqrt()).max(2.0 * lo);
    log_grid(lo, hi, 40).expect("valid default grid")
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if grid.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::InvalidGrid("grid points must be finite and positive".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidGrid("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Estimates `f_mu` on `grid` with `n_samples` Gaussian draws. Every draw
/// is evaluated on the whole grid, so each per-sample curve is concave.
pub fn estimate_curve(
    set: &ConstraintSet,
    mu: &Point,
    grid: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<ComplexityCurve> {
    validate_grid(grid)?;
    check_dim(set.dim(), mu.dim())?;
    if n_samples < 2 {
        return Err(Error::ParameterOutOfRange(format!("n_samples must be >= 2, got {n_samples}")));
    }
    let n = mu.dim();
    let per_sample: Vec<Vec<f64>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let z = gaussian_vector(seed, i, n);
            let mut path = RadialPath::new(set, mu, z, DEFAULT_TOL)?;
            grid.iter().map(|&t| path.m_at(t)).collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let t_c_hat = set.distance_to_set(mu)?;
    let count = n_samples as f64;
    let mut m_hat = Vec::with_capacity(grid.len());
    let mut stderr = Vec::with_capacity(grid.len());
    for j in 0..grid.len() {
        if per_sample.iter().any(|row| row[j] == f64::NEG_INFINITY) {
            m_hat.push(f64::NEG_INFINITY);
            stderr.push(0.0);
            continue;
        }
        let mean = per_sample.iter().map(|row| row[j]).sum::<f64>() / count;
        let var = per_sample.iter().map(|row| (row[j] - mean).powi(2)).sum::<f64>() / (count - 1.0);
        m_hat.push(mean);
        stderr.push((var / count).sqrt());
    }
    Ok(ComplexityCurve::from_parts(
        mu.clone(),
        grid.to_vec(),
        m_hat,
        stderr,
        t_c_hat,
        n_samples,
        seed,
    ))
}
