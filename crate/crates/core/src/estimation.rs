//! Estimators of `mu` from `Y = mu + Z` and their Monte Carlo risk.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::{axpy, check_dim, Point};
use crate::rng::gaussian_vector;
use crate::sets::{ConstraintSet, DEFAULT_TOL};

/// Number of batches used for Monte Carlo standard errors.
pub const N_BATCHES: usize = 10;

#[derive(Debug, Clone, Copy)]
pub enum Estimator<'a> {
    /// Least squares over a convex set: `P_K(Y)`.
    Lse(&'a ConstraintSet),
    /// Every coordinate set to the average of `Y`.
    CoordinateMean,
    /// `Y` itself.
    Identity,
}

impl Estimator<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Lse(_) => "lse",
            Estimator::CoordinateMean => "mean",
            Estimator::Identity => "identity",
        }
    }

    pub fn apply(&self, y: &[f64]) -> Result<Point> {
        match self {
            Estimator::Lse(set) => {
                let proj = set.project(y, DEFAULT_TOL)?;
                if !proj.converged {
                    return Err(Error::NonConvergence {
                        iterations: proj.iterations,
                    });
                }
                Ok(proj.point)
            }
            Estimator::CoordinateMean => {
                let mean = y.iter().sum::<f64>() / y.len() as f64;
                Point::new(vec![mean; y.len()])
            }
            Estimator::Identity => Point::new(y.to_vec()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    #[serde(rename = "mse")]
    pub mean_sq_error: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
}

/// Mean and batch standard error of per-sample values (in index order).
pub(crate) fn batch_mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let batches = N_BATCHES.min(n);
    if batches < 2 {
        return (mean, 0.0);
    }
    let means: Vec<f64> = (0..batches)
        .map(|b| {
            let chunk = &values[b * n / batches..(b + 1) * n / batches];
            chunk.iter().sum::<f64>() / chunk.len() as f64
        })
        .collect();
    let centre = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - centre).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (mean, (var / batches as f64).sqrt())
}

/// Per-sample squared errors `|est(mu + Z_i) - mu|^2`, `i = 0..n_samples`.
pub fn squared_errors(est: &Estimator<'_>, mu: &[f64], n_samples: usize, seed: u64) -> Result<Vec<f64>> {
    if let Estimator::Lse(set) = est {
        check_dim(set.dim(), mu.len())?;
    }
    (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let z = gaussian_vector(seed, i, mu.len());
            let y = axpy(mu, 1.0, &z);
            let fit = est.apply(&y)?;
            Ok(fit.iter().zip(mu).map(|(a, b)| (a - b) * (a - b)).sum())
        })
        .collect()
}

pub fn estimate_risk(est: &Estimator<'_>, mu: &[f64], n_samples: usize, seed: u64) -> Result<RiskEstimate> {
    if n_samples < 2 {
        return Err(Error::ParameterOutOfRange(format!("n_samples must be >= 2, got {n_samples}")));
    }
    let errors = squared_errors(est, mu, n_samples, seed)?;
    let (mean_sq_error, stderr) = batch_mean_stderr(&errors);
    Ok(RiskEstimate {
        mean_sq_error,
        stderr,
        n_samples,
        seed,
    })
}
