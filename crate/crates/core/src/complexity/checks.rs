use rayon::prelude::*;
use serde::Serialize;

use crate::complexity::curve::ComplexityCurve;
use crate::error::{Error, Result};
use crate::estimation::{estimate_risk, Estimator};
use crate::point::{axpy, check_dim, dist};
use crate::rng::gaussian_vector;
use crate::sets::{ConstraintSet, DEFAULT_TOL};

/// Outcome of comparing the complexity curve at two radii.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "verdict", content = "at", rename_all = "snake_case")]
pub enum Verdict {
    /// `t_mu >= value`.
    LowerBound(f64),
    /// `t_mu <= value`.
    UpperBound(f64),
    Inconclusive,
}

/// Two-point comparison at three standard errors: a significantly higher
/// value at the larger radius certifies `t_mu >= r1`, a significantly
/// higher value at the smaller radius certifies `t_mu <= r2`.
pub(crate) fn compare_points(r1: f64, (f1, se1): (f64, f64), r2: f64, (f2, se2): (f64, f64)) -> Verdict {
    if f1 + 3.0 * se1 <= f2 - 3.0 * se2 {
        Verdict::LowerBound(r1)
    } else if f1 - 3.0 * se1 >= f2 + 3.0 * se2 {
        Verdict::UpperBound(r2)
    } else {
        Verdict::Inconclusive
    }
}

/// Certificate on `t_mu` from two grid points of an estimated curve. When
/// the pair is inconclusive and `mu` lies in the set, a significantly
/// nonpositive curve value at `r` still gives `t_mu <= r`.
pub fn bracket_tmu(curve: &ComplexityCurve, r1: f64, r2: f64) -> Result<Verdict> {
    if !(0.0 <= r1 && r1 < r2) {
        return Err(Error::ParameterOutOfRange(format!("need 0 <= r1 < r2, got {r1}, {r2}")));
    }
    let i1 = curve.index_of(r1).ok_or(Error::PointsNotOnGrid(r1))?;
    let i2 = curve.index_of(r2).ok_or(Error::PointsNotOnGrid(r2))?;
    let at = |i: usize| (curve.f_hat[i], curve.stderr[i]);
    let verdict = compare_points(r1, at(i1), r2, at(i2));
    if verdict != Verdict::Inconclusive {
        return Ok(verdict);
    }
    if curve.t_c_hat <= 1e-9 {
        for (r, i) in [(r1, i1), (r2, i2)] {
            if r > 0.0 && curve.f_hat[i] + 3.0 * curve.stderr[i] <= 0.0 {
                return Ok(Verdict::UpperBound(r));
            }
        }
    }
    Ok(Verdict::Inconclusive)
}

/// One draw of the estimation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorSample {
    /// `|P_K(mu + z) - mu|`, the maximizer of `M(t) - t^2/2` for this draw.
    pub t_star: f64,
    pub sq_error: f64,
    pub seed_index: u64,
}

pub fn sample_t_star(set: &ConstraintSet, mu: &[f64], z: &[f64]) -> Result<ErrorSample> {
    check_dim(set.dim(), mu.len())?;
    check_dim(set.dim(), z.len())?;
    let proj = set.project(&axpy(mu, 1.0, z), DEFAULT_TOL)?;
    if !proj.converged {
        return Err(Error::NonConvergence {
            iterations: proj.iterations,
        });
    }
    let t_star = dist(&proj.point, mu);
    Ok(ErrorSample {
        t_star,
        sq_error: t_star * t_star,
        seed_index: 0,
    })
}

pub fn draw_error_samples(set: &ConstraintSet, mu: &[f64], n_samples: usize, seed: u64) -> Result<Vec<ErrorSample>> {
    check_dim(set.dim(), mu.len())?;
    (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let z = gaussian_vector(seed, i, mu.len());
            sample_t_star(set, mu, &z).map(|e| ErrorSample { seed_index: i, ..e })
        })
        .collect()
}

/// `3 exp(-x^4 / (32 (1 + x / sqrt(t_mu))^2))`.
pub fn concentration_bound(x: f64, t_mu: f64) -> f64 {
    let denom = 32.0 * (1.0 + x / t_mu.sqrt()).powi(2);
    3.0 * (-x.powi(4) / denom).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcentrationRow {
    pub x: f64,
    /// Fraction of draws with `|t_star - t_mu| >= x sqrt(t_mu)`.
    pub empirical: f64,
    pub bound: f64,
    /// Binomial standard error at the bound (capped at probability 1).
    pub stderr: f64,
    pub violation: bool,
}

pub fn concentration_check(
    set: &ConstraintSet,
    mu: &[f64],
    t_mu: f64,
    n_samples: usize,
    seed: u64,
    x_grid: &[f64],
) -> Result<Vec<ConcentrationRow>> {
    if !(t_mu > 0.0) {
        return Err(Error::NonPositiveTmu(t_mu));
    }
    if n_samples == 0 {
        return Err(Error::ParameterOutOfRange("n_samples must be >= 1".into()));
    }
    let samples = draw_error_samples(set, mu, n_samples, seed)?;
    let count = n_samples as f64;
    let scale = t_mu.sqrt();
    Ok(x_grid
        .iter()
        .map(|&x| {
            let hits = samples
                .iter()
                .filter(|e| (e.t_star - t_mu).abs() >= x * scale)
                .count();
            let empirical = hits as f64 / count;
            let bound = concentration_bound(x, t_mu);
            let q = bound.min(1.0);
            let stderr = (q * (1.0 - q) / count).sqrt();
            ConcentrationRow {
                x,
                empirical,
                bound,
                stderr,
                violation: empirical > bound + 3.0 * stderr,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskCheck {
    pub risk: f64,
    pub stderr: f64,
    pub lower: f64,
    pub upper: f64,
    pub pass: bool,
}

/// Whether the Monte Carlo risk lies in `t_mu^2 -/+ C t_mu^{3/2}` (for
/// `t_mu >= 1`) or in `[0, C]` (for `t_mu < 1`), widened by three
/// standard errors.
pub fn risk_vs_tmu_check(
    set: &ConstraintSet,
    mu: &[f64],
    t_mu: f64,
    n_samples: usize,
    seed: u64,
    c: f64,
) -> Result<RiskCheck> {
    if !(c > 0.0) {
        return Err(Error::ParameterOutOfRange(format!("C must be > 0, got {c}")));
    }
    let r = estimate_risk(&Estimator::Lse(set), mu, n_samples, seed)?;
    let (lower, upper) = if t_mu >= 1.0 {
        let slack = c * t_mu.powf(1.5);
        (t_mu * t_mu - slack, t_mu * t_mu + slack)
    } else {
        (0.0, c)
    };
    let widen = 3.0 * r.stderr;
    Ok(RiskCheck {
        risk: r.mean_sq_error,
        stderr: r.stderr,
        lower,
        upper,
        pass: r.mean_sq_error >= lower - widen && r.mean_sq_error <= upper + widen,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::Point;
    use crate::sets::{BoxSet, Subspace};

    fn toy_curve(f1: f64, f2: f64) -> ComplexityCurve {
        ComplexityCurve::from_parts(
            Point::zeros(1),
            vec![1.0, 2.0],
            vec![f1 + 0.5, f2 + 2.0],
            vec![0.01, 0.01],
            0.0,
            100,
            0,
        )
    }

    #[test]
    fn bracket_clauses() {
        assert_eq!(bracket_tmu(&toy_curve(0.5, 0.9), 1.0, 2.0).unwrap(), Verdict::LowerBound(1.0));
        assert_eq!(bracket_tmu(&toy_curve(0.9, 0.5), 1.0, 2.0).unwrap(), Verdict::UpperBound(2.0));
        assert_eq!(bracket_tmu(&toy_curve(0.5, 0.52), 1.0, 2.0).unwrap(), Verdict::Inconclusive);
    }

    #[test]
    fn bracket_nonpositive_clause() {
        // Indistinguishable values, but both significantly below zero.
        assert_eq!(bracket_tmu(&toy_curve(-0.5, -0.52), 1.0, 2.0).unwrap(), Verdict::UpperBound(1.0));
    }

    #[test]
    fn bracket_requires_grid_points() {
        assert_eq!(
            bracket_tmu(&toy_curve(0.5, 0.9), 1.5, 2.0).unwrap_err(),
            Error::PointsNotOnGrid(1.5)
        );
    }

    #[test]
    fn t_star_examples() {
        let iso = ConstraintSet::isotonic(3).unwrap();
        let mu = [0.0, 1.0, 2.0];
        assert_eq!(sample_t_star(&iso, &mu, &[0.0; 3]).unwrap().t_star, 0.0);

        let sub = Subspace::random(10, 3, 2).unwrap();
        let z = gaussian_vector(1, 0, 10);
        let expected = sub.coefficients(&z).norm();
        let set = ConstraintSet::Subspace(sub);
        let e = sample_t_star(&set, &[0.0; 10], &z).unwrap();
        assert!((e.t_star - expected).abs() < 1e-12);
        assert_eq!(e.sq_error, e.t_star * e.t_star);
    }

    #[test]
    fn zero_x_is_never_a_violation() {
        let set = ConstraintSet::isotonic(10).unwrap();
        let rows = concentration_check(&set, &[0.0; 10], 1.0, 200, 0, &[0.0]).unwrap();
        assert_eq!(rows[0].bound, 3.0);
        assert!(rows[0].empirical <= 1.0 && !rows[0].violation);
    }

    #[test]
    fn singleton_never_exceeds() {
        let set = ConstraintSet::Box(BoxSet::singleton(&[1.0; 4]).unwrap());
        let rows = concentration_check(&set, &[1.0; 4], 1e-12, 500, 0, &[0.5, 1.0, 2.0, 3.0]).unwrap();
        for r in rows {
            assert_eq!(r.empirical, 0.0);
            assert!(!r.violation);
        }
    }

    #[test]
    fn non_positive_tmu_is_rejected() {
        let set = ConstraintSet::isotonic(2).unwrap();
        assert_eq!(
            concentration_check(&set, &[0.0; 2], 0.0, 10, 0, &[1.0]).unwrap_err(),
            Error::NonPositiveTmu(0.0)
        );
    }

    #[test]
    fn bound_values() {
        // x = 3, t_mu = 100: 3 exp(-81 / (32 * 1.69))
        let b = concentration_bound(3.0, 100.0);
        assert!((b - 3.0 * (-81.0_f64 / (32.0 * 1.69)).exp()).abs() < 1e-15);
    }

    #[test]
    fn risk_sandwich_subspace_and_singleton() {
        let set = ConstraintSet::Subspace(Subspace::random(200, 100, 3).unwrap());
        let chi_mean = 9.975_031_639_551_357;
        let check = risk_vs_tmu_check(&set, &[0.0; 200], chi_mean, 500, 1, 10.0).unwrap();
        assert!(check.pass, "{check:?}");

        let single = ConstraintSet::Box(BoxSet::singleton(&[0.0; 3]).unwrap());
        let check = risk_vs_tmu_check(&single, &[0.0; 3], 0.0, 50, 1, 1.0).unwrap();
        assert_eq!(check.risk, 0.0);
        assert!(check.pass);
        assert!(risk_vs_tmu_check(&single, &[0.0; 3], 0.0, 50, 1, 0.0).is_err());
    }
}
