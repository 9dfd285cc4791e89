//! Rate sweeps: each row solves for `t_mu` (or estimates risk) at one size,
//! and a log-log slope is fitted across rows.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::complexity::solve_tmu;
use crate::error::{Error, Result};
use crate::estimation::{estimate_risk, Estimator, RiskEstimate};
use crate::point::Point;
use crate::rng::{derive_seed, sample_rng};
use crate::sets::{ConstraintSet, LassoImage, Subspace};

/// Bracket width for golden-section searches inside sweeps.
pub const SWEEP_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub params: Value,
    pub t_mu_hat: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub risk: Option<f64>,
    pub risk_stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<RiskEstimate>,
}

impl SweepRow {
    fn new(n: usize, params: Value) -> Self {
        SweepRow {
            n,
            params,
            t_mu_hat: None,
            ci_low: None,
            ci_high: None,
            risk: None,
            risk_stderr: None,
            baseline: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub experiment: String,
    pub rows: Vec<SweepRow>,
    pub slope: Option<f64>,
    pub slope_stderr: Option<f64>,
    /// Which row quantity the slope is fitted to, and against what.
    pub slope_of: String,
    pub seed: u64,
    #[serde(skip)]
    pub wall_time: std::time::Duration,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,param_json,t_mu_hat,ci_low,ci_high,risk,risk_stderr\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.n,
                csv_quote(&r.params.to_string()),
                fmt_opt(r.t_mu_hat),
                fmt_opt(r.ci_low),
                fmt_opt(r.ci_high),
                fmt_opt(r.risk),
                fmt_opt(r.risk_stderr)
            ));
        }
        out
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }

    /// `(x, y)` pairs the slope was fitted to.
    pub fn fit_points(&self) -> Vec<(f64, f64)> {
        let x_of = |r: &SweepRow| {
            if self.experiment == "subspace" {
                r.params["p"].as_f64().unwrap_or(f64::NAN)
            } else {
                r.n as f64
            }
        };
        self.rows
            .iter()
            .filter_map(|r| {
                let y = if self.experiment == "counterexample" { r.risk } else { r.t_mu_hat };
                y.filter(|v| *v > 0.0).map(|v| (x_of(r), v))
            })
            .collect()
    }

    fn fit(mut self) -> Self {
        let pts = self.fit_points();
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        if let Ok((slope, se)) = fit_loglog_slope(&xs, &ys) {
            self.slope = Some(slope);
            self.slope_stderr = Some(se);
        }
        self
    }
}

/// Ordinary least squares of `ln y` on `ln x`, returning the slope and its
/// standard error.
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < 3 {
        return Err(Error::TooFewPoints(xs.len()));
    }
    if let Some(&bad) = xs.iter().chain(ys).find(|v| !(**v > 0.0)) {
        return Err(Error::NonPositiveValue(bad));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::ParameterOutOfRange("all x values are equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok((slope, (rss / (m - 2.0) / sxx).sqrt()))
}

fn check_sizes(list: &[usize]) -> Result<()> {
    if list.is_empty() {
        return Err(Error::ParameterOutOfRange("size list is empty".into()));
    }
    if list.contains(&0) {
        return Err(Error::ParameterOutOfRange("sizes must be >= 1".into()));
    }
    Ok(())
}

fn sorted(mut list: Vec<usize>) -> Vec<usize> {
    list.sort_unstable();
    list.dedup();
    list
}

fn fill_tmu(row: &mut SweepRow, set: &ConstraintSet, mu: &Point, samples: usize, seed: u64) -> Result<()> {
    let est = solve_tmu(set, mu, samples, seed, SWEEP_TOL)?;
    row.t_mu_hat = Some(est.t_mu);
    row.ci_low = Some(est.ci_low);
    row.ci_high = Some(est.ci_high);
    Ok(())
}

fn finish(experiment: &str, slope_of: &str, rows: Vec<SweepRow>, seed: u64, started: std::time::Instant) -> SweepReport {
    SweepReport {
        experiment: experiment.into(),
        rows,
        slope: None,
        slope_stderr: None,
        slope_of: slope_of.into(),
        seed,
        wall_time: started.elapsed(),
    }
    .fit()
}

/// `t_mu` at `mu = 0` for random `p`-dimensional subspaces of `R^n`; the
/// slope is fitted against `p`. Row risk is the LSE risk, which equals `p`.
pub fn subspace_sweep(p_list: &[usize], n: usize, samples: usize, seed: u64) -> Result<SweepReport> {
    let started = std::time::Instant::now();
    check_sizes(p_list)?;
    if let Some(&p) = p_list.iter().find(|&&p| p > n) {
        return Err(Error::ParameterOutOfRange(format!("p = {p} exceeds n = {n}")));
    }
    let rows = sorted(p_list.to_vec())
        .into_par_iter()
        .map(|p| {
            let row_seed = derive_seed(seed, p as u64);
            let set = ConstraintSet::Subspace(Subspace::random(n, p, row_seed)?);
            let mu = Point::zeros(n);
            let mut row = SweepRow::new(
                n,
                json!({ "p": p, "samples": samples, "seed": row_seed }),
            );
            fill_tmu(&mut row, &set, &mu, samples, row_seed)?;
            let risk = estimate_risk(&Estimator::Lse(&set), mu.as_slice(), samples, row_seed)?;
            row.risk = Some(risk.mean_sq_error);
            row.risk_stderr = Some(risk.stderr);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish("subspace", "t_mu_hat vs p", rows, seed, started))
}

/// Random `n x p` design with i.i.d. `+-1` entries, so every column has
/// squared norm `n`.
pub fn sign_design(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = sample_rng(derive_seed(seed, 0x5167_de51), n as u64);
    DMatrix::from_fn(n, p, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 })
}

/// Design generator for the lasso sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DesignSpec {
    /// `+-1` entries with `p = ratio * n` columns.
    Signs { ratio: f64 },
}

impl DesignSpec {
    pub fn columns(&self, n: usize) -> usize {
        match self {
            DesignSpec::Signs { ratio } => ((ratio * n as f64).round() as usize).max(1),
        }
    }

    pub fn build(&self, n: usize, seed: u64) -> DMatrix<f64> {
        match self {
            DesignSpec::Signs { .. } => sign_design(n, self.columns(n), seed),
        }
    }
}

impl Default for DesignSpec {
    fn default() -> Self {
        DesignSpec::Signs { ratio: 0.5 }
    }
}

/// `t_mu` for the lasso image `{X b : |b|_1 <= L}` at `mu = X beta`. The
/// leading entries of every coefficient vector are `beta`, the rest zero;
/// the design depends on `seed` and `n` only, never on `L`.
pub fn lasso_sweep(
    n_list: &[usize],
    design: DesignSpec,
    beta: &[f64],
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<SweepReport> {
    let started = std::time::Instant::now();
    check_sizes(n_list)?;
    if !(radius > 0.0) {
        return Err(Error::ParameterOutOfRange(format!("L must be > 0, got {radius}")));
    }
    let beta_l1: f64 = beta.iter().map(|b| b.abs()).sum();
    let delta = radius - beta_l1;
    let rows = sorted(n_list.to_vec())
        .into_par_iter()
        .map(|n| {
            let p = design.columns(n);
            if beta.len() > p {
                return Err(Error::BadDesign(format!("beta has {} entries but p = {p}", beta.len())));
            }
            let x = design.build(n, seed);
            for j in 0..p {
                let diag = x.column(j).norm_squared() / n as f64;
                if (diag - 1.0).abs() > 1e-8 {
                    return Err(Error::BadDesign(format!("column {j} has Sigma_jj = {diag}")));
                }
            }
            let mut b = vec![0.0; p];
            b[..beta.len()].copy_from_slice(beta);
            let lasso = LassoImage::new(x, radius)?;
            let mu = Point::new(lasso.image(&b))?;
            let set = ConstraintSet::LassoImage(lasso);
            let row_seed = derive_seed(seed, n as u64);
            let mut row = SweepRow::new(
                n,
                json!({
                    "p": p,
                    "L": radius,
                    "delta": delta,
                    "beta": beta,
                    "design_seed": seed,
                    "samples": samples,
                    "seed": row_seed,
                }),
            );
            fill_tmu(&mut row, &set, &mu, samples, row_seed)?;
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish("lasso", "t_mu_hat vs n", rows, seed, started))
}

/// Monotone truth for the isotonic sweep: `mu_i = intercept + slope * i / n`
/// for `i = 1..n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotonicTruth {
    pub slope: f64,
    pub intercept: f64,
}

impl IsotonicTruth {
    pub fn linear() -> Self {
        IsotonicTruth {
            slope: 1.0,
            intercept: 0.0,
        }
    }

    pub fn constant() -> Self {
        IsotonicTruth {
            slope: 0.0,
            intercept: 0.0,
        }
    }

    pub fn build(&self, n: usize) -> Vec<f64> {
        (1..=n)
            .map(|i| self.intercept + self.slope * i as f64 / n as f64)
            .collect()
    }
}

/// `(A, B, D)`: the smallest and largest scaled gaps `n (mu_{i+1} - mu_i)`
/// and `max(mu_n - mu_1, 1)`.
pub fn isotonic_shape(mu: &[f64]) -> Result<(f64, f64, f64)> {
    let n = mu.len() as f64;
    let mut a = f64::INFINITY;
    let mut b: f64 = 0.0;
    for (i, w) in mu.windows(2).enumerate() {
        let gap = w[1] - w[0];
        if gap < 0.0 {
            return Err(Error::NonMonotoneTruth(i));
        }
        a = a.min(n * gap);
        b = b.max(n * gap);
    }
    if mu.len() < 2 {
        a = 0.0;
    }
    let range = mu.last().copied().unwrap_or(0.0) - mu.first().copied().unwrap_or(0.0);
    Ok((a, b, range.max(1.0)))
}

/// `t_mu` over the isotonic cone at a monotone truth; row risk is the LSE
/// risk on the same draws.
pub fn isotonic_sweep(n_list: &[usize], truth: IsotonicTruth, samples: usize, seed: u64) -> Result<SweepReport> {
    let started = std::time::Instant::now();
    check_sizes(n_list)?;
    let rows = sorted(n_list.to_vec())
        .into_par_iter()
        .map(|n| {
            let mu_vec = truth.build(n);
            let (a, b, d) = isotonic_shape(&mu_vec)?;
            let set = ConstraintSet::isotonic(n)?;
            let mu = Point::new(mu_vec)?;
            let row_seed = derive_seed(seed, n as u64);
            let mut row = SweepRow::new(
                n,
                json!({
                    "A": a,
                    "B": b,
                    "D": d,
                    "slope": truth.slope,
                    "intercept": truth.intercept,
                    "samples": samples,
                    "seed": row_seed,
                }),
            );
            fill_tmu(&mut row, &set, &mu, samples, row_seed)?;
            let risk = estimate_risk(&Estimator::Lse(&set), mu.as_slice(), samples, row_seed)?;
            row.risk = Some(risk.mean_sq_error);
            row.risk_stderr = Some(risk.stderr);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish("isotonic", "t_mu_hat vs n", rows, seed, started))
}

/// LSE risk over the counterexample set at `mu = 0`, next to the risk of
/// the coordinate-mean estimator (stored as the row baseline). The slope
/// is fitted to the LSE risk.
pub fn counterexample_risk(n_list: &[usize], samples: usize, seed: u64) -> Result<SweepReport> {
    let started = std::time::Instant::now();
    check_sizes(n_list)?;
    let rows = sorted(n_list.to_vec())
        .into_par_iter()
        .map(|n| {
            let set = ConstraintSet::counterexample(n)?;
            let mu = vec![0.0; n];
            let row_seed = derive_seed(seed, n as u64);
            let mut row = SweepRow::new(n, json!({ "samples": samples, "seed": row_seed }));
            let lse = estimate_risk(&Estimator::Lse(&set), &mu, samples, row_seed)?;
            row.risk = Some(lse.mean_sq_error);
            row.risk_stderr = Some(lse.stderr);
            row.baseline = Some(estimate_risk(&Estimator::CoordinateMean, &mu, samples, row_seed)?);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish("counterexample", "risk vs n", rows, seed, started))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_powers() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let (s, se) = fit_loglog_slope(&xs, &xs).unwrap();
        assert!((s - 1.0).abs() < 1e-12 && se < 1e-12);
        let ys: Vec<f64> = xs.iter().map(|x| x.sqrt()).collect();
        let (s, se) = fit_loglog_slope(&xs, &ys).unwrap();
        assert!((s - 0.5).abs() < 1e-12 && se < 1e-12);
    }

    #[test]
    fn slope_errors() {
        assert_eq!(fit_loglog_slope(&[1.0, 2.0], &[1.0, 2.0]).unwrap_err(), Error::TooFewPoints(2));
        assert_eq!(
            fit_loglog_slope(&[1.0, 2.0, 3.0], &[1.0, 0.0, 2.0]).unwrap_err(),
            Error::NonPositiveValue(0.0)
        );
    }

    #[test]
    fn isotonic_shape_of_linear_truth() {
        let (a, b, d) = isotonic_shape(&IsotonicTruth::linear().build(64)).unwrap();
        assert!((a - 1.0).abs() < 1e-9 && (b - 1.0).abs() < 1e-9);
        assert_eq!(d, 1.0);
        assert_eq!(isotonic_shape(&[0.0, 1.0, 0.5]).unwrap_err(), Error::NonMonotoneTruth(1));
        assert_eq!(isotonic_shape(&IsotonicTruth::constant().build(8)).unwrap().0, 0.0);
    }

    #[test]
    fn sign_design_has_unit_diagonal() {
        let x = sign_design(32, 16, 3);
        for j in 0..16 {
            assert_eq!(x.column(j).norm_squared(), 32.0);
        }
        assert_eq!(x, sign_design(32, 16, 3));
    }

    #[test]
    fn csv_layout() {
        let mut row = SweepRow::new(4, json!({"p": 1}));
        row.t_mu_hat = Some(0.5);
        let report = SweepReport {
            experiment: "subspace".into(),
            rows: vec![row],
            slope: None,
            slope_stderr: None,
            slope_of: "t_mu_hat vs p".into(),
            seed: 0,
            wall_time: Default::default(),
        };
        assert_eq!(
            report.to_csv(),
            "n,param_json,t_mu_hat,ci_low,ci_high,risk,risk_stderr\n4,\"{\"\"p\"\":1}\",0.5,,,,\n"
        );
        assert!(report.to_json().get("wall_time").is_none());
    }
}
