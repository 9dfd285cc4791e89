use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::complexity::checks::{compare_points, Verdict};
use crate::complexity::path::RadialPath;
use crate::error::{Error, Result};
use crate::estimation::N_BATCHES;
use crate::point::{check_dim, Point};
use crate::rng::gaussian_vector;
use crate::sets::{ConstraintSet, DEFAULT_TOL};

const MAX_BRACKET: f64 = 1e6;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Bracket `[r1, r2]` found while searching for `t_mu`, each end carrying
/// its own certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BracketCertificate {
    pub r1: f64,
    pub r2: f64,
    pub lower: Verdict,
    pub upper: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TmuEstimate {
    pub t_mu: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub bracket: Option<BracketCertificate>,
    pub n_samples: usize,
    pub seed: u64,
}

/// Maximizes a concave function on `[a, b]` to bracket width `tol`. The
/// left endpoint is also compared, so a maximum at `a` is returned exactly.
pub fn golden_section_max<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        }
    }
    let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    let fa = f(a)?;
    if fa >= best.1 {
        best = (a, fa);
    }
    Ok(best)
}

/// Sample-average objective `F(t) = mean_i M_i(t) - t^2 / 2` over a fixed
/// set of per-sample paths.
struct AveragedObjective<'a> {
    paths: Vec<RadialPath<'a>>,
}

impl AveragedObjective<'_> {
    fn values(&mut self, range: std::ops::Range<usize>, t: f64) -> Result<Vec<f64>> {
        self.paths[range]
            .par_iter_mut()
            .map(|p| p.m_at(t).map(|m| m - t * t / 2.0))
            .collect()
    }

    fn mean(&mut self, range: std::ops::Range<usize>, t: f64) -> Result<f64> {
        let v = self.values(range, t)?;
        Ok(v.iter().sum::<f64>() / v.len() as f64)
    }

    fn mean_stderr(&mut self, t: f64) -> Result<(f64, f64)> {
        let v = self.values(0..self.paths.len(), t)?;
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        if mean == f64::NEG_INFINITY {
            return Ok((mean, 0.0));
        }
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Ok((mean, (var / n).sqrt()))
    }
}

/// Locates the maximizer of the averaged `F_mu` by golden-section search
/// with common random numbers. The confidence interval comes from the
/// spread of maximizers over 10 contiguous sample batches.
pub fn solve_tmu(set: &ConstraintSet, mu: &Point, n_samples: usize, seed: u64, tol: f64) -> Result<TmuEstimate> {
    check_dim(set.dim(), mu.dim())?;
    if n_samples < 2 {
        return Err(Error::ParameterOutOfRange(format!("n_samples must be >= 2, got {n_samples}")));
    }
    if !(tol > 0.0) {
        return Err(Error::ParameterOutOfRange(format!("tol must be > 0, got {tol}")));
    }
    let n = mu.dim();
    let paths = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| RadialPath::new(set, mu, gaussian_vector(seed, i, n), DEFAULT_TOL))
        .collect::<Result<Vec<_>>>()?;
    let t_c = paths[0].t_c();
    let mut objective = AveragedObjective { paths };
    let all = 0..n_samples;

    // Double until the averaged objective drops; concavity then puts the
    // maximizer in [lower, t_hi].
    let mut lower = t_c;
    let mut prev_t = t_c.max(1.0);
    let mut prev = objective.mean_stderr(prev_t)?;
    let (t_hi, last) = loop {
        let next_t = 2.0 * prev_t;
        if next_t > MAX_BRACKET {
            return Err(Error::BracketFailure(prev_t));
        }
        let next = objective.mean_stderr(next_t)?;
        if next.0 < prev.0 {
            break (next_t, (prev_t, prev, next));
        }
        lower = prev_t.max(t_c);
        prev_t = next_t;
        prev = next;
    };

    let (t_mu, _) = golden_section_max(|t| objective.mean(all.clone(), t), lower, t_hi, tol)?;

    let (mid_t, mid, top) = last;
    let upper_verdict = match compare_points(mid_t, mid, t_hi, top) {
        Verdict::UpperBound(_) => Verdict::UpperBound(t_hi),
        _ => Verdict::Inconclusive,
    };
    let lower_verdict = if lower <= t_c {
        // t_mu >= t_c holds by definition.
        Verdict::LowerBound(t_c)
    } else {
        let at_lower = objective.mean_stderr(lower)?;
        let at_double = objective.mean_stderr(2.0 * lower)?;
        match compare_points(lower, at_lower, 2.0 * lower, at_double) {
            Verdict::LowerBound(_) => Verdict::LowerBound(lower),
            _ => Verdict::Inconclusive,
        }
    };

    let batches = N_BATCHES.min(n_samples);
    let (b_lo, b_hi) = ((0.5 * lower).max(t_c), 1.5 * t_hi);
    let mut batch_max = Vec::with_capacity(batches);
    for b in 0..batches {
        let range = b * n_samples / batches..(b + 1) * n_samples / batches;
        let (tb, _) = golden_section_max(|t| objective.mean(range.clone(), t), b_lo, b_hi, tol)?;
        batch_max.push(tb);
    }
    let centre = batch_max.iter().sum::<f64>() / batches as f64;
    let sd = (batch_max.iter().map(|x| (x - centre).powi(2)).sum::<f64>() / (batches - 1) as f64).sqrt();
    let quantile = StudentsT::new(0.0, 1.0, (batches - 1) as f64)
        .map(|d| d.inverse_cdf(0.975))
        .unwrap_or(12.706);
    let half = quantile * sd / (batches as f64).sqrt();

    Ok(TmuEstimate {
        t_mu,
        ci_low: (t_mu - half).max(0.0),
        ci_high: t_mu + half,
        bracket: Some(BracketCertificate {
            r1: lower,
            r2: t_hi,
            lower: lower_verdict,
            upper: upper_verdict,
        }),
        n_samples,
        seed,
    })
}
