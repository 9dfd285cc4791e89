//! The set `{ alpha n^{-1/4} + alpha theta_i n^{-1/2} : alpha in [0,1], theta in [-1,1]^n }`.
//!
//! For fixed `alpha` the slice is the box
//! `[alpha (a - b), alpha (a + b)]^n` with `a = n^{-1/4}`, `b = n^{-1/2}`,
//! and the set is the convex hull of the origin and the `alpha = 1` box.
//! Projection minimizes the squared distance to the slice over `alpha`
//! (a convex function of `alpha`) and then clamps.

use crate::error::{Error, Result};

const GOLDEN_ITERATIONS: usize = 200;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleSet {
    n: usize,
    low: f64,
    high: f64,
}

impl CounterexampleSet {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSet("counterexample set needs n >= 1".into()));
        }
        let nf = n as f64;
        let a = nf.powf(-0.25);
        let b = nf.powf(-0.5);
        Ok(CounterexampleSet {
            n,
            low: (a - b).max(0.0),
            high: a + b,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Slice bounds at `alpha = 1`.
    pub fn unit_slice(&self) -> (f64, f64) {
        (self.low, self.high)
    }

    /// Squared distance from `y` to the slice at `alpha`.
    pub fn slice_sq_distance(&self, y: &[f64], alpha: f64) -> f64 {
        let (lo, hi) = (alpha * self.low, alpha * self.high);
        y.iter()
            .map(|&v| {
                if v < lo {
                    (lo - v) * (lo - v)
                } else if v > hi {
                    (v - hi) * (v - hi)
                } else {
                    0.0
                }
            })
            .sum()
    }

    pub fn clamp_to_slice(&self, y: &[f64], alpha: f64) -> Vec<f64> {
        let (lo, hi) = (alpha * self.low, alpha * self.high);
        y.iter().map(|v| v.clamp(lo, hi)).collect()
    }

    /// Minimizer of the squared slice distance on the linear piece that
    /// contains `alpha`.
    fn piecewise_minimizer(&self, y: &[f64], alpha: f64) -> Option<f64> {
        let (lo, hi) = (alpha * self.low, alpha * self.high);
        let mut num = 0.0;
        let mut den = 0.0;
        for &v in y {
            if v < lo {
                num += self.low * v;
                den += self.low * self.low;
            } else if v > hi {
                num += self.high * v;
                den += self.high * self.high;
            }
        }
        (den > 0.0).then(|| (num / den).clamp(0.0, 1.0))
    }

    /// Returns the projection and the optimal `alpha`.
    pub fn project(&self, y: &[f64]) -> (Vec<f64>, f64) {
        let h = |alpha: f64| self.slice_sq_distance(y, alpha);
        let (mut a, mut b) = (0.0_f64, 1.0_f64);
        let mut x1 = b - INV_PHI * (b - a);
        let mut x2 = a + INV_PHI * (b - a);
        let mut f1 = h(x1);
        let mut f2 = h(x2);
        for _ in 0..GOLDEN_ITERATIONS {
            if f1 <= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - INV_PHI * (b - a);
                f1 = h(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + INV_PHI * (b - a);
                f2 = h(x2);
            }
        }
        let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
        for edge in [0.0, 1.0] {
            let fe = h(edge);
            if fe < best.1 {
                best = (edge, fe);
            }
        }
        // The objective is quadratic between breakpoints; finish with an
        // exact solve on the piece the search landed on.
        for _ in 0..3 {
            match self.piecewise_minimizer(y, best.0) {
                Some(alpha) if alpha != best.0 => {
                    let fa = h(alpha);
                    if fa <= best.1 {
                        best = (alpha, fa);
                    } else {
                        break;
                    }
                }
                _ => break,
            }
        }
        (self.clamp_to_slice(y, best.0), best.0)
    }
}

/// The point with coordinates `alpha n^{-1/4} + alpha theta_i n^{-1/2}`.
pub fn make_counterexample_point(n: usize, alpha: f64, theta: &[f64]) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::ParameterOutOfRange("n must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::ParameterOutOfRange(format!("alpha = {alpha} not in [0, 1]")));
    }
    if theta.len() != n {
        return Err(Error::ParameterOutOfRange(format!(
            "theta has length {}, expected {n}",
            theta.len()
        )));
    }
    if let Some(i) = theta.iter().position(|t| !(-1.0..=1.0).contains(t)) {
        return Err(Error::ParameterOutOfRange(format!(
            "theta[{i}] = {} not in [-1, 1]",
            theta[i]
        )));
    }
    let nf = n as f64;
    let a = nf.powf(-0.25);
    let b = nf.powf(-0.5);
    Ok(theta.iter().map(|t| alpha * a + alpha * t * b).collect())
}
