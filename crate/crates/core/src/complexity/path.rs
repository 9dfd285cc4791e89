//! Per-sample evaluation of the localized supremum
//! `M(t) = sup { z . (nu - mu) : nu in K, |nu - mu| <= t }`.
//!
//! For `s > 0` the point `nu(s) = P_K(mu + s z)` maximizes
//! `z . nu - |nu - mu|^2 / (2 s)` over `K`, so it also maximizes `z . nu`
//! over `K` intersected with the ball of radius `r(s) = |nu(s) - mu|`.
//! `r(s)` is nondecreasing, and `M(t)` is read off the path by solving
//! `r(s) = t`. Evaluated path points are cached, so repeated queries for
//! nearby radii (grid sweeps, golden-section probes) start from tight
//! brackets.

use crate::error::{Error, Result};
use crate::point::{axpy, check_dim, dot, norm};
use crate::sets::ConstraintSet;

const MAX_SEARCH_STEPS: usize = 200;
const PLATEAU_DOUBLINGS: usize = 6;
const MAX_SCALE: f64 = 1.152_921_504_606_847e18; // 2^60
const MONOTONE_SLACK: f64 = 1e-9;
const FALLBACK_GRID: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPoint {
    pub s: f64,
    pub radius: f64,
    pub gain: f64,
}

/// Radius tolerance for solving `r(s) = t`.
pub fn radius_tolerance(t: f64) -> f64 {
    (1e-6 * t).max(1e-8)
}

#[derive(Debug, Clone)]
pub struct RadialPath<'a> {
    set: &'a ConstraintSet,
    mu: &'a [f64],
    z: Vec<f64>,
    tol: f64,
    origin: PathPoint,
    points: Vec<PathPoint>,
    plateau: Option<PathPoint>,
    monotone: bool,
    projections: usize,
}

impl<'a> RadialPath<'a> {
    pub fn new(set: &'a ConstraintSet, mu: &'a [f64], z: Vec<f64>, tol: f64) -> Result<Self> {
        check_dim(set.dim(), mu.len())?;
        check_dim(set.dim(), z.len())?;
        let mut path = RadialPath {
            set,
            mu,
            z,
            tol,
            origin: PathPoint {
                s: 0.0,
                radius: 0.0,
                gain: 0.0,
            },
            points: Vec::new(),
            plateau: None,
            monotone: true,
            projections: 0,
        };
        path.origin = path.evaluate(0.0)?;
        Ok(path)
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    /// Distance from `mu` to the set.
    pub fn t_c(&self) -> f64 {
        self.origin.radius
    }

    pub fn projections(&self) -> usize {
        self.projections
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    pub fn cached_points(&self) -> &[PathPoint] {
        &self.points
    }

    pub fn evaluate(&mut self, s: f64) -> Result<PathPoint> {
        let y = axpy(self.mu, s, &self.z);
        let proj = self.set.project(&y, self.tol)?;
        self.projections += 1;
        if !proj.converged {
            return Err(Error::NonConvergence {
                iterations: proj.iterations,
            });
        }
        let diff: Vec<f64> = proj.point.iter().zip(self.mu).map(|(p, m)| p - m).collect();
        Ok(PathPoint {
            s,
            radius: norm(&diff),
            gain: dot(&self.z, &diff),
        })
    }

    fn insert(&mut self, pt: PathPoint) {
        let idx = self.points.partition_point(|q| q.s < pt.s);
        let prev = if idx == 0 { self.origin } else { self.points[idx - 1] };
        let slack = MONOTONE_SLACK * (1.0 + pt.radius);
        if prev.radius > pt.radius + slack {
            self.monotone = false;
        }
        if let Some(next) = self.points.get(idx) {
            if pt.radius > next.radius + slack {
                self.monotone = false;
            }
        }
        self.points.insert(idx, pt);
    }

    fn probe(&mut self, s: f64) -> Result<PathPoint> {
        let pt = self.evaluate(s)?;
        self.insert(pt);
        Ok(pt)
    }

    /// First-order correction from the path point to radius `t`, using
    /// `M'(r(s)) = r(s) / s`.
    fn corrected(pt: PathPoint, t: f64) -> f64 {
        if pt.s > 0.0 {
            pt.gain + (t - pt.radius) * (pt.radius / pt.s)
        } else {
            pt.gain
        }
    }

    /// `M(t)`; `-inf` when `t` is below the distance from `mu` to the set.
    pub fn m_at(&mut self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::NegativeRadius(t));
        }
        let slack = radius_tolerance(t);
        if t < self.origin.radius - slack {
            return Ok(f64::NEG_INFINITY);
        }
        if t <= self.origin.radius + slack {
            return Ok(self.origin.gain);
        }
        if !self.monotone {
            return self.grid_sup(t);
        }
        if let Some(pl) = self.plateau {
            if t >= pl.radius {
                return Ok(pl.gain);
            }
        }

        let split = self.points.partition_point(|q| q.radius <= t);
        let mut lo = if split == 0 { self.origin } else { self.points[split - 1] };
        let mut hi = self.points.get(split).copied();

        if hi.is_none() {
            let mut s = self.points.last().map_or(1.0, |q| (2.0 * q.s).max(1.0));
            let mut flat = 0;
            loop {
                let pt = self.probe(s)?;
                if !self.monotone {
                    return self.grid_sup(t);
                }
                if pt.radius > t {
                    hi = Some(pt);
                    break;
                }
                if (pt.radius - lo.radius).abs() <= 1e-12 * (1.0 + pt.radius) {
                    flat += 1;
                } else {
                    flat = 0;
                }
                lo = pt;
                if flat >= PLATEAU_DOUBLINGS || s >= MAX_SCALE {
                    // Bounded direction: the ball constraint is slack
                    // beyond this radius.
                    self.plateau = Some(pt);
                    return Ok(pt.gain);
                }
                s *= 2.0;
            }
        }
        let mut hi = hi.expect("bracket");

        if (hi.radius - t).abs() <= slack {
            return Ok(Self::corrected(hi, t));
        }
        if (t - lo.radius).abs() <= slack {
            return Ok(Self::corrected(lo, t));
        }

        // Illinois-modified false position on r(s) - t, with a bisection
        // step every fourth iteration.
        let mut f_lo = lo.radius - t;
        let mut f_hi = hi.radius - t;
        let mut side = 0i8;
        for it in 0..MAX_SEARCH_STEPS {
            let width = hi.s - lo.s;
            if width <= 1e-15 * hi.s {
                break;
            }
            let mut s = (lo.s * f_hi - hi.s * f_lo) / (f_hi - f_lo);
            if it % 4 == 3 || !(s > lo.s && s < hi.s) {
                s = 0.5 * (lo.s + hi.s);
            }
            let pt = self.probe(s)?;
            if !self.monotone {
                return self.grid_sup(t);
            }
            let f = pt.radius - t;
            if f.abs() <= slack {
                return Ok(Self::corrected(pt, t));
            }
            if f < 0.0 {
                lo = pt;
                f_lo = f;
                if side == -1 {
                    f_hi *= 0.5;
                }
                side = -1;
            } else {
                hi = pt;
                f_hi = f;
                if side == 1 {
                    f_lo *= 0.5;
                }
                side = 1;
            }
        }
        let best = if (hi.radius - t).abs() < (t - lo.radius).abs() { hi } else { lo };
        Ok(Self::corrected(best, t))
    }

    /// Fallback when the path radius was observed to decrease: the best
    /// gain among path points on a uniform grid of `s` whose radius is
    /// within `t`.
    pub fn grid_sup(&mut self, t: f64) -> Result<f64> {
        let slack = radius_tolerance(t);
        let s_max = self
            .points
            .iter()
            .find(|q| q.radius > t)
            .map_or_else(|| self.points.last().map_or(1.0, |q| q.s.max(1.0)), |q| q.s);
        let mut best = if self.origin.radius <= t + slack {
            self.origin.gain
        } else {
            f64::NEG_INFINITY
        };
        for q in &self.points {
            if q.radius <= t + slack {
                best = best.max(q.gain);
            }
        }
        for k in 1..FALLBACK_GRID {
            let s = s_max * k as f64 / (FALLBACK_GRID - 1) as f64;
            let pt = self.evaluate(s)?;
            if pt.radius <= t + slack {
                best = best.max(pt.gain);
            }
        }
        Ok(best)
    }

    #[cfg(test)]
    pub(crate) fn force_non_monotone(&mut self) {
        self.monotone = false;
    }
}

/// One-shot evaluation of `M(t)` for a single Gaussian draw `z`.
pub fn sample_m(set: &ConstraintSet, mu: &[f64], z: &[f64], t: f64, tol: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::NegativeRadius(t));
    }
    RadialPath::new(set, mu, z.to_vec(), tol)?.m_at(t)
}
