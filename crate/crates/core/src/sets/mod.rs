//! Closed convex constraint sets with exact Euclidean projection.

mod boxset;
mod counterexample;
mod isotonic;
pub mod l1;
mod lasso;
mod subspace;

use serde::{Deserialize, Serialize};

pub use boxset::BoxSet;
pub use counterexample::{make_counterexample_point, CounterexampleSet};
pub use isotonic::pava;
pub use lasso::{LassoImage, LassoMethod, LassoSolution};
pub use subspace::Subspace;

use crate::error::{Error, Result};
use crate::point::{check_dim, dist, norm, Point};

/// Default relative-decrease tolerance handed to iterative projections.
pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintSet {
    Subspace(Subspace),
    L1Ball { n: usize, radius: f64 },
    LassoImage(LassoImage),
    IsotonicCone { n: usize },
    Counterexample(CounterexampleSet),
    Box(BoxSet),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionResult {
    pub point: Point,
    pub distance: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Lasso coefficients `beta` with `point = X beta` (lasso image only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
}

impl ConstraintSet {
    pub fn l1_ball(n: usize, radius: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSet("l1 ball needs n >= 1".into()));
        }
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(Error::InvalidSet(format!("l1 radius must be finite and >= 0, got {radius}")));
        }
        Ok(ConstraintSet::L1Ball { n, radius })
    }

    pub fn isotonic(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSet("isotonic cone needs n >= 1".into()));
        }
        Ok(ConstraintSet::IsotonicCone { n })
    }

    pub fn counterexample(n: usize) -> Result<Self> {
        Ok(ConstraintSet::Counterexample(CounterexampleSet::new(n)?))
    }

    pub fn dim(&self) -> usize {
        match self {
            ConstraintSet::Subspace(s) => s.dim(),
            ConstraintSet::L1Ball { n, .. } => *n,
            ConstraintSet::LassoImage(l) => l.dim(),
            ConstraintSet::IsotonicCone { n } => *n,
            ConstraintSet::Counterexample(c) => c.dim(),
            ConstraintSet::Box(b) => b.dim(),
        }
    }

    pub fn is_bounded(&self) -> bool {
        match self {
            ConstraintSet::Subspace(_) | ConstraintSet::IsotonicCone { .. } => false,
            ConstraintSet::L1Ball { .. }
            | ConstraintSet::LassoImage(_)
            | ConstraintSet::Counterexample(_)
            | ConstraintSet::Box(_) => true,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ConstraintSet::Subspace(_) => "subspace",
            ConstraintSet::L1Ball { .. } => "l1ball",
            ConstraintSet::LassoImage(_) => "lasso",
            ConstraintSet::IsotonicCone { .. } => "isotonic",
            ConstraintSet::Counterexample(_) => "counterexample",
            ConstraintSet::Box(_) => "box",
        }
    }

    /// Nearest point of the set to `y`. Iterative kinds that hit their
    /// iteration cap still return a result, flagged `converged = false`.
    pub fn project(&self, y: &[f64], tol: f64) -> Result<ProjectionResult> {
        check_dim(self.dim(), y.len())?;
        if !(tol > 0.0) {
            return Err(Error::ParameterOutOfRange(format!("tol must be > 0, got {tol}")));
        }
        let mut iterations = 0;
        let mut converged = true;
        let mut coefficients = None;
        let point = match self {
            ConstraintSet::Subspace(s) => s.project(y),
            ConstraintSet::Box(b) => b.project(y),
            ConstraintSet::L1Ball { radius, .. } => l1::project_l1_ball(y, *radius),
            ConstraintSet::IsotonicCone { .. } => pava(y),
            ConstraintSet::Counterexample(c) => {
                iterations = 200;
                c.project(y).0
            }
            ConstraintSet::LassoImage(l) => {
                let sol = l.project_coefficients(y, tol);
                iterations = sol.iterations;
                converged = sol.converged;
                let point = l.image(&sol.beta);
                coefficients = Some(sol.beta);
                point
            }
        };
        let distance = dist(y, &point);
        Ok(ProjectionResult {
            point: Point::from_vec(point),
            distance,
            iterations,
            converged,
            coefficients,
        })
    }

    pub fn distance_to_set(&self, y: &[f64]) -> Result<f64> {
        Ok(self.project(y, DEFAULT_TOL)?.distance)
    }

    pub fn contains(&self, y: &[f64], tol: f64) -> Result<bool> {
        Ok(self.distance_to_set(y)? <= tol)
    }

    /// Membership with the default tolerance `1e-8 (1 + |y|)`.
    pub fn contains_default(&self, y: &[f64]) -> Result<bool> {
        self.contains(y, 1e-8 * (1.0 + norm(y)))
    }

    pub fn from_descriptor(desc: &SetDescriptor) -> Result<Self> {
        let n = desc.n;
        let need = |field: &str| Error::Descriptor(format!("kind '{}' requires field '{field}'", desc.kind));
        match desc.kind.as_str() {
            "isotonic" => ConstraintSet::isotonic(n),
            "l1ball" => ConstraintSet::l1_ball(n, desc.radius.ok_or_else(|| need("L"))?),
            "counterexample" => ConstraintSet::counterexample(n),
            "lasso" => {
                let x = desc.design.as_ref().ok_or_else(|| need("X"))?;
                let p = desc.p.ok_or_else(|| need("p"))?;
                let radius = desc.radius.ok_or_else(|| need("L"))?;
                Ok(ConstraintSet::LassoImage(LassoImage::from_row_major(n, p, x, radius)?))
            }
            "subspace" => {
                let basis = desc.basis.as_ref().ok_or_else(|| need("basis"))?;
                if n == 0 || basis.len() % n != 0 {
                    return Err(Error::Descriptor(format!(
                        "basis length {} is not a multiple of n = {n}",
                        basis.len()
                    )));
                }
                let p = desc.p.unwrap_or(basis.len() / n);
                Ok(ConstraintSet::Subspace(Subspace::from_row_major(n, p, basis)?))
            }
            "box" => {
                let lower = desc.lower.clone().ok_or_else(|| need("lower"))?;
                let upper = desc.upper.clone().ok_or_else(|| need("upper"))?;
                if lower.len() != n {
                    return Err(Error::Descriptor(format!("box bounds have length {}, n = {n}", lower.len())));
                }
                Ok(ConstraintSet::Box(BoxSet::new(lower, upper)?))
            }
            other => Err(Error::Descriptor(format!("unknown set kind '{other}'"))),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let desc: SetDescriptor = serde_json::from_str(text).map_err(|e| Error::Descriptor(e.to_string()))?;
        ConstraintSet::from_descriptor(&desc)
    }
}

/// JSON form of a constraint set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetDescriptor {
    pub kind: String,
    pub n: usize,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(rename = "X", default, skip_serializing_if = "Option::is_none")]
    pub design: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<f64>>,
}
