use crate::error::{Error, Result};

/// Axis-aligned box `lower <= x <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidSet(format!(
                "box bounds must be nonempty and of equal length (got {} and {})",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !l.is_finite() || !u.is_finite() {
                return Err(Error::InvalidSet(format!("box bound {i} is not finite")));
            }
            if l > u {
                return Err(Error::InvalidSet(format!("box lower[{i}] > upper[{i}]")));
            }
        }
        Ok(BoxSet { lower, upper })
    }

    /// The singleton `{point}`.
    pub fn singleton(point: &[f64]) -> Result<Self> {
        BoxSet::new(point.to_vec(), point.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn project(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| v.clamp(*l, *u))
            .collect()
    }
}
