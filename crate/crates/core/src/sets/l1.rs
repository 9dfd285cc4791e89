//! Euclidean projection onto the l1 ball `{x : |x|_1 <= radius}`.

use crate::point::l1_norm;

/// Soft-threshold level `theta` with `sum_i (|y_i| - theta)_+ = radius`,
/// or `None` when `y` already lies in the ball.
pub fn threshold(y: &[f64], radius: f64) -> Option<f64> {
    if l1_norm(y) <= radius {
        return None;
    }
    if radius <= 0.0 {
        return Some(y.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
    }
    let mut mags: Vec<f64> = y.iter().map(|v| v.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in mags.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - radius) / (k + 1) as f64;
        if u > candidate {
            theta = candidate;
        } else {
            break;
        }
    }
    Some(theta.max(0.0))
}

/// Sort-and-threshold projection onto the l1 ball.
pub fn project_l1_ball(y: &[f64], radius: f64) -> Vec<f64> {
    match threshold(y, radius) {
        None => y.to_vec(),
        Some(theta) => y
            .iter()
            .map(|&v| v.signum() * (v.abs() - theta).max(0.0))
            .collect(),
    }
}
