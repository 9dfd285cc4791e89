//! Localized Gaussian complexity: Monte Carlo curves, the maximizer
//! `t_mu`, and checks of the error characterization.

mod checks;
mod curve;
mod path;
mod tmu;

pub use checks::{
    bracket_tmu, concentration_bound, concentration_check, draw_error_samples, risk_vs_tmu_check,
    sample_t_star, ConcentrationRow, ErrorSample, RiskCheck, Verdict,
};
pub use curve::{default_grid, estimate_curve, linear_grid, log_grid, ComplexityCurve};
pub use path::{radius_tolerance, sample_m, PathPoint, RadialPath};
pub use tmu::{golden_section_max, solve_tmu, BracketCertificate, TmuEstimate};
