//! Image of the l1 ball under a design matrix, `{X beta : |beta|_1 <= L}`.
//!
//! Projecting `y` onto this set is the constrained (primal) lasso
//! `min |y - X beta|^2  s.t.  |beta|_1 <= L`. Everything runs in coefficient
//! space on the Gram matrix `G = X^T X` and `b = X^T y`:
//!
//! 1. if the unconstrained least squares fit is feasible it is the answer;
//! 2. otherwise follow the penalized lasso path from `lambda = |b|_inf`
//!    downwards until `|beta(lambda)|_1` reaches `L`, then re-solve the
//!    KKT system on the final support exactly;
//! 3. if the path breaks down (collinear support, step limit, failed KKT
//!    check) fall back to accelerated projected gradient.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};
use crate::point::l1_norm;
use crate::sets::l1::project_l1_ball;

const POWER_ITERATIONS: usize = 50;
const FISTA_MAX_ITERATIONS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LassoMethod {
    LeastSquares,
    Homotopy,
    ProjectedGradient,
}

#[derive(Debug, Clone)]
pub struct LassoSolution {
    pub beta: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub method: LassoMethod,
}

#[derive(Debug, Clone)]
pub struct LassoImage {
    design: DMatrix<f64>,
    gram: DMatrix<f64>,
    radius: f64,
    ls_factor: Option<Cholesky<f64, Dyn>>,
}

impl PartialEq for LassoImage {
    fn eq(&self, other: &Self) -> bool {
        self.radius == other.radius && self.design == other.design
    }
}

impl LassoImage {
    pub fn new(design: DMatrix<f64>, radius: f64) -> Result<Self> {
        let (n, p) = design.shape();
        if n == 0 || p == 0 {
            return Err(Error::InvalidSet(format!("design must be n x p with n, p >= 1, got {n} x {p}")));
        }
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(Error::InvalidSet(format!("radius must be finite and >= 0, got {radius}")));
        }
        if design.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSet("design has non-finite entries".into()));
        }
        if let Some(j) = (0..p).find(|&j| design.column(j).iter().all(|v| *v == 0.0)) {
            return Err(Error::InvalidSet(format!("design column {j} is all zero")));
        }
        let gram = design.tr_mul(&design);
        let ls_factor = if p <= n { Cholesky::new(gram.clone()) } else { None };
        Ok(LassoImage {
            design,
            gram,
            radius,
            ls_factor,
        })
    }

    pub fn from_row_major(n: usize, p: usize, data: &[f64], radius: f64) -> Result<Self> {
        if data.len() != n * p {
            return Err(Error::InvalidSet(format!(
                "design has {} entries, expected {n} x {p}",
                data.len()
            )));
        }
        LassoImage::new(DMatrix::from_row_slice(n, p, data), radius)
    }

    pub fn dim(&self) -> usize {
        self.design.nrows()
    }

    pub fn n_coefficients(&self) -> usize {
        self.design.ncols()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// `Sigma = X^T X / n`.
    pub fn sigma(&self) -> DMatrix<f64> {
        &self.gram / self.dim() as f64
    }

    /// Smallest and largest eigenvalues of `Sigma`.
    pub fn eigen_bounds(&self) -> (f64, f64) {
        let eig = SymmetricEigen::new(self.sigma()).eigenvalues;
        (eig.min(), eig.max())
    }

    /// `r = p / n`.
    pub fn ratio(&self) -> f64 {
        self.n_coefficients() as f64 / self.dim() as f64
    }

    /// `X beta`.
    pub fn image(&self, beta: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n];
        for (j, &bj) in beta.iter().enumerate() {
            if bj != 0.0 {
                for (o, x) in out.iter_mut().zip(self.design.column(j).iter()) {
                    *o += bj * x;
                }
            }
        }
        out
    }

    fn correlations(&self, y: &[f64]) -> Vec<f64> {
        let b = self.design.tr_mul(&DVector::from_column_slice(y));
        b.as_slice().to_vec()
    }

    /// Lasso coefficients of the projection of `y`.
    pub fn project_coefficients(&self, y: &[f64], tol: f64) -> LassoSolution {
        let p = self.n_coefficients();
        if self.radius == 0.0 {
            return LassoSolution {
                beta: vec![0.0; p],
                iterations: 0,
                converged: true,
                method: LassoMethod::Homotopy,
            };
        }
        let b = self.correlations(y);
        if let Some(factor) = &self.ls_factor {
            let beta = factor.solve(&DVector::from_column_slice(&b));
            if l1_norm(beta.as_slice()) <= self.radius {
                return LassoSolution {
                    beta: beta.as_slice().to_vec(),
                    iterations: 0,
                    converged: true,
                    method: LassoMethod::LeastSquares,
                };
            }
        }
        match homotopy(&self.gram, &b, self.radius, 10 * p + 100) {
            Some((beta, steps)) => LassoSolution {
                beta,
                iterations: steps,
                converged: true,
                method: LassoMethod::Homotopy,
            },
            None => self.fista(&b, crate::point::dot(y, y), tol, None),
        }
    }

    /// Accelerated projected gradient on `beta` with step `1 / lambda_max(G)`;
    /// stops when the relative decrease of `|y - X beta|^2` drops below `tol`.
    pub fn project_coefficients_fista(&self, y: &[f64], tol: f64, warm: Option<&[f64]>) -> LassoSolution {
        let b = self.correlations(y);
        self.fista(&b, crate::point::dot(y, y), tol, warm)
    }

    fn fista(&self, b: &[f64], y_sq: f64, tol: f64, warm: Option<&[f64]>) -> LassoSolution {
        let p = self.n_coefficients();
        let g = &self.gram;
        // Power iteration underestimates lambda_max; inflate slightly so the
        // step stays below the Lipschitz bound.
        let step = 1.0 / (1.01 * power_iteration(g, POWER_ITERATIONS));
        let matvec = |x: &[f64]| -> Vec<f64> { (g * DVector::from_column_slice(x)).as_slice().to_vec() };
        // |y - X x|^2 expanded through the Gram matrix.
        let objective = |x: &[f64], gx: &[f64]| -> f64 {
            y_sq + x.iter().zip(gx).zip(b).map(|((xi, gi), bi)| xi * gi - 2.0 * bi * xi).sum::<f64>()
        };

        let mut x = match warm {
            Some(w) => project_l1_ball(w, self.radius),
            None => vec![0.0; p],
        };
        let mut gx = matvec(&x);
        let mut fx = objective(&x, &gx);
        let mut yk = x.clone();
        let mut gy = gx.clone();
        let mut tk = 1.0_f64;
        let mut converged = false;
        let mut iterations = 0;
        for it in 1..=FISTA_MAX_ITERATIONS {
            iterations = it;
            let trial: Vec<f64> = yk
                .iter()
                .zip(&gy)
                .zip(b)
                .map(|((yi, gi), bi)| yi - step * (gi - bi))
                .collect();
            let x_new = project_l1_ball(&trial, self.radius);
            let gx_new = matvec(&x_new);
            let f_new = objective(&x_new, &gx_new);
            if f_new > fx {
                // adaptive restart
                tk = 1.0;
                yk.clone_from(&x);
                gy.clone_from(&gx);
                continue;
            }
            let decrease = fx - f_new;
            let scale = f_new.abs().max(f64::MIN_POSITIVE);
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * tk * tk).sqrt());
            let momentum = (tk - 1.0) / t_next;
            yk = x_new
                .iter()
                .zip(&x)
                .map(|(a, o)| a + momentum * (a - o))
                .collect();
            gy = gx_new
                .iter()
                .zip(&gx)
                .map(|(a, o)| a + momentum * (a - o))
                .collect();
            x = x_new;
            gx = gx_new;
            fx = f_new;
            tk = t_next;
            if decrease / scale < tol && it > 1 {
                converged = true;
                break;
            }
        }
        LassoSolution {
            beta: x,
            iterations,
            converged,
            method: LassoMethod::ProjectedGradient,
        }
    }
}

fn power_iteration(g: &DMatrix<f64>, iterations: usize) -> f64 {
    let p = g.nrows();
    let mut v = DVector::from_element(p, 1.0 / (p as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..iterations {
        let w = g * &v;
        let nrm = w.norm();
        if nrm == 0.0 {
            return f64::MIN_POSITIVE;
        }
        lambda = v.dot(&w);
        v = w / nrm;
    }
    lambda.max(f64::MIN_POSITIVE)
}

/// Lower Cholesky factor of the Gram matrix restricted to the active set,
/// updated in place as coordinates enter and leave.
#[derive(Debug, Default)]
struct ActiveFactor {
    rows: Vec<Vec<f64>>,
}

impl ActiveFactor {
    /// Appends a coordinate with Gram column `cross` (restricted to the
    /// current active set) and diagonal entry `diag`. Returns false if the
    /// enlarged matrix is numerically singular.
    fn push(&mut self, cross: &[f64], diag: f64) -> bool {
        let k = self.rows.len();
        let mut row = vec![0.0; k + 1];
        for i in 0..k {
            let li = &self.rows[i];
            let s: f64 = cross[i] - li[..i].iter().zip(&row[..i]).map(|(a, b)| a * b).sum::<f64>();
            row[i] = s / li[i];
        }
        let d2 = diag - row[..k].iter().map(|v| v * v).sum::<f64>();
        if !(d2 > 1e-10 * diag) {
            return false;
        }
        row[k] = d2.sqrt();
        self.rows.push(row);
        true
    }

    /// Drops coordinate `q`, restoring triangularity with Givens rotations.
    fn remove(&mut self, q: usize) {
        self.rows.remove(q);
        let k = self.rows.len();
        for i in q..k {
            let (a, b) = (self.rows[i][i], self.rows[i][i + 1]);
            let h = a.hypot(b);
            let (c, s) = (a / h, b / h);
            for r in i..k {
                let row = &mut self.rows[r];
                let (x, y) = (row[i], row[i + 1]);
                row[i] = c * x + s * y;
                row[i + 1] = -s * x + c * y;
            }
            self.rows[i].truncate(i + 1);
        }
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let k = self.rows.len();
        let mut u = vec![0.0; k];
        for i in 0..k {
            let li = &self.rows[i];
            let s: f64 = rhs[i] - li[..i].iter().zip(&u[..i]).map(|(a, b)| a * b).sum::<f64>();
            u[i] = s / li[i];
        }
        for i in (0..k).rev() {
            let mut s = u[i];
            for r in i + 1..k {
                s -= self.rows[r][i] * u[r];
            }
            u[i] = s / self.rows[i][i];
        }
        u
    }
}

enum Event {
    Radius,
    Exhausted,
    Join(usize),
    Drop(usize),
}

/// Lasso path in coefficient space, stopped where `|beta|_1 = radius`.
/// Returns `None` when the path cannot be followed reliably.
fn homotopy(gram: &DMatrix<f64>, b: &[f64], radius: f64, max_steps: usize) -> Option<(Vec<f64>, usize)> {
    let p = b.len();
    let g = gram.as_slice();
    let col = |j: usize| &g[j * p..(j + 1) * p];

    let mut beta = vec![0.0; p];
    let mut corr = b.to_vec();
    let (j0, lambda0) = corr
        .iter()
        .enumerate()
        .map(|(j, c)| (j, c.abs()))
        .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    if lambda0 == 0.0 {
        return Some((beta, 0));
    }
    let mut lambda = lambda0;
    let mut active: Vec<usize> = Vec::new();
    let mut signs: Vec<f64> = Vec::new();
    let mut in_active = vec![false; p];
    let mut factor = ActiveFactor::default();

    factor.push(&[], col(j0)[j0]);
    active.push(j0);
    signs.push(corr[j0].signum());
    in_active[j0] = true;

    let mut last_dropped: Option<usize> = None;
    let mut l1 = 0.0;
    let mut a = vec![0.0; p];

    for step in 1..=max_steps {
        let w = factor.solve(&signs);
        let slope: f64 = signs.iter().zip(&w).map(|(s, v)| s * v).sum();
        if !(slope > 0.0) {
            return None;
        }
        a.iter_mut().for_each(|v| *v = 0.0);
        for (&j, &wk) in active.iter().zip(&w) {
            for (ai, gi) in a.iter_mut().zip(col(j)) {
                *ai += wk * gi;
            }
        }

        let mut gamma = lambda;
        let mut event = Event::Exhausted;
        let gamma_radius = (radius - l1) / slope;
        if gamma_radius <= gamma {
            gamma = gamma_radius.max(0.0);
            event = Event::Radius;
        }
        // A coordinate already at the active level (up to rounding) whose
        // correlation would outgrow it joins with a zero-length step.
        let tie = 1e-12 * lambda0;
        for j in 0..p {
            if in_active[j] || Some(j) == last_dropped {
                continue;
            }
            let (c, aj) = (corr[j], a[j]);
            if aj < 1.0 && lambda - c >= -tie {
                let gj = ((lambda - c) / (1.0 - aj)).max(0.0);
                if gj < gamma || (gj == 0.0 && !matches!(event, Event::Join(_))) {
                    gamma = gj;
                    event = Event::Join(j);
                }
            }
            if aj > -1.0 && lambda + c >= -tie {
                let gj = ((lambda + c) / (1.0 + aj)).max(0.0);
                if gj < gamma || (gj == 0.0 && !matches!(event, Event::Join(_))) {
                    gamma = gj;
                    event = Event::Join(j);
                }
            }
        }
        for (idx, &j) in active.iter().enumerate() {
            if w[idx] * signs[idx] < 0.0 {
                let gj = -beta[j] / w[idx];
                if gj > 0.0 && gj < gamma {
                    gamma = gj;
                    event = Event::Drop(idx);
                }
            }
        }

        for (&j, &wk) in active.iter().zip(&w) {
            beta[j] += gamma * wk;
        }
        for (ci, ai) in corr.iter_mut().zip(&a) {
            *ci -= gamma * ai;
        }
        lambda -= gamma;
        l1 = active.iter().zip(&signs).map(|(&j, s)| s * beta[j]).sum();

        match event {
            Event::Radius => {
                polish(&factor, &active, &signs, b, Some(radius), &mut beta);
                return kkt_holds(gram, b, &beta, &in_active, lambda0).then_some((beta, step));
            }
            Event::Exhausted => {
                polish(&factor, &active, &signs, b, None, &mut beta);
                return kkt_holds(gram, b, &beta, &in_active, lambda0).then_some((beta, step));
            }
            Event::Join(j) => {
                let cross: Vec<f64> = active.iter().map(|&k| col(j)[k]).collect();
                if !factor.push(&cross, col(j)[j]) {
                    // Support has reached full rank: only legitimate at the
                    // least squares end of the path.
                    if lambda <= 1e-10 * lambda0 {
                        return kkt_holds(gram, b, &beta, &in_active, lambda0).then_some((beta, step));
                    }
                    return None;
                }
                active.push(j);
                signs.push(corr[j].signum());
                in_active[j] = true;
                last_dropped = None;
            }
            Event::Drop(idx) => {
                let j = active.remove(idx);
                signs.remove(idx);
                factor.remove(idx);
                beta[j] = 0.0;
                in_active[j] = false;
                last_dropped = Some(j);
            }
        }
    }
    None
}

/// Re-solves the stationarity system on the final support:
/// `G_AA beta_A = b_A - lambda sigma` with `sigma^T beta_A = radius`
/// (or `lambda = 0` at the least squares end).
fn polish(
    factor: &ActiveFactor,
    active: &[usize],
    signs: &[f64],
    b: &[f64],
    radius: Option<f64>,
    beta: &mut [f64],
) {
    let b_active: Vec<f64> = active.iter().map(|&j| b[j]).collect();
    let u = factor.solve(&b_active);
    let lambda = match radius {
        Some(r) => {
            let v = factor.solve(signs);
            let su: f64 = signs.iter().zip(&u).map(|(s, x)| s * x).sum();
            let sv: f64 = signs.iter().zip(&v).map(|(s, x)| s * x).sum();
            let lambda = (su - r) / sv;
            if !(lambda >= 0.0) {
                return;
            }
            let candidate: Vec<f64> = u.iter().zip(&v).map(|(a, c)| a - lambda * c).collect();
            if candidate.iter().zip(signs).any(|(x, s)| x * s < 0.0) {
                return;
            }
            for (&j, x) in active.iter().zip(candidate) {
                beta[j] = x;
            }
            return;
        }
        None => 0.0,
    };
    debug_assert_eq!(lambda, 0.0);
    if u.iter().zip(signs).any(|(x, s)| x * s < 0.0) {
        return;
    }
    for (&j, x) in active.iter().zip(u) {
        beta[j] = x;
    }
}

/// Inactive correlations must not exceed the active level.
fn kkt_holds(gram: &DMatrix<f64>, b: &[f64], beta: &[f64], in_active: &[bool], lambda0: f64) -> bool {
    let p = b.len();
    let g = gram.as_slice();
    let mut corr = b.to_vec();
    for (j, &bj) in beta.iter().enumerate() {
        if bj != 0.0 {
            for (c, gi) in corr.iter_mut().zip(&g[j * p..(j + 1) * p]) {
                *c -= bj * gi;
            }
        }
    }
    let level = (0..p)
        .filter(|&j| in_active[j] && beta[j] != 0.0)
        .map(|j| corr[j].abs())
        .fold(0.0_f64, f64::max);
    let slack = 1e-7 * lambda0;
    (0..p).all(|j| in_active[j] || corr[j].abs() <= level + slack)
}
