use convex_lse::point::dot;
use convex_lse::rng::gaussian_vector;
use convex_lse::sets::{BoxSet, CounterexampleSet, LassoImage, LassoMethod, Subspace};
use convex_lse::ConstraintSet;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

const TOL: f64 = 1e-12;

fn project(set: &ConstraintSet, y: &[f64]) -> Vec<f64> {
    let r = set.project(y, TOL).unwrap();
    assert!(r.converged);
    r.point.into_vec()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Every way of cutting `y` into consecutive blocks, replacing each block by
/// its mean; the nearest nondecreasing candidate is the projection.
fn isotonic_oracle(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << (n - 1)) {
        let mut fit = Vec::with_capacity(n);
        let mut start = 0;
        for i in 0..n {
            let cut = i == n - 1 || mask & (1 << i) != 0;
            if cut {
                let mean = y[start..=i].iter().sum::<f64>() / (i + 1 - start) as f64;
                fit.extend(std::iter::repeat(mean).take(i + 1 - start));
                start = i + 1;
            }
        }
        if fit.windows(2).any(|w| w[0] > w[1]) {
            continue;
        }
        let d = dist(&fit, y);
        if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
            best = Some((d, fit));
        }
    }
    best.unwrap().1
}

/// Soft thresholding at the level found by bisection on
/// `sum (|y_i| - lambda)_+ = radius`.
fn l1_oracle(y: &[f64], radius: f64) -> Vec<f64> {
    if y.iter().map(|v| v.abs()).sum::<f64>() <= radius {
        return y.to_vec();
    }
    let excess = |lam: f64| y.iter().map(|v| (v.abs() - lam).max(0.0)).sum::<f64>() - radius;
    let (mut lo, mut hi) = (0.0, y.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lam = 0.5 * (lo + hi);
    y.iter().map(|v| v.signum() * (v.abs() - lam).max(0.0)).collect()
}

fn vec_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0..5.0f64, n)
}

fn any_set(n: usize, kind: u8, seed: u64) -> ConstraintSet {
    match kind % 6 {
        0 => ConstraintSet::isotonic(n).unwrap(),
        1 => ConstraintSet::l1_ball(n, 1.5).unwrap(),
        2 => ConstraintSet::Box(BoxSet::new(vec![-1.0; n], vec![0.5; n]).unwrap()),
        3 => ConstraintSet::Subspace(Subspace::random(n, (n / 2).max(1), seed).unwrap()),
        4 => ConstraintSet::counterexample(n).unwrap(),
        _ => {
            let p = n + 2;
            let x = DMatrix::from_fn(n, p, |i, j| (((i * 7 + j * 13 + seed as usize) % 11) as f64 - 5.0) / 3.0);
            ConstraintSet::LassoImage(LassoImage::new(x, 1.0).unwrap())
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pava_matches_block_enumeration(y in (1usize..=8).prop_flat_map(vec_strategy)) {
        let got = project(&ConstraintSet::isotonic(y.len()).unwrap(), &y);
        let want = isotonic_oracle(&y);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-10, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn l1_matches_threshold_bisection(y in (1usize..=12).prop_flat_map(vec_strategy), radius in 0.0..6.0f64) {
        let got = project(&ConstraintSet::l1_ball(y.len(), radius).unwrap(), &y);
        let want = l1_oracle(&y, radius);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-9, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn lasso_on_orthogonal_design_is_rotated_l1(seed in 0u64..1000, y in vec_strategy(10), radius in 0.1..4.0f64) {
        // X = c Q with orthonormal Q: the image projection is c Q P_{L1}(Q^T y / c).
        let q = Subspace::random(10, 4, seed).unwrap().basis().clone();
        let c = 10f64.sqrt();
        let set = ConstraintSet::LassoImage(LassoImage::new(&q * c, radius).unwrap());
        let coef: Vec<f64> = (q.transpose() * nalgebra::DVector::from_column_slice(&y) / c).iter().copied().collect();
        let beta = l1_oracle(&coef, radius);
        let want: Vec<f64> = (&q * nalgebra::DVector::from_column_slice(&beta) * c).iter().copied().collect();
        let got = project(&set, &y);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-8, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn counterexample_beats_alpha_grid(y in (1usize..=40).prop_flat_map(|n| prop::collection::vec(-1.0..2.0f64, n))) {
        let n = y.len();
        let raw = CounterexampleSet::new(n).unwrap();
        let (lo, hi) = raw.unit_slice();
        let slice_dist = |alpha: f64| {
            y.iter().map(|v| { let c = v.clamp(alpha * lo, alpha * hi); (v - c) * (v - c) }).sum::<f64>()
        };
        let grid_best = (0..=2000).map(|k| slice_dist(k as f64 / 2000.0)).fold(f64::INFINITY, f64::min);
        let got = project(&ConstraintSet::Counterexample(raw), &y);
        let d2 = dist(&got, &y).powi(2);
        prop_assert!(d2 <= grid_best + 1e-10, "{d2} > {grid_best}");
        prop_assert!(d2 >= grid_best - 1e-3 * (1.0 + grid_best));
    }

    #[test]
    fn projections_are_firmly_nonexpansive(
        kind in 0u8..6,
        seed in 0u64..50,
        pair in (2usize..=10).prop_flat_map(|n| (vec_strategy(n), vec_strategy(n))),
    ) {
        let (a, b) = pair;
        let set = any_set(a.len(), kind, seed);
        let pa = project(&set, &a);
        let pb = project(&set, &b);
        // contraction
        prop_assert!(dist(&pa, &pb) <= dist(&a, &b) * (1.0 + 1e-9) + 1e-9);
        // idempotence
        let again = project(&set, &pa);
        prop_assert!(dist(&again, &pa) <= 1e-8 * (1.0 + pa.iter().map(|v| v.abs()).sum::<f64>()));
        // obtuse angle at the projection against another member of the set
        let r: Vec<f64> = a.iter().zip(&pa).map(|(y, p)| y - p).collect();
        let w: Vec<f64> = pb.iter().zip(&pa).map(|(x, p)| x - p).collect();
        let scale = (1.0 + dot(&r, &r).sqrt()) * (1.0 + dot(&w, &w).sqrt());
        prop_assert!(dot(&r, &w) <= 1e-8 * scale, "{}", dot(&r, &w));
    }
}

fn check_against_gradient(x: DMatrix<f64>, radius: f64, y: &[f64]) -> LassoMethod {
    let lasso = LassoImage::new(x, radius).unwrap();
    let sol = lasso.project_coefficients(y, 1e-14);
    let exact = lasso.image(&sol.beta);
    let slow = lasso.project_coefficients_fista(y, 1e-16, None);
    let approx = lasso.image(&slow.beta);
    let gap = dist(&exact, y).powi(2) - dist(&approx, y).powi(2);
    assert!(gap <= 1e-8, "{:?} worse than projected gradient by {gap}", sol.method);
    assert!(sol.beta.iter().map(|b| b.abs()).sum::<f64>() <= radius * (1.0 + 1e-9));
    assert!(dist(&exact, &approx) < 1e-3);
    sol.method
}

#[test]
fn lasso_solver_agrees_with_projected_gradient() {
    let mut rng = convex_lse::rng::sample_rng(12, 0);
    let x = DMatrix::from_fn(30, 50, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 });
    let y = gaussian_vector(12, 1, 30);
    assert_eq!(check_against_gradient(x, 2.0, &y), LassoMethod::Homotopy);
}

#[test]
fn lasso_with_repeated_columns() {
    // Columns are cyclic shifts of one pattern, so column j + 5 repeats j.
    let x = DMatrix::from_fn(30, 50, |i, j| if (i * 31 + j * 17) % 5 < 2 { 1.0 } else { -1.0 });
    let y: Vec<f64> = (0..30).map(|i| ((i * 13) % 7) as f64 - 3.0).collect();
    check_against_gradient(x, 2.0, &y);
}
