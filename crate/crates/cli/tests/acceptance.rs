//! Acceptance checks, one line per criterion. Run with
//! `cargo test -p convex-lse-cli --test acceptance`.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use convex_lse::complexity::{sample_t_star, solve_tmu, concentration_check, RadialPath};
use convex_lse::estimation::{estimate_risk, Estimator};
use convex_lse::experiments::{counterexample_risk, isotonic_sweep, lasso_sweep, DesignSpec, IsotonicTruth};
use convex_lse::point::{dist, dot, norm};
use convex_lse::rng::gaussian_vector;
use convex_lse::sets::{BoxSet, LassoImage, Subspace};
use convex_lse::{ConstraintSet, Point};

type Check = Result<String, String>;

fn project(set: &ConstraintSet, y: &[f64]) -> Vec<f64> {
    let r = set.project(y, 1e-12).expect("projection");
    assert!(r.converged, "projection did not converge");
    r.point.into_vec()
}

fn scaled(seed: u64, index: u64, n: usize, scale: f64) -> Vec<f64> {
    gaussian_vector(seed, index, n).into_iter().map(|v| scale * v).collect()
}

/// Exhaustive active-set solution of the isotonic QP: the best
/// nondecreasing vector of block means over all cuts into consecutive blocks.
fn isotonic_oracle(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << (n - 1)) {
        let mut fit = Vec::with_capacity(n);
        let mut start = 0;
        for i in 0..n {
            if i == n - 1 || mask & (1 << i) != 0 {
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
    best.expect("some candidate is monotone").1
}

fn criterion_1() -> Check {
    let n = 20;
    let p = 30;
    let design: Vec<f64> = gaussian_vector(101, 0, n * p)
        .into_iter()
        .map(|v| if v >= 0.0 { 1.0 } else { -1.0 })
        .collect();
    let sets = [
        ConstraintSet::Subspace(Subspace::random(n, 7, 3).unwrap()),
        ConstraintSet::l1_ball(n, 2.0).unwrap(),
        ConstraintSet::LassoImage(LassoImage::from_row_major(n, p, &design, 3.0).unwrap()),
        ConstraintSet::isotonic(n).unwrap(),
        ConstraintSet::counterexample(n).unwrap(),
        ConstraintSet::Box(BoxSet::new(vec![-0.5; n], vec![1.0; n]).unwrap()),
    ];
    let mut worst = [0.0_f64; 3];
    for (k, set) in sets.iter().enumerate() {
        for i in 0..1000u64 {
            let seed = 1000 + k as u64;
            let y = scaled(seed, 3 * i, n, 3.0);
            let y2 = scaled(seed, 3 * i + 1, n, 3.0);
            let x = project(set, &scaled(seed, 3 * i + 2, n, 3.0));
            let py = project(set, &y);
            let py2 = project(set, &y2);
            let contraction = dist(&py, &py2) - dist(&y, &y2);
            let idem = dist(&project(set, &py), &py);
            let r: Vec<f64> = y.iter().zip(&py).map(|(a, b)| a - b).collect();
            let w: Vec<f64> = x.iter().zip(&py).map(|(a, b)| a - b).collect();
            let angle = dot(&r, &w) / ((1.0 + norm(&r)) * (1.0 + norm(&w)));
            for (slot, v) in worst.iter_mut().zip([contraction, idem, angle]) {
                *slot = slot.max(v);
            }
            if contraction > 1e-8 || idem > 1e-8 || angle > 1e-8 {
                return Err(format!(
                    "{} pair {i}: contraction excess {contraction:.2e}, idempotence {idem:.2e}, angle {angle:.2e}",
                    set.kind_name()
                ));
            }
        }
    }
    let mut pava_err = 0.0_f64;
    for i in 0..1000u64 {
        let len = 1 + (i % 8) as usize;
        let y = scaled(77, i, len, 2.0);
        let got = project(&ConstraintSet::isotonic(len).unwrap(), &y);
        let want = isotonic_oracle(&y);
        let e = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        pava_err = pava_err.max(e);
    }
    if pava_err > 1e-10 {
        return Err(format!("PAVA differs from active-set oracle by {pava_err:.2e}"));
    }
    Ok(format!(
        "6 kinds x 1000 pairs; worst contraction {:.1e}, idempotence {:.1e}, angle {:.1e}; PAVA max error {pava_err:.1e}",
        worst[0], worst[1], worst[2]
    ))
}

fn criterion_2() -> Check {
    let n = 20;
    let step = 1e-2;
    let grid: Vec<f64> = (0..=1200).map(|k| k as f64 * step).collect();
    let mut worst = 0.0_f64;
    for (set, seed) in [
        (ConstraintSet::isotonic(n).unwrap(), 21),
        (ConstraintSet::l1_ball(n, 2.0).unwrap(), 22),
    ] {
        let mu = vec![0.0; n];
        for i in 0..200 {
            let z = gaussian_vector(seed, i, n);
            let t_star = sample_t_star(&set, &mu, &z).map_err(|e| e.to_string())?.t_star;
            let mut path = RadialPath::new(&set, &mu, z, 1e-12).map_err(|e| e.to_string())?;
            let mut best = (0.0, f64::NEG_INFINITY);
            for &t in &grid {
                let f = path.m_at(t).map_err(|e| e.to_string())? - t * t / 2.0;
                if f > best.1 {
                    best = (t, f);
                }
            }
            let gap = (best.0 - t_star).abs();
            worst = worst.max(gap);
            if gap > step + 1e-12 {
                return Err(format!("{} draw {i}: grid argmax {} vs t* {t_star}", set.kind_name(), best.0));
            }
        }
    }
    Ok(format!("400 draws; worst |argmax - t*| = {worst:.2e} (step {step})"))
}

fn criterion_3() -> Check {
    let chi_mean = 4.950_262_344_204_532; // sqrt(2) Gamma(13) / Gamma(12.5)
    let set = ConstraintSet::Subspace(Subspace::random(100, 25, 31).unwrap());
    let mu = Point::zeros(100);
    let est = solve_tmu(&set, &mu, 2000, 32, 1e-4).map_err(|e| e.to_string())?;
    let rel = (est.t_mu - chi_mean).abs() / chi_mean;
    let risk = estimate_risk(&Estimator::Lse(&set), mu.as_slice(), 2000, 33).map_err(|e| e.to_string())?;
    let z = (risk.mean_sq_error - 25.0).abs() / risk.stderr;
    let detail = format!(
        "t_mu {:.4} vs {chi_mean:.4} ({:.2}%); risk {:.3} +/- {:.3} ({z:.2} se from 25)",
        est.t_mu,
        100.0 * rel,
        risk.mean_sq_error,
        risk.stderr
    );
    if rel <= 0.03 && z <= 3.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_4() -> Check {
    let set = ConstraintSet::Subspace(Subspace::random(200, 100, 41).unwrap());
    let mu = Point::zeros(200);
    let est = solve_tmu(&set, &mu, 2000, 42, 1e-4).map_err(|e| e.to_string())?;
    let rows = concentration_check(&set, mu.as_slice(), est.t_mu, 10_000, 43, &[1.0, 2.0, 3.0])
        .map_err(|e| e.to_string())?;
    let detail = rows
        .iter()
        .map(|r| format!("x={}: {:.4} <= {:.4}", r.x, r.empirical, r.bound + 3.0 * r.stderr))
        .collect::<Vec<_>>()
        .join(", ");
    if rows.iter().any(|r| r.violation) {
        Err(detail)
    } else {
        Ok(format!("t_mu {:.3}; {detail}", est.t_mu))
    }
}

fn in_window(label: &str, slope: Option<f64>, se: Option<f64>, lo: f64, hi: f64) -> Check {
    match slope {
        Some(s) if (lo..=hi).contains(&s) => Ok(format!("{label} slope {s:.3} +/- {:.3} in [{lo}, {hi}]", se.unwrap_or(0.0))),
        Some(s) => Err(format!("{label} slope {s:.3} outside [{lo}, {hi}]")),
        None => Err(format!("{label}: no slope")),
    }
}

fn criterion_5() -> Check {
    let n_list = [64, 128, 256, 512, 1024, 2048, 4096];
    let r = isotonic_sweep(&n_list, IsotonicTruth::linear(), 400, 5).map_err(|e| e.to_string())?;
    in_window("isotonic", r.slope, r.slope_stderr, 0.10, 0.23)
}

fn criterion_6() -> Check {
    let n_list = [128, 256, 512, 1024, 2048];
    let beta = [1.0, 1.0];
    let design = DesignSpec::default();
    // The delta > 0 regime is by far the most expensive (dense supports on
    // the lasso path), so it runs with fewer draws.
    let above = lasso_sweep(&n_list, design, &beta, 3.0, 50, 6).map_err(|e| e.to_string())?;
    let exact = lasso_sweep(&n_list, design, &beta, 2.0, 400, 6).map_err(|e| e.to_string())?;
    let below = lasso_sweep(&n_list, design, &beta, 1.0, 400, 6).map_err(|e| e.to_string())?;

    let ratios: Vec<f64> = exact
        .rows
        .iter()
        .map(|r| r.t_mu_hat.unwrap_or(f64::NAN) / (r.n as f64).ln().sqrt())
        .collect();
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = max / min;
    let a = in_window("delta=1", above.slope, above.slope_stderr, 0.17, 0.33);
    let c = in_window("delta=-1", below.slope, below.slope_stderr, 0.42, 0.58);
    let b = if spread <= 3.0 {
        Ok(format!("delta=0 max/min of t/sqrt(log n) {spread:.3}"))
    } else {
        Err(format!("delta=0 max/min of t/sqrt(log n) {spread:.3} > 3"))
    };
    let parts = [a, b, c];
    let text = parts
        .iter()
        .map(|p| match p {
            Ok(s) | Err(s) => s.clone(),
        })
        .collect::<Vec<_>>()
        .join("; ");
    if parts.iter().all(Result::is_ok) {
        Ok(text)
    } else {
        Err(text)
    }
}

fn criterion_7() -> Check {
    let r = counterexample_risk(&[256, 1024, 4096], 400, 7).map_err(|e| e.to_string())?;
    for row in &r.rows {
        let base = row.baseline.ok_or("missing coordinate-mean risk")?;
        if base.mean_sq_error > 5.0 + 3.0 * base.stderr {
            return Err(format!("n = {}: coordinate-mean risk {:.3} exceeds 5 + 3 se", row.n, base.mean_sq_error));
        }
    }
    let means = r
        .rows
        .iter()
        .map(|row| format!("{:.3}", row.baseline.map_or(f64::NAN, |b| b.mean_sq_error)))
        .collect::<Vec<_>>()
        .join("/");
    in_window("LSE risk", r.slope, r.slope_stderr, 0.35, 0.65).map(|s| format!("{s}; coordinate-mean risk {means}"))
}

fn run_cli(dir: &Path, threads: usize, tag: &str, args: &[&str]) -> Result<Vec<Vec<u8>>, String> {
    // Same path for every thread count: the path is echoed in the output.
    let out = dir.join(format!("{tag}.out"));
    let status = Command::new(env!("CARGO_BIN_EXE_convex-lse"))
        .args(args)
        .arg("--threads")
        .arg(threads.to_string())
        .arg("--out")
        .arg(&out)
        .env_remove("CONVEX_LSE_SEED")
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() {
        return Err(format!("{tag} exited with {status}"));
    }
    let mut files = Vec::new();
    for suffix in ["", ".csv", ".json", ".svg"] {
        let mut name = out.as_os_str().to_owned();
        name.push(suffix);
        if let Ok(bytes) = std::fs::read(&name) {
            files.push(bytes);
            std::fs::remove_file(&name).map_err(|e| e.to_string())?;
        }
    }
    Ok(files)
}

fn criterion_8() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs: [(&str, Vec<&str>); 6] = [
        ("project", vec!["project", "--set", r#"{"kind":"isotonic","n":4}"#, "--y", "3,1,2,0"]),
        (
            "curve",
            vec!["curve", "--set", r#"{"kind":"l1ball","n":16,"L":2}"#, "--mu", "zeros", "--samples", "200", "--seed", "3", "--grid", "0.1:6:30", "--plot"],
        ),
        ("tmu", vec!["tmu", "--set", r#"{"kind":"isotonic","n":64}"#, "--mu", "linear", "--samples", "200", "--seed", "4"]),
        ("risk", vec!["risk", "--set", r#"{"kind":"counterexample","n":256}"#, "--mu", "zeros", "--samples", "300", "--seed", "5"]),
        (
            "isotonic",
            vec!["experiment", "--name", "isotonic", "--n-list", "64,128,256", "--samples", "100", "--seed", "6", "--plot"],
        ),
        (
            "lasso",
            vec!["experiment", "--name", "lasso", "--n-list", "32,64,128", "--delta", "0", "--samples", "40", "--seed", "7"],
        ),
    ];
    let mut compared = 0;
    for (tag, args) in &runs {
        let one = run_cli(dir.path(), 1, tag, args)?;
        let many = run_cli(dir.path(), 4, tag, args)?;
        if one.is_empty() || one != many {
            return Err(format!("{tag}: outputs differ between --threads 1 and --threads 4"));
        }
        compared += one.len();
    }
    Ok(format!("{} commands, {compared} output files byte-identical across --threads 1 and 4", runs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check, Duration); 8] = [
        ("projection correctness", criterion_1, Duration::from_secs(30)),
        ("key identity", criterion_2, Duration::from_secs(120)),
        ("subspace calibration", criterion_3, Duration::from_secs(60)),
        ("concentration", criterion_4, Duration::from_secs(120)),
        ("isotonic rate", criterion_5, Duration::from_secs(600)),
        ("lasso phase transition", criterion_6, Duration::from_secs(900)),
        ("counterexample", criterion_7, Duration::from_secs(300)),
        ("determinism", criterion_8, Duration::from_secs(600)),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let number = i + 1;
        if !only.is_empty() && !only.contains(&number) {
            continue;
        }
        let started = Instant::now();
        let outcome = check();
        let elapsed = started.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > *limit => Err(format!("{detail}; took {elapsed:.1?}, limit {limit:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("criterion {number} ({name}): PASS [{elapsed:.1?}] {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {number} ({name}): FAIL [{elapsed:.1?}] {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
