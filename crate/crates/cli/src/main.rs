mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use convex_lse::complexity::{default_grid, estimate_curve, linear_grid, log_grid, solve_tmu, ComplexityCurve};
use convex_lse::estimation::{estimate_risk, Estimator};
use convex_lse::experiments::{
    counterexample_risk, isotonic_sweep, lasso_sweep, subspace_sweep, DesignSpec, IsotonicTruth, SweepReport,
};
use convex_lse::{ConstraintSet, Error, Point};

#[derive(Parser)]
#[command(name = "convex-lse", version, about = "Least squares over convex sets: projections, complexity curves, risk")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Project a vector onto a set and print the result as JSON.
    Project(Common),
    /// Estimate the localized complexity curve on a grid (CSV).
    Curve(Common),
    /// Solve for the maximizer t_mu of the complexity curve.
    Tmu(Common),
    /// Monte Carlo risk of an estimator.
    Risk(Common),
    /// Run one of the rate sweeps.
    Experiment(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Set descriptor as JSON, e.g. '{"kind":"isotonic","n":3}'.
    #[arg(long)]
    set: Option<String>,
    /// Comma-separated vector to project.
    #[arg(long)]
    y: Option<String>,
    /// Truth: comma-separated values or a generator (zeros, linear).
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<String>,
    /// File with one value per line.
    #[arg(long)]
    mu_file: Option<PathBuf>,
    #[arg(long, env = "CONVEX_LSE_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 400)]
    samples: usize,
    /// min:max:points, with an optional :log suffix.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json; defaults to csv for curves and json elsewhere.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    plot: bool,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    /// Experiment: subspace, lasso, isotonic or counterexample.
    #[arg(long)]
    name: Option<String>,
    /// Comma-separated sizes for an experiment.
    #[arg(long)]
    n_list: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    /// Estimator for the risk command: lse, mean or identity.
    #[arg(long, default_value = "lse")]
    estimator: String,
    /// Ambient dimension for the subspace experiment.
    #[arg(long, default_value_t = 128)]
    dim: usize,
    /// Lasso experiment: L minus the l1 norm of beta = (1, 1, 0, ...).
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    delta: f64,
    /// Isotonic experiment truth: linear or constant.
    #[arg(long, default_value = "linear")]
    truth: String,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Dimension(String),
    NonConvergence(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Dimension(_) => 3,
            Failure::NonConvergence(_) => 4,
            Failure::Io(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Dimension(m) | Failure::NonConvergence(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::DimensionMismatch { .. } => Failure::Dimension(e.to_string()),
            Error::NonConvergence { .. } => Failure::NonConvergence(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct GridSpec {
    min: f64,
    max: f64,
    points: usize,
    log: bool,
}

/// Everything that determines a run's output. The thread count is left out
/// on purpose: it never changes results.
#[derive(Debug, Clone, Serialize)]
struct RunConfig {
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    set_descriptor: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu_source: Option<Value>,
    seed: u64,
    samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_spec: Option<GridSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    out_path: Option<String>,
    format: String,
    plot: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    extra: Option<Value>,
}

fn parse_vector(text: &str) -> Outcome<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Failure::Usage(format!("cannot parse '{}' as a number", s.trim())))
        })
        .collect()
}

fn read_vector_file(path: &Path) -> Outcome<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| l.parse::<f64>().map_err(|_| Failure::Usage(format!("cannot parse '{l}' in {}", path.display()))))
        .collect()
}

fn parse_sizes(text: &str) -> Outcome<Vec<usize>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Failure::Usage(format!("cannot parse '{}' as a size", s.trim())))
        })
        .collect()
}

fn parse_grid(text: &str) -> Outcome<GridSpec> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Failure::Usage(format!("grid must look like min:max:points[:log], got '{text}'"));
    if !(3..=4).contains(&parts.len()) {
        return Err(bad());
    }
    let log = match parts.get(3) {
        None => false,
        Some(&"log") => true,
        Some(_) => return Err(bad()),
    };
    let spec = GridSpec {
        min: parts[0].parse().map_err(|_| bad())?,
        max: parts[1].parse().map_err(|_| bad())?,
        points: parts[2].parse().map_err(|_| bad())?,
        log,
    };
    if !(spec.min < spec.max) {
        return Err(Failure::Usage(format!("grid min {} must be below max {}", spec.min, spec.max)));
    }
    Ok(spec)
}

fn grid_points(spec: &GridSpec) -> Outcome<Vec<f64>> {
    Ok(if spec.log {
        log_grid(spec.min, spec.max, spec.points)?
    } else {
        linear_grid(spec.min, spec.max, spec.points)?
    })
}

struct Resolved {
    set: Option<ConstraintSet>,
    set_json: Option<Value>,
    mu: Option<Point>,
    mu_source: Option<Value>,
}

fn resolve_set(args: &Common) -> Outcome<(Option<ConstraintSet>, Option<Value>)> {
    let Some(text) = &args.set else { return Ok((None, None)) };
    let value: Value = serde_json::from_str(text).map_err(|e| Failure::Usage(format!("--set: {e}")))?;
    let set = ConstraintSet::from_json(text)?;
    Ok((Some(set), Some(value)))
}

fn resolve_mu(args: &Common, n: Option<usize>) -> Outcome<(Option<Point>, Option<Value>)> {
    let (values, source) = match (&args.mu, &args.mu_file) {
        (Some(_), Some(_)) => return Err(Failure::Usage("give --mu or --mu-file, not both".into())),
        (None, None) => return Ok((None, None)),
        (None, Some(path)) => (read_vector_file(path)?, json!({ "file": path.display().to_string() })),
        (Some(text), None) => match text.trim() {
            "zeros" | "linear" => {
                let n = n.ok_or_else(|| Failure::Usage(format!("generator '{text}' needs --set to fix n")))?;
                let v = if text.trim() == "zeros" {
                    vec![0.0; n]
                } else {
                    (1..=n).map(|i| i as f64 / n as f64).collect()
                };
                (v, json!({ "generator": text.trim() }))
            }
            _ => {
                let v = parse_vector(text)?;
                let inline = json!({ "inline": v });
                (v, inline)
            }
        },
    };
    let point = Point::new(values).map_err(Failure::from)?;
    Ok((Some(point), Some(source)))
}

fn resolve(args: &Common) -> Outcome<Resolved> {
    let (set, set_json) = resolve_set(args)?;
    let (mu, mu_source) = resolve_mu(args, set.as_ref().map(ConstraintSet::dim))?;
    Ok(Resolved {
        set,
        set_json,
        mu,
        mu_source,
    })
}

fn require_set(r: &Resolved) -> Outcome<&ConstraintSet> {
    r.set.as_ref().ok_or_else(|| Failure::Usage("--set is required".into()))
}

fn require_mu(r: &Resolved) -> Outcome<&Point> {
    r.mu.as_ref().ok_or_else(|| Failure::Usage("--mu or --mu-file is required".into()))
}

fn check_samples(args: &Common) -> Outcome<()> {
    if args.samples < 2 {
        return Err(Failure::Usage(format!("--samples must be >= 2, got {}", args.samples)));
    }
    Ok(())
}

fn format_of(args: &Common, default: &str) -> Outcome<String> {
    let f = args.format.clone().unwrap_or_else(|| default.to_string());
    match f.as_str() {
        "csv" | "json" => Ok(f),
        other => Err(Failure::Usage(format!("unknown format '{other}' (csv or json)"))),
    }
}

fn config(args: &Common, command: &'static str, r: &Resolved, format: &str) -> RunConfig {
    RunConfig {
        command,
        set_descriptor: r.set_json.clone(),
        mu_source: r.mu_source.clone(),
        seed: args.seed,
        samples: args.samples,
        grid_spec: None,
        out_path: args.out.as_ref().map(|p| p.display().to_string()),
        format: format.to_string(),
        plot: args.plot,
        tol: args.tol,
        extra: None,
    }
}

fn write_file(path: &Path, text: &str) -> Outcome<()> {
    std::fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Outcome<()> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn with_suffix(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

fn cmd_project(args: &Common) -> Outcome<()> {
    let r = resolve(args)?;
    let set = require_set(&r)?;
    let y = match (&args.y, &r.mu) {
        (Some(text), _) => parse_vector(text)?,
        (None, Some(mu)) => mu.as_slice().to_vec(),
        (None, None) => return Err(Failure::Usage("--y is required".into())),
    };
    let tol = args.tol.unwrap_or(convex_lse::sets::DEFAULT_TOL);
    let proj = set.project(&y, tol)?;
    if !proj.converged {
        return Err(Failure::NonConvergence(format!(
            "projection did not converge after {} iterations",
            proj.iterations
        )));
    }
    let mut value = serde_json::to_value(&proj).expect("projection serializes");
    let mut cfg = config(args, "project", &r, "json");
    cfg.extra = Some(json!({ "y": y }));
    value["config"] = serde_json::to_value(cfg).expect("config serializes");
    emit(args.out.as_deref(), &json_text(&value))
}

fn curve_plot(curve: &ComplexityCurve) -> String {
    let points: Vec<(f64, f64)> = curve.grid.iter().copied().zip(curve.f_hat.iter().copied()).collect();
    let band = curve
        .f_hat
        .iter()
        .zip(&curve.stderr)
        .map(|(f, s)| (f - 2.0 * s, f + 2.0 * s))
        .collect();
    svg::Plot {
        title: "estimated localized complexity".into(),
        x_label: "t".into(),
        y_label: "f(t)".into(),
        log_axes: false,
        series: vec![svg::Series {
            points,
            band: Some(band),
            color: "steelblue",
            markers: false,
        }],
        vertical_marker: Some(curve.grid_argmax()),
        note: Some(format!("grid argmax {:.4}", curve.grid_argmax())),
    }
    .render()
}

fn cmd_curve(args: &Common) -> Outcome<()> {
    check_samples(args)?;
    let r = resolve(args)?;
    let set = require_set(&r)?;
    let mu = require_mu(&r)?;
    let format = format_of(args, "csv")?;
    let spec = args.grid.as_deref().map(parse_grid).transpose()?;
    let grid = match &spec {
        Some(s) => grid_points(s)?,
        None => {
            if mu.dim() != set.dim() {
                return Err(Failure::Dimension(format!(
                    "dimension mismatch: expected {}, got {}",
                    set.dim(),
                    mu.dim()
                )));
            }
            default_grid(set.distance_to_set(mu)?, mu.dim())
        }
    };
    let curve = estimate_curve(set, mu, &grid, args.samples, args.seed)?;
    let text = if format == "csv" {
        curve.to_csv()
    } else {
        let mut value = serde_json::to_value(&curve).expect("curve serializes");
        let mut cfg = config(args, "curve", &r, &format);
        cfg.grid_spec = spec;
        value["config"] = serde_json::to_value(cfg).expect("config serializes");
        json_text(&value)
    };
    emit(args.out.as_deref(), &text)?;
    if args.plot {
        let out = args
            .out
            .as_ref()
            .ok_or_else(|| Failure::Usage("--plot needs --out".into()))?;
        write_file(&with_suffix(out, "svg"), &curve_plot(&curve))?;
    }
    Ok(())
}

fn cmd_tmu(args: &Common) -> Outcome<()> {
    check_samples(args)?;
    let r = resolve(args)?;
    let set = require_set(&r)?;
    let mu = require_mu(&r)?;
    let tol = args.tol.unwrap_or(1e-4);
    let est = solve_tmu(set, mu, args.samples, args.seed, tol)?;
    let mut value = serde_json::to_value(&est).expect("estimate serializes");
    let mut cfg = config(args, "tmu", &r, "json");
    cfg.tol = Some(tol);
    value["config"] = serde_json::to_value(cfg).expect("config serializes");
    emit(args.out.as_deref(), &json_text(&value))
}

fn cmd_risk(args: &Common) -> Outcome<()> {
    check_samples(args)?;
    let r = resolve(args)?;
    let mu = require_mu(&r)?;
    let estimator = match args.estimator.as_str() {
        "lse" => Estimator::Lse(require_set(&r)?),
        "mean" => Estimator::CoordinateMean,
        "identity" => Estimator::Identity,
        other => return Err(Failure::Usage(format!("unknown estimator '{other}' (lse, mean, identity)"))),
    };
    let est = estimate_risk(&estimator, mu.as_slice(), args.samples, args.seed)?;
    let mut value = serde_json::to_value(est).expect("risk serializes");
    value["estimator"] = json!(estimator.name());
    let mut cfg = config(args, "risk", &r, "json");
    cfg.extra = Some(json!({ "estimator": estimator.name() }));
    value["config"] = serde_json::to_value(cfg).expect("config serializes");
    emit(args.out.as_deref(), &json_text(&value))
}

fn sweep_plot(report: &SweepReport) -> String {
    let points = report.fit_points();
    let mut series = vec![svg::Series {
        points: points.clone(),
        band: None,
        color: "steelblue",
        markers: true,
    }];
    if let Some(slope) = report.slope {
        // Least squares line through the log-log points.
        let m = points.len() as f64;
        let mx = points.iter().map(|p| p.0.ln()).sum::<f64>() / m;
        let my = points.iter().map(|p| p.1.ln()).sum::<f64>() / m;
        let fitted = points.iter().map(|p| (p.0, (my + slope * (p.0.ln() - mx)).exp())).collect();
        series.push(svg::Series {
            points: fitted,
            band: None,
            color: "firebrick",
            markers: false,
        });
    }
    let (y_label, x_label) = report.slope_of.split_once(" vs ").unwrap_or(("value", "n"));
    svg::Plot {
        title: format!("{} sweep", report.experiment),
        x_label: x_label.into(),
        y_label: y_label.into(),
        log_axes: true,
        series,
        vertical_marker: None,
        note: report.slope.map(|s| {
            format!("slope {:.3} +/- {:.3}", s, report.slope_stderr.unwrap_or(f64::NAN))
        }),
    }
    .render()
}

fn cmd_experiment(args: &Common) -> Outcome<()> {
    check_samples(args)?;
    let name = args
        .name
        .as_deref()
        .ok_or_else(|| Failure::Usage("--name is required".into()))?;
    let format = format_of(args, "json")?;
    let sizes = args.n_list.as_deref().map(parse_sizes).transpose()?;
    let (report, extra) = match name {
        "subspace" => {
            let p_list = sizes.unwrap_or_else(|| vec![4, 16, 64]);
            let extra = json!({ "name": name, "n_list": p_list, "dim": args.dim });
            (subspace_sweep(&p_list, args.dim, args.samples, args.seed)?, extra)
        }
        "lasso" => {
            let n_list = sizes.unwrap_or_else(|| vec![128, 256, 512, 1024, 2048]);
            let beta = [1.0, 1.0];
            let radius = 2.0 + args.delta;
            let extra = json!({ "name": name, "n_list": n_list, "delta": args.delta, "L": radius });
            let report = lasso_sweep(&n_list, DesignSpec::default(), &beta, radius, args.samples, args.seed)?;
            (report, extra)
        }
        "isotonic" => {
            let n_list = sizes.unwrap_or_else(|| vec![64, 128, 256, 512, 1024, 2048, 4096]);
            let truth = match args.truth.as_str() {
                "linear" => IsotonicTruth::linear(),
                "constant" => IsotonicTruth::constant(),
                other => return Err(Failure::Usage(format!("unknown truth '{other}' (linear, constant)"))),
            };
            let extra = json!({ "name": name, "n_list": n_list, "truth": args.truth });
            (isotonic_sweep(&n_list, truth, args.samples, args.seed)?, extra)
        }
        "counterexample" => {
            let n_list = sizes.unwrap_or_else(|| vec![256, 1024, 4096]);
            let extra = json!({ "name": name, "n_list": n_list });
            (counterexample_risk(&n_list, args.samples, args.seed)?, extra)
        }
        other => {
            return Err(Failure::Usage(format!(
                "unknown experiment '{other}' (subspace, lasso, isotonic, counterexample)"
            )))
        }
    };
    let none = Resolved {
        set: None,
        set_json: None,
        mu: None,
        mu_source: None,
    };
    let mut cfg = config(args, "experiment", &none, &format);
    cfg.extra = Some(extra);
    let mut value = report.to_json();
    value["config"] = serde_json::to_value(cfg).expect("config serializes");
    let json = json_text(&value);
    let csv = report.to_csv();
    match (&args.out, format.as_str()) {
        (Some(out), "json") => {
            write_file(out, &json)?;
            write_file(&with_suffix(out, "csv"), &csv)?;
        }
        (Some(out), _) => {
            write_file(out, &csv)?;
            write_file(&with_suffix(out, "json"), &json)?;
        }
        (None, "json") => print!("{json}"),
        (None, _) => print!("{csv}"),
    }
    if args.plot {
        let out = args
            .out
            .as_ref()
            .ok_or_else(|| Failure::Usage("--plot needs --out".into()))?;
        write_file(&with_suffix(out, "svg"), &sweep_plot(&report))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome<()> {
    let args = match &cli.command {
        Command::Project(a) | Command::Curve(a) | Command::Tmu(a) | Command::Risk(a) | Command::Experiment(a) => a,
    };
    if let Some(threads) = args.threads {
        if threads == 0 {
            return Err(Failure::Usage("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::Usage(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Project(a) => cmd_project(a),
        Command::Curve(a) => cmd_curve(a),
        Command::Tmu(a) => cmd_tmu(a),
        Command::Risk(a) => cmd_risk(a),
        Command::Experiment(a) => cmd_experiment(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message().replace('\n', " "));
            ExitCode::from(f.code())
        }
    }
}
