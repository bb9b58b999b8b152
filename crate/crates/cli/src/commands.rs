//! One function per subcommand. Each turns a resolved [`Config`] into a
//! table, a JSON results object and a list of warnings.

use std::path::Path;

use corrpoly::covariance::{covariance_matrix, CovarianceSpec, Family};
use corrpoly::estimators::{self, EstimateSeries, ExponentFit, Transform};
use corrpoly::field::{self, FieldSynthesizer};
use corrpoly::grid::{Boundary, Grid};
use corrpoly::pinning::{self, DomainRule, Method, PinningNumerics, PinningResult, PotentialSpec};
use corrpoly::polymer::{self, PolymerParams};
use corrpoly::rng::{stream, Purpose};
use corrpoly::selftest;
use corrpoly::stats;
use rand::Rng;
use serde_json::json;
use thiserror::Error;

use crate::config::{Config, ConfigError};
use crate::output::{Cell, Table, FIT_HEADER, PINNING_HEADER, SELFTEST_HEADER, SERIES_HEADER};

#[derive(Debug, Error)]
pub enum CommandError {
    /// Bad configuration or arguments (exit 2).
    #[error("{0}")]
    Validation(String),
    /// Numerical failure (exit 3).
    #[error("{0}")]
    Numerical(String),
}

impl From<ConfigError> for CommandError {
    fn from(e: ConfigError) -> Self {
        CommandError::Validation(e.to_string())
    }
}

impl From<corrpoly::Error> for CommandError {
    fn from(e: corrpoly::Error) -> Self {
        use corrpoly::Error::*;
        match e {
            Synthesis { .. } | Underflow { .. } | NoConvergence { .. } => CommandError::Numerical(e.to_string()),
            _ => CommandError::Validation(e.to_string()),
        }
    }
}

type CResult<T> = Result<T, CommandError>;

/// Everything a command produces besides the manifest bookkeeping.
pub struct Outcome {
    pub table: Table,
    pub results: serde_json::Value,
    pub warnings: Vec<String>,
    /// Additional files (name, bytes), e.g. a binary field dump.
    pub extra: Vec<(String, Vec<u8>)>,
    /// Plot title and axis labels.
    pub plot: (String, String, String),
    /// Points to plot instead of the table's own columns.
    pub plot_points: Option<Vec<(f64, f64, f64)>>,
    /// Set when the command's own checks failed (selftest).
    pub failed: bool,
}

impl Outcome {
    fn new(table: Table, results: serde_json::Value, warnings: Vec<String>, plot: (&str, &str, &str)) -> Self {
        Outcome {
            table,
            results,
            warnings,
            extra: Vec::new(),
            plot: (plot.0.into(), plot.1.into(), plot.2.into()),
            plot_points: None,
            failed: false,
        }
    }
}

pub const COMMANDS: &[&str] = &[
    "covariance-check",
    "field-sample",
    "free-energy",
    "fractional-moment",
    "pinning",
    "critical-probe",
    "diffusivity",
    "variance",
    "overlap-check",
    "girsanov-check",
    "second-moment-check",
    "weak-disorder",
    "fit",
    "selftest",
];

pub fn run(command: &str, cfg: &Config) -> CResult<Outcome> {
    match command {
        "covariance-check" => covariance_check(cfg),
        "field-sample" => field_sample(cfg),
        "free-energy" => free_energy(cfg),
        "fractional-moment" => fractional_moment(cfg),
        "pinning" => pinning_cmd(cfg),
        "critical-probe" => critical_probe(cfg),
        "diffusivity" => diffusivity(cfg),
        "variance" => variance(cfg),
        "overlap-check" => overlap_check(cfg),
        "girsanov-check" => girsanov_check(cfg),
        "second-moment-check" => second_moment_check(cfg),
        "weak-disorder" => weak_disorder(cfg),
        "fit" => fit(cfg),
        "selftest" => selftest_cmd(cfg),
        other => Err(CommandError::Validation(format!("unknown command `{other}`; expected one of {}", COMMANDS.join(", ")))),
    }
}

fn seed(cfg: &Config) -> CResult<u64> {
    Ok(cfg.get("run.seed")?)
}

fn covariance(cfg: &Config) -> CResult<CovarianceSpec> {
    let family = match cfg.raw("covariance.family") {
        "generalized-cauchy" => Family::GeneralizedCauchy,
        "indicator-ball" => Family::IndicatorBall,
        other => return Err(CommandError::Validation(format!("unknown covariance family `{other}`"))),
    };
    let theta = if family == Family::IndicatorBall { f64::INFINITY } else { cfg.get("covariance.theta")? };
    Ok(CovarianceSpec::new(family, theta, cfg.get("covariance.dimension")?, cfg.get("covariance.ell")?)?)
}

fn grid(cfg: &Config) -> CResult<Grid> {
    Ok(Grid::new(cfg.get("covariance.dimension")?, cfg.get("grid.half_width")?, cfg.get("grid.spacing")?, cfg.get::<Boundary>("grid.boundary")?)?)
}

/// Template at `beta` with horizon `t`; the grid is widened for `t` unless
/// `grid.widen = false`.
fn params_at(cfg: &Config, beta: f64, t: f64) -> CResult<PolymerParams> {
    let dt: f64 = cfg.get("polymer.dt")?;
    if !(t > 0.0) {
        return Err(CommandError::Validation(format!("time horizon must be positive, got {t}")));
    }
    let n = ((t / dt).round() as usize).max(1);
    let mut p = PolymerParams::new(beta, n, dt, grid(cfg)?)?;
    p.kernel_cutoff = cfg.get("polymer.cutoff")?;
    if cfg.get::<bool>("grid.widen")? {
        p = p.with_time(t)?;
    }
    p.kernel()?;
    Ok(p)
}

/// Template for commands that take a time list: widening happens per `t`
/// inside the estimator, so only the base grid is validated here.
fn template(cfg: &Config) -> CResult<PolymerParams> {
    let mut p = PolymerParams::new(0.0, 1, cfg.get("polymer.dt")?, grid(cfg)?)?;
    p.kernel_cutoff = cfg.get("polymer.cutoff")?;
    p.kernel()?;
    Ok(p)
}

fn realizations(cfg: &Config) -> CResult<usize> {
    Ok(cfg.get("polymer.realizations")?)
}

fn series_table(s: &EstimateSeries) -> Table {
    let mut t = Table::new(&SERIES_HEADER);
    for i in 0..s.len() {
        t.push(vec![
            Cell::Num(s.x_values[i]),
            Cell::Num(s.y_values[i]),
            Cell::Num(s.std_errors[i]),
            Cell::Int(s.n_realizations as u64),
            Cell::Text(s.flags[i].clone()),
        ]);
    }
    t
}

fn series_warnings(s: &EstimateSeries) -> Vec<String> {
    let mut w = s.warnings.clone();
    for (x, f) in s.x_values.iter().zip(&s.flags) {
        if !f.is_empty() {
            w.push(format!("point x={x} flagged: {f}"));
        }
    }
    w
}

fn row(x: f64, y: f64, se: f64, n: usize, flag: &str) -> Vec<Cell> {
    vec![Cell::Num(x), Cell::Num(y), Cell::Num(se), Cell::Int(n as u64), Cell::Text(flag.into())]
}

fn covariance_check(cfg: &Config) -> CResult<Outcome> {
    let spec = covariance(cfg)?;
    let max: f64 = cfg.get("check.max_distance")?;
    let n_points: usize = cfg.get("check.points")?;
    if !(max > 0.0) {
        return Err(CommandError::Validation("check.max_distance must be positive".into()));
    }
    let mut table = Table::new(&SERIES_HEADER);
    let d = spec.dimension;
    for i in 0..=100 {
        let r = max * i as f64 / 100.0;
        let mut x = vec![0.0; d];
        x[0] = r;
        table.push(row(r, spec.eval(&x)?, 0.0, 1, ""));
    }
    let mut rng = stream(seed(cfg)?, Purpose::Auxiliary, 0, 0);
    let pts: Vec<Vec<f64>> = (0..n_points).map(|_| (0..d).map(|_| rng.random_range(-max..max)).collect()).collect();
    let m = covariance_matrix(&spec, &pts)?;
    let min_eig = if pts.is_empty() {
        f64::NAN
    } else {
        nalgebra_min_eig(&m)
    };
    let mut warnings = Vec::new();
    if min_eig < -1e-10 {
        warnings.push(format!("covariance matrix of {n_points} random points has eigenvalue {min_eig:.3e} < -1e-10"));
    }
    let tail = if spec.family == Family::GeneralizedCauchy {
        let r = 100.0 * spec.theta.max(1.0) * spec.length_scale;
        let mut x = vec![0.0; d];
        x[0] = r;
        Some(spec.eval(&x)? * (r / spec.length_scale).powf(spec.theta))
    } else {
        None
    };
    let results = json!({
        "usable_as_covariance": spec.usable_as_covariance(),
        "psd_points": n_points,
        "min_eigenvalue": min_eig,
        "tail_ratio_at_100_theta_ell": tail,
    });
    Ok(Outcome::new(table, results, warnings, ("covariance profile", "|x|", "Q(x)")))
}

fn nalgebra_min_eig(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    nalgebra::DMatrix::from_fn(n, n, |i, j| m[i][j]).symmetric_eigen().eigenvalues.min()
}

fn field_sample(cfg: &Config) -> CResult<Outcome> {
    let spec = covariance(cfg)?;
    let g = grid(cfg)?;
    let dt: f64 = cfg.get("polymer.dt")?;
    let n: usize = cfg.get("field.n_steps")?;
    let seed = seed(cfg)?;
    let synth = FieldSynthesizer::new(&spec, &g, dt)?;
    let f = synth.sample_field(n, seed, 0);
    // empirical covariance against lag along axis 0 from the origin, pooled over slices
    let o = g.origin();
    let mut table = Table::new(&SERIES_HEADER);
    for lag in 0..=g.half_width as i64 {
        let mut c = vec![0i64; g.dimension];
        c[0] = lag;
        let y = g.flat(&c).expect("lag inside grid");
        let prods: Vec<f64> = (0..n).map(|k| f.slice(k)[o] * f.slice(k)[y] / dt).collect();
        let (m, se) = if prods.is_empty() { (f64::NAN, f64::NAN) } else { stats::mean_se(&prods) };
        table.push(row(lag as f64 * g.spacing, m, se, n, ""));
    }
    let mut out = Outcome::new(
        table,
        json!({
            "torus_clipped_mass": synth.clipped_mass(),
            "n_steps": n,
            "sites": g.len(),
        }),
        synth.warnings().to_vec(),
        ("empirical covariance / dt", "lag", "C(lag)/dt"),
    );
    if cfg.get::<bool>("field.dump")? {
        let mut bytes = Vec::new();
        field::write_dump(&mut bytes, &f, &spec, seed).map_err(|e| CommandError::Numerical(e.to_string()))?;
        out.extra.push(("field-sample.bin".into(), bytes));
    }
    Ok(out)
}

fn free_energy(cfg: &Config) -> CResult<Outcome> {
    let spec = covariance(cfg)?;
    let t: f64 = cfg.get("polymer.t")?;
    let p = params_at(cfg, 0.0, t)?;
    let betas: Vec<f64> = cfg.list("polymer.betas")?;
    let s = estimators::free_energy_curve(&spec, &p, &betas, realizations(cfg)?, seed(cfg)?)?;
    let results = json!({
        "t": p.time(),
        "half_width": p.grid.half_width,
        "crn_monotone_fraction": estimators::crn_monotone_fraction(&s),
    });
    Ok(Outcome::new(series_table(&s), results, series_warnings(&s), ("free energy (1/t) E log W_t", "beta", "p_t")))
}

fn fractional_moment(cfg: &Config) -> CResult<Outcome> {
    let spec = covariance(cfg)?;
    let beta: f64 = cfg.get("polymer.beta")?;
    let gamma: f64 = cfg.get("polymer.gamma")?;
    let p = params_at(cfg, beta, cfg.get("polymer.t")?)?;
    let n = realizations(cfg)?;
    let fm = polymer::fractional_moment_estimate(&spec, &p, gamma, n, seed(cfg)?)?;
    let mut table = Table::new(&SERIES_HEADER);
    table.push(row(beta, fm.value, fm.se, n, if fm.max_share > 0.5 { "heavy-tail" } else { "" }));
    let results = json!({ "gamma": gamma, "t": p.time(), "value": fm.value, "se": fm.se, "max_share": fm.max_share });
    Ok(Outcome::new(table, results, fm.warnings, ("(1/t) log E W^gamma", "beta", "value")))
}

fn potential(cfg: &Config) -> CResult<PotentialSpec> {
    let d: usize = cfg.get("pinning.dimension")?;
    Ok(match cfg.raw("pinning.potential") {
        "power-law" => PotentialSpec::power_law(cfg.get("pinning.theta")?, cfg.get("pinning.ell")?, d)?,
        "indicator-ball" => PotentialSpec::indicator_ball(cfg.get("pinning.radius")?, d)?,
        "covariance" => {
            let spec = covariance(cfg)?;
            if spec.dimension != d {
                return Err(CommandError::Validation("pinning.dimension must match covariance.dimension".into()));
            }
            PotentialSpec::scaled_covariance(spec, 1.0)?
        }
        other => return Err(CommandError::Validation(format!("unknown potential `{other}`"))),
    })
}

fn numerics(cfg: &Config, d: usize) -> CResult<PinningNumerics> {
    let a: f64 = cfg.get("pinning.spacing")?;
    if !(a > 0.0) {
        return Err(CommandError::Validation("pinning.spacing must be positive".into()));
    }
    let mut n = PinningNumerics::new(a, d);
    if let Some(dt) = cfg.auto::<f64>("pinning.dt")? {
        n.dt = dt;
    }
    match cfg.auto::<f64>("pinning.domain")? {
        Some(half_width) => n.domain = DomainRule::Fixed { half_width },
        None => {
            if let DomainRule::Auto { margin, .. } = &mut n.domain {
                *margin = cfg.get("pinning.margin")?;
            }
        }
    }
    Ok(n)
}

fn pinning_table(results: &[PinningResult]) -> Table {
    let mut t = Table::new(&PINNING_HEADER);
    for r in results {
        t.push(vec![
            Cell::Num(r.h),
            Cell::Num(r.f_estimate),
            Cell::Text(r.method.as_str().into()),
            Cell::Num(r.domain_half_width),
            Cell::Bool(r.converged),
        ]);
    }
    t
}

fn pinning_cmd(cfg: &Config) -> CResult<Outcome> {
    let v = potential(cfg)?;
    let method: Method = cfg.get("pinning.method")?;
    let hs: Vec<f64> = cfg.list("pinning.h_list")?;
    let curve = pinning::pinning_curve(&v, &hs, method, &numerics(cfg, v.dimension)?)?;
    let results = json!({
        "results": curve.results.iter().map(|r| json!({
            "h": r.h, "f": r.f_estimate, "iterations": r.iterations,
            "resolution": r.resolution, "dirichlet_floor": r.dirichlet_floor(v.dimension),
        })).collect::<Vec<_>>(),
    });
    Ok(Outcome::new(pinning_table(&curve.results), results, curve.warnings, ("pinning free energy", "h", "f(h)")))
}

fn critical_probe(cfg: &Config) -> CResult<Outcome> {
    let v = potential(cfg)?;
    let h: f64 = cfg.get("pinning.h")?;
    let ladder: Vec<f64> = cfg.list("pinning.ladder")?;
    let report = pinning::critical_h_probe(&v, h, &ladder, &numerics(cfg, v.dimension)?)?;
    let warnings = report.estimates.iter().filter(|r| !r.converged).map(|r| format!("probe L={}: not converged", r.domain_half_width)).collect();
    let results = json!({ "h": h, "verdict": report.verdict.as_str(), "ladder": ladder });
    Ok(Outcome::new(pinning_table(&report.estimates), results, warnings, ("critical probe", "h", "f")))
}

fn diffusivity(cfg: &Config) -> CResult<Outcome> {
    let spec = covariance(cfg)?;
    let p = template(cfg)?.with_beta(cfg.get("polymer.beta")?);
    let ts: Vec<f64> = cfg.list("polymer.t_list")?;
    let s = estimators::displacement_curve(&spec, &p, &ts, realizations(cfg)?, cfg.get("polymer.paths")?, seed(cfg)?)?;
    Ok(Outcome::new(series_table(&s), json!({ "beta": p.beta }), series_warnings(&s), ("median max displacement", "t", "max |B|")))
}

fn variance(cfg: &Config) -> CResult<Outcome> {
    let spec = covariance(cfg)?;
    let p = template(cfg)?.with_beta(cfg.get("polymer.beta")?);
    let ts: Vec<f64> = cfg.list("polymer.t_list")?;
    let s = estimators::variance_curve(&spec, &p, &ts, realizations(cfg)?, seed(cfg)?)?;
    Ok(Outcome::new(series_table(&s), json!({ "beta": p.beta }), series_warnings(&s), ("Var log Z_t", "t", "variance")))
}

fn overlap_check(cfg: &Config) -> CResult<Outcome> {
    let spec = covariance(cfg)?;
    let beta: f64 = cfg.get("polymer.beta")?;
    let p = params_at(cfg, beta, cfg.get("polymer.t")?)?;
    let n = realizations(cfg)?;
    let c = estimators::overlap_derivative_check(&spec, &p, beta, cfg.get("polymer.d_beta")?, n, cfg.get("polymer.pairs")?, seed(cfg)?)?;
    let mut table = Table::new(&SERIES_HEADER);
    table.push(row(beta, c.lhs, c.lhs_se, n, "lhs"));
    table.push(row(beta, c.rhs, c.rhs_se, n, "rhs"));
    let results = json!({
        "lhs": c.lhs, "rhs": c.rhs, "combined_se": c.combined_se, "allowance": c.allowance,
        "agrees_at_3se": c.agrees(3.0),
    });
    let mut warnings = c.warnings.clone();
    if !c.agrees(3.0) {
        warnings.push("overlap identity: |lhs - rhs| exceeds 3 combined SE plus allowance".into());
    }
    Ok(Outcome::new(table, results, warnings, ("overlap identity", "beta", "value")))
}

fn girsanov_check(cfg: &Config) -> CResult<Outcome> {
    let spec = covariance(cfg)?;
    let beta: f64 = cfg.get("polymer.beta")?;
    let lambda: f64 = cfg.get("polymer.lambda")?;
    let p = params_at(cfg, beta, cfg.get("polymer.t")?)?;
    let n = realizations(cfg)?;
    let g = polymer::girsanov_diagnostic(&spec, &p, lambda, cfg.get("polymer.r_step")?, n, seed(cfg)?)?;
    let mut table = Table::new(&SERIES_HEADER);
    table.push(row(lambda, g.mean, g.se, n, ""));
    let results = json!({ "beta": beta, "mean": g.mean, "se": g.se, "within_3se": g.mean.abs() <= 3.0 * g.se });
    Ok(Outcome::new(table, results, g.warnings, ("Girsanov identity", "lambda", "mean")))
}

fn second_moment_check(cfg: &Config) -> CResult<Outcome> {
    let spec = covariance(cfg)?;
    let beta: f64 = cfg.get("polymer.beta")?;
    let p = params_at(cfg, beta, cfg.get("polymer.t")?)?;
    let n = realizations(cfg)?;
    let s = polymer::second_moment_check(&spec, &p, n, seed(cfg)?)?;
    let mut table = Table::new(&SERIES_HEADER);
    table.push(row(beta, s.mc_value, s.combined_se, n, if s.heavy_tail { "mc;heavy-tail" } else { "mc" }));
    table.push(row(beta, s.pinning_value, 0.0, 1, "pinning"));
    let results = json!({
        "mc_value": s.mc_value, "pinning_value": s.pinning_value, "combined_se": s.combined_se,
        "max_share": s.max_share, "within_3se": (s.mc_value - s.pinning_value).abs() <= 3.0 * s.combined_se,
    });
    Ok(Outcome::new(table, results, s.warnings, ("second moment", "beta", "(1/t) log E W^2")))
}

fn weak_disorder(cfg: &Config) -> CResult<Outcome> {
    let spec = covariance(cfg)?;
    let beta: f64 = cfg.get("polymer.beta")?;
    let checkpoints: Vec<f64> = cfg.list("polymer.checkpoints")?;
    let n = realizations(cfg)?;
    let r = estimators::weak_disorder_diagnostic(&spec, &template(cfg)?, beta, &checkpoints, n, seed(cfg)?)?;
    let mut table = Table::new(&SERIES_HEADER);
    for c in &r.checkpoints {
        // normal-approximation SE of a median from the interquartile range
        let se = 1.2533 * (c.q3 - c.q1) / 1.349 / (n as f64).sqrt();
        table.push(row(c.t, c.median, se, n, ""));
    }
    let results = json!({
        "verdict": r.verdict.as_str(),
        "decay_rate": r.decay_rate,
        "checkpoints": r.checkpoints.iter().map(|c| json!({
            "t": c.t, "median": c.median, "q1": c.q1, "q3": c.q3, "mean_log_w": c.mean_log_w, "se_log_w": c.se_log_w,
        })).collect::<Vec<_>>(),
    });
    Ok(Outcome::new(table, results, r.warnings, ("median W_t", "t", "median W")))
}

/// Reads a series CSV (`x,y,se,n,flag`) or a pinning CSV
/// (`h,f,method,domain,converged`); flagged or unconverged rows are skipped.
pub fn read_series(path: &Path) -> CResult<(EstimateSeries, usize)> {
    let bad = |m: String| CommandError::Validation(format!("{}: {m}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header: Vec<String> = r.headers().map_err(|e| bad(e.to_string()))?.iter().map(str::to_string).collect();
    let pinning = header == PINNING_HEADER;
    if !pinning && header != SERIES_HEADER {
        return Err(bad(format!("unrecognized header {header:?}")));
    }
    let (mut x, mut y, mut se) = (Vec::new(), Vec::new(), Vec::new());
    let mut n = 1usize;
    let mut skipped = 0;
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |i: usize| rec[i].parse::<f64>().map_err(|e| bad(format!("`{}`: {e}", &rec[i])));
        let usable = if pinning { &rec[4] == "true" } else { rec[4].is_empty() };
        if !usable {
            skipped += 1;
            continue;
        }
        x.push(num(0)?);
        y.push(num(1)?);
        if pinning {
            se.push(0.0);
        } else {
            se.push(num(2)?);
            n = rec[3].parse().map_err(|e| bad(format!("`{}`: {e}", &rec[3])))?;
        }
    }
    Ok((EstimateSeries::from_points(x, y, se, n)?, skipped))
}

fn fit(cfg: &Config) -> CResult<Outcome> {
    let input = cfg.raw("fit.input");
    if input.is_empty() {
        return Err(CommandError::Validation("fit needs an input CSV (--input or fit.input)".into()));
    }
    let transform: Transform = cfg.get("fit.transform")?;
    let n_boot: usize = cfg.get("fit.n_boot")?;
    let (series, skipped) = read_series(Path::new(input))?;
    let f: ExponentFit = estimators::fit_exponent_with(&series, transform, n_boot, seed(cfg)?)?;
    let mut table = Table::new(&FIT_HEADER);
    table.push(vec![
        Cell::Num(f.slope),
        Cell::Num(f.intercept),
        Cell::Num(f.ci_low),
        Cell::Num(f.ci_high),
        Cell::Num(f.r_squared),
        Cell::Int(f.n_boot as u64),
    ]);
    let mut warnings = f.warnings.clone();
    if skipped > 0 {
        warnings.push(format!("fit: {skipped} flagged or unconverged row(s) skipped"));
    }
    let mut out = Outcome::new(table, json!({ "n_points": f.n_points, "transform": cfg.raw("fit.transform") }), warnings, ("fit input", "x", "y"));
    out.plot_points = Some(series.x_values.iter().zip(&series.y_values).zip(&series.std_errors).map(|((x, y), s)| (*x, y.abs(), *s)).collect());
    Ok(out)
}

fn selftest_cmd(cfg: &Config) -> CResult<Outcome> {
    let checks = selftest::run_all(seed(cfg)?)?;
    let mut table = Table::new(&SELFTEST_HEADER);
    let mut warnings = Vec::new();
    for c in &checks {
        table.push(vec![Cell::Text(c.name.clone()), Cell::Num(c.error), Cell::Num(c.tolerance), Cell::Bool(c.passed)]);
        if !c.passed {
            warnings.push(format!("selftest failed: {} (error {:.3e} > {:.1e})", c.name, c.error, c.tolerance));
        }
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    let mut out = Outcome::new(table, json!({ "passed": passed, "total": checks.len() }), warnings, ("selftest", "", ""));
    out.failed = passed < checks.len();
    Ok(out)
}
