//! Disorder-averaged curves, exponent fits and disorder diagnostics.
//!
//! Every curve keeps the per-realization values it was reduced from, so the
//! bootstrap can resample whole realizations. Realization `r` always uses the
//! field keyed by `(master_seed, r)`; aggregation is a fold in realization
//! order, so results do not depend on the worker count.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceSpec;
use crate::error::{invalid, Error, Result};
use crate::polymer::{self, log_partition_with, overlap, per_realization_seeded, ForwardPass, PolymerParams};
use crate::rng::{stream, Purpose};
use crate::stats;

pub const N_BOOT: usize = 1000;

/// How a point's value is formed from per-realization samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reducer {
    Mean,
    Variance,
    Median,
}

impl Reducer {
    pub fn apply(self, xs: &[f64]) -> f64 {
        let finite: Vec<f64> = xs.iter().copied().filter(|x| x.is_finite()).collect();
        match self {
            Reducer::Mean => stats::mean_se(&finite).0,
            Reducer::Variance => stats::variance_se(&finite).0,
            Reducer::Median => stats::median(&finite),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub master_seed: u64,
    pub params: BTreeMap<String, String>,
}

impl Metadata {
    pub fn new(master_seed: u64) -> Self {
        Metadata { master_seed, params: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateSeries {
    pub x_values: Vec<f64>,
    pub y_values: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub n_realizations: usize,
    /// Per-point flag, empty when clean.
    pub flags: Vec<String>,
    /// Per-point per-realization samples (non-finite entries were excluded).
    pub samples: Option<Vec<Vec<f64>>>,
    pub reducer: Option<Reducer>,
    pub metadata: Metadata,
    pub warnings: Vec<String>,
}

impl EstimateSeries {
    /// Series without samples (e.g. read back from CSV).
    pub fn from_points(x: Vec<f64>, y: Vec<f64>, se: Vec<f64>, n_realizations: usize) -> Result<Self> {
        if x.len() != y.len() || y.len() != se.len() {
            return Err(invalid("series columns have different lengths"));
        }
        let flags = vec![String::new(); x.len()];
        Ok(EstimateSeries {
            x_values: x,
            y_values: y,
            std_errors: se,
            n_realizations,
            flags,
            samples: None,
            reducer: None,
            metadata: Metadata::default(),
            warnings: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.x_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_values.is_empty()
    }

    fn flag(&mut self, i: usize, what: &str) {
        if self.flags[i].is_empty() {
            self.flags[i] = what.to_string();
        } else if !self.flags[i].split(';').any(|f| f == what) {
            self.flags[i].push(';');
            self.flags[i].push_str(what);
        }
    }
}

/// Build a series from per-point sample vectors, counting exclusions.
fn reduce(
    x: Vec<f64>,
    samples: Vec<Vec<f64>>,
    reducer: Reducer,
    metadata: Metadata,
    boot_seed: u64,
) -> EstimateSeries {
    let n_realizations = samples.first().map_or(0, |s| s.len());
    let mut y = Vec::with_capacity(x.len());
    let mut se = Vec::with_capacity(x.len());
    let mut flags = Vec::with_capacity(x.len());
    let mut warnings = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        let finite: Vec<f64> = s.iter().copied().filter(|v| v.is_finite()).collect();
        let excluded = s.len() - finite.len();
        let (v, e) = match reducer {
            Reducer::Mean => stats::mean_se(&finite),
            Reducer::Variance => stats::variance_se(&finite),
            Reducer::Median => (stats::median(&finite), bootstrap_se(&finite, boot_seed, i as u64)),
        };
        y.push(v);
        se.push(if e.is_finite() { e } else { 0.0 });
        let mut flag = String::new();
        if excluded > 0 {
            warnings.push(format!("x={}: {excluded} non-finite realization(s) excluded", x[i]));
            if excluded * 100 > s.len() {
                flag = "excluded".to_string();
            }
        }
        flags.push(flag);
    }
    EstimateSeries {
        x_values: x,
        y_values: y,
        std_errors: se,
        n_realizations,
        flags,
        samples: Some(samples),
        reducer: Some(reducer),
        metadata,
        warnings,
    }
}

/// Bootstrap SE of the median.
fn bootstrap_se(xs: &[f64], seed: u64, point: u64) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mut rng = stream(seed, Purpose::Bootstrap, u64::MAX, point);
    let reps: Vec<f64> = (0..200)
        .map(|_| {
            let r: Vec<f64> = (0..xs.len()).map(|_| *xs.choose(&mut rng).unwrap()).collect();
            stats::median(&r)
        })
        .collect();
    stats::mean_se(&reps).1 * (reps.len() as f64).sqrt()
}

fn check_realizations(realizations: usize) -> Result<()> {
    if realizations < 2 {
        return Err(invalid("at least 2 realizations are needed"));
    }
    Ok(())
}

fn check_ascending(xs: &[f64], what: &str) -> Result<()> {
    if xs.is_empty() || xs.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid(format!("{what} must be non-empty and strictly ascending")));
    }
    Ok(())
}

/// `(1/t)·log W_t` per β with common random numbers: realization `r` uses
/// the same field for every β.
pub fn free_energy_curve(
    spec: &CovarianceSpec,
    template: &PolymerParams,
    beta_list: &[f64],
    realizations: usize,
    master_seed: u64,
) -> Result<EstimateSeries> {
    check_realizations(realizations)?;
    check_ascending(beta_list, "beta list")?;
    if beta_list[0] < 0.0 {
        return Err(invalid("beta must be nonnegative"));
    }
    let kernel = template.kernel()?;
    let t = template.time();
    let (rows, warnings) = per_realization_seeded(spec, template, realizations, master_seed, |_, field| {
        beta_list
            .iter()
            .map(|&b| match log_partition_with(field, &template.with_beta(b), &kernel) {
                Ok(p) => Ok((p.log_w / t, p.boundary_flagged())),
                Err(Error::Underflow { .. }) => Ok((f64::NAN, true)),
                Err(e) => Err(e),
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let samples: Vec<Vec<f64>> = (0..beta_list.len()).map(|j| rows.iter().map(|r| r[j].0).collect()).collect();
    let meta = Metadata::new(master_seed).with("t", t).with("realizations", realizations);
    let mut s = reduce(beta_list.to_vec(), samples, Reducer::Mean, meta, master_seed);
    s.warnings.extend(warnings);
    for j in 0..beta_list.len() {
        if rows.iter().any(|r| r[j].1) {
            s.flag(j, "boundary");
        }
    }
    Ok(s)
}

/// Fraction of realizations whose `log W` is nonincreasing along the β ladder.
pub fn crn_monotone_fraction(series: &EstimateSeries) -> Option<f64> {
    let s = series.samples.as_ref()?;
    let n = s.first()?.len();
    let ok = (0..n).filter(|&r| s.windows(2).all(|w| w[1][r] <= w[0][r] + 1e-15)).count();
    Some(ok as f64 / n as f64)
}

/// `Var log Z_t` per horizon; the grid is widened per `t` by
/// [`PolymerParams::with_time`].
pub fn variance_curve(
    spec: &CovarianceSpec,
    template: &PolymerParams,
    t_list: &[f64],
    realizations: usize,
    master_seed: u64,
) -> Result<EstimateSeries> {
    check_realizations(realizations)?;
    check_ascending(t_list, "t list")?;
    let mut samples = Vec::new();
    let mut warnings = Vec::new();
    let mut boundary = Vec::new();
    for &t in t_list {
        let p = template.with_time(t)?;
        let kernel = p.kernel()?;
        let (rows, w) = per_realization_seeded(spec, &p, realizations, master_seed, |_, field| {
            match log_partition_with(field, &p, &kernel) {
                Ok(r) => Ok((r.log_z, r.boundary_flagged())),
                Err(Error::Underflow { .. }) => Ok((f64::NAN, true)),
                Err(e) => Err(e),
            }
        })?;
        warnings.extend(w);
        boundary.push(rows.iter().any(|r| r.1));
        samples.push(rows.into_iter().map(|r| r.0).collect());
    }
    let meta = Metadata::new(master_seed).with("beta", template.beta).with("realizations", realizations);
    let mut s = reduce(t_list.to_vec(), samples, Reducer::Variance, meta, master_seed);
    s.warnings.extend(warnings);
    for (i, b) in boundary.into_iter().enumerate() {
        if b {
            s.flag(i, "boundary");
        }
    }
    Ok(s)
}

/// Disorder median of the polymer-median of `max_{k≤n} ‖B_k‖_∞`.
pub fn displacement_curve(
    spec: &CovarianceSpec,
    template: &PolymerParams,
    t_list: &[f64],
    realizations: usize,
    paths_per_realization: usize,
    master_seed: u64,
) -> Result<EstimateSeries> {
    check_realizations(realizations)?;
    check_ascending(t_list, "t list")?;
    if paths_per_realization == 0 {
        return Err(invalid("need at least one path per realization"));
    }
    let mut samples = Vec::new();
    let mut warnings = Vec::new();
    let mut boundary = Vec::new();
    for (ti, &t) in t_list.iter().enumerate() {
        let p = template.with_time(t)?;
        let (rows, w) = per_realization_seeded(spec, &p, realizations, master_seed, |r, field| {
            let pass = ForwardPass::new(field, &p)?;
            let mut rng = polymer::path_stream(master_seed, r, ti as u64);
            let maxima: Vec<f64> = (0..paths_per_realization)
                .map(|_| {
                    let path = pass.sample(field, &mut rng);
                    path.sites.iter().map(|&x| p.grid.sup_norm(x)).fold(0.0, f64::max)
                })
                .collect();
            Ok((stats::median(&maxima), pass.partition.boundary_flagged()))
        })?;
        warnings.extend(w);
        boundary.push(rows.iter().any(|r| r.1));
        samples.push(rows.into_iter().map(|r| r.0).collect());
    }
    let meta = Metadata::new(master_seed)
        .with("beta", template.beta)
        .with("realizations", realizations)
        .with("paths_per_realization", paths_per_realization);
    let mut s = reduce(t_list.to_vec(), samples, Reducer::Median, meta, master_seed);
    s.warnings.extend(warnings);
    for (i, b) in boundary.into_iter().enumerate() {
        if b {
            s.flag(i, "boundary");
            s.warnings.push(format!("t={}: boundary-band mass above 1%", t_list[i]));
        }
    }
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    /// `log(-y)` against `log x`, for negative free energies.
    LogLogNegY,
    LogLogY,
    LogLogVar,
}

impl std::str::FromStr for Transform {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "loglog-negy" => Ok(Transform::LogLogNegY),
            "loglog-y" => Ok(Transform::LogLogY),
            "loglog-var" => Ok(Transform::LogLogVar),
            other => Err(format!("unknown transform '{other}'")),
        }
    }
}

impl Transform {
    fn value(self, y: f64) -> Option<f64> {
        let v = match self {
            Transform::LogLogNegY => -y,
            Transform::LogLogY | Transform::LogLogVar => y,
        };
        (v > 0.0 && v.is_finite()).then(|| v.ln())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub r_squared: f64,
    pub n_boot: usize,
    pub n_points: usize,
    pub warnings: Vec<String>,
}

/// Weighted log-log fit with a 95% percentile bootstrap interval.
pub fn fit_exponent(series: &EstimateSeries, transform: Transform) -> Result<ExponentFit> {
    fit_exponent_with(series, transform, N_BOOT, series.metadata.master_seed)
}

pub fn fit_exponent_with(series: &EstimateSeries, transform: Transform, n_boot: usize, seed: u64) -> Result<ExponentFit> {
    let mut warnings = Vec::new();
    let mut keep = Vec::new();
    for i in 0..series.len() {
        let x = series.x_values[i];
        if !series.flags[i].is_empty() {
            warnings.push(format!("x={x}: point flagged '{}', dropped from fit", series.flags[i]));
        } else if !(x > 0.0) || transform.value(series.y_values[i]).is_none() {
            warnings.push(format!("x={x}: y={} unusable for {:?}, dropped", series.y_values[i], transform));
        } else {
            keep.push(i);
        }
    }
    if keep.len() < 4 {
        return Err(Error::TooFewPoints(keep.len()));
    }
    let lx: Vec<f64> = keep.iter().map(|&i| series.x_values[i].ln()).collect();
    let ly: Vec<f64> = keep.iter().map(|&i| transform.value(series.y_values[i]).unwrap()).collect();
    let ses: Vec<f64> = keep.iter().map(|&i| series.std_errors[i]).collect();
    let w: Vec<f64> = if ses.iter().any(|s| !(*s > 0.0)) {
        vec![1.0; keep.len()]
    } else {
        keep.iter().zip(&ses).map(|(&i, s)| (series.y_values[i] / s).powi(2)).collect()
    };
    let (slope, intercept, r_squared) = stats::wls(&lx, &ly, &w);

    let resample = series.samples.as_ref().zip(series.reducer);
    let reps: Vec<f64> = (0..n_boot)
        .into_par_iter()
        .filter_map(|b| {
            let mut rng = stream(seed, Purpose::Bootstrap, 0, b as u64);
            let ys: Vec<f64> = match resample {
                Some((samples, reducer)) => {
                    let n = samples[keep[0]].len();
                    let idx: Vec<usize> = (0..n).map(|_| rand::Rng::random_range(&mut rng, 0..n)).collect();
                    keep.iter()
                        .map(|&i| {
                            let s: Vec<f64> = idx.iter().map(|&r| samples[i][r]).collect();
                            reducer.apply(&s)
                        })
                        .collect()
                }
                None => keep
                    .iter()
                    .map(|&i| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        series.y_values[i] + series.std_errors[i] * z
                    })
                    .collect(),
            };
            let t: Option<Vec<f64>> = ys.iter().map(|&y| transform.value(y)).collect();
            t.map(|t| stats::wls(&lx, &t, &w).0)
        })
        .collect();
    let dropped = n_boot - reps.len();
    if dropped > 0 {
        warnings.push(format!("{dropped} bootstrap replicate(s) had unusable values and were skipped"));
    }
    let (ci_low, ci_high) = if reps.is_empty() {
        (slope, slope)
    } else {
        (stats::quantile(&reps, 0.025).min(slope), stats::quantile(&reps, 0.975).max(slope))
    };
    Ok(ExponentFit { slope, intercept, ci_low, ci_high, r_squared, n_boot, n_points: keep.len(), warnings })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub combined_se: f64,
    pub lhs_se: f64,
    pub rhs_se: f64,
    /// Allowance for the `O(dβ²)` central-difference error.
    pub allowance: f64,
    pub warnings: Vec<String>,
}

impl OverlapCheck {
    pub fn agrees(&self, k: f64) -> bool {
        (self.lhs - self.rhs).abs() <= k * self.combined_se + self.allowance
    }
}

/// Central difference of `(1/t)·log W_t` in β.
///
/// With `common = true` both sides use the field of realization `r`;
/// otherwise the upper side uses an independent field.
pub fn finite_difference_lhs(
    spec: &CovarianceSpec,
    template: &PolymerParams,
    beta: f64,
    d_beta: f64,
    realizations: usize,
    master_seed: u64,
    common: bool,
) -> Result<(f64, f64)> {
    if !(beta > d_beta && d_beta > 0.0) {
        return Err(invalid(format!("need beta > d_beta > 0, got beta={beta}, d_beta={d_beta}")));
    }
    check_realizations(realizations)?;
    let kernel = template.kernel()?;
    let t = template.time();
    let lo = template.with_beta(beta - d_beta);
    let hi = template.with_beta(beta + d_beta);
    let synth = crate::field::FieldSynthesizer::new(spec, &template.grid, template.dt)?;
    let other_seed = crate::rng::splitmix64(master_seed ^ 0x696e_6465_7065_6e64);
    let vals: Result<Vec<f64>> = (0..realizations as u64)
        .into_par_iter()
        .map(|r| {
            let f = synth.sample_field(template.n_steps, master_seed, r);
            let a = log_partition_with(&f, &lo, &kernel)?.log_w;
            let b = if common {
                log_partition_with(&f, &hi, &kernel)?.log_w
            } else {
                let g = synth.sample_field(template.n_steps, other_seed, r);
                log_partition_with(&g, &hi, &kernel)?.log_w
            };
            Ok((b - a) / (2.0 * d_beta * t))
        })
        .collect();
    Ok(stats::mean_se(&vals?))
}

/// `∂_β E[(1/t)·log W_t]` against `-β·E[μ_t^{⊗2}(overlap)]`.
pub fn overlap_derivative_check(
    spec: &CovarianceSpec,
    template: &PolymerParams,
    beta: f64,
    d_beta: f64,
    realizations: usize,
    pairs_per_realization: usize,
    master_seed: u64,
) -> Result<OverlapCheck> {
    if !(beta > d_beta && d_beta > 0.0) {
        return Err(invalid(format!("need beta > d_beta > 0, got beta={beta}, d_beta={d_beta}")));
    }
    check_realizations(realizations)?;
    if pairs_per_realization == 0 {
        return Err(invalid("need at least one path pair per realization"));
    }
    let kernel = template.kernel()?;
    let t = template.time();
    let lo = template.with_beta(beta - d_beta);
    let hi = template.with_beta(beta + d_beta);
    let mid = template.with_beta(beta);
    let (rows, warnings) = per_realization_seeded(spec, template, realizations, master_seed, |r, field| {
        let a = log_partition_with(field, &lo, &kernel)?.log_w;
        let b = log_partition_with(field, &hi, &kernel)?.log_w;
        let pass = ForwardPass::new(field, &mid)?;
        let mut rng = polymer::path_stream(master_seed, r, 0);
        let mut ov = 0.0;
        for _ in 0..pairs_per_realization {
            let p1 = pass.sample(field, &mut rng);
            let p2 = pass.sample(field, &mut rng);
            ov += overlap(&p1, &p2, spec, &mid)?;
        }
        Ok(((b - a) / (2.0 * d_beta * t), -beta * ov / pairs_per_realization as f64))
    })?;
    let l: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let rr: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let diff: Vec<f64> = rows.iter().map(|r| r.0 - r.1).collect();
    let (lhs, lhs_se) = stats::mean_se(&l);
    let (rhs, rhs_se) = stats::mean_se(&rr);
    let combined_se = stats::mean_se(&diff).1;
    let allowance = (d_beta / beta).powi(2) * lhs.abs();
    Ok(OverlapCheck { lhs, rhs, combined_se, lhs_se, rhs_se, allowance, warnings })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointSummary {
    pub t: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub mean_log_w: f64,
    pub se_log_w: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DisorderVerdict {
    WeakDisorderEvidence,
    StrongDisorderEvidence,
    Inconclusive,
}

impl DisorderVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            DisorderVerdict::WeakDisorderEvidence => "weak-disorder-evidence",
            DisorderVerdict::StrongDisorderEvidence => "strong-disorder-evidence",
            DisorderVerdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakDisorderReport {
    pub checkpoints: Vec<CheckpointSummary>,
    /// Slope of `log median W` against `t` over the second half of the checkpoints.
    pub decay_rate: f64,
    pub verdict: DisorderVerdict,
    pub warnings: Vec<String>,
}

/// Log-median drop over the late checkpoints beyond which decay is called.
const DECAY_DROP: f64 = 0.5;
/// Late log-median change below which a plateau is called.
const PLATEAU_DROP: f64 = 0.1;

/// Distribution of `W_t` at each checkpoint. The verdict reads the late
/// checkpoints: a log-median falling by more than 0.5 with every late
/// segment decreasing is strong-disorder evidence; a change below 0.1 with
/// median above 0.1 is weak-disorder evidence.
pub fn weak_disorder_diagnostic(
    spec: &CovarianceSpec,
    template: &PolymerParams,
    beta: f64,
    t_checkpoints: &[f64],
    realizations: usize,
    master_seed: u64,
) -> Result<WeakDisorderReport> {
    check_realizations(realizations)?;
    check_ascending(t_checkpoints, "checkpoints")?;
    let p = template.with_beta(beta).with_time(*t_checkpoints.last().unwrap())?;
    let steps: Vec<usize> = t_checkpoints.iter().map(|t| (t / p.dt).round() as usize).collect();
    if steps.windows(2).any(|w| w[0] >= w[1]) || steps[0] == 0 {
        return Err(invalid("checkpoints collapse to equal step counts at this time step"));
    }
    let kernel = p.kernel()?;
    let (rows, warnings) = per_realization_seeded(spec, &p, realizations, master_seed, |_, field| {
        polymer::log_w_trajectory(field, &p, &kernel, &steps)
    })?;
    let checkpoints: Vec<CheckpointSummary> = (0..steps.len())
        .map(|j| {
            let lw: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            let w: Vec<f64> = lw.iter().map(|x| x.exp()).collect();
            let (m, se) = stats::mean_se(&lw);
            CheckpointSummary {
                t: steps[j] as f64 * p.dt,
                median: stats::median(&w),
                q1: stats::quantile(&w, 0.25),
                q3: stats::quantile(&w, 0.75),
                mean_log_w: m,
                se_log_w: se,
            }
        })
        .collect();
    let late = &checkpoints[checkpoints.len() / 2..];
    let (decay_rate, drop, all_down) = if late.len() >= 2 {
        let x: Vec<f64> = late.iter().map(|c| c.t).collect();
        let y: Vec<f64> = late.iter().map(|c| c.median.ln()).collect();
        let (b, _, _) = stats::wls(&x, &y, &vec![1.0; x.len()]);
        (b, y[y.len() - 1] - y[0], y.windows(2).all(|w| w[1] < w[0]))
    } else {
        (0.0, 0.0, false)
    };
    let last = checkpoints.last().unwrap().median;
    let verdict = if beta == 0.0 || (drop.abs() < PLATEAU_DROP && last > 0.1) {
        DisorderVerdict::WeakDisorderEvidence
    } else if drop < -DECAY_DROP && all_down {
        DisorderVerdict::StrongDisorderEvidence
    } else {
        DisorderVerdict::Inconclusive
    };
    Ok(WeakDisorderReport { checkpoints, decay_rate, verdict, warnings })
}
