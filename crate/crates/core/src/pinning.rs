//! Brownian pinning by a nonrandom potential.
//!
//! `f(h) = lim (1/t)·log E[exp(h∫V(B_s)ds)]` is computed two ways: as the
//! growth rate of the deterministic transfer recursion
//! `Y_{k+1} = diag(exp(h·V·δ))·K·Y_k`, and as the top eigenvalue of the
//! finite-difference operator `½Δ + hV` with Dirichlet data on the outermost
//! lattice layer.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceSpec;
use crate::error::{invalid, Error, Result};
use crate::grid::{Boundary, Grid};
use crate::polymer::{TransferState, WalkKernel};

/// Kernel truncation (in units of √δ) for the pinning transfer route.
/// Cutoff 4 leaves a ~1e-3 relative bias in `f`.
pub const PINNING_CUTOFF: f64 = 6.0;
/// Growth-rate convergence threshold (last quarter vs. last half).
pub const GROWTH_TOL: f64 = 1e-8;
/// Lanczos stopping threshold on successive top Ritz values (relative).
pub const EIGEN_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 100_000;
/// Tolerance for calling an estimate zero in the critical probe.
pub const ZERO_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PotentialFamily {
    IndicatorBall { radius: f64 },
    /// `(1 + |x|²/ℓ²)^(-θ/2)`.
    PowerLaw { theta: f64, ell: f64 },
    /// `Q(scale·x)` for a covariance `Q`.
    ScaledCovariance { base: CovarianceSpec, scale: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub family: PotentialFamily,
    pub dimension: usize,
}

impl PotentialSpec {
    pub fn indicator_ball(radius: f64, dimension: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || dimension == 0 {
            return Err(invalid("indicator potential needs a positive radius and dimension"));
        }
        Ok(PotentialSpec { family: PotentialFamily::IndicatorBall { radius }, dimension })
    }

    pub fn power_law(theta: f64, ell: f64, dimension: usize) -> Result<Self> {
        if !(theta > 0.0) || !(ell > 0.0 && ell.is_finite()) || dimension == 0 {
            return Err(invalid("power-law potential needs θ > 0, ℓ > 0 and a dimension"));
        }
        Ok(PotentialSpec { family: PotentialFamily::PowerLaw { theta, ell }, dimension })
    }

    pub fn scaled_covariance(base: CovarianceSpec, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(invalid("potential scale must be positive"));
        }
        let dimension = base.dimension;
        Ok(PotentialSpec { family: PotentialFamily::ScaledCovariance { base, scale }, dimension })
    }

    /// Tail exponent (`∞` for compact support).
    pub fn theta(&self) -> f64 {
        match &self.family {
            PotentialFamily::IndicatorBall { .. } => f64::INFINITY,
            PotentialFamily::PowerLaw { theta, .. } => *theta,
            PotentialFamily::ScaledCovariance { base, .. } => base.theta,
        }
    }

    /// Length scale ℓ in `V(x) ~ (|x|/ℓ)^(-θ)`.
    pub fn length_scale(&self) -> f64 {
        match &self.family {
            PotentialFamily::IndicatorBall { radius } => *radius,
            PotentialFamily::PowerLaw { ell, .. } => *ell,
            PotentialFamily::ScaledCovariance { base, scale } => base.length_scale / scale,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        match &self.family {
            PotentialFamily::IndicatorBall { radius } => {
                if r <= *radius {
                    1.0
                } else {
                    0.0
                }
            }
            PotentialFamily::PowerLaw { theta, ell } => (1.0 + (r / ell).powi(2)).powf(-0.5 * theta),
            PotentialFamily::ScaledCovariance { base, scale } => base.eval_radius(scale * r),
        }
    }

    /// Potential at every site. The indicator is averaged over each lattice
    /// cell so that the discrete well has the continuum volume.
    pub fn site_values(&self, grid: &Grid) -> Result<Vec<f64>> {
        if grid.dimension != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, got: grid.dimension });
        }
        let a = grid.spacing;
        Ok((0..grid.len())
            .map(|i| {
                let x = grid.position(i);
                match &self.family {
                    PotentialFamily::IndicatorBall { radius } => cell_fraction(&x, a, *radius),
                    _ => self.eval(&x),
                }
            })
            .collect())
    }
}

/// Fraction of the cube `x + [-a/2, a/2]^d` inside the ball of radius `r`.
fn cell_fraction(x: &[f64], a: f64, r: f64) -> f64 {
    let near: f64 = x.iter().map(|c| (c.abs() - a / 2.0).max(0.0).powi(2)).sum::<f64>().sqrt();
    let far: f64 = x.iter().map(|c| (c.abs() + a / 2.0).powi(2)).sum::<f64>().sqrt();
    if far <= r {
        return 1.0;
    }
    if near > r {
        return 0.0;
    }
    if x.len() == 1 {
        let (lo, hi) = (x[0] - a / 2.0, x[0] + a / 2.0);
        return ((hi.min(r) - lo.max(-r)).max(0.0)) / a;
    }
    const M: usize = 8;
    let d = x.len();
    let total = M.pow(d as u32);
    let mut inside = 0usize;
    for k in 0..total {
        let mut rest = k;
        let mut r2 = 0.0;
        for c in x {
            let j = rest % M;
            rest /= M;
            let p = c + a * ((j as f64 + 0.5) / M as f64 - 0.5);
            r2 += p * p;
        }
        if r2 <= r * r {
            inside += 1;
        }
    }
    inside as f64 / total as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    TransferGrowth,
    Eigenvalue,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::TransferGrowth => "transfer-growth",
            Method::Eigenvalue => "eigenvalue",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "transfer-growth" | "transfer" => Ok(Method::TransferGrowth),
            "eigenvalue" => Ok(Method::Eigenvalue),
            other => Err(format!("unknown pinning method '{other}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PinningResult {
    pub h: f64,
    pub f_estimate: f64,
    pub method: Method,
    /// Physical half-width `L·a` of the domain.
    pub domain_half_width: f64,
    /// Lattice spacing.
    pub resolution: f64,
    pub converged: bool,
    /// Transfer steps or Lanczos iterations used.
    pub iterations: usize,
}

impl PinningResult {
    /// `-π²d/(8·L²)`: the Dirichlet ground state of `½Δ` on the box.
    pub fn dirichlet_floor(&self, dimension: usize) -> f64 {
        -std::f64::consts::PI.powi(2) * dimension as f64 / (8.0 * self.domain_half_width.powi(2))
    }
}

/// Incremental transfer recursion keeping `log Y_k` for every step.
struct Growth {
    kernel: WalkKernel,
    /// `exp(δ·(hV - max hV))`; the shift is added back per step.
    factor: Vec<f64>,
    shift: f64,
    state: TransferState,
    log_mass: Vec<f64>,
    next: Vec<f64>,
    scratch: Vec<f64>,
    dt: f64,
}

impl Growth {
    fn new(v: &PotentialSpec, h: f64, grid: &Grid, dt: f64, cutoff: f64) -> Result<Self> {
        if !h.is_finite() {
            return Err(invalid("h must be finite"));
        }
        let kernel = WalkKernel::new(grid, dt, cutoff)?;
        let vals = v.site_values(grid)?;
        let top = vals.iter().map(|x| h * x).fold(f64::NEG_INFINITY, f64::max);
        let factor = vals.iter().map(|x| (dt * (h * x - top)).exp()).collect();
        Ok(Growth {
            kernel,
            factor,
            shift: top * dt,
            state: TransferState::delta(grid.len(), grid.origin()),
            log_mass: vec![0.0],
            next: Vec::new(),
            scratch: Vec::new(),
            dt,
        })
    }

    fn advance(&mut self, steps: usize) {
        for _ in 0..steps {
            self.kernel.apply(&self.state.weights, &mut self.next, &mut self.scratch);
            std::mem::swap(&mut self.state.weights, &mut self.next);
            for (w, f) in self.state.weights.iter_mut().zip(&self.factor) {
                *w *= f;
            }
            self.state.log_scale += self.shift;
            self.state.step += 1;
            let m = self.state.weights.iter().cloned().fold(0.0, f64::max);
            if m > 0.0 {
                self.state.weights.iter_mut().for_each(|w| *w /= m);
                self.state.log_scale += m.ln();
            }
            self.log_mass.push(self.state.log_total());
        }
    }

    fn steps(&self) -> usize {
        self.log_mass.len() - 1
    }

    /// Growth per unit time over the last `1/frac` of the run.
    fn rate(&self, frac: usize) -> f64 {
        let n = self.steps();
        let k = n - n / frac;
        (self.log_mass[n] - self.log_mass[k]) / ((n - k) as f64 * self.dt)
    }

    fn converged(&self) -> bool {
        (self.rate(2) - self.rate(4)).abs() <= GROWTH_TOL
    }
}

/// `log Y_n` for the walk started at the origin: the finite-time pinning
/// partition function `E[exp(h·Σ_{k=1..n} δ·V(B_k))]`.
pub fn log_partition(v: &PotentialSpec, h: f64, grid: &Grid, dt: f64, n_steps: usize, cutoff: f64) -> Result<f64> {
    if h == 0.0 && grid.boundary == Boundary::Reflecting {
        WalkKernel::new(grid, dt, cutoff)?;
        return Ok(0.0);
    }
    let mut g = Growth::new(v, h, grid, dt, cutoff)?;
    g.advance(n_steps);
    Ok(g.log_mass[n_steps])
}

/// Per-time growth of `log Y` over the last `n/2` steps.
pub fn transfer_growth_rate(v: &PotentialSpec, h: f64, grid: &Grid, dt: f64, n_steps: usize) -> Result<PinningResult> {
    transfer_growth_rate_adaptive(v, h, grid, dt, n_steps, n_steps, PINNING_CUTOFF)
}

/// As [`transfer_growth_rate`], doubling the horizon from `min_steps` until
/// the last-quarter and last-half rates agree or `max_steps` is reached.
pub fn transfer_growth_rate_adaptive(
    v: &PotentialSpec,
    h: f64,
    grid: &Grid,
    dt: f64,
    min_steps: usize,
    max_steps: usize,
    cutoff: f64,
) -> Result<PinningResult> {
    if min_steps < 4 {
        return Err(invalid("transfer growth rate needs at least 4 steps"));
    }
    let mut result = PinningResult {
        h,
        f_estimate: 0.0,
        method: Method::TransferGrowth,
        domain_half_width: grid.extent(),
        resolution: grid.spacing,
        converged: true,
        iterations: min_steps,
    };
    if h == 0.0 && grid.boundary == Boundary::Reflecting {
        WalkKernel::new(grid, dt, cutoff)?;
        return Ok(result);
    }
    let mut g = Growth::new(v, h, grid, dt, cutoff)?;
    g.advance(min_steps);
    while !g.converged() && g.steps() * 2 <= max_steps {
        g.advance(g.steps());
    }
    result.f_estimate = g.rate(2);
    result.converged = g.converged();
    result.iterations = g.steps();
    Ok(result)
}

/// `½Δ_a + hV` on the interior sites, zero on the outermost layer.
struct Operator {
    diag: Vec<f64>,
    interior: Vec<bool>,
    strides: Vec<usize>,
    off: f64,
}

impl Operator {
    fn new(v: &PotentialSpec, h: f64, grid: &Grid) -> Result<Self> {
        let vals = v.site_values(grid)?;
        let a2 = grid.spacing * grid.spacing;
        let d = grid.dimension;
        let l = grid.half_width_i();
        let mut c = vec![0i64; d];
        let interior: Vec<bool> = (0..grid.len())
            .map(|i| {
                grid.coords_into(i, &mut c);
                c.iter().all(|x| x.abs() < l)
            })
            .collect();
        let diag = vals.iter().map(|x| h * x - d as f64 / a2).collect();
        let strides = (0..d).map(|k| grid.side().pow(k as u32)).collect();
        Ok(Operator { diag, interior, strides, off: 0.5 / a2 })
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..x.len() {
            if !self.interior[i] {
                y[i] = 0.0;
                continue;
            }
            let mut s = 0.0;
            for &st in &self.strides {
                s += x[i + st] + x[i - st];
            }
            y[i] = self.diag[i] * x[i] + self.off * s;
        }
    }

    /// Gershgorin interval of the operator.
    fn bounds(&self) -> (f64, f64) {
        let r = 2.0 * self.strides.len() as f64 * self.off;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (d, int) in self.diag.iter().zip(&self.interior) {
            if *int {
                lo = lo.min(d - r);
                hi = hi.max(d + r);
            }
        }
        (lo, hi)
    }
}

/// Number of eigenvalues of the symmetric tridiagonal `(alpha, beta)` below `x`.
fn sturm_count(alpha: &[f64], beta: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..alpha.len() {
        let b2 = if i == 0 { 0.0 } else { beta[i - 1] * beta[i - 1] };
        q = alpha[i] - x - if i == 0 { 0.0 } else { b2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (x.abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn top_ritz(alpha: &[f64], beta: &[f64], lo: f64, hi: f64) -> f64 {
    let k = alpha.len();
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if sturm_count(alpha, beta, m) == k {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

/// Top eigenvalue of `½Δ_a + hV` with Dirichlet data on the outermost
/// layer, by Lanczos with Sturm-bisection Ritz values.
pub fn principal_eigenvalue(v: &PotentialSpec, h: f64, grid: &Grid) -> Result<PinningResult> {
    principal_eigenvalue_with(v, h, grid, MAX_ITERATIONS)
}

pub fn principal_eigenvalue_with(v: &PotentialSpec, h: f64, grid: &Grid, max_iterations: usize) -> Result<PinningResult> {
    if grid.boundary != Boundary::Absorbing {
        return Err(invalid("eigenvalue route needs a Dirichlet (absorbing) grid"));
    }
    if grid.half_width < 1 {
        return Err(invalid("eigenvalue route needs at least one interior site"));
    }
    if !h.is_finite() {
        return Err(invalid("h must be finite"));
    }
    let op = Operator::new(v, h, grid)?;
    let (lo, hi) = op.bounds();
    let n = grid.len();
    let interior = op.interior.iter().filter(|b| **b).count();
    let mut q: Vec<f64> = op.interior.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let norm = (interior as f64).sqrt();
    q.iter_mut().for_each(|x| *x /= norm);
    let mut q_prev = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut last = f64::NAN;
    let mut next_check = 8usize;
    for j in 0..max_iterations.min(interior.max(1)) {
        op.apply(&q, &mut w);
        let b_prev = beta.last().copied().unwrap_or(0.0);
        let a: f64 = w.iter().zip(&q).map(|(x, y)| x * y).sum();
        for i in 0..n {
            w[i] -= a * q[i] + b_prev * q_prev[i];
        }
        alpha.push(a);
        let b = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let exhausted = b <= 1e-14 * (hi - lo).abs().max(1.0) || alpha.len() == interior;
        if alpha.len() >= next_check || exhausted {
            let theta = top_ritz(&alpha, &beta, lo, hi);
            let done = (theta - last).abs() <= EIGEN_TOL * theta.abs() + 1e-15;
            if done || exhausted {
                return Ok(PinningResult {
                    h,
                    f_estimate: theta,
                    method: Method::Eigenvalue,
                    domain_half_width: grid.extent(),
                    resolution: grid.spacing,
                    converged: true,
                    iterations: j + 1,
                });
            }
            last = theta;
            next_check = alpha.len() + (alpha.len() / 8).max(8);
        }
        beta.push(b);
        std::mem::swap(&mut q_prev, &mut q);
        for i in 0..n {
            q[i] = w[i] / b;
        }
    }
    Err(Error::NoConvergence { iterations: max_iterations })
}

/// How the domain is chosen for each `h` of a curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DomainRule {
    /// Fixed physical half-width.
    Fixed { half_width: f64 },
    /// `max(min, margin·r(h))` with `r(h)` the localization scale, capped at
    /// `max_sites` lattice sites per half-axis.
    Auto { margin: f64, min: f64, max_sites: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PinningNumerics {
    pub spacing: f64,
    pub dt: f64,
    pub cutoff: f64,
    pub domain: DomainRule,
    pub min_steps: usize,
    pub max_steps: usize,
    pub max_iterations: usize,
}

impl PinningNumerics {
    pub fn new(spacing: f64, dimension: usize) -> Self {
        let max_sites = match dimension {
            1 => 200_000,
            2 => 1_000,
            _ => 80,
        };
        PinningNumerics {
            spacing,
            dt: spacing * spacing * 5.0,
            cutoff: PINNING_CUTOFF,
            domain: DomainRule::Auto { margin: 8.0, min: 10.0, max_sites },
            min_steps: 1_000,
            max_steps: 1 << 20,
            max_iterations: MAX_ITERATIONS,
        }
    }
}

/// Scale on which the ground state of `½Δ + hV` decays.
pub fn localization_scale(v: &PotentialSpec, h: f64) -> f64 {
    let theta = v.theta();
    let ell = v.length_scale();
    if h <= 0.0 {
        return f64::INFINITY;
    }
    if theta < 2.0 {
        (h * ell.powf(theta)).powf(-1.0 / (2.0 - theta))
    } else if v.dimension == 1 {
        ell / (h * ell * ell)
    } else {
        ell / (h * ell * ell).sqrt()
    }
}

/// Physical half-width used for `h` under `rule`.
pub fn domain_for(v: &PotentialSpec, h: f64, rule: &DomainRule, spacing: f64) -> f64 {
    match rule {
        DomainRule::Fixed { half_width } => *half_width,
        // without a potential there is no bound state to resolve
        DomainRule::Auto { min, .. } if h <= 0.0 => *min,
        DomainRule::Auto { margin, min, max_sites } => {
            let want = (margin * localization_scale(v, h)).max(*min);
            let cap = *max_sites as f64 * spacing;
            if want.is_finite() {
                want.min(cap)
            } else {
                cap
            }
        }
    }
}

fn grid_for(v: &PotentialSpec, half_width: f64, spacing: f64, boundary: Boundary) -> Result<Grid> {
    let sites = (half_width / spacing).round().max(1.0) as usize;
    Grid::new(v.dimension, sites, spacing, boundary)
}

/// One `(h, domain)` evaluation with the chosen method.
pub fn pinning_point(v: &PotentialSpec, h: f64, half_width: f64, method: Method, numerics: &PinningNumerics) -> Result<PinningResult> {
    match method {
        Method::Eigenvalue => {
            let grid = grid_for(v, half_width, numerics.spacing, Boundary::Absorbing)?;
            principal_eigenvalue_with(v, h, &grid, numerics.max_iterations)
        }
        Method::TransferGrowth => {
            let grid = grid_for(v, half_width, numerics.spacing, Boundary::Reflecting)?;
            transfer_growth_rate_adaptive(v, h, &grid, numerics.dt, numerics.min_steps, numerics.max_steps, numerics.cutoff)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PinningCurve {
    pub results: Vec<PinningResult>,
    pub warnings: Vec<String>,
}

/// Results for an ascending `h` ladder, with monotonicity, convexity and
/// convergence findings reported as warnings.
pub fn pinning_curve(v: &PotentialSpec, h_list: &[f64], method: Method, numerics: &PinningNumerics) -> Result<PinningCurve> {
    if h_list.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("h ladder must be strictly ascending"));
    }
    let results: Result<Vec<_>> = h_list
        .par_iter()
        .map(|&h| pinning_point(v, h, domain_for(v, h, &numerics.domain, numerics.spacing), method, numerics))
        .collect();
    let results = results?;
    let warnings = curve_warnings(&results, v.dimension);
    Ok(PinningCurve { results, warnings })
}

pub fn curve_warnings(results: &[PinningResult], dimension: usize) -> Vec<String> {
    let mut w = Vec::new();
    for r in results {
        if !r.converged {
            w.push(format!("pinning h={}: {} did not converge", r.h, r.method.as_str()));
        }
        if r.f_estimate < r.dirichlet_floor(dimension) - ZERO_TOL {
            w.push(format!("pinning h={}: estimate {:.3e} below the Dirichlet floor", r.h, r.f_estimate));
        }
    }
    for p in results.windows(2) {
        if p[1].f_estimate < p[0].f_estimate - 1e-12 {
            w.push(format!("pinning curve decreases between h={} and h={}", p[0].h, p[1].h));
        }
    }
    for p in results.windows(3) {
        let d1 = (p[1].f_estimate - p[0].f_estimate) / (p[1].h - p[0].h);
        let d2 = (p[2].f_estimate - p[1].f_estimate) / (p[2].h - p[1].h);
        if (d2 - d1) / (p[2].h - p[0].h) < -1e-9 {
            w.push(format!("pinning curve not convex around h={}", p[1].h));
        }
    }
    w
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    DelocalizedEvidence,
    LocalizedEvidence,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::DelocalizedEvidence => "delocalized-evidence",
            Verdict::LocalizedEvidence => "localized-evidence",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeReport {
    pub verdict: Verdict,
    pub estimates: Vec<PinningResult>,
}

/// Eigenvalue estimates on a strictly increasing ladder of physical
/// half-widths. Stable positive estimates (relative change < 10%) indicate
/// a bound state; nonpositive estimates shrinking in magnitude indicate none.
pub fn critical_h_probe(v: &PotentialSpec, h: f64, domain_ladder: &[f64], numerics: &PinningNumerics) -> Result<ProbeReport> {
    if domain_ladder.len() < 2 || domain_ladder.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("domain ladder must be strictly increasing with at least two entries"));
    }
    let estimates: Result<Vec<_>> = domain_ladder
        .par_iter()
        .map(|&l| pinning_point(v, h, l, Method::Eigenvalue, numerics))
        .collect();
    let estimates = estimates?;
    let f: Vec<f64> = estimates.iter().map(|r| r.f_estimate).collect();
    let localized = f.iter().all(|x| *x > ZERO_TOL) && f.windows(2).all(|w| ((w[1] - w[0]) / w[1]).abs() < 0.1);
    let delocalized = f.iter().all(|x| *x <= ZERO_TOL) && f.windows(2).all(|w| w[1].abs() < w[0].abs());
    let verdict = if localized {
        Verdict::LocalizedEvidence
    } else if delocalized {
        Verdict::DelocalizedEvidence
    } else {
        Verdict::Inconclusive
    };
    Ok(ProbeReport { verdict, estimates })
}
