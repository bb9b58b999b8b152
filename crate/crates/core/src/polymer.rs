//! Lattice directed polymer: transfer recursion, Gibbs paths and diagnostics.
//!
//! The reference path is a lattice walk whose increments follow a discrete
//! Gaussian with per-coordinate variance `δ`. Step `k` of the recursion moves
//! the walk with the kernel and then weights the new site `x` by
//! `exp(β·ω_k(x))`, so `H(B) = Σ_k ω_k(B_{k+1})` and `Z` is computed exactly
//! for a fixed field realization.

use rand::Rng;
use rayon::prelude::*;

use crate::covariance::CovarianceSpec;
use crate::error::{invalid, Error, Result};
use crate::field::{FieldSynthesizer, SpaceTimeField};
use crate::grid::{Boundary, Grid, SiteBox};
use crate::pinning::{self, PotentialSpec};
use crate::rng::{stream, Purpose};
use crate::stats;

/// Survival below this triggers an underflow error on absorbing grids.
const MIN_SURVIVAL_LOG: f64 = -690.775_527_898_213_7; // ln(1e-300)

/// Boundary-band endpoint mass above which a run is flagged.
pub const BOUNDARY_FLAG: f64 = 0.01;

/// Per-axis transition structure of the lattice walk.
#[derive(Clone, Debug)]
pub struct WalkKernel {
    dimension: usize,
    side: usize,
    spacing: f64,
    boundary: Boundary,
    /// Weights for offsets `-radius..=radius`.
    weights: Vec<f64>,
    radius: usize,
    // CSR rows of the one-axis transition matrix
    row_start: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

/// Reflection about the half-sites `-1/2` and `side - 1/2`. Keeps the
/// one-axis matrix symmetric and doubly stochastic.
fn fold(mut p: i64, side: i64) -> i64 {
    loop {
        if p < 0 {
            p = -1 - p;
        } else if p >= side {
            p = 2 * side - 1 - p;
        } else {
            return p;
        }
    }
}

impl WalkKernel {
    pub fn new(grid: &Grid, dt: f64, cutoff: f64) -> Result<Self> {
        let a = grid.spacing;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("time step must be positive, got {dt}")));
        }
        if dt < a * a / 16.0 {
            return Err(Error::UnderResolved { dt, limit: a * a / 16.0 });
        }
        if !(cutoff > 0.0) || cutoff * dt.sqrt() < a {
            return Err(invalid(format!("kernel cutoff {cutoff}·√δ must reach at least one lattice spacing")));
        }
        let radius = (cutoff * dt.sqrt() / a + 1e-12).floor() as usize;
        let mut weights: Vec<f64> = (-(radius as i64)..=radius as i64)
            .map(|j| {
                let x = j as f64 * a;
                (-x * x / (2.0 * dt)).exp()
            })
            .collect();
        let norm: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= norm);

        let side = grid.side();
        let mut row_start = vec![0usize];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut acc = vec![0.0; side];
        for i in 0..side as i64 {
            acc.iter_mut().for_each(|v| *v = 0.0);
            for (o, w) in weights.iter().enumerate() {
                let p = i + o as i64 - radius as i64;
                match grid.boundary {
                    Boundary::Reflecting => acc[fold(p, side as i64) as usize] += w,
                    Boundary::Absorbing => {
                        if (0..side as i64).contains(&p) {
                            acc[p as usize] += w;
                        }
                    }
                }
            }
            for (j, v) in acc.iter().enumerate() {
                if *v > 0.0 {
                    cols.push(j as u32);
                    vals.push(*v);
                }
            }
            row_start.push(cols.len());
        }
        Ok(WalkKernel {
            dimension: grid.dimension,
            side,
            spacing: a,
            boundary: grid.boundary,
            weights,
            radius,
            row_start,
            cols,
            vals,
        })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Interior offset weights for offsets `-radius..=radius`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Per-coordinate variance of an interior step, physical units.
    pub fn variance(&self) -> f64 {
        let r = self.radius as i64;
        self.weights
            .iter()
            .enumerate()
            .map(|(o, w)| {
                let x = (o as i64 - r) as f64 * self.spacing;
                w * x * x
            })
            .sum()
    }

    /// `log Σ_j w_j e^{λ·j·a}`, the cumulant of one interior coordinate step.
    pub fn log_mgf(&self, lambda: f64) -> f64 {
        let r = self.radius as i64;
        self.weights
            .iter()
            .enumerate()
            .map(|(o, w)| w * (lambda * (o as i64 - r) as f64 * self.spacing).exp())
            .sum::<f64>()
            .ln()
    }

    /// One-axis transition row of coordinate index `i` (0-based).
    pub fn axis_row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (s, e) = (self.row_start[i], self.row_start[i + 1]);
        self.cols[s..e].iter().zip(&self.vals[s..e]).map(|(&c, &v)| (c as usize, v))
    }

    /// Transition probability between flat sites of the grid.
    pub fn entry(&self, from: usize, to: usize) -> f64 {
        let (mut f, mut t) = (from, to);
        let mut p = 1.0;
        for _ in 0..self.dimension {
            let (i, j) = (f % self.side, t % self.side);
            p *= self.axis_row(i).find(|(c, _)| *c == j).map_or(0.0, |(_, v)| v);
            if p == 0.0 {
                return 0.0;
            }
            f /= self.side;
            t /= self.side;
        }
        p
    }

    /// Row vector times kernel: `dst = src · K`. `scratch` is resized as needed.
    pub fn apply(&self, src: &[f64], dst: &mut Vec<f64>, scratch: &mut Vec<f64>) {
        let n = src.len();
        dst.clear();
        dst.extend_from_slice(src);
        scratch.resize(n, 0.0);
        let mut stride = 1usize;
        for _ in 0..self.dimension {
            scratch.iter_mut().for_each(|v| *v = 0.0);
            let block = stride * self.side;
            for base in (0..n).step_by(block) {
                for off in 0..stride {
                    let start = base + off;
                    for i in 0..self.side {
                        let v = dst[start + i * stride];
                        if v == 0.0 {
                            continue;
                        }
                        for (j, w) in self.axis_row(i) {
                            scratch[start + j * stride] += v * w;
                        }
                    }
                }
            }
            std::mem::swap(dst, scratch);
            stride = block;
        }
    }

    /// Sites whose kernel row touches the boundary treatment.
    pub fn boundary_band(&self, grid: &Grid) -> Vec<bool> {
        let lim = grid.half_width_i() - self.radius as i64;
        let mut c = vec![0i64; grid.dimension];
        (0..grid.len())
            .map(|i| {
                grid.coords_into(i, &mut c);
                c.iter().any(|x| x.abs() > lim)
            })
            .collect()
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }
}

pub fn walk_kernel(grid: &Grid, dt: f64, cutoff: f64) -> Result<WalkKernel> {
    WalkKernel::new(grid, dt, cutoff)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolymerParams {
    pub beta: f64,
    pub n_steps: usize,
    pub dt: f64,
    pub grid: Grid,
    pub kernel_cutoff: f64,
    pub start_site: Option<usize>,
}

impl PolymerParams {
    pub fn new(beta: f64, n_steps: usize, dt: f64, grid: Grid) -> Result<Self> {
        let p = PolymerParams { beta, n_steps, dt, grid, kernel_cutoff: 4.0, start_site: None };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(invalid(format!("beta must be nonnegative, got {}", self.beta)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid(format!("time step must be positive, got {}", self.dt)));
        }
        if let Some(s) = self.start_site {
            if s >= self.grid.len() {
                return Err(invalid("start site outside the grid"));
            }
        }
        Ok(())
    }

    pub fn start(&self) -> usize {
        self.start_site.unwrap_or_else(|| self.grid.origin())
    }

    pub fn time(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        PolymerParams { beta, ..self.clone() }
    }

    /// Copy for horizon `t`: `n = round(t/δ)` and the grid widened so that
    /// `L·a ≥ max(3·t^0.8, 6·√t)`, never narrower than the template.
    pub fn with_time(&self, t: f64) -> Result<Self> {
        if !(t >= 0.0) {
            return Err(invalid(format!("time horizon must be nonnegative, got {t}")));
        }
        let n_steps = (t / self.dt).round() as usize;
        let need = (3.0 * t.powf(0.8)).max(6.0 * t.sqrt());
        let half_width = self.grid.half_width.max((need / self.grid.spacing).ceil() as usize);
        let grid = Grid { half_width, ..self.grid.clone() };
        Ok(PolymerParams { n_steps, grid, start_site: None, ..self.clone() })
    }

    pub fn kernel(&self) -> Result<WalkKernel> {
        WalkKernel::new(&self.grid, self.dt, self.kernel_cutoff)
    }
}

/// Forward state of the recursion: `weights · exp(log_scale)` is the
/// unnormalized mass after `step` steps.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferState {
    pub weights: Vec<f64>,
    pub step: usize,
    pub log_scale: f64,
}

impl TransferState {
    pub fn delta(len: usize, site: usize) -> Self {
        let mut weights = vec![0.0; len];
        weights[site] = 1.0;
        TransferState { weights, step: 0, log_scale: 0.0 }
    }

    pub fn log_weights(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.ln() + self.log_scale).collect()
    }

    /// `log Σ_x mass(x)`, `-∞` if all mass is gone.
    pub fn log_total(&self) -> f64 {
        let s: f64 = self.weights.iter().sum();
        s.ln() + self.log_scale
    }

    fn renormalize(&mut self) {
        let m = self.weights.iter().cloned().fold(0.0, f64::max);
        if m > 0.0 {
            self.weights.iter_mut().for_each(|w| *w /= m);
            self.log_scale += m.ln();
        }
    }
}

/// Output of a transfer run on one field realization.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    pub log_z: f64,
    pub log_w: f64,
    /// Gibbs endpoint mass on sites whose kernel row meets the boundary.
    pub boundary_mass: f64,
    /// Fraction of free-walk mass lost through an absorbing boundary.
    pub absorbed: f64,
}

impl Partition {
    pub fn boundary_flagged(&self) -> bool {
        self.boundary_mass > BOUNDARY_FLAG
    }
}

/// Per-step spatial restriction; steps without a box are unrestricted.
#[derive(Clone, Debug, PartialEq)]
pub struct CorridorSpec {
    pub boxes: Vec<Option<SiteBox>>,
}

impl CorridorSpec {
    pub fn unrestricted(n_steps: usize) -> Self {
        CorridorSpec { boxes: vec![None; n_steps + 1] }
    }

    /// `box` imposed on every step `k` with `k·δ ∈ [t/2, t]`.
    pub fn second_half(n_steps: usize, sites: SiteBox) -> Self {
        let boxes = (0..=n_steps).map(|k| if 2 * k >= n_steps { Some(sites.clone()) } else { None }).collect();
        CorridorSpec { boxes }
    }

    /// Box imposed at every step `0..=n`.
    pub fn everywhere(n_steps: usize, sites: SiteBox) -> Self {
        CorridorSpec { boxes: vec![Some(sites); n_steps + 1] }
    }

    fn masks(&self, grid: &Grid) -> Result<Vec<Option<Vec<bool>>>> {
        self.boxes
            .iter()
            .map(|b| match b {
                None => Ok(None),
                Some(b) if b.fits(grid) => Ok(Some(b.mask(grid))),
                Some(_) => Err(invalid("corridor box does not fit inside the grid")),
            })
            .collect()
    }
}

fn check_shapes(field: &SpaceTimeField, params: &PolymerParams) -> Result<()> {
    params.validate()?;
    if field.grid != params.grid {
        return Err(invalid("field and polymer parameters use different grids"));
    }
    if field.n_steps < params.n_steps {
        return Err(invalid(format!("field has {} slices, {} needed", field.n_steps, params.n_steps)));
    }
    if (field.dt - params.dt).abs() > 1e-12 * params.dt {
        return Err(invalid("field and polymer parameters use different time steps"));
    }
    Ok(())
}

/// Core recursion. `hook(k, weights)` runs after the potential of step `k`
/// (`k = 0` is the initial state) and returns a log factor it divided out.
fn run<H>(
    field: &SpaceTimeField,
    params: &PolymerParams,
    kernel: &WalkKernel,
    mut hook: H,
    mut store: Option<&mut Vec<f64>>,
    mut totals: Option<&mut Vec<f64>>,
) -> Result<(TransferState, f64)>
where
    H: FnMut(usize, &mut [f64]) -> f64,
{
    let sites = params.grid.len();
    let mut state = TransferState::delta(sites, params.start());
    state.log_scale -= hook(0, &mut state.weights);
    if let Some(s) = store.as_deref_mut() {
        s.clear();
        s.extend_from_slice(&state.weights);
    }
    if let Some(t) = totals.as_deref_mut() {
        t.clear();
        t.push(state.log_total());
    }
    let mut next = Vec::with_capacity(sites);
    let mut scratch = Vec::with_capacity(sites);
    let mut log_survival = 0.0;
    let absorbing = params.grid.boundary == Boundary::Absorbing;
    for k in 0..params.n_steps {
        let before: f64 = if absorbing { state.weights.iter().sum() } else { 0.0 };
        kernel.apply(&state.weights, &mut next, &mut scratch);
        if absorbing && before > 0.0 {
            let after: f64 = next.iter().sum();
            log_survival += (after / before).ln();
            if log_survival < MIN_SURVIVAL_LOG {
                return Err(Error::Underflow { survival: log_survival.exp() });
            }
        }
        std::mem::swap(&mut state.weights, &mut next);
        if params.beta != 0.0 {
            let slice = field.slice(k);
            let m = slice.iter().map(|v| params.beta * v).fold(f64::NEG_INFINITY, f64::max);
            for (w, v) in state.weights.iter_mut().zip(slice) {
                if *w != 0.0 {
                    *w *= (params.beta * v - m).exp();
                }
            }
            state.log_scale += m;
        }
        state.log_scale -= hook(k + 1, &mut state.weights);
        state.step = k + 1;
        state.renormalize();
        if let Some(s) = store.as_deref_mut() {
            s.extend_from_slice(&state.weights);
        }
        if let Some(t) = totals.as_deref_mut() {
            t.push(state.log_total());
        }
    }
    Ok((state, log_survival))
}

fn summarize(state: &TransferState, params: &PolymerParams, kernel: &WalkKernel, log_survival: f64) -> Partition {
    let log_z = state.log_total();
    let total: f64 = state.weights.iter().sum();
    let band = kernel.boundary_band(&params.grid);
    let edge: f64 = state.weights.iter().zip(&band).filter(|(_, b)| **b).map(|(w, _)| w).sum();
    Partition {
        log_z,
        log_w: log_z - 0.5 * params.beta * params.beta * params.time(),
        boundary_mass: if total > 0.0 { edge / total } else { 0.0 },
        absorbed: 1.0 - log_survival.exp(),
    }
}

pub fn log_partition(field: &SpaceTimeField, params: &PolymerParams) -> Result<Partition> {
    check_shapes(field, params)?;
    let kernel = params.kernel()?;
    log_partition_with(field, params, &kernel)
}

/// As [`log_partition`] with a prebuilt kernel.
pub fn log_partition_with(field: &SpaceTimeField, params: &PolymerParams, kernel: &WalkKernel) -> Result<Partition> {
    if params.beta == 0.0 && params.grid.boundary == Boundary::Reflecting {
        let (state, _) = run(field, params, kernel, |_, _| 0.0, None, None)?;
        let mut p = summarize(&state, params, kernel, 0.0);
        p.log_z = 0.0;
        p.log_w = 0.0;
        return Ok(p);
    }
    let (state, surv) = run(field, params, kernel, |_, _| 0.0, None, None)?;
    Ok(summarize(&state, params, kernel, surv))
}

/// `log Z` with the walk confined to the corridor's boxes; `-∞` when no
/// path survives.
pub fn restricted_log_partition(field: &SpaceTimeField, params: &PolymerParams, corridor: &CorridorSpec) -> Result<f64> {
    check_shapes(field, params)?;
    if corridor.boxes.len() != params.n_steps + 1 {
        return Err(invalid(format!(
            "corridor has {} entries, expected n + 1 = {}",
            corridor.boxes.len(),
            params.n_steps + 1
        )));
    }
    let kernel = params.kernel()?;
    let masks = corridor.masks(&params.grid)?;
    let mut dead = false;
    let (state, _) = run(
        field,
        params,
        &kernel,
        |k, w| {
            if let Some(m) = &masks[k] {
                w.iter_mut().zip(m).filter(|(_, keep)| !**keep).for_each(|(v, _)| *v = 0.0);
            }
            if w.iter().all(|v| *v == 0.0) {
                dead = true;
            }
            0.0
        },
        None,
        None,
    )?;
    if dead {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(state.log_total())
}

/// `log W` after each step listed in `checkpoints` (ascending, `≤ n`).
pub fn log_w_trajectory(
    field: &SpaceTimeField,
    params: &PolymerParams,
    kernel: &WalkKernel,
    checkpoints: &[usize],
) -> Result<Vec<f64>> {
    check_shapes(field, params)?;
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) || checkpoints.last().is_some_and(|&k| k > params.n_steps) {
        return Err(invalid("checkpoints must be strictly ascending and at most n"));
    }
    if params.beta == 0.0 && params.grid.boundary == Boundary::Reflecting {
        return Ok(vec![0.0; checkpoints.len()]);
    }
    let mut sub = params.clone();
    sub.n_steps = checkpoints.last().copied().unwrap_or(0);
    let mut totals = Vec::with_capacity(sub.n_steps + 1);
    run(field, &sub, kernel, |_, _| 0.0, None, Some(&mut totals))?;
    let half_b2 = 0.5 * params.beta * params.beta * params.dt;
    Ok(checkpoints.iter().map(|&k| totals[k] - half_b2 * k as f64).collect())
}

/// Stored forward states of one realization, enough for exact backward
/// sampling of Gibbs paths.
#[derive(Clone, Debug)]
pub struct ForwardPass {
    pub params: PolymerParams,
    pub kernel: WalkKernel,
    /// `(n+1) × sites` normalized forward weights.
    pub states: Vec<f64>,
    pub partition: Partition,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathSample {
    pub sites: Vec<usize>,
    pub log_density: f64,
}

impl ForwardPass {
    pub fn new(field: &SpaceTimeField, params: &PolymerParams) -> Result<Self> {
        check_shapes(field, params)?;
        let kernel = params.kernel()?;
        let mut states = Vec::with_capacity((params.n_steps + 1) * params.grid.len());
        let (state, surv) = run(field, params, &kernel, |_, _| 0.0, Some(&mut states), None)?;
        let partition = summarize(&state, params, &kernel, surv);
        Ok(ForwardPass { params: params.clone(), kernel, states, partition })
    }

    pub fn state(&self, k: usize) -> &[f64] {
        let s = self.params.grid.len();
        &self.states[k * s..(k + 1) * s]
    }

    /// Normalized law of the endpoint `B_n` under the polymer measure.
    pub fn endpoint_law(&self) -> Vec<f64> {
        let w = self.state(self.params.n_steps);
        let s: f64 = w.iter().sum();
        w.iter().map(|v| v / s).collect()
    }

    /// One exact draw from the lattice polymer measure.
    pub fn sample<R: Rng + ?Sized>(&self, field: &SpaceTimeField, rng: &mut R) -> PathSample {
        let n = self.params.n_steps;
        let mut sites = vec![0usize; n + 1];
        sites[n] = draw(&self.endpoint_law(), rng);
        let mut log_density = -self.partition.log_z;
        let mut cand = Vec::new();
        let mut probs = Vec::new();
        for k in (0..n).rev() {
            let y = sites[k + 1];
            self.predecessors(y, &mut cand);
            let w = self.state(k);
            probs.clear();
            probs.extend(cand.iter().map(|&(x, kxy)| w[x] * kxy));
            let x = cand[draw(&probs, rng)];
            sites[k] = x.0;
            log_density += x.1.ln() + self.params.beta * field.slice(k)[y];
        }
        debug_assert_eq!(sites[0], self.params.start());
        PathSample { sites, log_density }
    }

    /// Sites `x` with `K(x, y) > 0`, paired with `K(x, y)`.
    fn predecessors(&self, y: usize, out: &mut Vec<(usize, f64)>) {
        let side = self.kernel.side;
        out.clear();
        out.push((0, 1.0));
        let mut rest = y;
        let mut stride = 1usize;
        for _ in 0..self.params.grid.dimension {
            let j = rest % side;
            rest /= side;
            let prev = std::mem::take(out);
            // kernel symmetric: column j equals row j
            for (base, p) in prev {
                for (i, v) in self.kernel.axis_row(j) {
                    out.push((base + i * stride, p * v));
                }
            }
            stride *= side;
        }
    }
}

fn draw<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, w) in weights.iter().enumerate() {
        if *w > 0.0 {
            last = i;
            if u < *w {
                return i;
            }
            u -= w;
        }
    }
    last
}

/// `count` exact polymer paths; empty when `count == 0`.
pub fn sample_paths<R: Rng + ?Sized>(
    field: &SpaceTimeField,
    params: &PolymerParams,
    count: usize,
    rng: &mut R,
) -> Result<Vec<PathSample>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let pass = ForwardPass::new(field, params)?;
    Ok((0..count).map(|_| pass.sample(field, rng)).collect())
}

/// `(1/t)·Σ_{k=1..n} δ·Q(x¹_k − x²_k)`.
pub fn overlap(path1: &PathSample, path2: &PathSample, spec: &CovarianceSpec, params: &PolymerParams) -> Result<f64> {
    if path1.sites.len() != path2.sites.len() {
        return Err(invalid("paths have different lengths"));
    }
    let n = path1.sites.len().saturating_sub(1);
    if n == 0 {
        return Ok(0.0);
    }
    let g = &params.grid;
    let mut d = vec![0.0; g.dimension];
    let mut s = 0.0;
    for k in 1..=n {
        let (x, y) = (g.coords(path1.sites[k]), g.coords(path2.sites[k]));
        for i in 0..g.dimension {
            d[i] = (x[i] - y[i]) as f64 * g.spacing;
        }
        s += spec.eval(&d)?;
    }
    Ok(s / n as f64)
}

/// Monte Carlo mean of `(1/t)·log mean W^γ` with a delta-method SE.
#[derive(Clone, Debug, PartialEq)]
pub struct FractionalMoment {
    pub value: f64,
    pub se: f64,
    /// Largest single-realization share of `Σ W^γ`.
    pub max_share: f64,
    pub warnings: Vec<String>,
}

/// Build a synthesizer and evaluate `f` on every realization in parallel,
/// collecting results in realization order. Fields are keyed by
/// `(master_seed, realization)`.
pub(crate) fn per_realization_seeded<T, F>(
    spec: &CovarianceSpec,
    params: &PolymerParams,
    realizations: usize,
    master_seed: u64,
    f: F,
) -> Result<(Vec<T>, Vec<String>)>
where
    T: Send,
    F: Fn(u64, &SpaceTimeField) -> Result<T> + Sync,
{
    let synth = FieldSynthesizer::new(spec, &params.grid, params.dt)?;
    let out: Result<Vec<T>> = (0..realizations as u64)
        .into_par_iter()
        .map(|r| {
            let field = synth.sample_field(params.n_steps, master_seed, r);
            f(r, &field)
        })
        .collect();
    Ok((out?, synth.warnings().to_vec()))
}

pub fn fractional_moment_estimate(
    spec: &CovarianceSpec,
    params: &PolymerParams,
    gamma: f64,
    realizations: usize,
    master_seed: u64,
) -> Result<FractionalMoment> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    if realizations < 2 {
        return Err(invalid("fractional moment needs at least 2 realizations"));
    }
    if params.beta == 0.0 && params.grid.boundary == Boundary::Reflecting {
        return Ok(FractionalMoment { value: 0.0, se: 0.0, max_share: 1.0 / realizations as f64, warnings: vec![] });
    }
    let kernel = params.kernel()?;
    let (logs, mut warnings) = per_realization_seeded(spec, params, realizations, master_seed, |_, field| {
        Ok(gamma * log_partition_with(field, params, &kernel)?.log_w)
    })?;
    let t = params.time();
    let (log_mean, rel_se, max_share) = stats::log_mean_exp(&logs);
    if max_share > 0.5 {
        warnings.push(format!("fractional moment: top realization carries {:.0}% of the sum", 100.0 * max_share));
    }
    Ok(FractionalMoment { value: log_mean / t, se: rel_se / t, max_share, warnings })
}

/// Disorder-mean of `log μ_t(exp(λ·B_r¹ − r·log m(λ)))` where `m` is the
/// kernel's one-step moment generating function (the lattice counterpart of
/// `exp(rλ²δ/2)`).
#[derive(Clone, Debug, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub se: f64,
    pub warnings: Vec<String>,
}

pub fn girsanov_diagnostic(
    spec: &CovarianceSpec,
    params: &PolymerParams,
    lambda: f64,
    r_step: usize,
    realizations: usize,
    master_seed: u64,
) -> Result<MeanEstimate> {
    if r_step > params.n_steps {
        return Err(invalid(format!("r_step {r_step} exceeds n = {}", params.n_steps)));
    }
    if realizations < 2 {
        return Err(invalid("girsanov diagnostic needs at least 2 realizations"));
    }
    let mut warnings = Vec::new();
    if lambda.abs() * (r_step as f64 * params.dt).sqrt() > 6.0 {
        warnings.push(format!("girsanov: λ·√(rδ) = {:.2} > 6, reweighting is boundary dominated", lambda.abs() * (r_step as f64 * params.dt).sqrt()));
    }
    if lambda == 0.0 || r_step == 0 {
        return Ok(MeanEstimate { mean: 0.0, se: 0.0, warnings });
    }
    let kernel = params.kernel()?;
    let grid = &params.grid;
    let first: Vec<f64> = (0..grid.len()).map(|i| grid.position(i)[0]).collect();
    let xmax = grid.extent();
    let norm = r_step as f64 * kernel.log_mgf(lambda);
    let one = |field: &SpaceTimeField| -> Result<f64> {
        let (base, _) = run(field, params, &kernel, |_, _| 0.0, None, None)?;
        let (tilted, _) = run(
            field,
            params,
            &kernel,
            |k, w| {
                if k == r_step {
                    let shift = lambda.abs() * xmax;
                    for (v, x) in w.iter_mut().zip(&first) {
                        *v *= (lambda * x - shift).exp();
                    }
                    -shift
                } else {
                    0.0
                }
            },
            None,
            None,
        )?;
        Ok(tilted.log_total() - base.log_total() - norm)
    };
    let (vals, w) = per_realization_seeded(spec, params, realizations, master_seed, |_, f| one(f))?;
    warnings.extend(w);
    let (mean, se) = stats::mean_se(&vals);
    Ok(MeanEstimate { mean, se, warnings })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SecondMoment {
    pub mc_value: f64,
    pub pinning_value: f64,
    pub combined_se: f64,
    pub max_share: f64,
    pub heavy_tail: bool,
    pub warnings: Vec<String>,
}

/// `(1/t)·log mean W_t²` against the deterministic two-replica value
/// `(1/t)·log Y_t` for the difference walk `(B¹ − B²)/√2` pinned by
/// `V(x) = Q(√2·x)` at `h = β²`.
pub fn second_moment_check(
    spec: &CovarianceSpec,
    params: &PolymerParams,
    realizations: usize,
    master_seed: u64,
) -> Result<SecondMoment> {
    if realizations < 2 {
        return Err(invalid("second-moment check needs at least 2 realizations"));
    }
    let pinning_value = second_moment_pinning_value(spec, params)?;
    if params.beta == 0.0 && params.grid.boundary == Boundary::Reflecting {
        return Ok(SecondMoment {
            mc_value: 0.0,
            pinning_value,
            combined_se: 0.0,
            max_share: 1.0 / realizations as f64,
            heavy_tail: false,
            warnings: vec![],
        });
    }
    let kernel = params.kernel()?;
    let (logs, mut warnings) = per_realization_seeded(spec, params, realizations, master_seed, |_, field| {
        Ok(2.0 * log_partition_with(field, params, &kernel)?.log_w)
    })?;
    let t = params.time();
    let (log_mean, rel_se, max_share) = stats::log_mean_exp(&logs);
    let heavy_tail = max_share > 0.5;
    if heavy_tail {
        warnings.push(format!("second moment: top realization carries {:.0}% of Σ W², estimate unreliable", 100.0 * max_share));
    }
    Ok(SecondMoment { mc_value: log_mean / t, pinning_value, combined_se: rel_se / t, max_share, heavy_tail, warnings })
}

/// Deterministic side of [`second_moment_check`]: grid spacing `a/√2`,
/// `2L` sites per half-axis, same `δ` and cutoff.
pub fn second_moment_pinning_value(spec: &CovarianceSpec, params: &PolymerParams) -> Result<f64> {
    let t = params.time();
    if params.beta == 0.0 || params.n_steps == 0 {
        return Ok(0.0);
    }
    let grid = Grid::new(
        params.grid.dimension,
        2 * params.grid.half_width,
        params.grid.spacing / 2f64.sqrt(),
        params.grid.boundary,
    )?;
    let potential = PotentialSpec::scaled_covariance(spec.clone(), 2f64.sqrt())?;
    let log_y = pinning::log_partition(&potential, params.beta * params.beta, &grid, params.dt, params.n_steps, params.kernel_cutoff)?;
    Ok(log_y / t)
}

/// Parameters of one path-sampling batch stream.
pub(crate) fn path_stream(master_seed: u64, realization: u64, batch: u64) -> crate::rng::StreamRng {
    stream(master_seed, Purpose::PathSampling, realization, batch)
}
