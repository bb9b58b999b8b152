//! Lattice realizations of the space-time environment.
//!
//! A field is a stack of `n` independent slices; slice `k` holds the
//! increments of the environment over the time step `[kδ, (k+1)δ)` at every
//! site, a centered Gaussian vector with covariance `δ·Q(x - y)`. Slices are
//! synthesized by circulant embedding on a torus padded by (at least) a factor
//! two per axis.

use std::io::{Read, Write};
use std::ops::Range;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::covariance::{torus_row, CovarianceSpec, Family};
use crate::error::{invalid, Error, Result};
use crate::grid::{Boundary, Grid, SiteBox};
use crate::rng::{stream, Purpose};

/// Relative L1 negative spectral mass above which synthesis fails.
pub const CLIP_LIMIT: f64 = 1e-4;
/// Relative negative mass below which clipping is silent.
pub const CLIP_SILENT: f64 = 1e-12;
/// Largest torus (in entries) tried when escalating the pad factor.
pub const MAX_TORUS: usize = 1 << 24;

/// Precomputed circulant embedding for one `(Q, grid, δ)` triple.
pub struct FieldSynthesizer {
    grid: Grid,
    dt: f64,
    torus: Vec<usize>,
    /// `sqrt(λ_k · δ / M)` for each torus frequency.
    amplitudes: Vec<f64>,
    eigenvalues: Vec<f64>,
    ffts: Vec<Arc<dyn Fft<f64>>>,
    clipped: f64,
    warnings: Vec<String>,
}

impl std::fmt::Debug for FieldSynthesizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FieldSynthesizer")
            .field("grid", &self.grid)
            .field("dt", &self.dt)
            .field("torus", &self.torus)
            .field("clipped", &self.clipped)
            .finish()
    }
}

impl FieldSynthesizer {
    /// Pad factor 2, raised to 3 and then 4 when the smaller torus leaves
    /// more than [`CLIP_LIMIT`] negative mass (and the torus stays under
    /// [`MAX_TORUS`] entries).
    pub fn new(spec: &CovarianceSpec, grid: &Grid, dt: f64) -> Result<Self> {
        let mut result = Self::with_pad(spec, grid, dt, 2);
        for pad in [3usize, 4] {
            match result {
                Err(Error::Synthesis { .. }) if (pad * grid.side()).pow(grid.dimension as u32) <= MAX_TORUS => {
                    result = Self::with_pad(spec, grid, dt, pad);
                }
                _ => break,
            }
        }
        result
    }

    pub fn with_pad(spec: &CovarianceSpec, grid: &Grid, dt: f64, pad: usize) -> Result<Self> {
        if !spec.usable_as_covariance() {
            return Err(invalid("covariance family cannot be used to synthesize a Gaussian field"));
        }
        if spec.dimension != grid.dimension {
            return Err(Error::DimensionMismatch { expected: spec.dimension, got: grid.dimension });
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("time step must be positive, got {dt}")));
        }
        if pad < 2 {
            return Err(invalid("embedding pad factor must be at least 2"));
        }
        let m = pad * grid.side();
        let torus = vec![m; grid.dimension];
        let total: usize = torus.iter().product();

        let row = torus_row(spec, &torus, grid.spacing);
        let mut planner = FftPlanner::new();
        let ffts: Vec<_> = torus.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let mut buf: Vec<Complex<f64>> = row.iter().map(|&c| Complex::new(c, 0.0)).collect();
        fft_nd(&mut buf, &torus, &ffts);
        let mut eigenvalues: Vec<f64> = buf.iter().map(|z| z.re).collect();

        let l1: f64 = eigenvalues.iter().map(|v| v.abs()).sum();
        let negative: f64 = eigenvalues.iter().filter(|v| **v < 0.0).map(|v| -v).sum();
        let clipped = negative / l1 + 0.0;
        let mut warnings = Vec::new();
        if clipped > CLIP_LIMIT {
            return Err(Error::Synthesis { clipped, limit: CLIP_LIMIT });
        }
        if negative > 0.0 {
            for v in eigenvalues.iter_mut() {
                *v = v.max(0.0);
            }
            if clipped > CLIP_SILENT {
                // restore Q(0) = mean eigenvalue
                let mean = eigenvalues.iter().sum::<f64>() / total as f64;
                let scale = row[0] / mean;
                for v in eigenvalues.iter_mut() {
                    *v *= scale;
                }
                warnings.push(format!(
                    "circulant embedding clipped relative negative spectral mass {clipped:.3e} (torus {m}^{})",
                    grid.dimension
                ));
            }
        }
        let amplitudes = eigenvalues.iter().map(|&l| (l * dt / total as f64).sqrt()).collect();
        Ok(FieldSynthesizer { grid: grid.clone(), dt, torus, amplitudes, eigenvalues, ffts, clipped, warnings })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Torus eigenvalues of the embedded covariance row (after any clipping).
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Relative L1 weight of the negative part of the raw spectrum.
    pub fn clipped_mass(&self) -> f64 {
        self.clipped
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// One slice over the grid sites.
    pub fn sample_slice<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = self
            .amplitudes
            .iter()
            .map(|&a| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex::new(a * re, a * im)
            })
            .collect();
        fft_nd(&mut buf, &self.torus, &self.ffts);
        self.window(&buf)
    }

    /// Realization `realization` of a field with `n_steps` slices; slice `k`
    /// is drawn from its own stream keyed by `(master_seed, realization, k)`.
    pub fn sample_field(&self, n_steps: usize, master_seed: u64, realization: u64) -> SpaceTimeField {
        let sites = self.grid.len();
        let mut values = Vec::with_capacity(n_steps * sites);
        for k in 0..n_steps {
            let mut rng = stream(master_seed, Purpose::FieldSlice, realization, k as u64);
            values.extend(self.sample_slice(&mut rng));
        }
        SpaceTimeField { grid: self.grid.clone(), n_steps, dt: self.dt, values }
    }

    fn window(&self, buf: &[Complex<f64>]) -> Vec<f64> {
        let d = self.grid.dimension;
        let side = self.grid.side();
        let mut out = Vec::with_capacity(self.grid.len());
        let mut idx = vec![0usize; d];
        for _ in 0..self.grid.len() {
            let mut t = 0usize;
            for (axis, &i) in idx.iter().enumerate() {
                t = t * self.torus[axis] + i;
            }
            out.push(buf[t].re);
            for axis in (0..d).rev() {
                idx[axis] += 1;
                if idx[axis] < side {
                    break;
                }
                idx[axis] = 0;
            }
        }
        out
    }
}

/// In-place unnormalized forward DFT over every axis of a row-major array.
fn fft_nd(buf: &mut [Complex<f64>], sides: &[usize], ffts: &[Arc<dyn Fft<f64>>]) {
    let total = buf.len();
    let mut stride = 1usize;
    let mut scratch = Vec::new();
    for axis in (0..sides.len()).rev() {
        let n = sides[axis];
        let fft = &ffts[axis];
        if stride == 1 {
            fft.process(buf);
        } else {
            scratch.resize(n, Complex::new(0.0, 0.0));
            let block = n * stride;
            for base in (0..total).step_by(block) {
                for offset in 0..stride {
                    for (i, s) in scratch.iter_mut().enumerate() {
                        *s = buf[base + offset + i * stride];
                    }
                    fft.process(&mut scratch);
                    for (i, s) in scratch.iter().enumerate() {
                        buf[base + offset + i * stride] = *s;
                    }
                }
            }
        }
        stride *= n;
    }
}

/// `n` slices over a grid, stored slice-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeField {
    pub grid: Grid,
    pub n_steps: usize,
    pub dt: f64,
    pub values: Vec<f64>,
}

impl SpaceTimeField {
    pub fn zeros(grid: &Grid, n_steps: usize, dt: f64) -> Self {
        SpaceTimeField { grid: grid.clone(), n_steps, dt, values: vec![0.0; n_steps * grid.len()] }
    }

    pub fn slice(&self, k: usize) -> &[f64] {
        let s = self.grid.len();
        &self.values[k * s..(k + 1) * s]
    }

    pub fn slice_mut(&mut self, k: usize) -> &mut [f64] {
        let s = self.grid.len();
        &mut self.values[k * s..(k + 1) * s]
    }

    pub fn time(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }
}

/// One slice drawn from `rng`.
pub fn sample_slice<R: Rng + ?Sized>(spec: &CovarianceSpec, grid: &Grid, dt: f64, rng: &mut R) -> Result<Vec<f64>> {
    Ok(FieldSynthesizer::new(spec, grid, dt)?.sample_slice(rng))
}

pub fn sample_field(
    spec: &CovarianceSpec,
    grid: &Grid,
    n_steps: usize,
    dt: f64,
    master_seed: u64,
    realization: u64,
) -> Result<SpaceTimeField> {
    Ok(FieldSynthesizer::new(spec, grid, dt)?.sample_field(n_steps, master_seed, realization))
}

/// Space-time block `[k0, k1) × box` over which the environment is averaged.
#[derive(Clone, Debug, PartialEq)]
pub struct TiltRegion {
    pub steps: Range<usize>,
    pub sites: SiteBox,
}

impl TiltRegion {
    pub fn new(steps: Range<usize>, sites: SiteBox) -> Result<Self> {
        if steps.is_empty() {
            return Err(invalid("tilt region has an empty step range"));
        }
        Ok(TiltRegion { steps, sites })
    }
}

/// Mean shift `Cov(Ω, ω_k(x))` induced by the standardized block average `Ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct TiltShift {
    pub steps: Range<usize>,
    /// Shift at each site for a step inside the range.
    pub profile: Vec<f64>,
    /// `sqrt(|steps|·δ·a^{2d}·Σ_{x,y∈box} Q(x-y))`.
    pub normalizer: f64,
    pub cell_volume: f64,
    pub mask: Vec<bool>,
}

impl TiltShift {
    pub fn at(&self, step: usize, site: usize) -> f64 {
        if self.steps.contains(&step) {
            self.profile[site]
        } else {
            0.0
        }
    }
}

pub fn compute_tilt_shift(spec: &CovarianceSpec, grid: &Grid, region: &TiltRegion, dt: f64) -> Result<TiltShift> {
    if region.steps.is_empty() || region.sites.count() == 0 {
        return Err(invalid("empty tilt region"));
    }
    if !region.sites.fits(grid) {
        return Err(invalid("tilt box does not fit inside the grid"));
    }
    if spec.dimension != grid.dimension {
        return Err(Error::DimensionMismatch { expected: spec.dimension, got: grid.dimension });
    }
    let box_sites = region.sites.sites(grid);
    let positions: Vec<Vec<f64>> = (0..grid.len()).map(|i| grid.position(i)).collect();
    let cell = grid.spacing.powi(grid.dimension as i32);
    let q = |x: &[f64], y: &[f64]| -> f64 {
        let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        spec.eval_radius(r2.sqrt())
    };
    let mut double = 0.0;
    for &x in &box_sites {
        for &y in &box_sites {
            double += q(&positions[x], &positions[y]);
        }
    }
    let n = region.steps.len() as f64;
    let normalizer = (n * dt * cell * cell * double).sqrt();
    let profile = positions
        .iter()
        .map(|x| {
            let s: f64 = box_sites.iter().map(|&y| q(x, &positions[y])).sum();
            dt * cell * s / normalizer
        })
        .collect();
    Ok(TiltShift { steps: region.steps.clone(), profile, normalizer, cell_volume: cell, mask: region.sites.mask(grid) })
}

/// Coupled field `ω̂ = ω + sign·shift`. With `sign = -1` the output of a
/// `P`-distributed input has the law tilted by `exp(-Ω - 1/2)`; covariances
/// are unchanged.
pub fn tilt_field(field: &SpaceTimeField, shift: &TiltShift, sign: f64) -> Result<SpaceTimeField> {
    if shift.profile.len() != field.grid.len() || shift.steps.end > field.n_steps {
        return Err(invalid("tilt shift does not match the field"));
    }
    let mut out = field.clone();
    for k in shift.steps.clone() {
        for (v, s) in out.slice_mut(k).iter_mut().zip(&shift.profile) {
            *v += sign * s;
        }
    }
    Ok(out)
}

/// The standardized block average `Ω` of a field realization.
pub fn lattice_omega(field: &SpaceTimeField, shift: &TiltShift) -> f64 {
    let mut s = 0.0;
    for k in shift.steps.clone() {
        s += field.slice(k).iter().zip(&shift.mask).filter(|(_, m)| **m).map(|(v, _)| v).sum::<f64>();
    }
    s * shift.cell_volume / shift.normalizer
}

const DUMP_MAGIC: &[u8; 8] = b"CPFIELD1";

/// Binary dump: magic, header, then slices in row-major site order, all
/// little-endian.
///
/// ```text
/// magic      8 bytes  "CPFIELD1"
/// d          u32
/// L          u32
/// a          f64
/// n          u64
/// dt         f64
/// seed       u64
/// boundary   u8   (0 reflecting, 1 absorbing)
/// family     u8   (0 generalized-cauchy, 1 indicator-ball, 2 tabulated)
/// theta      f64
/// ell        f64
/// table_len  u64, table_step f64, table values f64 × table_len  (tabulated only)
/// values     f64 × n·(2L+1)^d
/// ```
pub fn write_dump<W: Write>(out: &mut W, field: &SpaceTimeField, spec: &CovarianceSpec, seed: u64) -> std::io::Result<()> {
    let g = &field.grid;
    out.write_all(DUMP_MAGIC)?;
    out.write_all(&(g.dimension as u32).to_le_bytes())?;
    out.write_all(&(g.half_width as u32).to_le_bytes())?;
    out.write_all(&g.spacing.to_le_bytes())?;
    out.write_all(&(field.n_steps as u64).to_le_bytes())?;
    out.write_all(&field.dt.to_le_bytes())?;
    out.write_all(&seed.to_le_bytes())?;
    out.write_all(&[match g.boundary {
        Boundary::Reflecting => 0u8,
        Boundary::Absorbing => 1u8,
    }])?;
    let code = match spec.family {
        Family::GeneralizedCauchy => 0u8,
        Family::IndicatorBall => 1,
        Family::Tabulated { .. } => 2,
    };
    out.write_all(&[code])?;
    out.write_all(&spec.theta.to_le_bytes())?;
    out.write_all(&spec.length_scale.to_le_bytes())?;
    if let Family::Tabulated { step, values } = &spec.family {
        out.write_all(&(values.len() as u64).to_le_bytes())?;
        out.write_all(&step.to_le_bytes())?;
        for v in values {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    for v in &field.values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Inverse of [`write_dump`]: returns the field, its covariance spec and seed.
pub fn read_dump<R: Read>(input: &mut R) -> std::io::Result<(SpaceTimeField, CovarianceSpec, u64)> {
    use std::io::{Error as IoError, ErrorKind};
    fn bytes<R: Read, const N: usize>(r: &mut R) -> std::io::Result<[u8; N]> {
        let mut b = [0u8; N];
        r.read_exact(&mut b)?;
        Ok(b)
    }
    let bad = |m: &str| IoError::new(ErrorKind::InvalidData, m.to_string());
    if &bytes::<_, 8>(input)? != DUMP_MAGIC {
        return Err(bad("not a field dump"));
    }
    let d = u32::from_le_bytes(bytes(input)?) as usize;
    let l = u32::from_le_bytes(bytes(input)?) as usize;
    let a = f64::from_le_bytes(bytes(input)?);
    let n = u64::from_le_bytes(bytes(input)?) as usize;
    let dt = f64::from_le_bytes(bytes(input)?);
    let seed = u64::from_le_bytes(bytes(input)?);
    let boundary = match bytes::<_, 1>(input)?[0] {
        0 => Boundary::Reflecting,
        1 => Boundary::Absorbing,
        _ => return Err(bad("bad boundary code")),
    };
    let code = bytes::<_, 1>(input)?[0];
    let theta = f64::from_le_bytes(bytes(input)?);
    let ell = f64::from_le_bytes(bytes(input)?);
    let family = match code {
        0 => Family::GeneralizedCauchy,
        1 => Family::IndicatorBall,
        2 => {
            let len = u64::from_le_bytes(bytes(input)?) as usize;
            let step = f64::from_le_bytes(bytes(input)?);
            let mut values = Vec::with_capacity(len);
            for _ in 0..len {
                values.push(f64::from_le_bytes(bytes(input)?));
            }
            Family::Tabulated { step, values }
        }
        _ => return Err(bad("bad family code")),
    };
    let grid = Grid::new(d, l, a, boundary).map_err(|e| bad(&e.to_string()))?;
    let spec = CovarianceSpec { family, theta, dimension: d, length_scale: ell };
    let mut values = Vec::with_capacity(n * grid.len());
    for _ in 0..n * grid.len() {
        values.push(f64::from_le_bytes(bytes(input)?));
    }
    Ok((SpaceTimeField { grid, n_steps: n, dt, values }, spec, seed))
}
