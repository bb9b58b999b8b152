//! Built-in oracle suite: each check compares a production routine against
//! an independent computation (exhaustive sums, dense eigensolves, direct
//! transforms, closed forms).

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::covariance::{covariance_matrix, covariance_row, torus_row, CovarianceSpec};
use crate::estimators::{fit_exponent_with, EstimateSeries, Transform};
use crate::field::{compute_tilt_shift, lattice_omega, SpaceTimeField, TiltRegion};
use crate::grid::{Boundary, Grid, SiteBox};
use crate::pinning::{self, PotentialSpec};
use crate::polymer::{self, CorridorSpec, ForwardPass, PolymerParams};
use crate::rng::{stream, Purpose};
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Largest observed discrepancy (or the statistic being bounded).
    pub error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: &str, error: f64, tolerance: f64) -> Self {
        Check { name: name.to_string(), error, tolerance, passed: error.is_finite() && error <= tolerance }
    }
}

/// Run every oracle. Deterministic for a given `seed`.
pub fn run_all(seed: u64) -> Result<Vec<Check>> {
    Ok(vec![
        enumeration(seed)?,
        corridor_additivity(seed)?,
        stay_probability()?,
        sampler_marginals(seed)?,
        kernel_summation()?,
        dense_eigensolve()?,
        square_well()?,
        covariance_psd(seed)?,
        covariance_row_dense()?,
        torus_spectrum()?,
        tilt_normalization()?,
        exact_fit()?,
    ])
}

/// One-axis transition matrix from Gaussian weights and half-sample
/// reflection, built without the production kernel.
fn oracle_matrix(side: usize, a: f64, dt: f64, cutoff: f64) -> Vec<Vec<f64>> {
    let r = (cutoff * dt.sqrt() / a + 1e-12).floor() as i64;
    let w: Vec<f64> = (-r..=r).map(|j| (-(j as f64 * a).powi(2) / (2.0 * dt)).exp()).collect();
    let z: f64 = w.iter().sum();
    let n = side as i64;
    let mut m = vec![vec![0.0; side]; side];
    for i in 0..n {
        for (k, wk) in w.iter().enumerate() {
            let mut p = i + k as i64 - r;
            while p < 0 || p >= n {
                p = if p < 0 { -1 - p } else { 2 * n - 1 - p };
            }
            m[i as usize][p as usize] += wk / z;
        }
    }
    m
}

/// Weighted sum over all `sites^n` paths from `start`; `allow(step, site)`
/// filters paths.
fn enumerate(field: &SpaceTimeField, k: &[Vec<f64>], beta: f64, start: usize, allow: &dyn Fn(usize, usize) -> bool) -> f64 {
    let sites = k.len();
    let n = field.n_steps;
    let mut path = vec![0usize; n];
    let mut total = 0.0;
    for code in 0..sites.pow(n as u32) {
        let mut c = code;
        for p in path.iter_mut() {
            *p = c % sites;
            c /= sites;
        }
        let mut w = 1.0;
        let mut prev = start;
        for (step, &x) in path.iter().enumerate() {
            if !allow(step + 1, x) {
                w = 0.0;
                break;
            }
            w *= k[prev][x] * (beta * field.slice(step)[x]).exp();
            prev = x;
        }
        total += w;
    }
    total
}

fn random_field(grid: &Grid, n: usize, seed: u64, index: u64) -> SpaceTimeField {
    let mut f = SpaceTimeField::zeros(grid, n, 1.0);
    let mut rng = stream(seed, Purpose::Auxiliary, 1, index);
    for v in f.values.iter_mut() {
        *v = rng.sample::<f64, _>(StandardNormal);
    }
    f
}

fn small_grid() -> Result<Grid> {
    Grid::new(1, 3, 1.0, Boundary::Reflecting)
}

fn enumeration(seed: u64) -> Result<Check> {
    let grid = small_grid()?;
    let k = oracle_matrix(7, 1.0, 1.0, 4.0);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let field = random_field(&grid, 4, seed, i);
        for beta in [0.0, 0.5, 2.0] {
            let p = PolymerParams::new(beta, 4, 1.0, grid.clone())?;
            let got = polymer::log_partition(&field, &p)?.log_z;
            let want = enumerate(&field, &k, beta, 3, &|_, _| true).ln();
            worst = worst.max((got - want).abs());
        }
    }
    Ok(Check::new("transfer log Z vs exhaustive enumeration (n=4, 7 sites)", worst, 1e-10))
}

fn corridor_additivity(seed: u64) -> Result<Check> {
    let grid = small_grid()?;
    let k = oracle_matrix(7, 1.0, 1.0, 4.0);
    let mut worst: f64 = 0.0;
    for i in 0..5 {
        let field = random_field(&grid, 4, seed, 100 + i);
        let p = PolymerParams::new(0.9, 4, 1.0, grid.clone())?;
        let full = polymer::log_partition(&field, &p)?.log_z;
        let mut parts = Vec::new();
        for (lo, hi) in [(-3, -2), (-1, 0), (1, 1), (2, 3)] {
            let mut c = CorridorSpec::unrestricted(4);
            c.boxes[4] = Some(SiteBox::new(vec![lo], vec![hi])?);
            parts.push(polymer::restricted_log_partition(&field, &p, &c)?);
        }
        let m = parts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + parts.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
        worst = worst.max((lse - full).abs());
        let c = CorridorSpec::second_half(4, SiteBox::new(vec![-1], vec![2])?);
        let got = polymer::restricted_log_partition(&field, &p, &c)?;
        let want = enumerate(&field, &k, 0.9, 3, &|s, x| s < 2 || (2..=5).contains(&x)).ln();
        worst = worst.max((got - want).abs());
    }
    Ok(Check::new("corridor partition additivity and enumeration", worst, 1e-10))
}

fn stay_probability() -> Result<Check> {
    let grid = Grid::new(1, 5, 1.0, Boundary::Reflecting)?;
    let k = oracle_matrix(11, 1.0, 1.0, 4.0);
    let n = 6;
    let field = SpaceTimeField::zeros(&grid, n, 1.0);
    let p = PolymerParams::new(0.0, n, 1.0, grid)?;
    let c = CorridorSpec::everywhere(n, SiteBox::new(vec![-2], vec![1])?);
    let got = polymer::restricted_log_partition(&field, &p, &c)?.exp();
    let mut v = vec![0.0; 11];
    v[5] = 1.0;
    for _ in 0..n {
        let mut w = vec![0.0; 11];
        for (i, vi) in v.iter().enumerate() {
            for j in 0..11 {
                w[j] += vi * k[i][j];
            }
        }
        for (j, x) in w.iter_mut().enumerate() {
            if !(3..=6).contains(&j) {
                *x = 0.0;
            }
        }
        v = w;
    }
    let want: f64 = v.iter().sum();
    Ok(Check::new("zero-beta corridor equals stay probability (relative)", (got / want - 1.0).abs(), 1e-12))
}

fn sampler_marginals(seed: u64) -> Result<Check> {
    let grid = small_grid()?;
    let k = oracle_matrix(7, 1.0, 1.0, 4.0);
    let field = random_field(&grid, 4, seed, 200);
    let p = PolymerParams::new(1.0, 4, 1.0, grid)?;
    let pass = ForwardPass::new(&field, &p)?;
    let mut rng = stream(seed, Purpose::PathSampling, u64::MAX, 0);
    let n = 100_000;
    let mut counts = [[0usize; 7]; 5];
    for _ in 0..n {
        let s = pass.sample(&field, &mut rng);
        for (step, &x) in s.sites.iter().enumerate() {
            counts[step][x] += 1;
        }
    }
    let z = enumerate(&field, &k, 1.0, 3, &|_, _| true);
    let mut worst: f64 = 0.0;
    for step in 1..=4 {
        let mut tv = 0.0;
        for x in 0..7 {
            let m = enumerate(&field, &k, 1.0, 3, &|s, y| s != step || y == x) / z;
            tv += (m - counts[step][x] as f64 / n as f64).abs();
        }
        worst = worst.max(0.5 * tv);
    }
    Ok(Check::new("Gibbs sampler marginals, total variation at 1e5 samples", worst, 0.02))
}

fn kernel_summation() -> Result<Check> {
    let grid = Grid::new(1, 10, 1.0, Boundary::Reflecting)?;
    let kernel = polymer::walk_kernel(&grid, 1.0, 4.0)?;
    let w = kernel.weights();
    let r = kernel.radius() as i64;
    let var: f64 = w.iter().zip(-r..=r).map(|(w, j)| w * (j * j) as f64).sum();
    let asym = (0..w.len()).map(|j| (w[j] - w[w.len() - 1 - j]).abs()).fold(0.0, f64::max);
    let sum = (w.iter().sum::<f64>() - 1.0).abs();
    Ok(Check::new("walk kernel symmetric, normalized, variance within 1% of dt", (var - 1.0).abs().max(asym * 100.0).max(sum * 100.0), 0.01))
}

fn dense_eigensolve() -> Result<Check> {
    let grid = Grid::new(1, 16, 0.25, Boundary::Absorbing)?;
    let v = PotentialSpec::power_law(0.5, 1.0, 1)?;
    let h = 0.3;
    let vals = v.site_values(&grid)?;
    let m = 2 * 16 - 1;
    let dense = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            -16.0 + h * vals[i + 1]
        } else if i.abs_diff(j) == 1 {
            8.0
        } else {
            0.0
        }
    });
    let want = dense.symmetric_eigen().eigenvalues.max();
    let got = pinning::principal_eigenvalue(&v, h, &grid)?.f_estimate;
    Ok(Check::new("principal eigenvalue vs dense diagonalization (31 sites)", (got - want).abs(), 1e-9))
}

/// Bound state of the unit square well of depth `h` by bisection on
/// `k·tan k = κ`.
pub fn square_well_eigenvalue(h: f64) -> f64 {
    let g = |l: f64| {
        let k = (2.0 * (h - l)).sqrt();
        k * k.tan() - (2.0 * l).sqrt()
    };
    let (mut a, mut b) = (1e-300, h * (1.0 - 1e-15));
    for _ in 0..300 {
        let m = 0.5 * (a + b);
        if g(a) * g(m) <= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

fn square_well() -> Result<Check> {
    let v = PotentialSpec::indicator_ball(1.0, 1)?;
    let grid = Grid::new(1, 2000, 0.1, Boundary::Absorbing)?;
    let got = pinning::principal_eigenvalue(&v, 0.1, &grid)?.f_estimate;
    let want = square_well_eigenvalue(0.1);
    Ok(Check::new("square well h=0.1 vs transcendental equation (relative)", (got / want - 1.0).abs(), 1e-3))
}

fn covariance_psd(seed: u64) -> Result<Check> {
    let spec = CovarianceSpec::generalized_cauchy(1.0, 2)?;
    let mut rng = stream(seed, Purpose::Auxiliary, 2, 0);
    let pts: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)]).collect();
    let m = covariance_matrix(&spec, &pts)?;
    let dense = DMatrix::from_fn(30, 30, |i, j| m[i][j]);
    let min = dense.symmetric_eigen().eigenvalues.min();
    Ok(Check::new("covariance matrix of 30 random points is PSD (-min eigenvalue)", (-min).max(0.0), 1e-10))
}

fn covariance_row_dense() -> Result<Check> {
    let spec = CovarianceSpec::generalized_cauchy(2.0, 1)?;
    let grid = Grid::new(1, 2, 1.0, Boundary::Reflecting)?;
    let row = covariance_row(&spec, &grid)?;
    // torus order 0, 1, 2, -2, -1 against the dense matrix of those offsets
    let pts: Vec<Vec<f64>> = [0.0, 1.0, 2.0, -2.0, -1.0].iter().map(|&x| vec![x]).collect();
    let dense = covariance_matrix(&spec, &pts)?;
    let err = row.iter().zip(&dense[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(Check::new("covariance row vs dense first row (5 sites)", err, 1e-14))
}

fn torus_spectrum() -> Result<Check> {
    let spec = CovarianceSpec::generalized_cauchy(2.0, 1)?;
    let m = 2 * 17;
    let row = torus_row(&spec, &[m], 1.0);
    let eig: Vec<f64> = (0..m)
        .map(|j| (0..m).map(|k| row[k] * (2.0 * std::f64::consts::PI * (j * k) as f64 / m as f64).cos()).sum())
        .collect();
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(Check::new("embedded torus spectrum, theta=2, L=8 (-min/max)", (-min / max).max(0.0), 1e-10))
}

fn tilt_normalization() -> Result<Check> {
    let spec = CovarianceSpec::generalized_cauchy(1.0, 2)?;
    let grid = Grid::new(2, 4, 0.5, Boundary::Reflecting)?;
    let region = TiltRegion::new(1..4, SiteBox::new(vec![-1, 0], vec![2, 1])?)?;
    let dt = 0.3;
    let shift = compute_tilt_shift(&spec, &grid, &region, dt)?;
    // Var Ω by the direct double sum over (step, site) pairs
    let sites = region.sites.sites(&grid);
    let mut double = 0.0;
    for &x in &sites {
        for &y in &sites {
            let (px, py) = (grid.position(x), grid.position(y));
            let d: Vec<f64> = px.iter().zip(&py).map(|(a, b)| a - b).collect();
            double += spec.eval(&d)?;
        }
    }
    let c = shift.cell_volume / shift.normalizer;
    let var = 3.0 * dt * c * c * double;
    // Ω applied to the shift itself is also Var Ω
    let mut s = SpaceTimeField::zeros(&grid, 5, dt);
    for k in 0..5 {
        for x in 0..grid.len() {
            s.slice_mut(k)[x] = shift.at(k, x);
        }
    }
    let err = (var - 1.0).abs().max((lattice_omega(&s, &shift) - 1.0).abs());
    Ok(Check::new("tilted block average has unit variance", err, 1e-12))
}

fn exact_fit() -> Result<Check> {
    let x = vec![1.0, 2.0, 3.0, 4.0, 5.0];
    let y: Vec<f64> = x.iter().map(|x| 3.0 * x * x).collect();
    let s = EstimateSeries::from_points(x, y, vec![0.0; 5], 1)?;
    let f = fit_exponent_with(&s, Transform::LogLogY, 10, 0)?;
    Ok(Check::new("exponent fit recovers y = 3x^2", (f.slope - 2.0).abs().max((f.intercept - 3f64.ln()).abs()), 1e-12))
}
