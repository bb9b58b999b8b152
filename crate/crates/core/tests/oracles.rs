//! Independent oracles: exhaustive path sums, dense eigensolves, the square
//! well, and direct probability recursions.

use corrpoly::covariance::CovarianceSpec;
use corrpoly::field::{sample_field, SpaceTimeField};
use corrpoly::grid::{Boundary, Grid, SiteBox};
use corrpoly::pinning::{self, PotentialSpec};
use corrpoly::polymer::{self, CorridorSpec, ForwardPass, PolymerParams};
use corrpoly::rng::{stream, Purpose};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

/// One-axis transition matrix built from scratch: Gaussian weights on
/// `|j|·a ≤ cutoff·√δ`, reflected about the half-sites beyond each edge.
fn oracle_matrix(side: usize, a: f64, dt: f64, cutoff: f64, boundary: Boundary) -> Vec<Vec<f64>> {
    let r = (cutoff * dt.sqrt() / a + 1e-12).floor() as i64;
    let w: Vec<f64> = (-r..=r).map(|j| (-(j as f64 * a).powi(2) / (2.0 * dt)).exp()).collect();
    let z: f64 = w.iter().sum();
    let n = side as i64;
    let mut m = vec![vec![0.0; side]; side];
    for i in 0..n {
        for (k, wk) in w.iter().enumerate() {
            let mut p = i + k as i64 - r;
            match boundary {
                Boundary::Reflecting => {
                    while p < 0 || p >= n {
                        p = if p < 0 { -1 - p } else { 2 * n - 1 - p };
                    }
                }
                Boundary::Absorbing => {
                    if p < 0 || p >= n {
                        continue;
                    }
                }
            }
            m[i as usize][p as usize] += wk / z;
        }
    }
    m
}

/// `Σ_paths Π K(B_k, B_{k+1}) · exp(β·ω_k(B_{k+1}))` by enumeration, with an
/// optional per-step site filter.
fn brute_force(field: &SpaceTimeField, k: &[Vec<f64>], beta: f64, n: usize, start: usize, allow: &dyn Fn(usize, usize) -> bool) -> f64 {
    let sites = k.len();
    let mut total = 0.0;
    let mut path = vec![0usize; n];
    let count = sites.pow(n as u32);
    for code in 0..count {
        let mut c = code;
        for p in path.iter_mut() {
            *p = c % sites;
            c /= sites;
        }
        if !allow(0, start) {
            continue;
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

fn random_field(grid: &Grid, n: usize, seed: u64) -> SpaceTimeField {
    let mut f = SpaceTimeField::zeros(grid, n, 1.0);
    let mut rng = stream(seed, Purpose::Auxiliary, 0, 0);
    for v in f.values.iter_mut() {
        *v = rng.sample::<f64, _>(StandardNormal);
    }
    f
}

#[test]
fn transfer_matches_enumeration() {
    let grid = Grid::new(1, 3, 1.0, Boundary::Reflecting).unwrap();
    let k = oracle_matrix(7, 1.0, 1.0, 4.0, Boundary::Reflecting);
    for seed in 0..20 {
        let field = random_field(&grid, 4, seed);
        for beta in [0.0, 0.5, 2.0] {
            let p = PolymerParams::new(beta, 4, 1.0, grid.clone()).unwrap();
            let got = polymer::log_partition(&field, &p).unwrap().log_z;
            let want = brute_force(&field, &k, beta, 4, 3, &|_, _| true).ln();
            assert!((got - want).abs() < 1e-10, "seed {seed} beta {beta}: {got} vs {want}");
        }
    }
}

#[test]
fn absorbing_and_off_center_start_match_enumeration() {
    let grid = Grid::new(1, 2, 0.5, Boundary::Absorbing).unwrap();
    let k = oracle_matrix(5, 0.5, 0.3, 4.0, Boundary::Absorbing);
    let mut field = random_field(&grid, 5, 99);
    field.dt = 0.3;
    let mut p = PolymerParams::new(0.8, 5, 0.3, grid).unwrap();
    p.start_site = Some(1);
    let got = polymer::log_partition(&field, &p).unwrap();
    let want = brute_force(&field, &k, 0.8, 5, 1, &|_, _| true).ln();
    assert!((got.log_z - want).abs() < 1e-10);
    assert!((got.log_w - (want - 0.5 * 0.64 * 1.5)).abs() < 1e-10);
    assert!(got.absorbed > 0.0);
}

#[test]
fn corridors_match_enumeration_and_partition_additively() {
    let grid = Grid::new(1, 3, 1.0, Boundary::Reflecting).unwrap();
    let k = oracle_matrix(7, 1.0, 1.0, 4.0, Boundary::Reflecting);
    let field = random_field(&grid, 4, 5);
    let p = PolymerParams::new(0.9, 4, 1.0, grid.clone()).unwrap();
    let full = polymer::log_partition(&field, &p).unwrap().log_z;

    let boxed = SiteBox::new(vec![-1], vec![2]).unwrap();
    let c = CorridorSpec::second_half(4, boxed.clone());
    let got = polymer::restricted_log_partition(&field, &p, &c).unwrap();
    let want = brute_force(&field, &k, 0.9, 4, 3, &|step, x| step < 2 || (2..=5).contains(&x)).ln();
    assert!((got - want).abs() < 1e-10);
    assert!(got <= full);

    // endpoint cells partition path space
    let cells = [(-3, -2), (-1, 0), (1, 1), (2, 3)];
    let parts: Vec<f64> = cells
        .iter()
        .map(|&(lo, hi)| {
            let mut c = CorridorSpec::unrestricted(4);
            c.boxes[4] = Some(SiteBox::new(vec![lo], vec![hi]).unwrap());
            polymer::restricted_log_partition(&field, &p, &c).unwrap()
        })
        .collect();
    let m = parts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + parts.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
    assert!((lse - full).abs() < 1e-10);
}

#[test]
fn zero_beta_corridor_is_a_stay_probability() {
    let grid = Grid::new(1, 5, 1.0, Boundary::Reflecting).unwrap();
    let k = oracle_matrix(11, 1.0, 1.0, 4.0, Boundary::Reflecting);
    let n = 6;
    let field = SpaceTimeField::zeros(&grid, n, 1.0);
    let p = PolymerParams::new(0.0, n, 1.0, grid.clone()).unwrap();
    let c = CorridorSpec::everywhere(n, SiteBox::new(vec![-2], vec![1]).unwrap());
    let got = polymer::restricted_log_partition(&field, &p, &c).unwrap().exp();
    // direct probability recursion with killing outside the box
    let inside = |x: usize| (3..=6).contains(&x);
    let mut v = vec![0.0; 11];
    v[5] = 1.0;
    for _ in 0..n {
        let mut w = vec![0.0; 11];
        for i in 0..11 {
            for j in 0..11 {
                w[j] += v[i] * k[i][j];
            }
        }
        for (j, x) in w.iter_mut().enumerate() {
            if !inside(j) {
                *x = 0.0;
            }
        }
        v = w;
    }
    let want: f64 = v.iter().sum();
    assert!((got - want).abs() < 1e-12 * want.max(1e-300), "{got} vs {want}");
}

#[test]
fn gibbs_endpoint_law_matches_transfer_marginal() {
    let grid = Grid::new(1, 3, 1.0, Boundary::Reflecting).unwrap();
    let k = oracle_matrix(7, 1.0, 1.0, 4.0, Boundary::Reflecting);
    let field = random_field(&grid, 4, 17);
    let p = PolymerParams::new(1.0, 4, 1.0, grid.clone()).unwrap();
    let pass = ForwardPass::new(&field, &p).unwrap();
    let mut rng = stream(3, Purpose::PathSampling, 0, 0);
    let n_samples = 100_000;
    let mut counts = [[0usize; 7]; 5];
    for _ in 0..n_samples {
        let s = pass.sample(&field, &mut rng);
        for (step, &x) in s.sites.iter().enumerate() {
            counts[step][x] += 1;
        }
    }
    // brute-force marginal of every step
    let z = brute_force(&field, &k, 1.0, 4, 3, &|_, _| true);
    for step in 1..=4 {
        let mut tv = 0.0;
        for x in 0..7 {
            let m = brute_force(&field, &k, 1.0, 4, 3, &|s, y| s != step || y == x) / z;
            tv += (m - counts[step][x] as f64 / n_samples as f64).abs();
        }
        assert!(0.5 * tv < 0.02, "step {step}: TV {}", 0.5 * tv);
    }
    // endpoint law equals the normalized forward state
    let law = pass.endpoint_law();
    for x in 0..7 {
        let m = brute_force(&field, &k, 1.0, 4, 3, &|s, y| s != 4 || y == x) / z;
        assert!((law[x] - m).abs() < 1e-12);
    }
}

#[test]
fn path_log_density_is_exact() {
    let grid = Grid::new(1, 3, 1.0, Boundary::Reflecting).unwrap();
    let k = oracle_matrix(7, 1.0, 1.0, 4.0, Boundary::Reflecting);
    let field = random_field(&grid, 3, 23);
    let p = PolymerParams::new(0.7, 3, 1.0, grid).unwrap();
    let pass = ForwardPass::new(&field, &p).unwrap();
    let z = brute_force(&field, &k, 0.7, 3, 3, &|_, _| true);
    let mut rng = stream(4, Purpose::PathSampling, 0, 0);
    for _ in 0..20 {
        let s = pass.sample(&field, &mut rng);
        let mut w = 1.0;
        for step in 0..3 {
            w *= k[s.sites[step]][s.sites[step + 1]] * (0.7 * field.slice(step)[s.sites[step + 1]]).exp();
        }
        assert!((s.log_density - (w / z).ln()).abs() < 1e-10);
    }
}

#[test]
fn energy_domination_pins_paths() {
    let grid = Grid::new(1, 6, 1.0, Boundary::Reflecting).unwrap();
    let mut field = SpaceTimeField::zeros(&grid, 8, 1.0);
    let column = grid.flat(&[2]).unwrap();
    for k in 0..8 {
        field.slice_mut(k)[column] = 10.0;
    }
    let mut fractions = Vec::new();
    for beta in [0.1, 0.5, 2.0] {
        let p = PolymerParams::new(beta, 8, 1.0, grid.clone()).unwrap();
        let mut rng = stream(9, Purpose::PathSampling, 0, 0);
        let paths = polymer::sample_paths(&field, &p, 400, &mut rng).unwrap();
        let hits: usize = paths.iter().map(|s| s.sites[1..].iter().filter(|&&x| x == column).count()).sum();
        fractions.push(hits as f64 / (400.0 * 8.0));
    }
    assert!(fractions[0] < fractions[1] && fractions[1] < fractions[2]);
    assert!(fractions[2] > 0.85, "{fractions:?}");
}

#[test]
fn free_walk_increments_have_kernel_variance() {
    let grid = Grid::new(1, 30, 1.0, Boundary::Reflecting).unwrap();
    let field = SpaceTimeField::zeros(&grid, 10, 1.0);
    let p = PolymerParams::new(0.0, 10, 1.0, grid.clone()).unwrap();
    let mut rng = stream(11, Purpose::PathSampling, 0, 0);
    let paths = polymer::sample_paths(&field, &p, 4000, &mut rng).unwrap();
    let inc: Vec<f64> = paths
        .iter()
        .flat_map(|s| s.sites.windows(2).map(|w| w[1] as f64 - w[0] as f64).collect::<Vec<_>>())
        .collect();
    let (m2, se) = {
        let sq: Vec<f64> = inc.iter().map(|x| x * x).collect();
        corrpoly::stats::mean_se(&sq)
    };
    assert!((m2 - 1.0).abs() < 4.0 * se, "{m2} ± {se}");
}

#[test]
fn overlap_matches_direct_summation() {
    let grid = Grid::new(1, 20, 1.0, Boundary::Reflecting).unwrap();
    let spec = CovarianceSpec::generalized_cauchy(0.5, 1).unwrap();
    let n = 8;
    let field = SpaceTimeField::zeros(&grid, n, 1.0);
    let p = PolymerParams::new(0.0, n, 1.0, grid.clone()).unwrap();
    let mut rng = stream(12, Purpose::PathSampling, 0, 0);
    let s = polymer::sample_paths(&field, &p, 2, &mut rng).unwrap();
    let mut want = 0.0;
    for k in 1..=n {
        let d = (s[0].sites[k] as f64 - s[1].sites[k] as f64) * grid.spacing;
        want += (1.0 + d * d).powf(-0.25);
    }
    want /= n as f64;
    let got = polymer::overlap(&s[0], &s[1], &spec, &p).unwrap();
    assert!((got - want).abs() < 1e-14);
    // constant separation gives Q(s)
    let shifted = polymer::PathSample { sites: s[0].sites.iter().map(|x| x + 3).collect(), log_density: 0.0 };
    let c = polymer::overlap(&s[0], &shifted, &spec, &p).unwrap();
    assert!((c - 10f64.powf(-0.25)).abs() < 1e-14);
}

/// Dirichlet matrix of `½Δ + hV` on interior sites, built directly.
fn dense_operator(v: &PotentialSpec, h: f64, grid: &Grid) -> DMatrix<f64> {
    let l = grid.half_width as i64;
    let m = (2 * l - 1) as usize;
    let a2 = grid.spacing * grid.spacing;
    let vals = v.site_values(grid).unwrap();
    DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            -1.0 / a2 + h * vals[i + 1]
        } else if i.abs_diff(j) == 1 {
            0.5 / a2
        } else {
            0.0
        }
    })
}

#[test]
fn eigenvalue_matches_dense_eigensolve() {
    for (v, h) in [
        (PotentialSpec::indicator_ball(1.0, 1).unwrap(), 0.7),
        (PotentialSpec::power_law(0.5, 1.0, 1).unwrap(), 0.3),
        (PotentialSpec::power_law(3.0, 0.5, 1).unwrap(), -0.2),
    ] {
        let grid = Grid::new(1, 16, 0.25, Boundary::Absorbing).unwrap();
        assert_eq!(grid.side(), 33);
        let dense = dense_operator(&v, h, &grid);
        let want = dense.symmetric_eigen().eigenvalues.max();
        let got = pinning::principal_eigenvalue(&v, h, &grid).unwrap().f_estimate;
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
}

#[test]
fn eigenvalue_matches_dense_eigensolve_2d() {
    let v = PotentialSpec::power_law(1.0, 1.0, 2).unwrap();
    let grid = Grid::new(2, 5, 0.5, Boundary::Absorbing).unwrap();
    let vals = v.site_values(&grid).unwrap();
    let interior: Vec<usize> = (0..grid.len()).filter(|&i| grid.coords(i).iter().all(|c| c.abs() < 5)).collect();
    let m = interior.len();
    let h = 0.8;
    let dense = DMatrix::from_fn(m, m, |i, j| {
        let (ci, cj) = (grid.coords(interior[i]), grid.coords(interior[j]));
        let dist: i64 = ci.iter().zip(&cj).map(|(a, b)| (a - b).abs()).sum();
        match dist {
            0 => -2.0 / 0.25 + h * vals[interior[i]],
            1 => 0.5 / 0.25,
            _ => 0.0,
        }
    });
    let want = dense.symmetric_eigen().eigenvalues.max();
    let got = pinning::principal_eigenvalue(&v, h, &grid).unwrap().f_estimate;
    assert!((got - want).abs() < 1e-9, "{got} vs {want}");
}

/// Bound state of `-½ψ'' - h·1{|x|≤1}ψ = -λψ`: `k·tan(k) = κ` with
/// `k = √(2(h-λ))`, `κ = √(2λ)`, by bisection on `(0, h)`.
pub fn square_well(h: f64) -> f64 {
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

#[test]
fn square_well_two_routes() {
    let v = PotentialSpec::indicator_ball(1.0, 1).unwrap();
    let h = 0.1;
    let want = square_well(h);
    let eig = pinning::principal_eigenvalue(&v, h, &Grid::new(1, 2000, 0.1, Boundary::Absorbing).unwrap()).unwrap();
    assert!((eig.f_estimate / want - 1.0).abs() < 1e-3);
    let tr = pinning::transfer_growth_rate_adaptive(
        &v,
        h,
        &Grid::new(1, 2000, 0.1, Boundary::Reflecting).unwrap(),
        0.05,
        4000,
        1 << 16,
        pinning::PINNING_CUTOFF,
    )
    .unwrap();
    assert!(tr.converged);
    assert!((tr.f_estimate / want - 1.0).abs() < 1e-3);
    assert!((tr.f_estimate - eig.f_estimate).abs() < 2e-3);
}

#[test]
fn two_routes_agree_on_smoke_ladders() {
    for d in [1usize, 2] {
        let v = PotentialSpec::power_law(1.0, 1.0, d).unwrap();
        let (a, l) = if d == 1 { (0.25, 60) } else { (0.4, 50) };
        for h in [0.4, 0.6, 0.8, 1.0, 1.2] {
            let e = pinning::principal_eigenvalue(&v, h, &Grid::new(d, l, a, Boundary::Absorbing).unwrap()).unwrap();
            let t = pinning::transfer_growth_rate_adaptive(
                &v,
                h,
                &Grid::new(d, l, a, Boundary::Reflecting).unwrap(),
                a * a,
                200,
                1 << 16,
                pinning::PINNING_CUTOFF,
            )
            .unwrap();
            assert!((e.f_estimate - t.f_estimate).abs() < 2e-3, "d={d} h={h}: {} vs {}", e.f_estimate, t.f_estimate);
        }
    }
}

#[test]
fn finite_time_pinning_matches_dense_expectation() {
    // log Y_n = log (e_0ᵀ (K D)^n 1) with D = diag(exp(h V δ))
    let grid = Grid::new(1, 4, 1.0, Boundary::Reflecting).unwrap();
    let v = PotentialSpec::power_law(0.5, 1.0, 1).unwrap();
    let (h, dt, n) = (0.3, 1.0, 5);
    let k = oracle_matrix(9, 1.0, dt, 4.0, Boundary::Reflecting);
    let vals = v.site_values(&grid).unwrap();
    let mut row = vec![0.0; 9];
    row[4] = 1.0;
    for _ in 0..n {
        let mut next = vec![0.0; 9];
        for i in 0..9 {
            for j in 0..9 {
                next[j] += row[i] * k[i][j];
            }
        }
        for j in 0..9 {
            next[j] *= (h * vals[j] * dt).exp();
        }
        row = next;
    }
    let want = row.iter().sum::<f64>().ln();
    let got = pinning::log_partition(&v, h, &grid, dt, n, 4.0).unwrap();
    assert!((got - want).abs() < 1e-12);
}

#[test]
fn field_slices_have_target_covariance() {
    for (d, l) in [(1usize, 6usize), (2, 3)] {
        let spec = CovarianceSpec::generalized_cauchy(1.0, d).unwrap();
        let grid = Grid::new(d, l, 1.0, Boundary::Reflecting).unwrap();
        let dt = 0.5;
        let f = sample_field(&spec, &grid, 6000, dt, 42, 0).unwrap();
        let o = grid.origin();
        let mut neighbors = vec![o];
        let mut c = vec![0i64; d];
        c[d - 1] = 1;
        neighbors.push(grid.flat(&c).unwrap());
        c[d - 1] = 3;
        neighbors.push(grid.flat(&c).unwrap());
        for &y in &neighbors {
            let prods: Vec<f64> = (0..f.n_steps).map(|k| f.slice(k)[o] * f.slice(k)[y]).collect();
            let (m, se) = corrpoly::stats::mean_se(&prods);
            let want = dt * spec.eval(&grid.position(y)).unwrap();
            assert!((m - want).abs() < 5.0 * se, "d={d} y={y}: {m} vs {want} ± {se}");
        }
        let means: Vec<f64> = (0..f.n_steps).map(|k| f.slice(k)[o]).collect();
        let (m, se) = corrpoly::stats::mean_se(&means);
        assert!(m.abs() < 5.0 * se);
    }
}

#[test]
fn slices_are_independent_in_time() {
    let spec = CovarianceSpec::generalized_cauchy(0.5, 1).unwrap();
    let grid = Grid::new(1, 5, 1.0, Boundary::Reflecting).unwrap();
    let f = sample_field(&spec, &grid, 6001, 1.0, 7, 0).unwrap();
    let o = grid.origin();
    let prods: Vec<f64> = (0..6000).map(|k| f.slice(k)[o] * f.slice(k + 1)[o]).collect();
    let (m, se) = corrpoly::stats::mean_se(&prods);
    assert!(m.abs() < 5.0 * se);
}
