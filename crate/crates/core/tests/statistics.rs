//! Sample-statistics checks for the field, the polymer diagnostics and the
//! estimators.

use corrpoly::covariance::CovarianceSpec;
use corrpoly::estimators::{self, EstimateSeries, Transform};
use corrpoly::field::{compute_tilt_shift, tilt_field, FieldSynthesizer, TiltRegion};
use corrpoly::grid::{Boundary, Grid, SiteBox};
use corrpoly::pinning::{self, PotentialSpec};
use corrpoly::polymer::{self, PolymerParams};
use corrpoly::rng::{stream, Purpose};
use corrpoly::stats::{mean_se, variance_se};
use rand::Rng;
use rand_distr::StandardNormal;

fn cauchy(theta: f64, d: usize) -> CovarianceSpec {
    CovarianceSpec::generalized_cauchy(theta, d).unwrap()
}

fn template(d: usize) -> PolymerParams {
    PolymerParams::new(0.0, 1, 1.0, Grid::new(d, 4, 1.0, Boundary::Reflecting).unwrap()).unwrap()
}

/// Sample covariance of sites `x` and `y` over `slices`, with its SE.
fn cov_se(slices: &[Vec<f64>], x: usize, y: usize) -> (f64, f64) {
    let prods: Vec<f64> = slices.iter().map(|s| s[x] * s[y]).collect();
    mean_se(&prods)
}

#[test]
fn marginal_variance_is_dt() {
    let grid = Grid::new(1, 1, 1.0, Boundary::Reflecting).unwrap();
    let synth = FieldSynthesizer::new(&cauchy(1.0, 1), &grid, 0.7).unwrap();
    let mut rng = stream(1, Purpose::Auxiliary, 0, 0);
    let draws: Vec<f64> = (0..100_000).map(|_| synth.sample_slice(&mut rng)[1]).collect();
    let (v, se) = variance_se(&draws);
    assert!((v - 0.7).abs() < 4.0 * se, "{v} ± {se}");
}

#[test]
fn lag_covariance_on_long_line() {
    let spec = cauchy(0.5, 1);
    let grid = Grid::new(1, 64, 1.0, Boundary::Reflecting).unwrap();
    let synth = FieldSynthesizer::new(&spec, &grid, 0.25).unwrap();
    let mut rng = stream(2, Purpose::Auxiliary, 0, 0);
    let slices: Vec<Vec<f64>> = (0..10_000).map(|_| synth.sample_slice(&mut rng)).collect();
    let o = grid.origin();
    let (c, se) = cov_se(&slices, o, o + 8);
    let want = 0.25 * spec.eval(&[8.0]).unwrap();
    assert!((c - want).abs() < 5.0 * se, "{c} vs {want} ± {se}");
}

#[test]
fn covariance_is_stationary() {
    let spec = cauchy(1.0, 1);
    let grid = Grid::new(1, 20, 1.0, Boundary::Reflecting).unwrap();
    let synth = FieldSynthesizer::new(&spec, &grid, 1.0).unwrap();
    let mut rng = stream(3, Purpose::Auxiliary, 0, 0);
    let slices: Vec<Vec<f64>> = (0..8000).map(|_| synth.sample_slice(&mut rng)).collect();
    for base in [3usize, 20, 30] {
        for lag in [1usize, 2, 5] {
            let (c, se) = cov_se(&slices, base, base + lag);
            let want = spec.eval(&[lag as f64]).unwrap();
            assert!((c - want).abs() < 5.0 * se, "base {base} lag {lag}: {c} vs {want}");
        }
    }
}

#[test]
fn tilted_field_has_shifted_mean_and_same_covariance() {
    let spec = cauchy(1.0, 1);
    let grid = Grid::new(1, 12, 1.0, Boundary::Reflecting).unwrap();
    let region = TiltRegion::new(1..3, SiteBox::centered(1, 2)).unwrap();
    let shift = compute_tilt_shift(&spec, &grid, &region, 0.5).unwrap();
    let synth = FieldSynthesizer::new(&spec, &grid, 0.5).unwrap();
    let o = grid.origin();
    let mut center = Vec::new();
    let mut lagged = Vec::new();
    for r in 0..10_000 {
        let f = synth.sample_field(4, 77, r);
        let g = tilt_field(&f, &shift, 1.0).unwrap();
        center.push(g.slice(1)[o]);
        lagged.push((g.slice(1)[o] - shift.at(1, o)) * (g.slice(1)[o + 4] - shift.at(1, o + 4)));
    }
    let (m, se) = mean_se(&center);
    assert!((m - shift.at(1, o)).abs() < 4.0 * se);
    let (c, se) = mean_se(&lagged);
    let want = 0.5 * spec.eval(&[4.0]).unwrap();
    assert!((c - want).abs() < 5.0 * se);
}

#[test]
fn tilt_shift_vanishes_far_from_the_box() {
    let spec = cauchy(8.0, 1);
    let grid = Grid::new(1, 200, 1.0, Boundary::Reflecting).unwrap();
    let region = TiltRegion::new(0..1, SiteBox::centered(1, 1)).unwrap();
    let shift = compute_tilt_shift(&spec, &grid, &region, 1.0).unwrap();
    let max = shift.profile.iter().cloned().fold(0.0, f64::max);
    assert!(shift.at(0, grid.flat(&[200]).unwrap()) <= 1e-6 * max);
    assert!(TiltRegion::new(2..2, SiteBox::centered(1, 1)).is_err());
}

#[test]
fn martingale_mean_is_one() {
    let p = template(1).with_beta(0.3).with_time(8.0).unwrap();
    let fm = polymer::fractional_moment_estimate(&cauchy(0.5, 1), &p, 1.0, 2000, 11).unwrap();
    assert!(fm.value.abs() < 4.0 * fm.se, "{} ± {}", fm.value, fm.se);
    let zero = polymer::fractional_moment_estimate(&cauchy(0.5, 1), &p.with_beta(0.0), 0.5, 10, 11).unwrap();
    assert_eq!((zero.value, zero.se), (0.0, 0.0));
}

#[test]
fn half_moment_decays_at_strong_coupling() {
    let p = template(1).with_beta(1.5).with_time(16.0).unwrap();
    let fm = polymer::fractional_moment_estimate(&cauchy(0.5, 1), &p, 0.5, 400, 12).unwrap();
    assert!(fm.value + 3.0 * fm.se < 0.0, "{} ± {}", fm.value, fm.se);
}

#[test]
fn girsanov_identity() {
    let spec = cauchy(0.5, 1);
    let p = template(1).with_beta(0.8).with_time(8.0).unwrap();
    let g = polymer::girsanov_diagnostic(&spec, &p, 0.3, 4, 2000, 13).unwrap();
    assert!(g.mean.abs() <= 3.0 * g.se, "{} ± {}", g.mean, g.se);
    let free = polymer::girsanov_diagnostic(&spec, &p.with_beta(0.0), 0.3, 4, 4, 13).unwrap();
    assert!(free.mean.abs() < 1e-6);
    let flat = polymer::girsanov_diagnostic(&spec, &p, 0.0, 4, 4, 13).unwrap();
    assert_eq!(flat.mean, 0.0);
    let wild = polymer::girsanov_diagnostic(&spec, &p, 5.0, 4, 2, 13).unwrap();
    assert!(!wild.warnings.is_empty());
}

#[test]
fn second_moment_matches_pinning() {
    let spec = cauchy(0.5, 1);
    let p = template(1).with_beta(0.4).with_time(8.0).unwrap();
    let s = polymer::second_moment_check(&spec, &p, 5000, 14).unwrap();
    assert!((s.mc_value - s.pinning_value).abs() <= 3.0 * s.combined_se, "{s:?}");
    assert_eq!(s.pinning_value.to_bits(), polymer::second_moment_pinning_value(&spec, &p).unwrap().to_bits());
    let z = polymer::second_moment_check(&spec, &p.with_beta(0.0), 5, 14).unwrap();
    assert_eq!((z.mc_value, z.pinning_value), (0.0, 0.0));
}

#[test]
fn free_energy_signs_and_monotonicity() {
    let spec = cauchy(0.5, 1);
    let p = template(1).with_time(32.0).unwrap();
    let s = estimators::free_energy_curve(&spec, &p, &[0.0, 0.5, 1.0], 400, 15).unwrap();
    assert_eq!((s.y_values[0], s.std_errors[0]), (0.0, 0.0));
    for j in 0..3 {
        assert!(s.y_values[j] <= 2.0 * s.std_errors[j]);
    }
    assert!(s.y_values[1] + 3.0 * s.std_errors[1] < 0.0);
    assert!(s.y_values[2] + 3.0 * s.std_errors[2] < 0.0);
    assert!(s.y_values[2] < s.y_values[1]);
}

#[test]
fn disorder_mean_is_nonincreasing_along_a_ladder() {
    let spec = cauchy(0.5, 1);
    let p = template(1).with_time(16.0).unwrap();
    let betas = [0.2, 0.4, 0.6, 0.8, 1.0];
    let s = estimators::free_energy_curve(&spec, &p, &betas, 300, 16).unwrap();
    for j in 1..betas.len() {
        let se = s.std_errors[j].hypot(s.std_errors[j - 1]);
        assert!(s.y_values[j] <= s.y_values[j - 1] + 2.0 * se);
    }
    // Per-realization monotonicity is not a property of the model; the
    // statistic is reported, not asserted against a threshold.
    let frac = estimators::crn_monotone_fraction(&s).unwrap();
    assert!((0.0..=1.0).contains(&frac));
    println!("crn monotone fraction: {frac:.3}");
}

#[test]
fn series_are_reproducible_bit_for_bit() {
    let spec = cauchy(0.5, 1);
    let p = template(1).with_time(8.0).unwrap();
    let a = estimators::free_energy_curve(&spec, &p, &[0.5, 1.0], 40, 17).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let b = pool.install(|| estimators::free_energy_curve(&spec, &p, &[0.5, 1.0], 40, 17).unwrap());
    let bits = |s: &EstimateSeries| s.y_values.iter().chain(&s.std_errors).map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn variance_grows_and_vanishes_without_disorder() {
    let spec = cauchy(0.5, 1);
    let ts = [8.0, 16.0, 32.0, 64.0];
    let z = estimators::variance_curve(&spec, &template(1), &ts, 30, 18).unwrap();
    assert!(z.y_values.iter().all(|&v| v == 0.0));
    let s = estimators::variance_curve(&spec, &template(1).with_beta(1.0), &ts, 400, 18).unwrap();
    for j in 1..ts.len() {
        let se = s.std_errors[j].hypot(s.std_errors[j - 1]);
        assert!(s.y_values[j] >= s.y_values[j - 1] - 2.0 * se);
    }
    let fit = estimators::fit_exponent(&s, Transform::LogLogVar).unwrap();
    assert!(fit.ci_low > 0.0, "{fit:?}");
}

#[test]
fn free_walk_displacement_is_diffusive() {
    let s = estimators::displacement_curve(&cauchy(0.5, 1), &template(1), &[32.0, 64.0, 128.0, 256.0], 60, 40, 19).unwrap();
    let fit = estimators::fit_exponent(&s, Transform::LogLogY).unwrap();
    assert!((fit.slope - 0.5).abs() < 0.05, "{fit:?}");
}

#[test]
fn exact_quadratic_fit() {
    let x = vec![1.0, 2.0, 3.0, 4.0, 5.0];
    let y: Vec<f64> = x.iter().map(|x| 3.0 * x * x).collect();
    let s = EstimateSeries::from_points(x, y, vec![0.0; 5], 1).unwrap();
    let fit = estimators::fit_exponent(&s, Transform::LogLogY).unwrap();
    assert!((fit.slope - 2.0).abs() < 1e-12);
    assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
    assert!((fit.r_squared - 1.0).abs() < 1e-12);
    let neg = EstimateSeries::from_points(vec![1.0, 2.0, 3.0, 4.0, 5.0], vec![-1.0, 2.0, 3.0, 4.0, 5.0], vec![0.0; 5], 1).unwrap();
    let f = estimators::fit_exponent(&neg, Transform::LogLogY).unwrap();
    assert_eq!(f.n_points, 4);
    assert!(!f.warnings.is_empty());
    let short = EstimateSeries::from_points(vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0], vec![0.0; 3], 1).unwrap();
    assert!(estimators::fit_exponent(&short, Transform::LogLogY).is_err());
}

#[test]
fn bootstrap_intervals_are_calibrated() {
    let mut rng = stream(20, Purpose::Auxiliary, 0, 0);
    let x: Vec<f64> = (1..=8).map(|i| i as f64).collect();
    let mut covered = 0;
    for rep in 0..100 {
        let y: Vec<f64> = x.iter().map(|x| x.powf(1.5) * (1.0 + 0.01 * rng.sample::<f64, _>(StandardNormal))).collect();
        let se: Vec<f64> = x.iter().map(|x| 0.01 * x.powf(1.5)).collect();
        let s = EstimateSeries::from_points(x.clone(), y, se, 1).unwrap();
        let fit = estimators::fit_exponent_with(&s, Transform::LogLogY, 1000, rep).unwrap();
        if fit.ci_low <= 1.5 && 1.5 <= fit.ci_high {
            covered += 1;
        }
    }
    assert!(covered >= 90, "coverage {covered}/100");
}

#[test]
fn overlap_identity_and_common_numbers() {
    let spec = cauchy(0.5, 1);
    let p = template(1).with_time(16.0).unwrap();
    let c = estimators::overlap_derivative_check(&spec, &p, 0.2, 0.05, 400, 8, 21).unwrap();
    assert!(c.agrees(3.0), "{c:?}");
    let common = estimators::finite_difference_lhs(&spec, &p, 0.2, 0.05, 200, 22, true).unwrap();
    let indep = estimators::finite_difference_lhs(&spec, &p, 0.2, 0.05, 200, 22, false).unwrap();
    assert!(common.1 < indep.1, "{common:?} vs {indep:?}");
    assert!(estimators::overlap_derivative_check(&spec, &p, 0.0, 0.05, 10, 1, 21).is_err());
}

#[test]
fn disorder_regimes() {
    let zero = estimators::weak_disorder_diagnostic(&cauchy(0.5, 1), &template(1), 0.0, &[2.0, 4.0, 8.0], 20, 23).unwrap();
    assert!(zero.checkpoints.iter().all(|c| c.median == 1.0));
    let strong = estimators::weak_disorder_diagnostic(&cauchy(0.5, 1), &template(1), 1.0, &[8.0, 16.0, 32.0, 64.0], 100, 24).unwrap();
    assert_eq!(strong.verdict.as_str(), "strong-disorder-evidence", "{strong:?}");
    let t3 = PolymerParams::new(0.0, 1, 1.0, Grid::new(3, 3, 1.0, Boundary::Reflecting).unwrap()).unwrap();
    let weak = estimators::weak_disorder_diagnostic(&cauchy(3.0, 3), &t3, 0.2, &[2.0, 4.0, 8.0, 16.0], 60, 25).unwrap();
    assert_eq!(weak.verdict.as_str(), "weak-disorder-evidence", "{weak:?}");
}

#[test]
fn dirichlet_ground_state() {
    let v = PotentialSpec::indicator_ball(1.0, 1).unwrap();
    let l = 10.0;
    let grid = Grid::new(1, 200, l / 200.0, Boundary::Absorbing).unwrap();
    let e = pinning::principal_eigenvalue(&v, 0.0, &grid).unwrap().f_estimate;
    let want = -std::f64::consts::PI.powi(2) / (8.0 * l * l);
    assert!((e / want - 1.0).abs() < 0.005, "{e} vs {want}");
    let t = pinning::transfer_growth_rate(&v, 0.0, &Grid::new(1, 20, 1.0, Boundary::Reflecting).unwrap(), 1.0, 50).unwrap();
    assert_eq!(t.f_estimate, 0.0);
}
