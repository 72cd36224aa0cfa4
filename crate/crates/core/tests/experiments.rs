//! Desk-scale checks of the averaged-exponent experiments.

use std::f64::consts::LN_2;

use twistlab::experiments::{lambda_for_rotation, lambda_scan, GridSpec, OrbitSpec};
use twistlab::exponents::random_exponent_quadrature;
use twistlab::geometry::sample_haar;
use twistlab::stats::{mean, sample_std};
use twistlab::Seed;

fn lambda_g_sample(eps: f64, count: u64) -> Vec<(f64, f64)> {
    let mut rng = Seed::new(31).rng(0);
    let spec = OrbitSpec::new(128, 8192);
    (0..count)
        .map(|k| {
            let g = sample_haar(&mut rng).rotation;
            let e = lambda_for_rotation(&g, eps, &spec, Seed::new(32).child(k)).unwrap();
            (e.lambda, e.sigma)
        })
        .collect()
}

/// Individual λ_g are sharp but scatter around R(ε) by several tenths,
/// while their Haar average matches R(ε).
#[test]
fn single_rotations_average_to_the_random_exponent_at_large_eps() {
    let r = random_exponent_quadrature(10.0).unwrap().value;
    let sample = lambda_g_sample(10.0, 50);
    let lambdas: Vec<f64> = sample.iter().map(|s| s.0).collect();
    let spread = sample_std(&lambdas);
    let se = spread / (lambdas.len() as f64).sqrt();
    assert!((mean(&lambdas) - r).abs() < 3.0 * se, "mean {} vs R {r}, se {se}", mean(&lambdas));
    let sigma_s2 = mean(&sample.iter().map(|s| s.1).collect::<Vec<_>>());
    assert!(spread > sigma_s2, "spread over g {spread} vs mean σ_g {sigma_s2}");
}

/// The 90%-within-0.05 reading of the large-ε example does not hold: only
/// a few g fall that close, most sit near R + 0.3.
#[test]
#[ignore = "unattainable: λ_g spreads by ~0.3 around R(10); see the decisions ledger"]
fn single_rotations_track_the_random_exponent_at_large_eps() {
    let r = random_exponent_quadrature(10.0).unwrap().value;
    let close = lambda_g_sample(10.0, 50).iter().filter(|s| (s.0 - r).abs() < 0.05).count();
    assert!(close >= 45, "{close}/50 within 0.05 of R(10) = {r}");
}

#[test]
fn integer_eps_scan_is_symmetric_in_theta() {
    let scan = lambda_scan(1.0, GridSpec::new(16).unwrap(), OrbitSpec::new(32, 2048), Seed::new(33)).unwrap();
    let (asym, se) = scan.theta_asymmetry();
    assert!(asym < 3.0 * se, "asymmetry {asym} vs se {se}");
    assert!(scan.extrapolation.relative_residual < 0.1, "{:?}", scan.extrapolation);
    assert!(scan.sigma_total >= scan.sigma_s2);
}

#[test]
fn average_is_bounded_by_the_best_cell() {
    let eps = 100.0;
    let scan = lambda_scan(eps, GridSpec::new(8).unwrap(), OrbitSpec::new(16, 1024), Seed::new(34)).unwrap();
    let r = random_exponent_quadrature(eps).unwrap().value;
    let max = scan.max_lambda();
    assert!(scan.lambda_num <= max);
    assert!(max - r < 2.0 - LN_2 + 0.5, "max cell {max}, R = {r}");
    assert!(scan.sigma_total >= scan.sigma_s2);
}
