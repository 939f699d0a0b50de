// reference values carry the full precision of the high-precision oracle
#![allow(clippy::excessive_precision)]

use zacr::baseline::{
    log_normal_cdf, log_normal_pdf, log_normal_quantile, std_normal_cdf, std_normal_quantile,
};
use zacr::{Baseline, LogNormal};

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn normal_cdf_reference_values() {
    // 40-digit references
    let cases = [
        (-1.0, 0.15865525393145705141),
        (-5.0, 2.8665157187919391167e-7),
        (-10.0, 7.619853024160526066e-24),
        (-30.0, 4.9067139271481870595e-198),
        (0.5, 0.69146246127401310364),
        (2.0, 0.9772498680518207928),
    ];
    for (z, want) in cases {
        assert!(
            rel(std_normal_cdf(z), want) < 1e-13,
            "z={z}: {}",
            std_normal_cdf(z)
        );
    }
}

#[test]
fn normal_quantile_reference_values() {
    let cases = [
        (0.975, 1.9599639845400542355),
        (0.01, -2.3263478740408411009),
        (1e-10, -6.3613409024040562047),
    ];
    for (u, want) in cases {
        assert!(rel(std_normal_quantile(u).unwrap(), want) < 1e-14, "u={u}");
    }
    assert!(std_normal_quantile(0.0).is_err() && std_normal_quantile(1.0).is_err());
}

#[test]
fn application_cdf_at_six_hours() {
    let b = LogNormal::new(5.8163, 1.6848).unwrap();
    assert!((b.cdf(6.0) - 0.0084532487438402690783).abs() < 1e-12);
    assert_eq!(log_normal_cdf(6.0, &b).unwrap(), b.cdf(6.0));
}

#[test]
fn quantile_round_trip_on_grid() {
    for (mu, sigma) in [(0.0, 1.0), (2.0, 1.0), (5.8163, 1.6848), (-3.0, 0.2)] {
        let b = LogNormal::new(mu, sigma).unwrap();
        for i in 1..100 {
            let u = i as f64 / 100.0;
            let y = b.quantile(u).unwrap();
            assert!((b.cdf(y) - u).abs() < 1e-14, "mu={mu} sigma={sigma} u={u}");
            assert_eq!(log_normal_quantile(u, &b).unwrap(), y);
        }
    }
}

#[test]
fn cdf_and_survival_are_complementary() {
    let b = LogNormal::new(2.0, 1.0).unwrap();
    for i in 0..200 {
        let y = (-6.0 + 0.1 * i as f64).exp();
        let (c, s) = (b.cdf(y), b.sf(y));
        assert!((c + s - 1.0).abs() <= 2.0 * f64::EPSILON, "y={y}");
        assert!(c >= 0.0 && s >= 0.0);
    }
    assert_eq!(b.cdf(0.0), 0.0);
    assert_eq!(b.sf(0.0), 1.0);
}

#[test]
fn density_matches_closed_form() {
    let (mu, sigma) = (1.3, 0.7);
    let b = LogNormal::new(mu, sigma).unwrap();
    for y in [0.05, 0.5, 1.0, 3.7, 20.0] {
        let z: f64 = (f64::ln(y) - mu) / sigma;
        let want = (-0.5 * z * z).exp() / (y * sigma * (2.0 * std::f64::consts::PI).sqrt());
        assert!(rel(log_normal_pdf(y, &b).unwrap(), want) < 1e-13, "y={y}");
    }
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(LogNormal::new(0.0, 0.0).is_err());
    assert!(LogNormal::new(0.0, -1.0).is_err());
    assert!(LogNormal::new(f64::NAN, 1.0).is_err());
    let b = LogNormal::new(0.0, 1.0).unwrap();
    assert!(log_normal_cdf(-1.0, &b).is_err());
}
