//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use zacr::{LogNormal, ZacrModel};

pub fn ln(mu: f64, sigma: f64) -> LogNormal {
    LogNormal::new(mu, sigma).unwrap()
}

/// Geometric model at the obstetric-application estimates.
pub fn geo_app() -> ZacrModel {
    ZacrModel::geometric(ln(5.8163, 1.6848), 64.4428, 21.0093).unwrap()
}

pub fn nb_app() -> ZacrModel {
    ZacrModel::negative_binomial(ln(4.151, 1.430), 0.5, 9.726, 7.383).unwrap()
}

pub fn mixture_sim() -> ZacrModel {
    ZacrModel::standard_mixture(ln(2.0, 1.0), 0.3, 0.1).unwrap()
}

/// Promotion model with `tau = 1.2` (zero) and `theta = 2.3` (cure).
pub fn promotion_sim() -> ZacrModel {
    ZacrModel::promotion(ln(2.0, 1.0), 2.3, 1.2).unwrap()
}

/// One representative model per variant, plus binomial-type dispersions.
pub fn representative_models() -> Vec<(&'static str, ZacrModel)> {
    vec![
        ("mixture", mixture_sim()),
        ("promotion", promotion_sim()),
        ("nb(0.5)", nb_app()),
        ("geo", geo_app()),
        (
            "nb(-0.5)",
            ZacrModel::negative_binomial(ln(1.0, 0.8), -0.5, 1.5, 0.8).unwrap(),
        ),
        (
            "nb(-0.3)",
            ZacrModel::negative_binomial(ln(1.0, 0.8), -0.3, 1.0, 1.5).unwrap(),
        ),
        (
            "nb(3)",
            ZacrModel::negative_binomial(ln(3.0, 1.2), 3.0, 4.0, 5.0).unwrap(),
        ),
    ]
}

/// Zero followed by 49 log-spaced times from 1e-2 to 1e4.
pub fn y_grid() -> Vec<f64> {
    let mut g = vec![0.0];
    let (a, b) = (1e-2f64.ln(), 1e4f64.ln());
    g.extend((0..49).map(|i| (a + (b - a) * i as f64 / 48.0).exp()));
    g
}
