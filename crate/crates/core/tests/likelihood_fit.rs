mod common;

use common::*;
use zacr::inference::{log_likelihood_terms, rank_by_aic, score, wald_z};
use zacr::simulate::{calibrate_uniform_censoring, sample_dataset};
use zacr::{
    fit_mle, log_likelihood, wald_intervals, FitConfig, FitResult, SurvivalDataset, ZacrError,
    ZacrModel, ZacrVariant,
};

fn ten_observations() -> SurvivalDataset {
    let mut d = SurvivalDataset::from_pairs(&[
        (0.0, 1),
        (0.0, 1),
        (1.5, 1),
        (4.0, 1),
        (7.25, 1),
        (13.0, 1),
        (30.0, 1),
        (2.0, 0),
        (20.0, 0),
    ])
    .unwrap()
    .observations()
    .to_vec();
    d.push(zacr::Observation::censored(f64::INFINITY));
    SurvivalDataset::new(d).unwrap()
}

/// Log-likelihood assembled from the generating-function series: survival
/// from the series and densities from its numerical slope.
fn series_log_likelihood(m: &ZacrModel, d: &SurvivalDataset) -> f64 {
    let n = m.adaptive_series_len().unwrap();
    let s = |y: f64| m.series_survival_oracle(y, n).unwrap();
    d.iter()
        .map(|o| {
            if o.time == 0.0 {
                (1.0 - s(0.0)).ln()
            } else if o.time.is_infinite() {
                m.cure_fraction().ln()
            } else if o.is_event() {
                let h = 1e-5 * o.time;
                ((s(o.time - h) - s(o.time + h)) / (2.0 * h)).ln()
            } else {
                s(o.time).ln()
            }
        })
        .sum()
}

#[test]
fn likelihood_matches_series_composition() {
    let d = ten_observations();
    for (name, m) in representative_models() {
        let ll = log_likelihood(&m, &d);
        let oracle = series_log_likelihood(&m, &d);
        assert!((ll - oracle).abs() < 1e-6, "{name}: {ll} vs {oracle}");
    }
}

#[test]
fn mixture_likelihood_by_hand() {
    let m = mixture_sim();
    let d = ten_observations();
    let (mu, sigma, p0, p1) = (2.0f64, 1.0f64, 0.3f64, 0.1f64);
    let pdf = |y: f64| {
        let z = (y.ln() - mu) / sigma;
        (-0.5 * z * z).exp() / (y * sigma * (2.0 * std::f64::consts::PI).sqrt())
    };
    let sf = |y: f64| zacr::baseline::std_normal_cdf(-(y.ln() - mu) / sigma);
    let want = 2.0 * p1.ln()
        + [1.5, 4.0, 7.25, 13.0, 30.0]
            .iter()
            .map(|&y| ((1.0 - p0 - p1) * pdf(y)).ln())
            .sum::<f64>()
        + [2.0, 20.0]
            .iter()
            .map(|&y| (p0 + (1.0 - p0 - p1) * sf(y)).ln())
            .sum::<f64>()
        + p0.ln();
    assert!((log_likelihood(&m, &d) - want).abs() < 1e-12);
}

#[test]
fn likelihood_terms_split_by_record_type() {
    let m = geo_app();
    let d = ten_observations();
    let t = log_likelihood_terms(&m, &d);
    assert!((t.atom - 2.0 * m.zero_fraction().ln()).abs() < 1e-14);
    assert_eq!(t.total(), log_likelihood(&m, &d));
    let atom_only = SurvivalDataset::from_pairs(&[(0.0, 1)]).unwrap();
    assert!((log_likelihood(&m, &atom_only) - (1.0f64 / 22.0093).ln()).abs() < 1e-12);
}

fn assert_within_three_se(f: &FitResult, truth: &[f64]) {
    for (i, name) in f.param_names.iter().enumerate() {
        let (est, se) = (f.estimates[i], f.std_errors[i]);
        assert!(se.is_finite() && se > 0.0, "{name}: se {se}");
        assert!(
            (est - truth[i]).abs() <= 3.0 * se,
            "{name}: estimate {est}, truth {}, se {se}",
            truth[i]
        );
    }
}

#[test]
fn mixture_recovery_large_sample() {
    let truth = mixture_sim();
    let cens = calibrate_uniform_censoring(&truth, 0.351).unwrap();
    let d = sample_dataset(&truth, 10_000, &cens, 11).unwrap();
    let f = fit_mle(ZacrVariant::StandardMixture, &d, &FitConfig::default()).unwrap();
    assert!(f.converged && f.information_positive_definite);
    assert_within_three_se(&f, &[2.0, 1.0, 0.3, 0.1]);
    // the zero fraction is estimated by the observed share of zero times
    assert!((f.estimates[3] - d.n_zero() as f64 / d.len() as f64).abs() < 1e-6);
}

#[test]
fn promotion_recovery_large_sample() {
    let truth = promotion_sim();
    let cens = calibrate_uniform_censoring(&truth, 0.372).unwrap();
    let d = sample_dataset(&truth, 10_000, &cens, 12).unwrap();
    let f = fit_mle(ZacrVariant::Promotion, &d, &FitConfig::default()).unwrap();
    assert!(f.converged && f.information_positive_definite);
    assert_eq!(f.param_names, ["mu", "sigma", "tau", "theta"]);
    assert_within_three_se(&f, &[2.0, 1.0, 1.2, 2.3]);
}

#[test]
fn zero_fraction_on_the_boundary() {
    let truth = ZacrModel::standard_mixture(ln(2.0, 1.0), 0.3, 0.0).unwrap();
    let cens = calibrate_uniform_censoring(&truth, 0.35).unwrap();
    let d = sample_dataset(&truth, 10_000, &cens, 13).unwrap();
    assert_eq!(d.n_zero(), 0);
    let f = fit_mle(ZacrVariant::StandardMixture, &d, &FitConfig::default()).unwrap();
    assert!(f.estimates[3] <= 0.01, "p1 = {}", f.estimates[3]);
    assert!((f.estimates[2] - 0.3).abs() < 0.03);
}

#[test]
fn stationary_at_the_optimum() {
    let truth = geo_app();
    let cens = calibrate_uniform_censoring(&truth, 0.2).unwrap();
    let d = sample_dataset(&truth, 3000, &cens, 14).unwrap();
    let f = fit_mle(ZacrVariant::Geometric, &d, &FitConfig::default()).unwrap();
    let g = score(&f.model().unwrap(), &d).unwrap();
    assert!(g.iter().all(|v| v.abs() < 1e-3), "{g:?}");
    assert_eq!(
        f.score_max_abs.unwrap(),
        g.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    );
    // symmetric covariance with positive diagonal
    for i in 0..4 {
        assert!(f.covariance[i][i] > 0.0);
        for j in 0..4 {
            assert!(
                (f.covariance[i][j] - f.covariance[j][i]).abs()
                    <= 1e-12 * f.covariance[i][i].abs().max(1.0)
            );
        }
    }
}

#[test]
fn fits_are_deterministic() {
    let truth = nb_app();
    let cens = calibrate_uniform_censoring(&truth, 0.2).unwrap();
    let d = sample_dataset(&truth, 800, &cens, 15).unwrap();
    let v = ZacrVariant::negative_binomial(0.5).unwrap();
    let a = fit_mle(v, &d, &FitConfig::default()).unwrap();
    let b = fit_mle(v, &d, &FitConfig::default()).unwrap();
    assert_eq!(a.estimates, b.estimates);
    assert_eq!(a.log_lik, b.log_lik);
}

#[test]
fn more_flexible_start_set_never_hurts() {
    let truth = promotion_sim();
    let cens = calibrate_uniform_censoring(&truth, 0.372).unwrap();
    let d = sample_dataset(&truth, 500, &cens, 16).unwrap();
    let one = fit_mle(
        ZacrVariant::Promotion,
        &d,
        &FitConfig {
            n_starts: 1,
            ..FitConfig::default()
        },
    )
    .unwrap();
    let five = fit_mle(ZacrVariant::Promotion, &d, &FitConfig::default()).unwrap();
    assert!(five.log_lik >= one.log_lik - 1e-8);
}

#[test]
fn wald_intervals_use_the_normal_quantile() {
    assert!((wald_z(0.95).unwrap() - 1.959963984540054).abs() < 1e-15);
    assert!(wald_z(1.0).is_err());
    let truth = mixture_sim();
    let cens = calibrate_uniform_censoring(&truth, 0.351).unwrap();
    let d = sample_dataset(&truth, 500, &cens, 17).unwrap();
    let f = fit_mle(ZacrVariant::StandardMixture, &d, &FitConfig::default()).unwrap();
    for (i, iv) in wald_intervals(&f, 0.95).unwrap().into_iter().enumerate() {
        let iv = iv.unwrap();
        let half = 1.959963984540054 * f.std_errors[i];
        assert!(
            (iv.upper - iv.estimate - half).abs() < 1e-14
                && (iv.estimate - iv.lower - half).abs() < 1e-14
        );
    }
}

#[test]
fn aic_prefers_the_generating_variant_on_clear_data() {
    // mixture and promotion differ strongly in the shape of the susceptible law
    let truth = mixture_sim();
    let cens = calibrate_uniform_censoring(&truth, 0.351).unwrap();
    let d = sample_dataset(&truth, 5000, &cens, 18).unwrap();
    let fits: Vec<FitResult> = [ZacrVariant::StandardMixture, ZacrVariant::Promotion]
        .iter()
        .map(|&v| fit_mle(v, &d, &FitConfig::default()).unwrap())
        .collect();
    assert_eq!(rank_by_aic(&fits)[0], 0);
    for f in &fits {
        assert!((f.aic - (2.0 * 4.0 - 2.0 * f.log_lik)).abs() < 1e-9);
    }
}

#[test]
fn non_identifiable_data_is_rejected() {
    let zeros = SurvivalDataset::from_pairs(&[(0.0, 1), (0.0, 1)]).unwrap();
    let censored = SurvivalDataset::from_pairs(&[(1.0, 0), (2.0, 0)]).unwrap();
    for d in [zeros, censored] {
        match fit_mle(ZacrVariant::Geometric, &d, &FitConfig::default()) {
            Err(ZacrError::NonIdentifiable(_)) => {}
            other => panic!("{other:?}"),
        }
    }
}
