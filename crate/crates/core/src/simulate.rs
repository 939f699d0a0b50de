//! Simulation of censored ZACR data and the Monte Carlo estimator study.
//!
//! Each subject is first assigned to the cured, zero-time or susceptible
//! class. Cured subjects are censored at their censoring draw, zero-time
//! subjects are recorded as `(0, event)` and susceptible subjects get an
//! inverse-CDF lifetime from the proper susceptible law, then the usual
//! `min(T, C)` with indicator `T <= C`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{Baseline, FittableBaseline};
use crate::data::{Observation, SurvivalDataset};
use crate::error::{Result, ZacrError};
use crate::inference::{
    fit_mle_with, natural_params, param_names, wald_intervals, FitConfig, FitResult,
};
use crate::model::{ZacrModel, ZacrVariant};
use crate::numeric::integrate;

/// Censoring-time law, shared by cured and susceptible subjects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CensoringSpec {
    /// No censoring; cured subjects are censored at `+inf`.
    None,
    Uniform {
        c_max: f64,
    },
    Exponential {
        rate: f64,
    },
}

impl CensoringSpec {
    pub fn uniform(c_max: f64) -> Result<Self> {
        if !(c_max.is_finite() && c_max > 0.0) {
            return Err(ZacrError::domain(format!(
                "uniform censoring bound must be positive, got {c_max}"
            )));
        }
        Ok(CensoringSpec::Uniform { c_max })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(ZacrError::domain(format!(
                "exponential censoring rate must be positive, got {rate}"
            )));
        }
        Ok(CensoringSpec::Exponential { rate })
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            CensoringSpec::None => f64::INFINITY,
            CensoringSpec::Uniform { c_max } => c_max * rng.random::<f64>(),
            CensoringSpec::Exponential { rate } => -(1.0 - rng.random::<f64>()).ln() / rate,
        }
    }
}

/// Draw `m` subjects from `model` using `rng`.
pub fn sample_dataset_with_rng<B: Baseline, R: Rng + ?Sized>(
    model: &ZacrModel<B>,
    m: usize,
    cens: &CensoringSpec,
    rng: &mut R,
) -> Result<SurvivalDataset> {
    if m == 0 {
        return Err(ZacrError::domain("sample size must be positive"));
    }
    let cure = model.cure_fraction();
    let zero = model.zero_fraction();
    let mut obs = Vec::with_capacity(m);
    for _ in 0..m {
        let class: f64 = rng.random();
        if class < cure {
            obs.push(Observation::censored(cens.draw(rng)));
        } else if class < cure + zero {
            obs.push(Observation::event(0.0));
        } else {
            let t = loop {
                let u: f64 = rng.random();
                if u > 0.0 {
                    break model.proper_quantile(u)?;
                }
            };
            let c = cens.draw(rng);
            obs.push(if t <= c {
                Observation::event(t)
            } else {
                Observation::censored(c)
            });
        }
    }
    // a zero censoring draw would produce an invalid (0, censored) record
    for o in obs.iter_mut() {
        if o.time == 0.0 && !o.is_event() {
            o.time = f64::MIN_POSITIVE;
        }
    }
    SurvivalDataset::new(obs)
}

/// Deterministic draw of `m` subjects from a single seed.
pub fn sample_dataset<B: Baseline>(
    model: &ZacrModel<B>,
    m: usize,
    cens: &CensoringSpec,
    seed: u64,
) -> Result<SurvivalDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_dataset_with_rng(model, m, cens, &mut rng)
}

/// Probability that a simulated record is censored.
pub fn expected_censoring_rate<B: Baseline>(model: &ZacrModel<B>, cens: &CensoringSpec) -> f64 {
    let sp = |c: f64| model.proper_survival(c).unwrap_or(0.0);
    let p_late = match *cens {
        CensoringSpec::None => 0.0,
        CensoringSpec::Uniform { c_max } => integrate(sp, 0.0, c_max, 1e-11) / c_max,
        CensoringSpec::Exponential { rate } => {
            // substitute c = -ln(1 - v) / rate so the integral runs over v in [0, 1)
            integrate(
                |v| {
                    if v >= 1.0 {
                        0.0
                    } else {
                        sp(-(1.0 - v).ln() / rate)
                    }
                },
                0.0,
                1.0,
                1e-11,
            )
        }
    };
    model.cure_fraction() + model.event_weight() * p_late
}

/// Uniform `c_max` giving the requested expected censoring rate, by bisection on `ln c_max`.
pub fn calibrate_uniform_censoring<B: Baseline>(
    model: &ZacrModel<B>,
    target: f64,
) -> Result<CensoringSpec> {
    let lo_rate = model.cure_fraction();
    let hi_rate = model.cure_fraction() + model.event_weight();
    if !(target > lo_rate && target < hi_rate) {
        return Err(ZacrError::domain(format!(
            "target censoring rate {target} is outside the attainable range ({lo_rate}, {hi_rate})"
        )));
    }
    let rate_at =
        |ln_c: f64| expected_censoring_rate(model, &CensoringSpec::Uniform { c_max: ln_c.exp() });
    let median = model.proper_quantile(0.5)?.ln();
    let (mut lo, mut hi) = (median - 5.0, median + 5.0);
    while rate_at(lo) < target {
        lo -= 5.0;
    }
    while rate_at(hi) > target {
        hi += 5.0;
        if hi > median + 200.0 {
            return Err(ZacrError::domain(
                "censoring calibration failed to bracket the target",
            ));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if rate_at(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    CensoringSpec::uniform((0.5 * (lo + hi)).exp())
}

/// Per-parameter Monte Carlo summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McRow {
    pub name: String,
    pub truth: f64,
    pub bias: f64,
    pub rmse: f64,
    /// Share of converged replications whose interval covers the truth.
    pub cp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub variant: String,
    pub eta: f64,
    pub rows: Vec<McRow>,
    #[serde(rename = "B")]
    pub b: usize,
    pub m: usize,
    pub n_converged: usize,
    /// Largest score max-norm over converged replications.
    pub max_score_abs: f64,
    /// Converged replications with a positive-definite observed information.
    pub n_information_pd: usize,
    pub mean_censoring_rate: f64,
    pub seed: u64,
    pub level: f64,
    pub censoring: CensoringSpec,
    /// More than 20% of replications failed to converge.
    pub warning: bool,
}

impl MonteCarloReport {
    pub fn row(&self, name: &str) -> Option<&McRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

/// Bias, RMSE and coverage rows in the layout of a simulation-study table.
pub fn format_mc_report(r: &MonteCarloReport) -> String {
    let mut out = format!(
        "{} (eta = {}), m = {}, B = {}, converged = {}, mean censoring = {:.4}\n",
        r.variant, r.eta, r.m, r.b, r.n_converged, r.mean_censoring_rate
    );
    out.push_str(&format!(
        "{:>6} {:>8} {:>9} {:>9} {:>9} {:>7}\n",
        "n", "param", "truth", "bias", "rmse", "cp"
    ));
    for row in &r.rows {
        out.push_str(&format!(
            "{:>6} {:>8} {:>9.4} {:>9.4} {:>9.4} {:>7.4}\n",
            r.m, row.name, row.truth, row.bias, row.rmse, row.cp
        ));
    }
    if r.warning {
        out.push_str("warning: more than 20% of replications failed to converge\n");
    }
    out
}

/// Independent substream for replication `index`.
pub fn replication_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn replication_fit_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

struct Replicate {
    censoring: f64,
    fit: Option<ReplicateFit>,
}

struct ReplicateFit {
    estimates: Vec<f64>,
    covered: Vec<bool>,
    score_max_abs: f64,
    information_positive_definite: bool,
}

/// Simulate-fit-summarize loop with an injectable fitter.
///
/// `fitter` receives the dataset and a per-replication seed. Replications run
/// in parallel; aggregation is keyed by replication index so the report does
/// not depend on scheduling.
pub fn run_study_with<B, F>(
    truth: &ZacrModel<B>,
    m: usize,
    b: usize,
    cens: &CensoringSpec,
    seed: u64,
    level: f64,
    fitter: F,
) -> Result<MonteCarloReport>
where
    B: FittableBaseline,
    F: Fn(&SurvivalDataset, u64) -> Result<FitResult> + Sync,
{
    if b == 0 {
        return Err(ZacrError::domain("number of replications must be positive"));
    }
    let true_values = natural_params(truth);
    let reps: Vec<Replicate> = (0..b as u64)
        .into_par_iter()
        .map(|i| -> Result<Replicate> {
            let mut rng = replication_rng(seed, i);
            let d = sample_dataset_with_rng(truth, m, cens, &mut rng)?;
            let censoring = d.censoring_fraction();
            let fit = match fitter(&d, replication_fit_seed(seed, i)) {
                Ok(f) if f.converged => {
                    let covered = wald_intervals(&f, level)?
                        .iter()
                        .zip(&true_values)
                        .map(|(iv, &t)| iv.as_ref().map(|iv| iv.contains(t)).unwrap_or(false))
                        .collect();
                    Some(ReplicateFit {
                        score_max_abs: f.score_max_abs.unwrap_or(f64::NAN),
                        information_positive_definite: f.information_positive_definite,
                        estimates: f.estimates,
                        covered,
                    })
                }
                _ => None,
            };
            Ok(Replicate { censoring, fit })
        })
        .collect::<Result<Vec<_>>>()?;

    let fitted: Vec<&ReplicateFit> = reps.iter().filter_map(|r| r.fit.as_ref()).collect();
    let n_ok = fitted.len();
    let names = param_names::<B>(truth.variant());
    let rows = names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let t = true_values[j];
            let (mut s1, mut s2, mut hits) = (0.0, 0.0, 0usize);
            for f in &fitted {
                let e = f.estimates[j] - t;
                s1 += e;
                s2 += e * e;
                hits += f.covered[j] as usize;
            }
            let n = n_ok as f64;
            McRow {
                name: name.clone(),
                truth: t,
                bias: if n_ok > 0 { s1 / n } else { f64::NAN },
                rmse: if n_ok > 0 { (s2 / n).sqrt() } else { f64::NAN },
                cp: if n_ok > 0 { hits as f64 / n } else { f64::NAN },
            }
        })
        .collect();
    Ok(MonteCarloReport {
        variant: truth.variant().label().to_string(),
        eta: truth.variant().eta(),
        rows,
        b,
        m,
        n_converged: n_ok,
        max_score_abs: fitted
            .iter()
            .map(|f| f.score_max_abs)
            .fold(
                0.0,
                |a: f64, v| if v.is_nan() { f64::NAN } else { a.max(v) },
            ),
        n_information_pd: fitted
            .iter()
            .filter(|f| f.information_positive_definite)
            .count(),
        mean_censoring_rate: reps.iter().map(|r| r.censoring).sum::<f64>() / b as f64,
        seed,
        level,
        censoring: *cens,
        warning: (b - n_ok) as f64 > 0.2 * b as f64,
    })
}

/// Monte Carlo study of the maximum-likelihood estimator at nominal 95% coverage.
pub fn monte_carlo_study<B: FittableBaseline>(
    variant: ZacrVariant,
    truth: &ZacrModel<B>,
    m: usize,
    b: usize,
    cens: &CensoringSpec,
    seed: u64,
    fit_cfg: &FitConfig,
) -> Result<MonteCarloReport> {
    if variant != truth.variant() {
        return Err(ZacrError::domain(format!(
            "study variant {variant} does not match the true model's variant {}",
            truth.variant()
        )));
    }
    if b < 2 {
        return Err(ZacrError::domain(
            "a Monte Carlo study needs at least two replications",
        ));
    }
    run_study_with(truth, m, b, cens, seed, 0.95, |d, s| {
        let cfg = FitConfig {
            seed: s,
            ..fit_cfg.clone()
        };
        fit_mle_with::<B>(variant, d, &cfg)
    })
}
