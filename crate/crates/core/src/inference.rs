//! Censored maximum likelihood for ZACR models with fixed dispersion.
//!
//! The optimizer works on an unconstrained vector: `ln sigma` for the
//! log-normal scale, logs of the positive cause parameters and an additive
//! log-ratio for the mixture simplex `(p0, p1, 1 - p0 - p1)`. Estimates,
//! the observed information and standard errors are reported on the
//! natural scale.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::baseline::std_normal_quantile;
use crate::baseline::{Baseline, FittableBaseline, LogNormal};
use crate::data::SurvivalDataset;
use crate::error::{Result, ZacrError};
use crate::model::{ZacrModel, ZacrVariant};
use crate::optimize::{central_gradient, central_hessian, fd_steps, nelder_mead, SimplexOptions};

/// The three additive pieces of the censored log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLikTerms {
    /// `sum_{y_i = 0} ln zero_fraction`
    pub atom: f64,
    /// `sum_{y_i > 0, event} ln(event_weight * f_p(y_i))`
    pub event: f64,
    /// `sum_{y_i > 0, censored} ln S_zp(y_i)`
    pub censored: f64,
}

impl LogLikTerms {
    pub fn total(&self) -> f64 {
        let t = self.atom + self.event + self.censored;
        if t.is_nan() {
            f64::NEG_INFINITY
        } else {
            t
        }
    }
}

pub fn log_likelihood_terms<B: Baseline>(m: &ZacrModel<B>, d: &SurvivalDataset) -> LogLikTerms {
    let mut n_zero = 0usize;
    let mut n_event = 0usize;
    let mut event = 0.0;
    let mut censored = 0.0;
    for o in d.iter() {
        if o.time == 0.0 {
            n_zero += 1;
        } else if o.is_event() {
            n_event += 1;
            event += m.proper_ln_density_at(&m.baseline().eval(o.time));
        } else if o.time == f64::INFINITY {
            censored += m.cure_fraction().ln();
        } else {
            let p = m.baseline().eval(o.time);
            censored += m.population_survival_at(p.cdf, p.sf).ln();
        }
    }
    let atom = if n_zero > 0 {
        n_zero as f64 * m.zero_fraction().ln()
    } else {
        0.0
    };
    if n_event > 0 {
        event += n_event as f64 * m.event_weight().ln();
    }
    LogLikTerms {
        atom,
        event,
        censored,
    }
}

/// Censored log-likelihood; `-inf` when any contribution has a nonpositive argument.
pub fn log_likelihood<B: Baseline>(m: &ZacrModel<B>, d: &SurvivalDataset) -> f64 {
    log_likelihood_terms(m, d).total()
}

/// Natural-scale parameter names: baseline parameters followed by the cause pair.
pub fn param_names<B: FittableBaseline>(variant: ZacrVariant) -> Vec<String> {
    B::param_names()
        .iter()
        .chain(variant.cause_param_names().iter())
        .map(|s| s.to_string())
        .collect()
}

pub fn natural_params<B: FittableBaseline>(m: &ZacrModel<B>) -> Vec<f64> {
    let mut v = m.baseline().natural();
    v.extend_from_slice(&m.cause_params());
    v
}

pub fn model_from_natural<B: FittableBaseline>(
    variant: ZacrVariant,
    p: &[f64],
) -> Result<ZacrModel<B>> {
    let nb = B::param_names().len();
    if p.len() != nb + 2 {
        return Err(ZacrError::domain(format!(
            "expected {} parameters, got {}",
            nb + 2,
            p.len()
        )));
    }
    let baseline = B::from_natural(&p[..nb])?;
    ZacrModel::from_cause_params(variant, baseline, [p[nb], p[nb + 1]])
}

const SIMPLEX_FLOOR: f64 = 1e-12;

fn to_unconstrained<B: FittableBaseline>(m: &ZacrModel<B>) -> Vec<f64> {
    let mut x = m.baseline().to_unconstrained();
    let [a, b] = m.cause_params();
    match m.variant() {
        ZacrVariant::StandardMixture => {
            let (p0, p1) = (a.max(SIMPLEX_FLOOR), b.max(SIMPLEX_FLOOR));
            let w = (1.0 - a - b).max(SIMPLEX_FLOOR);
            x.push((p0 / w).ln());
            x.push((p1 / w).ln());
        }
        _ => {
            x.push(a.ln());
            x.push(b.ln());
        }
    }
    x
}

fn model_from_unconstrained<B: FittableBaseline>(
    variant: ZacrVariant,
    x: &[f64],
) -> Result<ZacrModel<B>> {
    let nb = B::param_names().len();
    let baseline = B::from_unconstrained(&x[..nb])?;
    let (u, v) = (x[nb], x[nb + 1]);
    let pair = match variant {
        ZacrVariant::StandardMixture => {
            let top = u.max(v).max(0.0);
            let (e0, e1, ew) = ((u - top).exp(), (v - top).exp(), (-top).exp());
            let denom = e0 + e1 + ew;
            [e0 / denom, e1 / denom]
        }
        _ => [u.exp(), v.exp()],
    };
    ZacrModel::from_cause_params(variant, baseline, pair)
}

/// Optimizer settings for [`fit_mle`].
#[derive(Debug, Clone)]
pub struct FitConfig {
    /// Number of simplex starts; the first uses the data-driven initial values.
    pub n_starts: usize,
    /// Half-width of the uniform perturbation applied to later starts (unconstrained scale).
    pub perturbation: f64,
    pub f_tol: f64,
    pub x_tol: f64,
    pub max_evals_per_start: usize,
    /// Simplex rebuilds at a converged point, to catch premature collapse.
    pub max_restarts: usize,
    pub seed: u64,
    /// Natural-scale starting point; overrides the data-driven initial values.
    pub initial: Option<Vec<f64>>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            n_starts: 5,
            perturbation: 0.5,
            f_tol: 1e-8,
            x_tol: 1e-7,
            max_evals_per_start: 20_000,
            max_restarts: 3,
            seed: 0x5eed,
            initial: None,
        }
    }
}

fn serialize_variant<S: Serializer>(v: &ZacrVariant, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(v.label())
}

/// Outcome of a maximum-likelihood fit.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    #[serde(serialize_with = "serialize_variant")]
    pub variant: ZacrVariant,
    /// Dispersion implied by the variant (fixed, not estimated).
    pub eta: f64,
    pub param_names: Vec<String>,
    pub estimates: Vec<f64>,
    /// `sqrt(diag(covariance))`; NaN (serialized as null) when unavailable.
    pub std_errors: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub log_lik: f64,
    pub aic: f64,
    pub converged: bool,
    pub n_starts: usize,
    pub n_evaluations: usize,
    pub information_positive_definite: bool,
    /// Max-norm of the natural-scale central-difference score at the estimate.
    pub score_max_abs: Option<f64>,
}

impl FitResult {
    /// Number of free parameters.
    pub fn k(&self) -> usize {
        self.estimates.len()
    }

    pub fn model(&self) -> Result<ZacrModel<LogNormal>> {
        model_from_natural(self.variant, &self.estimates)
    }

    pub fn model_with<B: FittableBaseline>(&self) -> Result<ZacrModel<B>> {
        model_from_natural(self.variant, &self.estimates)
    }

    pub fn estimate(&self, name: &str) -> Option<f64> {
        self.param_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.estimates[i])
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.param_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.std_errors[i])
    }
}

/// Data-driven starting point on the natural scale.
///
/// Zero fraction from the share of zero times, cure fraction from the share of
/// subjects censored beyond the 90th percentile of event times, baseline spread
/// from log event times and baseline location chosen so that the susceptible
/// median matches the median event time.
pub fn initial_values<B: FittableBaseline>(
    variant: ZacrVariant,
    d: &SurvivalDataset,
) -> Result<Vec<f64>> {
    d.check_identifiable()?;
    let m = d.len() as f64;
    let mut events: Vec<f64> = d
        .iter()
        .filter(|o| o.time > 0.0 && o.is_event())
        .map(|o| o.time)
        .collect();
    events.sort_by(f64::total_cmp);
    let q90 = events[((0.9 * (events.len() - 1) as f64).round()) as usize];
    let median = events[events.len() / 2];
    let late_censored = d.iter().filter(|o| !o.is_event() && o.time > q90).count() as f64;

    let mut zero = (d.n_zero() as f64 / m).clamp(0.005, 0.9);
    let mut cure = (late_censored / m).clamp(0.005, 0.9);
    if zero + cure > 0.95 {
        let s = 0.95 / (zero + cure);
        zero *= s;
        cure *= s;
    }
    let eta = variant.eta();
    let from_fraction = |p: f64| -> f64 {
        match variant {
            ZacrVariant::Promotion => -p.ln(),
            _ => (p.powf(-eta) - 1.0) / eta,
        }
    };
    let pair = match variant {
        ZacrVariant::StandardMixture => [cure, zero],
        ZacrVariant::Promotion => [from_fraction(zero), from_fraction(cure)],
        _ => [from_fraction(cure), from_fraction(zero)],
    };
    let logs: Vec<f64> = events.iter().map(|t| t.ln()).collect();
    let rough = B::from_log_time_moments(&logs);
    let probe = ZacrModel::from_cause_params(variant, rough.clone(), pair)?;
    let baseline = rough
        .relocated(probe.baseline_level(0.5), median)
        .unwrap_or(rough);
    let mut v = baseline.natural();
    v.extend_from_slice(&pair);
    Ok(v)
}

/// Negative Hessian of the log-likelihood on the natural scale.
pub fn observed_information<B: FittableBaseline>(
    m: &ZacrModel<B>,
    d: &SurvivalDataset,
) -> Result<Vec<Vec<f64>>> {
    let variant = m.variant();
    let x = natural_params(m);
    let nll = |p: &[f64]| match model_from_natural::<B>(variant, p) {
        Ok(mm) => -log_likelihood(&mm, d),
        Err(_) => f64::NAN,
    };
    central_hessian(nll, &x, &fd_steps(&x)).ok_or_else(|| {
        ZacrError::Evaluation("non-finite log-likelihood in the Hessian stencil".into())
    })
}

/// Natural-scale central-difference score.
pub fn score<B: FittableBaseline>(m: &ZacrModel<B>, d: &SurvivalDataset) -> Result<Vec<f64>> {
    let variant = m.variant();
    let x = natural_params(m);
    let ll = |p: &[f64]| match model_from_natural::<B>(variant, p) {
        Ok(mm) => log_likelihood(&mm, d),
        Err(_) => f64::NAN,
    };
    central_gradient(ll, &x, &fd_steps(&x)).ok_or_else(|| {
        ZacrError::Evaluation("non-finite log-likelihood in the gradient stencil".into())
    })
}

/// Inverse of a symmetric positive-definite matrix; `None` if Cholesky fails.
pub fn invert_spd(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let chol = m.cholesky()?;
    let inv = chol.inverse();
    Some(
        (0..n)
            .map(|i| (0..n).map(|j| inv[(i, j)]).collect())
            .collect(),
    )
}

struct StartOutcome {
    x: Vec<f64>,
    fx: f64,
    evals: usize,
    converged: bool,
}

/// Maximum-likelihood fit with the log-normal baseline.
pub fn fit_mle(variant: ZacrVariant, d: &SurvivalDataset, cfg: &FitConfig) -> Result<FitResult> {
    fit_mle_with::<LogNormal>(variant, d, cfg)
}

/// Maximum-likelihood fit for any fittable baseline.
pub fn fit_mle_with<B: FittableBaseline>(
    variant: ZacrVariant,
    d: &SurvivalDataset,
    cfg: &FitConfig,
) -> Result<FitResult> {
    variant.validate()?;
    d.check_identifiable()?;
    let init = match &cfg.initial {
        Some(v) => v.clone(),
        None => initial_values::<B>(variant, d)?,
    };
    let x_init = to_unconstrained(&model_from_natural::<B>(variant, &init)?);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let starts: Vec<Vec<f64>> = (0..cfg.n_starts.max(1))
        .map(|s| {
            if s == 0 {
                x_init.clone()
            } else {
                x_init
                    .iter()
                    .map(|v| v + cfg.perturbation * (2.0 * rng.random::<f64>() - 1.0))
                    .collect()
            }
        })
        .collect();

    let objective = |x: &[f64]| match model_from_unconstrained::<B>(variant, x) {
        Ok(m) => -log_likelihood(&m, d),
        Err(_) => f64::INFINITY,
    };
    let opts = SimplexOptions {
        f_tol: cfg.f_tol,
        x_tol: cfg.x_tol,
        max_evals: cfg.max_evals_per_start,
        ..Default::default()
    };

    let outcomes: Vec<StartOutcome> = starts
        .par_iter()
        .map(|x0| {
            let mut r = nelder_mead(objective, x0, &opts);
            let mut evals = r.evals;
            for _ in 0..cfg.max_restarts {
                if !r.converged {
                    break;
                }
                let again = nelder_mead(
                    objective,
                    &r.x,
                    &SimplexOptions {
                        initial_step: 0.05,
                        ..opts
                    },
                );
                evals += again.evals;
                let improved = r.fx - again.fx;
                if again.fx <= r.fx {
                    r = again;
                }
                if improved <= cfg.f_tol {
                    break;
                }
            }
            StartOutcome {
                x: r.x,
                fx: r.fx,
                evals,
                converged: r.converged,
            }
        })
        .collect();

    let total_evals = outcomes.iter().map(|o| o.evals).sum();
    let best = outcomes
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.fx.total_cmp(&b.fx).then(ia.cmp(ib)))
        .map(|(_, o)| o)
        .expect("at least one start");
    if !best.fx.is_finite() {
        return Err(ZacrError::Evaluation(
            "no start reached a finite log-likelihood".into(),
        ));
    }

    let model = model_from_unconstrained::<B>(variant, &best.x)?;
    let (model, log_lik) = newton_polish(model, d, cfg.f_tol);
    summarize(
        &model,
        d,
        log_lik,
        best.converged,
        outcomes.len(),
        total_evals,
    )
}

const NEWTON_STEPS: usize = 5;
const NEWTON_SCORE_TOL: f64 = 1e-7;

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Natural-scale Newton iterations on the score equation, started at the
/// simplex optimum. Along well-determined directions the simplex stops on a
/// likelihood that is flat to its tolerance while the score can remain
/// visibly nonzero; these steps remove that residual. A step is accepted
/// only if it shrinks the score and does not lower the log-likelihood by
/// more than `ll_slack`.
fn newton_polish<B: FittableBaseline>(
    mut model: ZacrModel<B>,
    d: &SurvivalDataset,
    ll_slack: f64,
) -> (ZacrModel<B>, f64) {
    let variant = model.variant();
    let mut log_lik = log_likelihood(&model, d);
    let Ok(mut g) = score(&model, d) else {
        return (model, log_lik);
    };
    for _ in 0..NEWTON_STEPS {
        let g_norm = max_abs(&g);
        if g_norm < NEWTON_SCORE_TOL {
            break;
        }
        let Some(cov) = observed_information(&model, d)
            .ok()
            .and_then(|h| invert_spd(&h))
        else {
            break;
        };
        let step: Vec<f64> = cov
            .iter()
            .map(|row| row.iter().zip(&g).map(|(c, gi)| c * gi).sum())
            .collect();
        let x = natural_params(&model);
        let mut accepted = false;
        let mut scale = 1.0;
        for _ in 0..10 {
            let trial: Vec<f64> = x
                .iter()
                .zip(&step)
                .map(|(xi, si)| xi + scale * si)
                .collect();
            if let Ok(m) = model_from_natural::<B>(variant, &trial) {
                let ll = log_likelihood(&m, d);
                if ll.is_finite() && ll >= log_lik - ll_slack {
                    if let Ok(g_new) = score(&m, d) {
                        if max_abs(&g_new) < g_norm {
                            model = m;
                            log_lik = log_lik.max(ll);
                            g = g_new;
                            accepted = true;
                            break;
                        }
                    }
                }
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let final_ll = log_likelihood(&model, d);
    (model, final_ll)
}

fn summarize<B: FittableBaseline>(
    model: &ZacrModel<B>,
    d: &SurvivalDataset,
    log_lik: f64,
    converged: bool,
    n_starts: usize,
    n_evaluations: usize,
) -> Result<FitResult> {
    let variant = model.variant();
    let estimates = natural_params(model);
    let k = estimates.len();
    let info = observed_information(model, d).ok();
    let cov = info.as_ref().and_then(|h| invert_spd(h));
    let information_positive_definite = cov.is_some();
    let covariance = cov.unwrap_or_else(|| vec![vec![f64::NAN; k]; k]);
    let std_errors = (0..k)
        .map(|i| {
            let v = covariance[i][i];
            if v >= 0.0 {
                v.sqrt()
            } else {
                f64::NAN
            }
        })
        .collect();
    let score_max_abs = score(model, d)
        .ok()
        .map(|g| g.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    Ok(FitResult {
        variant,
        eta: variant.eta(),
        param_names: param_names::<B>(variant),
        estimates,
        std_errors,
        covariance,
        log_lik,
        aic: aic_value(k, log_lik),
        converged,
        n_starts,
        n_evaluations,
        information_positive_definite,
        score_max_abs,
    })
}

pub(crate) fn aic_value(k: usize, log_lik: f64) -> f64 {
    2.0 * k as f64 - 2.0 * log_lik
}

/// `2k - 2 log L`.
pub fn aic(f: &FitResult) -> f64 {
    aic_value(f.k(), f.log_lik)
}

/// Indices of `fits` ordered by ascending AIC, ties broken by fewer parameters.
pub fn rank_by_aic(fits: &[FitResult]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..fits.len()).collect();
    idx.sort_by(|&a, &b| {
        aic(&fits[a])
            .total_cmp(&aic(&fits[b]))
            .then(fits[a].k().cmp(&fits[b].k()))
    });
    idx
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaldInterval {
    pub name: String,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

impl WaldInterval {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

/// Two-sided normal quantile `z_{(1 + level) / 2}`.
pub fn wald_z(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(ZacrError::domain(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    std_normal_quantile(0.5 * (1.0 + level))
}

/// `estimate +/- z * std_error` per parameter on the natural scale.
///
/// A parameter gets an `IntervalUnavailable` error when the fit did not
/// converge or its information matrix is not positive definite.
pub fn wald_intervals(f: &FitResult, level: f64) -> Result<Vec<Result<WaldInterval>>> {
    let z = wald_z(level)?;
    Ok(f.param_names
        .iter()
        .zip(f.estimates.iter().zip(&f.std_errors))
        .map(|(name, (&est, &se))| {
            if !f.converged {
                return Err(ZacrError::IntervalUnavailable(format!(
                    "{name}: fit did not converge"
                )));
            }
            if !f.information_positive_definite || !se.is_finite() {
                return Err(ZacrError::IntervalUnavailable(format!(
                    "{name}: covariance is not positive definite"
                )));
            }
            Ok(WaldInterval {
                name: name.clone(),
                estimate: est,
                lower: est - z * se,
                upper: est + z * se,
            })
        })
        .collect())
}
