//! The unified zero-adjusted cure-rate (ZACR) survival model.
//!
//! Population survival has three parts: an atom at time zero
//! (`zero_fraction`), a plateau that is never left (`cure_fraction`) and a
//! proper susceptible lifetime law weighted by `event_weight`:
//!
//! ```text
//! S_zp(y) = cure + (1 - cure - zero) * S_p(y)
//! ```
//!
//! Four cause-count laws are supported. The negative-binomial family is
//! parameterized by `alpha0 = theta * pi0` and `alpha1 = theta * pi1`, the
//! only combinations of `(theta, pi0, pi1)` the survival function depends on.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::baseline::{Baseline, BaselinePoint, LogNormal};
use crate::causes::{count_pmf, CauseCount};
use crate::error::{Result, ZacrError};

/// Cause-count law behind a model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ZacrVariant {
    /// Bernoulli causes (`eta = -1`), parameters `(p0, p1)`.
    StandardMixture,
    /// Poisson causes (`eta -> 0`), parameters `(tau, theta)`.
    Promotion,
    /// Geometric causes (`eta = 1`), parameters `(alpha0, alpha1)`.
    Geometric,
    /// Negative-binomial causes with fixed dispersion, parameters `(alpha0, alpha1)`.
    NegBinomial { eta: f64 },
}

impl ZacrVariant {
    pub fn negative_binomial(eta: f64) -> Result<Self> {
        let v = ZacrVariant::NegBinomial { eta };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        if let ZacrVariant::NegBinomial { eta } = *self {
            if !(eta.is_finite() && eta >= -1.0) || eta == 0.0 {
                return Err(ZacrError::domain(format!(
                    "negative-binomial dispersion must satisfy eta >= -1 and eta != 0, got {eta}"
                )));
            }
        }
        Ok(())
    }

    /// Dispersion of the cause count this variant corresponds to.
    pub fn eta(&self) -> f64 {
        match *self {
            ZacrVariant::StandardMixture => -1.0,
            ZacrVariant::Promotion => 0.0,
            ZacrVariant::Geometric => 1.0,
            ZacrVariant::NegBinomial { eta } => eta,
        }
    }

    /// Short command-line name.
    pub fn label(&self) -> &'static str {
        match self {
            ZacrVariant::StandardMixture => "mixture",
            ZacrVariant::Promotion => "promotion",
            ZacrVariant::Geometric => "geo",
            ZacrVariant::NegBinomial { .. } => "nb",
        }
    }

    /// Names of the cause-level parameters in vector order.
    pub fn cause_param_names(&self) -> [&'static str; 2] {
        match self {
            ZacrVariant::StandardMixture => ["p0", "p1"],
            ZacrVariant::Promotion => ["tau", "theta"],
            ZacrVariant::Geometric | ZacrVariant::NegBinomial { .. } => ["alpha0", "alpha1"],
        }
    }
}

impl fmt::Display for ZacrVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZacrVariant::NegBinomial { eta } => write!(f, "nb(eta={eta})"),
            other => f.write_str(other.label()),
        }
    }
}

/// Three-way split of the population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationSurvivalDecomposition {
    pub zero_fraction: f64,
    pub cure_fraction: f64,
    pub event_weight: f64,
}

/// Value of the two-part population density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PopulationDensity {
    /// Probability mass at `y = 0`.
    Atom(f64),
    /// Continuous density for `y > 0`.
    Density(f64),
}

impl PopulationDensity {
    pub fn value(&self) -> f64 {
        match *self {
            PopulationDensity::Atom(v) | PopulationDensity::Density(v) => v,
        }
    }
}

/// A fully specified ZACR model. Immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct ZacrModel<B = LogNormal> {
    variant: ZacrVariant,
    baseline: B,
    // p0 / theta / alpha0
    cure_param: f64,
    // p1 / tau / alpha1
    zero_param: f64,
    cure: f64,
    zero: f64,
    weight: f64,
    // 1 - cure without cancellation, and its log: normalizer of the proper susceptible law
    susceptible: f64,
    ln_susceptible: f64,
}

/// `(1 + eta * x)^(-1/eta)` in log space.
#[inline]
fn nb_power(eta: f64, x: f64) -> f64 {
    (-(eta * x).ln_1p() / eta).exp()
}

impl<B: Baseline> ZacrModel<B> {
    pub fn standard_mixture(baseline: B, p0: f64, p1: f64) -> Result<Self> {
        if !(p0.is_finite() && p1.is_finite() && p0 >= 0.0 && p1 >= 0.0) {
            return Err(ZacrError::domain(format!(
                "mixture probabilities must be nonnegative, got p0={p0}, p1={p1}"
            )));
        }
        if p0 + p1 > 1.0 {
            return Err(ZacrError::domain(format!(
                "mixture requires p0 + p1 <= 1, got {}",
                p0 + p1
            )));
        }
        Ok(Self::assemble(
            ZacrVariant::StandardMixture,
            baseline,
            p0,
            p1,
            p0,
            p1,
            1.0 - p0,
        ))
    }

    pub fn promotion(baseline: B, theta: f64, tau: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0 && tau.is_finite() && tau > 0.0) {
            return Err(ZacrError::domain(format!(
                "promotion requires theta > 0 and tau > 0, got theta={theta}, tau={tau}"
            )));
        }
        let cure = (-theta).exp();
        let zero = (-tau).exp();
        if cure + zero > 1.0 {
            return Err(ZacrError::domain(format!(
                "promotion requires exp(-theta) + exp(-tau) <= 1, got {}",
                cure + zero
            )));
        }
        Ok(Self::assemble(
            ZacrVariant::Promotion,
            baseline,
            theta,
            tau,
            cure,
            zero,
            -(-theta).exp_m1(),
        ))
    }

    pub fn geometric(baseline: B, alpha0: f64, alpha1: f64) -> Result<Self> {
        Self::nb_like(ZacrVariant::Geometric, baseline, alpha0, alpha1)
    }

    pub fn negative_binomial(baseline: B, eta: f64, alpha0: f64, alpha1: f64) -> Result<Self> {
        Self::nb_like(
            ZacrVariant::negative_binomial(eta)?,
            baseline,
            alpha0,
            alpha1,
        )
    }

    fn nb_like(variant: ZacrVariant, baseline: B, alpha0: f64, alpha1: f64) -> Result<Self> {
        let eta = variant.eta();
        for (name, a) in [("alpha0", alpha0), ("alpha1", alpha1)] {
            if !(a.is_finite() && a > 0.0) {
                return Err(ZacrError::domain(format!(
                    "{name} must be positive, got {a}"
                )));
            }
            if !(1.0 + eta * a > 0.0) {
                return Err(ZacrError::domain(format!(
                    "{name} must satisfy 1 + eta*{name} > 0, got eta={eta}, {name}={a}"
                )));
            }
        }
        let cure = nb_power(eta, alpha0);
        let zero = nb_power(eta, alpha1);
        if cure + zero > 1.0 {
            return Err(ZacrError::domain(format!(
                "negative-binomial model requires cure + zero fractions <= 1, got {}",
                cure + zero
            )));
        }
        let susceptible = -(-(eta * alpha0).ln_1p() / eta).exp_m1();
        Ok(Self::assemble(
            variant,
            baseline,
            alpha0,
            alpha1,
            cure,
            zero,
            susceptible,
        ))
    }

    fn assemble(
        variant: ZacrVariant,
        baseline: B,
        cure_param: f64,
        zero_param: f64,
        cure: f64,
        zero: f64,
        susceptible: f64,
    ) -> Self {
        let weight = (1.0 - (cure + zero)).max(0.0);
        Self {
            variant,
            baseline,
            cure_param,
            zero_param,
            cure,
            zero,
            weight,
            susceptible,
            ln_susceptible: susceptible.ln(),
        }
    }

    /// Build from the cause-level parameter pair in the variant's order
    /// (`[p0, p1]`, `[tau, theta]` or `[alpha0, alpha1]`).
    pub fn from_cause_params(variant: ZacrVariant, baseline: B, params: [f64; 2]) -> Result<Self> {
        variant.validate()?;
        match variant {
            ZacrVariant::StandardMixture => Self::standard_mixture(baseline, params[0], params[1]),
            ZacrVariant::Promotion => Self::promotion(baseline, params[1], params[0]),
            ZacrVariant::Geometric => Self::geometric(baseline, params[0], params[1]),
            ZacrVariant::NegBinomial { eta } => {
                Self::negative_binomial(baseline, eta, params[0], params[1])
            }
        }
    }

    /// Cause-level parameters in the variant's order.
    pub fn cause_params(&self) -> [f64; 2] {
        match self.variant {
            ZacrVariant::Promotion => [self.zero_param, self.cure_param],
            _ => [self.cure_param, self.zero_param],
        }
    }

    pub fn variant(&self) -> ZacrVariant {
        self.variant
    }

    pub fn baseline(&self) -> &B {
        &self.baseline
    }

    pub fn with_baseline<C: Baseline>(&self, baseline: C) -> Result<ZacrModel<C>> {
        ZacrModel::from_cause_params(self.variant, baseline, self.cause_params())
    }

    /// Probability of a lifetime exactly equal to zero.
    pub fn zero_fraction(&self) -> f64 {
        self.zero
    }

    /// Long-term survival plateau.
    pub fn cure_fraction(&self) -> f64 {
        self.cure
    }

    /// `1 - cure - zero`.
    pub fn event_weight(&self) -> f64 {
        self.weight
    }

    pub fn decomposition(&self) -> PopulationSurvivalDecomposition {
        PopulationSurvivalDecomposition {
            zero_fraction: self.zero,
            cure_fraction: self.cure,
            event_weight: self.weight,
        }
    }

    /// Proper susceptible survival from precomputed baseline values.
    #[inline]
    pub(crate) fn proper_survival_at(&self, cdf: f64, sf: f64) -> f64 {
        match self.variant {
            ZacrVariant::StandardMixture => sf,
            ZacrVariant::Promotion => {
                let theta = self.cure_param;
                (-theta * cdf).exp() * (-theta * sf).exp_m1() / (-theta).exp_m1()
            }
            ZacrVariant::Geometric | ZacrVariant::NegBinomial { .. } => {
                let eta = self.variant.eta();
                let a = self.cure_param;
                let ratio = (eta * a * sf / (1.0 + eta * a * cdf)).ln_1p() / eta;
                self.cure * ratio.exp_m1() / self.susceptible
            }
        }
    }

    /// `ln f_p(y)` of the proper susceptible law from precomputed baseline values.
    #[inline]
    pub(crate) fn proper_ln_density_at(&self, p: &BaselinePoint) -> f64 {
        match self.variant {
            ZacrVariant::StandardMixture => p.ln_pdf,
            ZacrVariant::Promotion => {
                let theta = self.cure_param;
                theta.ln() + p.ln_pdf - theta * p.cdf - self.ln_susceptible
            }
            ZacrVariant::Geometric | ZacrVariant::NegBinomial { .. } => {
                let eta = self.variant.eta();
                let a = self.cure_param;
                a.ln() + p.ln_pdf
                    - (1.0 / eta + 1.0) * (eta * a * p.cdf).ln_1p()
                    - self.ln_susceptible
            }
        }
    }

    /// Population survival in the variant's direct closed form.
    #[inline]
    pub(crate) fn population_survival_at(&self, cdf: f64, sf: f64) -> f64 {
        match self.variant {
            ZacrVariant::StandardMixture => self.cure + (1.0 - self.zero - self.cure) * sf,
            ZacrVariant::Promotion => {
                let theta = self.cure_param;
                (-theta * cdf).exp() - self.zero * self.proper_survival_at(cdf, sf)
            }
            ZacrVariant::Geometric | ZacrVariant::NegBinomial { .. } => {
                let eta = self.variant.eta();
                nb_power(eta, self.cure_param * cdf) - self.zero * self.proper_survival_at(cdf, sf)
            }
        }
    }

    /// `S_zp(y)`; equals `1 - zero_fraction` at the origin and tends to `cure_fraction`.
    pub fn population_survival(&self, y: f64) -> Result<f64> {
        check_time(y)?;
        if y == f64::INFINITY {
            return Ok(self.cure);
        }
        Ok(self.population_survival_at(self.baseline.cdf(y), self.baseline.sf(y)))
    }

    /// Atom at zero, or `event_weight * f_p(y)` for `y > 0`.
    pub fn population_density(&self, y: f64) -> Result<PopulationDensity> {
        check_time(y)?;
        if y == 0.0 {
            return Ok(PopulationDensity::Atom(self.zero));
        }
        if self.weight == 0.0 {
            return Ok(PopulationDensity::Density(0.0));
        }
        Ok(PopulationDensity::Density(
            self.weight * self.proper_density(y)?,
        ))
    }

    /// Survival of the susceptible (non-cured, non-zero) subpopulation.
    pub fn proper_survival(&self, y: f64) -> Result<f64> {
        check_time(y)?;
        if y == 0.0 {
            return Ok(1.0);
        }
        if y == f64::INFINITY {
            return Ok(0.0);
        }
        Ok(self.proper_survival_at(self.baseline.cdf(y), self.baseline.sf(y)))
    }

    /// Density of the susceptible subpopulation, `y > 0`.
    pub fn proper_density(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) || y.is_nan() {
            return Err(ZacrError::domain(format!(
                "proper density requires a positive time, got {y}"
            )));
        }
        if y == f64::INFINITY {
            return Ok(0.0);
        }
        Ok(self.proper_ln_density_at(&self.baseline.eval(y)).exp())
    }

    /// Baseline CDF level `F(y)` at which the proper susceptible CDF equals `u`.
    pub(crate) fn baseline_level(&self, u: f64) -> f64 {
        let cdf = match self.variant {
            ZacrVariant::StandardMixture => u,
            ZacrVariant::Promotion => {
                let theta = self.cure_param;
                -(u * (-theta).exp_m1()).ln_1p() / theta
            }
            ZacrVariant::Geometric | ZacrVariant::NegBinomial { .. } => {
                let eta = self.variant.eta();
                (-eta * (-u * self.susceptible).ln_1p()).exp_m1() / (eta * self.cure_param)
            }
        };
        cdf.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
    }

    /// Inverse of the proper susceptible CDF.
    pub fn proper_quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(ZacrError::domain(format!(
                "quantile level must lie in (0, 1), got {u}"
            )));
        }
        self.baseline.quantile(self.baseline_level(u))
    }

    /// Cause-count coefficients `a_n` and the zero-adjustment weight that gives `b_n = w * a_n`.
    fn series_coefficients(&self, n_max: usize) -> Result<(Vec<f64>, f64)> {
        let a: Vec<f64> = match self.variant {
            ZacrVariant::StandardMixture => {
                let mut a = vec![0.0; n_max + 1];
                a[0] = self.cure_param;
                if n_max >= 1 {
                    a[1] = 1.0 - self.cure_param;
                }
                a
            }
            ZacrVariant::Promotion => {
                let c = CauseCount::new(self.cure_param, 0.0)?;
                (0..=n_max).map(|n| count_pmf(n, &c)).collect()
            }
            ZacrVariant::Geometric | ZacrVariant::NegBinomial { .. } => {
                let eta = self.variant.eta();
                let r = -1.0 / eta;
                // with a non-integer -1/eta < 0 the coefficients never terminate and
                // the series in S converges at S = 1 only if |eta a| < 1 + eta a
                if eta < 0.0
                    && r.fract() != 0.0
                    && -eta * self.cure_param >= 1.0 + eta * self.cure_param
                {
                    return Err(ZacrError::domain(format!(
                        "cause-count series diverges at S = 1 for eta={eta}, alpha0={}",
                        self.cure_param
                    )));
                }
                let c = CauseCount::new(self.cure_param, eta)?;
                (0..=n_max).map(|n| count_pmf(n, &c)).collect()
            }
        };
        let non_cured = 1.0 - a[0];
        let w = if non_cured > 0.0 {
            self.zero / non_cured
        } else {
            0.0
        };
        Ok((a, w))
    }

    /// Number of series terms carrying all but `1e-12` of the cause-count mass.
    pub fn adaptive_series_len(&self) -> Result<usize> {
        Ok(match self.variant {
            ZacrVariant::StandardMixture => 1,
            ZacrVariant::Promotion => CauseCount::new(self.cure_param, 0.0)?
                .truncation_point()
                .max(1),
            _ => CauseCount::new(self.cure_param, self.variant.eta())?
                .truncation_point()
                .max(1),
        })
    }

    /// Population survival as the truncated generating-function series
    /// `sum_{n>=0} a_n S(y)^n - sum_{n>=1} b_n S(y)^n`.
    ///
    /// Independent of the closed forms; used to cross-check them.
    pub fn series_survival_oracle(&self, y: f64, n_max: usize) -> Result<f64> {
        check_time(y)?;
        if n_max < 1 {
            return Err(ZacrError::domain("series length must be at least 1"));
        }
        let s = self.baseline.sf(y);
        let (a, w) = self.series_coefficients(n_max)?;
        let mut sum_a = 0.0;
        let mut sum_b = 0.0;
        let mut power = 1.0;
        for (n, an) in a.iter().enumerate() {
            sum_a += an * power;
            if n >= 1 {
                sum_b += w * an * power;
            }
            power *= s;
        }
        Ok(sum_a - sum_b)
    }
}

fn check_time(y: f64) -> Result<()> {
    if y.is_nan() || y < 0.0 {
        Err(ZacrError::domain(format!(
            "time must be nonnegative, got {y}"
        )))
    } else {
        Ok(())
    }
}
