//! Proper lifetime law of a single competing cause.
//!
//! The cure-rate machinery only needs `F`, `S = 1 - F`, `ln f` and the
//! quantile of the baseline, so those are collected behind [`Baseline`].
//! The log-normal law is the shipped implementation.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::fmt::Debug;

use libm::erfc;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;

use crate::error::{Result, ZacrError};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Values of the baseline at one time point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselinePoint {
    pub cdf: f64,
    pub sf: f64,
    pub ln_pdf: f64,
}

/// A proper lifetime distribution on `[0, inf)`.
pub trait Baseline: Clone + Debug + Send + Sync {
    /// `F(y)`; zero for `y <= 0`.
    fn cdf(&self, y: f64) -> f64;
    /// `S(y) = 1 - F(y)`, evaluated without cancellation in the upper tail.
    fn sf(&self, y: f64) -> f64;
    /// `ln f(y)`; `-inf` for `y <= 0`.
    fn ln_pdf(&self, y: f64) -> f64;
    /// Inverse of `F` on `(0, 1)`.
    fn quantile(&self, u: f64) -> Result<f64>;

    fn pdf(&self, y: f64) -> f64 {
        self.ln_pdf(y).exp()
    }

    /// `F`, `S` and `ln f` at a positive time. Implementations may share work.
    fn eval(&self, y: f64) -> BaselinePoint {
        BaselinePoint {
            cdf: self.cdf(y),
            sf: self.sf(y),
            ln_pdf: self.ln_pdf(y),
        }
    }

    /// Inverse-CDF draw.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                if let Ok(y) = self.quantile(u) {
                    return y;
                }
            }
        }
    }
}

/// A baseline whose parameters can be estimated by maximum likelihood.
pub trait FittableBaseline: Baseline + Sized {
    /// Natural-scale parameter names in vector order.
    fn param_names() -> &'static [&'static str];
    fn natural(&self) -> Vec<f64>;
    fn from_natural(p: &[f64]) -> Result<Self>;
    /// Map to an unconstrained coordinate vector of the same length.
    fn to_unconstrained(&self) -> Vec<f64>;
    fn from_unconstrained(x: &[f64]) -> Result<Self>;
    /// Crude estimate from the logarithms of observed event times.
    fn from_log_time_moments(log_times: &[f64]) -> Self;
    /// Same spread, relocated so that `F(time) = level`.
    fn relocated(&self, level: f64, time: f64) -> Result<Self>;
}

/// Log-normal law: `ln Y ~ N(mu, sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormal {
    mu: f64,
    sigma: f64,
}

impl LogNormal {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(ZacrError::domain(format!(
                "log-normal location must be finite, got {mu}"
            )));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(ZacrError::domain(format!(
                "log-normal scale must be positive, got {sigma}"
            )));
        }
        Ok(Self { mu, sigma })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    #[inline]
    fn standardize(&self, y: f64) -> f64 {
        (y.ln() - self.mu) / self.sigma
    }
}

/// Standard normal CDF through the complementary error function.
#[inline]
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// Standard normal quantile: inverse-erfc seed polished with one Newton step
/// against the sub-ulp `erfc`.
pub fn std_normal_quantile(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(ZacrError::domain(format!(
            "probability must lie in (0, 1), got {u}"
        )));
    }
    let z = -SQRT_2 * erfc_inv(2.0 * u);
    let dens = (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
    if dens > 1e-300 {
        let resid = if z < 0.0 {
            std_normal_cdf(z) - u
        } else {
            (1.0 - u) - std_normal_cdf(-z)
        };
        Ok(z - resid / dens)
    } else {
        Ok(z)
    }
}

impl Baseline for LogNormal {
    fn cdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        std_normal_cdf(self.standardize(y))
    }

    fn sf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 1.0;
        }
        std_normal_cdf(-self.standardize(y))
    }

    fn ln_pdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let ln_y = y.ln();
        let z = (ln_y - self.mu) / self.sigma;
        -0.5 * z * z - LN_SQRT_2PI - self.sigma.ln() - ln_y
    }

    fn quantile(&self, u: f64) -> Result<f64> {
        let z = std_normal_quantile(u)?;
        Ok((self.mu + self.sigma * z).exp())
    }

    fn eval(&self, y: f64) -> BaselinePoint {
        let ln_y = y.ln();
        let z = (ln_y - self.mu) / self.sigma;
        // one erfc call; the complementary value is taken from the far tail side
        let (cdf, sf) = if z < 0.0 {
            let c = 0.5 * erfc(-z * FRAC_1_SQRT_2);
            (c, 1.0 - c)
        } else {
            let s = 0.5 * erfc(z * FRAC_1_SQRT_2);
            (1.0 - s, s)
        };
        BaselinePoint {
            cdf,
            sf,
            ln_pdf: -0.5 * z * z - LN_SQRT_2PI - self.sigma.ln() - ln_y,
        }
    }
}

impl FittableBaseline for LogNormal {
    fn param_names() -> &'static [&'static str] {
        &["mu", "sigma"]
    }

    fn natural(&self) -> Vec<f64> {
        vec![self.mu, self.sigma]
    }

    fn from_natural(p: &[f64]) -> Result<Self> {
        match p {
            [mu, sigma] => Self::new(*mu, *sigma),
            _ => Err(ZacrError::domain("log-normal expects two parameters")),
        }
    }

    fn to_unconstrained(&self) -> Vec<f64> {
        vec![self.mu, self.sigma.ln()]
    }

    fn from_unconstrained(x: &[f64]) -> Result<Self> {
        match x {
            [mu, log_sigma] => Self::new(*mu, log_sigma.exp()),
            _ => Err(ZacrError::domain("log-normal expects two parameters")),
        }
    }

    fn from_log_time_moments(log_times: &[f64]) -> Self {
        let n = log_times.len() as f64;
        if log_times.is_empty() {
            return Self {
                mu: 0.0,
                sigma: 1.0,
            };
        }
        let mean = log_times.iter().sum::<f64>() / n;
        let var = log_times.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n.max(2.0);
        let sigma = if var.is_finite() && var > 1e-6 {
            var.sqrt()
        } else {
            1.0
        };
        Self { mu: mean, sigma }
    }

    fn relocated(&self, level: f64, time: f64) -> Result<Self> {
        if !(time > 0.0) {
            return Err(ZacrError::domain(format!(
                "relocation time must be positive, got {time}"
            )));
        }
        let z = std_normal_quantile(level)?;
        Self::new(time.ln() - self.sigma * z, self.sigma)
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

/// `F(y) = Phi((ln y - mu) / sigma)`, zero at the origin.
pub fn log_normal_cdf(y: f64, p: &LogNormal) -> Result<f64> {
    check_time(y)?;
    Ok(p.cdf(y))
}

/// `f(y) = phi((ln y - mu) / sigma) / (y sigma)` for `y > 0`.
pub fn log_normal_pdf(y: f64, p: &LogNormal) -> Result<f64> {
    if !(y > 0.0) {
        return Err(ZacrError::domain(format!(
            "density requires a positive time, got {y}"
        )));
    }
    Ok(p.pdf(y))
}

/// Inverse of [`log_normal_cdf`] on `(0, 1)`.
pub fn log_normal_quantile(u: f64, p: &LogNormal) -> Result<f64> {
    p.quantile(u)
}
