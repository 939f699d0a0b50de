//! Latent competing-cause count `N` in the negative-binomial family.
//!
//! Parameterized by the mean `theta` and dispersion `eta`, with
//! `Var(N) = theta + eta * theta^2`. `eta = -1` is Bernoulli, `eta -> 0`
//! Poisson and `eta = 1` geometric.
//!
//! For `-1 < eta < 0` the family is a proper (binomial) distribution only
//! when `-1/eta` is an integer; otherwise the values returned by
//! [`count_pmf`] are the power-series coefficients of the generating
//! function and may be negative in the tail.

use libm::lgamma as ln_gamma;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZacrError};

/// Dispersion below which the Poisson limit is used.
pub const POISSON_ETA: f64 = 1e-8;
/// Cumulative mass at which adaptive truncation stops.
pub const TRUNCATION_MASS: f64 = 1.0 - 1e-12;
/// Hard cap on adaptive truncation.
pub const TRUNCATION_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauseCount {
    theta: f64,
    eta: f64,
}

impl CauseCount {
    pub fn new(theta: f64, eta: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(ZacrError::domain(format!(
                "cause-count mean must be positive, got {theta}"
            )));
        }
        if !(eta.is_finite() && eta >= -1.0) {
            return Err(ZacrError::domain(format!(
                "dispersion must satisfy eta >= -1, got {eta}"
            )));
        }
        if !(eta * theta + 1.0 > 0.0) {
            return Err(ZacrError::domain(format!(
                "cause-count requires eta*theta + 1 > 0, got eta={eta}, theta={theta}"
            )));
        }
        Ok(Self { theta, eta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn is_poisson(&self) -> bool {
        self.eta.abs() < POISSON_ETA
    }

    pub fn mean(&self) -> f64 {
        self.theta
    }

    pub fn variance(&self) -> f64 {
        self.theta + self.eta * self.theta * self.theta
    }

    /// `P[N = 0] = (1 + eta theta)^(-1/eta)`.
    pub fn prob_zero(&self) -> f64 {
        pgf_closed(self, 0.0)
    }

    /// Closed-form generating function `(1 + eta theta (1 - s))^(-1/eta)`.
    pub fn pgf(&self, s: f64) -> Result<f64> {
        check_unit(s)?;
        Ok(pgf_closed(self, s))
    }

    /// Smallest `n` whose cumulative mass reaches [`TRUNCATION_MASS`], capped at [`TRUNCATION_CAP`].
    ///
    /// With signed coefficients (`eta < 0`, non-integer `-1/eta`) the partial
    /// sums oscillate around one, so the next coefficient must also be below
    /// the truncation tolerance.
    pub fn truncation_point(&self) -> usize {
        let tol = 1.0 - TRUNCATION_MASS;
        let signed = self.eta < 0.0 && !self.is_poisson();
        let mut cum = 0.0;
        for n in 0..=TRUNCATION_CAP {
            cum += count_pmf(n, self);
            let settled = if signed {
                (1.0 - cum).abs() <= tol && count_pmf(n + 1, self).abs() <= tol
            } else {
                cum >= TRUNCATION_MASS
            };
            if settled {
                return n;
            }
        }
        TRUNCATION_CAP
    }
}

fn check_unit(s: f64) -> Result<()> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(ZacrError::domain(format!(
            "generating-function argument must lie in [0, 1], got {s}"
        )))
    }
}

fn pgf_closed(c: &CauseCount, s: f64) -> f64 {
    let x = c.theta * (1.0 - s);
    if c.is_poisson() {
        (-x).exp()
    } else {
        (-(c.eta * x).ln_1p() / c.eta).exp()
    }
}

/// `P[N = n]` for the negative-binomial cause count.
pub fn count_pmf(n: usize, c: &CauseCount) -> f64 {
    let nf = n as f64;
    let (theta, eta) = (c.theta, c.eta);
    if c.is_poisson() {
        return (nf * theta.ln() - theta - ln_gamma(nf + 1.0)).exp();
    }
    let ln_a0 = -(eta * theta).ln_1p() / eta;
    if eta > 0.0 {
        let r = 1.0 / eta;
        let ln_q = (eta * theta).ln() - (eta * theta).ln_1p();
        (ln_gamma(r + nf) - ln_gamma(r) - ln_gamma(nf + 1.0) + nf * ln_q + ln_a0).exp()
    } else {
        // Gamma(r + n) / Gamma(r) as a rising product; r < 0 makes the gamma form singular.
        let r = 1.0 / eta;
        let q = eta * theta / (1.0 + eta * theta);
        let mut coef = ln_a0.exp();
        for k in 0..n {
            let kf = k as f64;
            coef *= (r + kf) / (kf + 1.0) * q;
            if coef == 0.0 {
                break;
            }
        }
        coef
    }
}

/// Truncated generating function `sum_{n=0}^{n_max} P[N=n] s^n`.
pub fn count_pgf_series(s: f64, c: &CauseCount, n_max: usize) -> Result<f64> {
    check_unit(s)?;
    let mut total = 0.0;
    let mut power = 1.0;
    for n in 0..=n_max {
        total += count_pmf(n, c) * power;
        power *= s;
    }
    Ok(total)
}
