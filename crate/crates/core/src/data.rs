//! Right-censored survival observations with an atom at time zero.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZacrError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Censored,
    Event,
}

impl Status {
    pub fn indicator(self) -> u8 {
        match self {
            Status::Censored => 0,
            Status::Event => 1,
        }
    }

    pub fn from_indicator(v: u8) -> Option<Self> {
        match v {
            0 => Some(Status::Censored),
            1 => Some(Status::Event),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub time: f64,
    pub status: Status,
}

impl Observation {
    pub fn event(time: f64) -> Self {
        Self {
            time,
            status: Status::Event,
        }
    }

    pub fn censored(time: f64) -> Self {
        Self {
            time,
            status: Status::Censored,
        }
    }

    pub fn is_event(&self) -> bool {
        self.status == Status::Event
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.time.is_nan() || self.time < 0.0 {
            return Err(format!("time must be nonnegative, got {}", self.time));
        }
        if self.time == f64::INFINITY && self.is_event() {
            return Err("an event cannot occur at infinite time".into());
        }
        if self.time == 0.0 && !self.is_event() {
            return Err("zero-time observation cannot be censored".into());
        }
        Ok(())
    }
}

/// Nonempty, validated set of `(time, status)` pairs.
///
/// Censored times may be `+inf` (a cured subject followed forever).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Observation>", into = "Vec<Observation>")]
pub struct SurvivalDataset {
    obs: Vec<Observation>,
}

impl SurvivalDataset {
    pub fn new(obs: Vec<Observation>) -> Result<Self> {
        if obs.is_empty() {
            return Err(ZacrError::data("dataset is empty"));
        }
        for (i, o) in obs.iter().enumerate() {
            o.validate().map_err(|msg| ZacrError::Data {
                line: None,
                msg: format!("observation {}: {msg}", i + 1),
            })?;
        }
        Ok(Self { obs })
    }

    /// Build from `(time, indicator)` pairs with `1 = event`, `0 = censored`.
    pub fn from_pairs(pairs: &[(f64, u8)]) -> Result<Self> {
        let obs = pairs
            .iter()
            .enumerate()
            .map(|(i, &(time, s))| {
                Status::from_indicator(s)
                    .map(|status| Observation { time, status })
                    .ok_or_else(|| {
                        ZacrError::data(format!(
                            "observation {}: status must be 0 or 1, got {s}",
                            i + 1
                        ))
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(obs)
    }

    pub fn observations(&self) -> &[Observation] {
        &self.obs
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Observation> {
        self.obs.iter()
    }

    pub fn n_zero(&self) -> usize {
        self.obs.iter().filter(|o| o.time == 0.0).count()
    }

    /// Number of events at positive times (`r`).
    pub fn n_positive_events(&self) -> usize {
        self.obs
            .iter()
            .filter(|o| o.time > 0.0 && o.is_event())
            .count()
    }

    pub fn n_censored(&self) -> usize {
        self.obs.iter().filter(|o| !o.is_event()).count()
    }

    pub fn censoring_fraction(&self) -> f64 {
        self.n_censored() as f64 / self.len() as f64
    }

    /// Fitting needs at least one positive event time.
    pub fn check_identifiable(&self) -> Result<()> {
        if self.n_positive_events() == 0 {
            let why = if self.n_zero() == self.len() {
                "all observations are zero-time events"
            } else if self.n_zero() == 0 {
                "all observations are censored"
            } else {
                "no positive event times"
            };
            return Err(ZacrError::NonIdentifiable(why.into()));
        }
        Ok(())
    }
}

impl TryFrom<Vec<Observation>> for SurvivalDataset {
    type Error = ZacrError;

    fn try_from(obs: Vec<Observation>) -> Result<Self> {
        Self::new(obs)
    }
}

impl From<SurvivalDataset> for Vec<Observation> {
    fn from(d: SurvivalDataset) -> Self {
        d.obs
    }
}
