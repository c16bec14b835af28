use rand::Rng;
use rand_distr::Binomial;
use serde::{Deserialize, Serialize};

use crate::choice::{rho, ChoiceModel};
use crate::domain::Alternative;
use crate::error::{invalid, Error, Result};
use crate::par::{chunk_rng, map_indexed};

/// Lower clamp applied to predicted probabilities before any log-loss.
pub const PROB_CLAMP: f64 = 1e-9;

/// Aggregated binary choices on one problem: `successes` of `trials` chose
/// the first option.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceObservation {
    pub problem: (Alternative, Alternative),
    pub trials: u64,
    pub successes: u64,
}

impl ChoiceObservation {
    pub fn new(
        first: Alternative,
        second: Alternative,
        trials: u64,
        successes: u64,
    ) -> Result<Self> {
        let obs = Self {
            problem: (first, second),
            trials,
            successes,
        };
        obs.validate()?;
        Ok(obs)
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return invalid("observation needs at least one trial");
        }
        if self.successes > self.trials {
            return invalid(format!(
                "successes {} exceed trials {}",
                self.successes, self.trials
            ));
        }
        if self.problem.0.domain() != self.problem.1.domain() {
            return Err(Error::DomainMismatch(
                "problem options come from different domains".into(),
            ));
        }
        Ok(())
    }

    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ChoiceObservation>", into = "Vec<ChoiceObservation>")]
pub struct ChoiceDataset {
    obs: Vec<ChoiceObservation>,
}

impl TryFrom<Vec<ChoiceObservation>> for ChoiceDataset {
    type Error = Error;

    fn try_from(obs: Vec<ChoiceObservation>) -> Result<Self> {
        Self::new(obs)
    }
}

impl From<ChoiceDataset> for Vec<ChoiceObservation> {
    fn from(d: ChoiceDataset) -> Self {
        d.obs
    }
}

impl ChoiceDataset {
    pub fn new(obs: Vec<ChoiceObservation>) -> Result<Self> {
        if obs.is_empty() {
            return invalid("dataset is empty");
        }
        for o in &obs {
            o.validate()?;
        }
        let d = obs[0].problem.0.domain();
        if obs.iter().any(|o| o.problem.0.domain() != d) {
            return Err(Error::DomainMismatch("dataset mixes domains".into()));
        }
        Ok(Self { obs })
    }

    pub fn observations(&self) -> &[ChoiceObservation] {
        &self.obs
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn problems(&self) -> Vec<(Alternative, Alternative)> {
        self.obs.iter().map(|o| o.problem.clone()).collect()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.obs.iter().map(ChoiceObservation::rate).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.obs.iter().map(|o| o.trials as f64).collect()
    }

    /// Draws binomial choice counts from `model` on each problem.
    pub fn simulate(
        model: &ChoiceModel,
        problems: &[(Alternative, Alternative)],
        trials: u64,
        seed: u64,
    ) -> Result<Self> {
        if trials == 0 {
            return invalid("trials must be positive");
        }
        let obs = map_indexed(problems.len(), |i| -> Result<ChoiceObservation> {
            let (x, y) = &problems[i];
            let p = rho(model, x, y)?;
            let mut rng = chunk_rng(seed, i as u64);
            let k =
                rng.sample(Binomial::new(trials, p).map_err(|e| Error::Invalid(e.to_string()))?);
            ChoiceObservation::new(x.clone(), y.clone(), trials, k)
        });
        Self::new(obs.into_iter().collect::<Result<_>>()?)
    }
}

/// Predicted probability of choosing the first option, per problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PredictionRule {
    probs: Vec<f64>,
}

impl PredictionRule {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::OutOfRange(format!("prediction {p} outside [0, 1]")));
        }
        Ok(Self { probs })
    }

    /// Constant prediction on `n` problems.
    pub fn constant(p: f64, n: usize) -> Result<Self> {
        Self::new(vec![p; n])
    }

    /// Predictions of a model on each problem.
    pub fn from_model(
        model: &ChoiceModel,
        problems: &[(Alternative, Alternative)],
    ) -> Result<Self> {
        let probs = problems
            .iter()
            .map(|(x, y)| rho(model, x, y))
            .collect::<Result<Vec<_>>>()?;
        Self::new(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn clamped(&self) -> Vec<f64> {
        self.probs.iter().map(|p| clamp_prob(*p)).collect()
    }
}

pub(crate) fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}
