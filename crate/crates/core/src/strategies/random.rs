use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BatchStrategy, Decision, DecisionTrace, StrategyKind, TriggerHeuristic};
use crate::data::{CandidateBatch, Sample};
use crate::model::Classifier;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RandomParams {
    /// Probability of keeping each incoming sample.
    pub p: f64,
    pub k: usize,
}

impl RandomParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) || self.k == 0 {
            return Err(Error::InvalidParameter(format!(
                "random needs 0 <= p <= 1 and k >= 1: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Keeps each sample with probability `p` until `k` are collected. Never
/// consults the model.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomState {
    params: RandomParams,
    batch: CandidateBatch,
    trigger: TriggerHeuristic,
    rng: ChaCha8Rng,
    fired: bool,
}

impl RandomState {
    pub fn new(params: RandomParams, seed: u64) -> Result<Self> {
        params.validate()?;
        Ok(RandomState {
            batch: CandidateBatch::new(params.k),
            trigger: TriggerHeuristic::batch_filling(params.k),
            rng: ChaCha8Rng::seed_from_u64(seed),
            fired: false,
            params,
        })
    }
}

impl BatchStrategy for RandomState {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Random
    }

    fn step(&mut self, x: Sample, _model: &dyn Classifier) -> Result<Decision> {
        if self.fired {
            return Err(Error::NotArmed);
        }
        let mut d = Decision::new(DecisionTrace {
            stream_id: x.id(),
            ..DecisionTrace::default()
        });
        if self.rng.gen::<f64>() < self.params.p {
            self.batch.insert(x, None)?;
            d.kept = true;
        }
        if self.trigger.observe(self.batch.len()) {
            d.trigger_fired = true;
            d.retrain = true;
            self.fired = true;
        }
        Ok(d)
    }

    fn batch_len(&self) -> usize {
        self.batch.len()
    }

    fn take_batch(&mut self) -> Vec<Sample> {
        self.batch.drain()
    }

    fn rearm(&mut self) {
        self.batch.clear();
        self.trigger.reset();
        self.fired = false;
    }
}
