use super::{BatchStrategy, Decision, DecisionTrace, StrategyKind, TriggerHeuristic};
use crate::data::{CandidateBatch, Sample};
use crate::metrics::{combined_objective, entropy, ObjectiveWeights};
use crate::model::Classifier;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PreemptionParams {
    /// Window length: samples observed per sub-batch.
    pub w: usize,
    pub k_sub: usize,
    /// Sub-batches concatenated before one retrain.
    pub n_sub: usize,
    pub weights: ObjectiveWeights,
}

impl PreemptionParams {
    pub fn validate(&self) -> Result<()> {
        if self.k_sub == 0 || self.n_sub == 0 || self.w < self.k_sub {
            return Err(Error::InvalidParameter(format!(
                "preemption needs k_sub >= 1, n_sub >= 1 and w >= k_sub: {self:?}"
            )));
        }
        self.weights.validate()
    }
}

/// Preemption streaming over a fixed window.
///
/// The batch fills unconditionally; once full, every incoming sample is tried
/// in place of each member and the best swap is adopted only if it strictly
/// beats the current batch under [`combined_objective`].
#[derive(Clone, Debug, PartialEq)]
pub struct PreemptionState {
    params: PreemptionParams,
    batch: CandidateBatch,
    /// Probability vectors cached at insertion, aligned with `batch`.
    probs: Vec<Vec<f64>>,
    incumbent: Option<f64>,
    trigger: TriggerHeuristic,
    accumulated: Vec<Sample>,
    sub_batches: usize,
    fired: bool,
}

impl PreemptionState {
    pub fn new(params: PreemptionParams) -> Result<Self> {
        params.validate()?;
        Ok(PreemptionState {
            batch: CandidateBatch::with_features(params.k_sub),
            probs: Vec::with_capacity(params.k_sub),
            incumbent: None,
            trigger: TriggerHeuristic::window(params.w),
            accumulated: Vec::new(),
            sub_batches: 0,
            fired: false,
            params,
        })
    }

    pub fn batch(&self) -> &CandidateBatch {
        &self.batch
    }

    pub fn cached_probabilities(&self) -> &[Vec<f64>] {
        &self.probs
    }

    /// Objective of the full batch, `None` while it is still filling.
    pub fn incumbent_objective(&self) -> Option<f64> {
        self.incumbent
    }

    pub fn accumulated(&self) -> &[Sample] {
        &self.accumulated
    }

    fn objective(&self) -> Result<f64> {
        combined_objective(&self.probs, self.batch.features(), &self.params.weights)
    }

    /// Best single swap as `(index, score)`; the lowest index wins ties.
    fn best_swap(&self, probs: &[f64], feature: &[f64]) -> Result<Option<(usize, f64)>> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.batch.len() {
            let ps: Vec<&[f64]> = self
                .probs
                .iter()
                .enumerate()
                .map(|(m, p)| if m == i { probs } else { p.as_slice() })
                .collect();
            let vs: Vec<&[f64]> = self
                .batch
                .features()
                .iter()
                .enumerate()
                .map(|(m, v)| if m == i { feature } else { v.as_slice() })
                .collect();
            let score = combined_objective(&ps, &vs, &self.params.weights)?;
            if best.is_none_or(|(_, b)| score > b) {
                best = Some((i, score));
            }
        }
        Ok(best)
    }
}

impl BatchStrategy for PreemptionState {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Preemption
    }

    fn step(&mut self, x: Sample, model: &dyn Classifier) -> Result<Decision> {
        if self.fired {
            return Err(Error::NotArmed);
        }
        let (probs, feature) = model.predict_with_features(&x)?;
        let mut d = Decision::new(DecisionTrace {
            stream_id: x.id(),
            informativeness: Some(entropy(&probs)?),
            ..DecisionTrace::default()
        });

        if !self.batch.is_full() {
            self.batch.insert(x, Some(feature))?;
            self.probs.push(probs);
            d.kept = true;
            if self.batch.is_full() {
                self.incumbent = Some(self.objective()?);
            }
        } else {
            let current = self.incumbent.expect("full batch has a score");
            if let Some((i, score)) = self.best_swap(&probs, &feature)? {
                if score > current {
                    let (old, _) = self.batch.swap(i, x, Some(feature))?;
                    self.probs[i] = probs;
                    self.incumbent = Some(score);
                    d.kept = true;
                    d.evicted = Some(old);
                }
            }
        }

        if self.trigger.observe(self.batch.len()) {
            d.trigger_fired = true;
            self.accumulated.extend(self.batch.drain());
            self.probs.clear();
            self.incumbent = None;
            self.trigger.reset();
            self.sub_batches += 1;
            if self.sub_batches == self.params.n_sub {
                d.retrain = true;
                self.fired = true;
            }
        }
        Ok(d)
    }

    fn batch_len(&self) -> usize {
        self.batch.len()
    }

    fn pending_len(&self) -> usize {
        self.accumulated.len() + self.batch.len()
    }

    fn take_batch(&mut self) -> Vec<Sample> {
        let mut out = std::mem::take(&mut self.accumulated);
        out.extend(self.batch.drain());
        self.probs.clear();
        out
    }

    fn rearm(&mut self) {
        self.batch.clear();
        self.probs.clear();
        self.incumbent = None;
        self.trigger.reset();
        self.accumulated.clear();
        self.sub_batches = 0;
        self.fired = false;
    }
}
