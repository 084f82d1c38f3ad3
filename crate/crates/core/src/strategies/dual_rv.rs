use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    calibrate_div_threshold, calibrate_info_threshold, BatchStrategy, Decision, DecisionTrace,
    StrategyKind, TriggerHeuristic,
};
use crate::data::{CandidateBatch, Sample};
use crate::metrics::{diversity, entropy};
use crate::model::Classifier;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DualRvParams {
    pub l_info: usize,
    pub j_info: usize,
    /// Samples whose features calibrate the diversity threshold.
    pub l_div: usize,
    /// Best subset diversities averaged into the threshold.
    pub j_div: usize,
    /// Subset size.
    pub q: usize,
    /// Number of random subsets.
    pub r: usize,
    pub k: usize,
}

impl DualRvParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.l_info >= 1
            && (1..=self.l_info).contains(&self.j_info)
            && self.q >= 2
            && self.l_div >= self.q
            && (1..=self.r).contains(&self.j_div)
            && self.k >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "dual_rv needs 1 <= j_info <= l_info, 2 <= q <= l_div, 1 <= j_div <= r, k >= 1: {self:?}"
            )))
        }
    }
}

/// Informativeness gate followed by a diversity gate on the batch's features.
///
/// After each retrain the first `l_info` samples calibrate `γ` and the next
/// `l_div` samples' features calibrate `δ`; selection starts afterwards.
#[derive(Clone, Debug, PartialEq)]
pub struct DualRvState {
    params: DualRvParams,
    gamma: Option<f64>,
    delta: Option<f64>,
    info_calib: Vec<f64>,
    div_calib: Vec<Vec<f64>>,
    batch: CandidateBatch,
    trigger: TriggerHeuristic,
    rng: ChaCha8Rng,
    fired: bool,
}

impl DualRvState {
    pub fn new(params: DualRvParams, seed: u64) -> Result<Self> {
        params.validate()?;
        Ok(DualRvState {
            gamma: None,
            delta: None,
            info_calib: Vec::with_capacity(params.l_info),
            div_calib: Vec::with_capacity(params.l_div),
            batch: CandidateBatch::with_features(params.k),
            trigger: TriggerHeuristic::batch_filling(params.k),
            rng: ChaCha8Rng::seed_from_u64(seed),
            fired: false,
            params,
        })
    }

    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    pub fn delta(&self) -> Option<f64> {
        self.delta
    }

    pub fn batch(&self) -> &CandidateBatch {
        &self.batch
    }

    fn select(
        &mut self,
        x: Sample,
        info: f64,
        model: &dyn Classifier,
        d: &mut Decision,
    ) -> Result<()> {
        let (Some(gamma), Some(delta)) = (self.gamma, self.delta) else {
            unreachable!("selection starts after calibration")
        };
        if info <= gamma {
            return Ok(());
        }
        let feature = model.extract_features(&x)?;
        if self.batch.is_empty() {
            // a singleton has no pairs, so the diversity test cannot admit it
            d.trace.diversity_after = Some(0.0);
            self.batch.insert(x, Some(feature))?;
            d.kept = true;
            return Ok(());
        }
        let mut tentative: Vec<&[f64]> = self.batch.features().iter().map(Vec::as_slice).collect();
        tentative.push(&feature);
        let div = diversity(&tentative)?;
        d.trace.diversity_after = Some(div);
        if div > delta {
            self.batch.insert(x, Some(feature))?;
            d.kept = true;
        }
        Ok(())
    }
}

impl BatchStrategy for DualRvState {
    fn kind(&self) -> StrategyKind {
        StrategyKind::DualRv
    }

    fn step(&mut self, x: Sample, model: &dyn Classifier) -> Result<Decision> {
        if self.fired {
            return Err(Error::NotArmed);
        }
        let info = entropy(&model.predict_proba(&x)?)?;
        let mut d = Decision::new(DecisionTrace {
            stream_id: x.id(),
            informativeness: Some(info),
            gamma: self.gamma,
            delta: self.delta,
            ..DecisionTrace::default()
        });
        if self.gamma.is_none() {
            d.trace.calibrating = true;
            self.info_calib.push(info);
            if self.info_calib.len() == self.params.l_info {
                self.gamma = Some(calibrate_info_threshold(
                    &self.info_calib,
                    self.params.j_info,
                )?);
                self.info_calib.clear();
            }
        } else if self.delta.is_none() {
            d.trace.calibrating = true;
            self.div_calib.push(model.extract_features(&x)?);
            if self.div_calib.len() == self.params.l_div {
                let p = &self.params;
                self.delta = Some(calibrate_div_threshold(
                    &self.div_calib,
                    p.q,
                    p.r,
                    p.j_div,
                    &mut self.rng,
                )?);
                self.div_calib.clear();
            }
        } else {
            self.select(x, info, model, &mut d)?;
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
        self.gamma = None;
        self.delta = None;
        self.info_calib.clear();
        self.div_calib.clear();
        self.batch.clear();
        self.trigger.reset();
        self.fired = false;
    }
}
