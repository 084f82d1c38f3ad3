use super::{
    calibrate_info_threshold, BatchStrategy, Decision, DecisionTrace, StrategyKind,
    TriggerHeuristic,
};
use crate::data::{CandidateBatch, Sample};
use crate::metrics::entropy;
use crate::model::Classifier;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct InfoRvParams {
    /// Calibration samples observed after each retrain.
    pub l: usize,
    /// How many of the highest calibration entropies are averaged.
    pub j: usize,
    /// Batch size.
    pub k: usize,
}

impl InfoRvParams {
    pub fn validate(&self) -> Result<()> {
        if self.l == 0 || self.j == 0 || self.j > self.l || self.k == 0 {
            return Err(Error::InvalidParameter(format!(
                "info_rv needs l >= 1, 1 <= j <= l, k >= 1: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Keeps a sample when its entropy exceeds the mean of the top `j` entropies
/// seen in the first `l` samples after the last retrain.
#[derive(Clone, Debug, PartialEq)]
pub struct InfoRvState {
    params: InfoRvParams,
    gamma: Option<f64>,
    calib: Vec<f64>,
    batch: CandidateBatch,
    trigger: TriggerHeuristic,
    fired: bool,
}

impl InfoRvState {
    pub fn new(params: InfoRvParams) -> Result<Self> {
        params.validate()?;
        Ok(InfoRvState {
            gamma: None,
            calib: Vec::with_capacity(params.l),
            batch: CandidateBatch::new(params.k),
            trigger: TriggerHeuristic::batch_filling(params.k),
            fired: false,
            params,
        })
    }

    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    pub fn batch(&self) -> &CandidateBatch {
        &self.batch
    }
}

impl BatchStrategy for InfoRvState {
    fn kind(&self) -> StrategyKind {
        StrategyKind::InfoRv
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
            ..DecisionTrace::default()
        });
        match self.gamma {
            None => {
                d.trace.calibrating = true;
                self.calib.push(info);
                if self.calib.len() == self.params.l {
                    self.gamma = Some(calibrate_info_threshold(&self.calib, self.params.j)?);
                    self.calib.clear();
                }
            }
            Some(gamma) if info > gamma => {
                self.batch.insert(x, None)?;
                d.kept = true;
            }
            Some(_) => {}
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
        self.calib.clear();
        self.batch.clear();
        self.trigger.reset();
        self.fired = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategies::testing::{probs_with_entropy, sample, TableModel};

    fn model_with(entropies: &[f64]) -> TableModel {
        let mut m = TableModel::default();
        for (i, &h) in entropies.iter().enumerate() {
            m.set(i as u64, probs_with_entropy(h), vec![]);
        }
        m
    }

    #[test]
    fn calibrates_on_first_l_then_selects() {
        // calibration values give gamma = mean(0.6, 0.4) = 0.5
        let ent = [0.1, 0.6, 0.3, 0.4, 0.55, 0.45, 0.2, 0.69];
        let model = model_with(&ent);
        let mut s = InfoRvState::new(InfoRvParams { l: 4, j: 2, k: 2 }).unwrap();
        for i in 0..4 {
            let d = s.step(sample(i), &model).unwrap();
            assert!(!d.kept && d.trace.calibrating);
            assert_eq!(d.trace.gamma, None);
        }
        let gamma = s.gamma().unwrap();
        assert!((gamma - 0.5).abs() < 1e-9);

        let d = s.step(sample(4), &model).unwrap();
        assert!(d.kept && !d.trigger_fired);
        assert_eq!(d.trace.gamma, Some(gamma));
        assert!(!s.step(sample(5), &model).unwrap().kept);
        assert!(!s.step(sample(6), &model).unwrap().kept);
        let d = s.step(sample(7), &model).unwrap();
        assert!(d.trigger_fired && d.retrain);
        assert_eq!(s.take_batch().len(), 2);
    }

    #[test]
    fn exact_tie_with_gamma_is_discarded() {
        let model = model_with(&[0.3, 0.3, 0.3]);
        let mut s = InfoRvState::new(InfoRvParams { l: 2, j: 1, k: 1 }).unwrap();
        s.step(sample(0), &model).unwrap();
        s.step(sample(1), &model).unwrap();
        let d = s.step(sample(2), &model).unwrap();
        assert_eq!(d.trace.informativeness, s.gamma());
        assert!(!d.kept);
    }

    #[test]
    fn derived_threshold_keeps_more_informative_sample() {
        let ent = [0.1, 0.65, 0.3, 0.45, 0.6];
        let mut s = InfoRvState::new(InfoRvParams { l: 4, j: 2, k: 4 }).unwrap();
        let model = model_with(&ent);
        for i in 0..4 {
            s.step(sample(i), &model).unwrap();
        }
        // gamma = (0.65 + 0.45) / 2 = 0.55 < 0.6
        assert!((s.gamma().unwrap() - 0.55).abs() < 1e-9);
        assert!(s.step(sample(4), &model).unwrap().kept);
    }

    #[test]
    fn step_after_trigger_requires_rearm() {
        let model = model_with(&[0.1, 0.5, 0.6]);
        let mut s = InfoRvState::new(InfoRvParams { l: 1, j: 1, k: 1 }).unwrap();
        s.step(sample(0), &model).unwrap();
        assert!(s.step(sample(1), &model).unwrap().retrain);
        assert!(matches!(s.step(sample(2), &model), Err(Error::NotArmed)));
        s.rearm();
        let d = s.step(sample(2), &model).unwrap();
        assert!(d.trace.calibrating);
    }

    #[test]
    fn rearm_is_idempotent() {
        let model = model_with(&[0.1, 0.5, 0.6]);
        let mut s = InfoRvState::new(InfoRvParams { l: 1, j: 1, k: 2 }).unwrap();
        for i in 0..3 {
            s.step(sample(i), &model).unwrap();
        }
        s.rearm();
        let once = s.clone();
        s.rearm();
        assert_eq!(s, once);
        assert_eq!(
            s,
            InfoRvState::new(InfoRvParams { l: 1, j: 1, k: 2 }).unwrap()
        );
    }

    #[test]
    fn invalid_params() {
        assert!(InfoRvState::new(InfoRvParams { l: 3, j: 4, k: 1 }).is_err());
        assert!(InfoRvState::new(InfoRvParams { l: 3, j: 0, k: 1 }).is_err());
        assert!(InfoRvState::new(InfoRvParams { l: 3, j: 1, k: 0 }).is_err());
    }
}
