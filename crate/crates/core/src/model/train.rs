use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Classifier, Network};
use crate::data::Dataset;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 10,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidParameter(
                "epochs and batch_size must be at least 1".into(),
            ));
        }
        let finite = [self.learning_rate, self.beta1, self.beta2, self.epsilon]
            .iter()
            .all(|v| v.is_finite());
        if !finite
            || self.learning_rate <= 0.0
            || !(0.0..1.0).contains(&self.beta1)
            || !(0.0..1.0).contains(&self.beta2)
            || self.epsilon <= 0.0
        {
            return Err(Error::InvalidParameter(format!(
                "bad Adam settings: {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    /// Mean training loss of each epoch (dropout active).
    pub epoch_losses: Vec<f64>,
    pub steps: usize,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        self.epoch_losses.last().copied().unwrap_or(f64::NAN)
    }
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

impl Adam {
    fn new(net: &Network) -> Self {
        Adam {
            m: net.zero_grads(),
            v: net.zero_grads(),
            t: 0,
        }
    }

    fn step(&mut self, net: &mut Network, grads: &[Vec<f64>], cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for (li, layer) in net.layers.iter_mut().enumerate() {
            let (m, v) = (&mut self.m[li], &mut self.v[li]);
            for (i, p) in layer.params.iter_mut().enumerate() {
                let g = grads[li][i];
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
                let mhat = m[i] / c1;
                let vhat = v[i] / c2;
                *p -= cfg.learning_rate * mhat / (vhat.sqrt() + cfg.epsilon);
            }
        }
    }
}

impl Network {
    /// Runs `epochs × ⌈n / batch_size⌉` Adam steps over seeded mini-batches.
    /// Without `warm_start` the weights are first reset to the seeded
    /// initialization.
    pub fn train(
        &mut self,
        data: &Dataset,
        cfg: &TrainConfig,
        warm_start: bool,
    ) -> Result<TrainReport> {
        cfg.validate()?;
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if data.shape() != self.input_shape() {
            return Err(Error::ShapeMismatch {
                expected: self.input_shape().len(),
                actual: data.shape().len(),
            });
        }
        for item in data.items() {
            self.check_label(item.label)?;
        }
        if !warm_start {
            self.reinitialize();
        }

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut adam = Adam::new(self);
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut epoch_losses = Vec::with_capacity(cfg.epochs);
        let mut steps = 0;
        for epoch in 0..cfg.epochs {
            order.shuffle(&mut rng);
            let mut total = 0.0;
            for chunk in order.chunks(cfg.batch_size) {
                let mut grads = self.zero_grads();
                for &i in chunk {
                    let item = &data.items()[i];
                    let trace = self.forward_trace(&item.sample, Some(&mut rng));
                    total += Network::trace_loss(&trace, item.label);
                    self.backward(&trace, item.label, &mut grads);
                }
                let scale = 1.0 / chunk.len() as f64;
                for g in grads.iter_mut().flatten() {
                    *g *= scale;
                }
                adam.step(self, &grads, cfg);
                steps += 1;
            }
            let loss = total / data.len() as f64;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, loss });
            }
            epoch_losses.push(loss);
        }
        Ok(TrainReport {
            epoch_losses,
            steps,
        })
    }

    /// Fraction of argmax predictions matching the labels; ties go to the
    /// lowest class index.
    pub fn evaluate(&self, test: &Dataset) -> Result<f64> {
        if test.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let correct = test
            .items()
            .par_iter()
            .map(|item| {
                Ok(usize::from(
                    argmax(&self.predict_proba(&item.sample)?) == item.label,
                ))
            })
            .sum::<Result<usize>>()?;
        Ok(correct as f64 / test.len() as f64)
    }
}

/// Index of the largest entry, first one on ties.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
