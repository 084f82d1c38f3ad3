//! Batch-handling strategies.
//!
//! Each strategy sees one sample at a time and decides whether it joins the
//! batch awaiting labels. When [`Decision::retrain`] is set the caller takes
//! the batch with [`BatchStrategy::take_batch`], has it labeled, retrains the
//! model and calls [`BatchStrategy::rearm`] before stepping again.

mod calibrate;
mod dual_rv;
mod info_rv;
mod preemption;
mod random;
mod trigger;

use std::fmt;
use std::str::FromStr;

pub use calibrate::{calibrate_div_threshold, calibrate_info_threshold, draw_subset};
pub use dual_rv::{DualRvParams, DualRvState};
pub use info_rv::{InfoRvParams, InfoRvState};
pub use preemption::{PreemptionParams, PreemptionState};
pub use random::{RandomParams, RandomState};
pub use trigger::{TriggerHeuristic, TriggerKind};

use crate::data::Sample;
use crate::model::Classifier;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyKind {
    InfoRv,
    DualRv,
    Preemption,
    Random,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::InfoRv,
        StrategyKind::DualRv,
        StrategyKind::Preemption,
        StrategyKind::Random,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            StrategyKind::InfoRv => "info_rv",
            StrategyKind::DualRv => "dual_rv",
            StrategyKind::Preemption => "preemption",
            StrategyKind::Random => "random",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown strategy `{s}`")))
    }
}

/// What a strategy knew when it decided; one row of the decision log.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DecisionTrace {
    pub stream_id: u64,
    /// The sample only fed a threshold calibration buffer.
    pub calibrating: bool,
    pub informativeness: Option<f64>,
    pub diversity_after: Option<f64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decision {
    pub kept: bool,
    pub trigger_fired: bool,
    /// The labeled batch is complete; the caller must retrain and rearm.
    pub retrain: bool,
    /// Member pushed out by a preemption swap.
    pub evicted: Option<Sample>,
    pub trace: DecisionTrace,
}

impl Decision {
    pub(crate) fn new(trace: DecisionTrace) -> Self {
        Decision {
            kept: false,
            trigger_fired: false,
            retrain: false,
            evicted: None,
            trace,
        }
    }
}

pub trait BatchStrategy: Send {
    fn kind(&self) -> StrategyKind;

    fn step(&mut self, x: Sample, model: &dyn Classifier) -> Result<Decision>;

    /// Members of the batch currently being built.
    fn batch_len(&self) -> usize;

    /// Samples [`BatchStrategy::take_batch`] would hand over now.
    fn pending_len(&self) -> usize {
        self.batch_len()
    }

    /// Hands over every sample awaiting labels, in selection order.
    fn take_batch(&mut self) -> Vec<Sample>;

    /// Clears the batch, counters and thresholds so selection restarts
    /// against a freshly retrained model.
    fn rearm(&mut self);
}

#[derive(Clone, Debug, PartialEq)]
pub enum StrategyParams {
    InfoRv(InfoRvParams),
    DualRv(DualRvParams),
    Preemption(PreemptionParams),
    Random(RandomParams),
}

impl StrategyParams {
    pub fn kind(&self) -> StrategyKind {
        match self {
            StrategyParams::InfoRv(_) => StrategyKind::InfoRv,
            StrategyParams::DualRv(_) => StrategyKind::DualRv,
            StrategyParams::Preemption(_) => StrategyKind::Preemption,
            StrategyParams::Random(_) => StrategyKind::Random,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            StrategyParams::InfoRv(p) => p.validate(),
            StrategyParams::DualRv(p) => p.validate(),
            StrategyParams::Preemption(p) => p.validate(),
            StrategyParams::Random(p) => p.validate(),
        }
    }

    /// Labels requested per retraining.
    pub fn labels_per_retrain(&self) -> usize {
        match self {
            StrategyParams::InfoRv(p) => p.k,
            StrategyParams::DualRv(p) => p.k,
            StrategyParams::Preemption(p) => p.k_sub * p.n_sub,
            StrategyParams::Random(p) => p.k,
        }
    }

    /// Builds a fresh strategy; `seed` drives any random draws it makes.
    pub fn build(&self, seed: u64) -> Result<Box<dyn BatchStrategy>> {
        Ok(match self {
            StrategyParams::InfoRv(p) => Box::new(InfoRvState::new(p.clone())?),
            StrategyParams::DualRv(p) => Box::new(DualRvState::new(p.clone(), seed)?),
            StrategyParams::Preemption(p) => Box::new(PreemptionState::new(p.clone())?),
            StrategyParams::Random(p) => Box::new(RandomState::new(p.clone(), seed)?),
        })
    }
}
