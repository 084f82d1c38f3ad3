use std::time::Instant;

use crate::data::{Sample, Shape};
use crate::model::Classifier;
use crate::strategies::{BatchStrategy, StrategyKind};
use crate::{Error, Result};

/// Clock of the host the reference timings were taken on.
pub const HOST_CLOCK_HZ: f64 = 2.40e9;
/// Clock of the target microcontroller.
pub const TARGET_CLOCK_HZ: f64 = 0.48e9;

/// Byte sizes that drive a strategy's buffer footprint. Images are stored
/// at one byte per value and features at four.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MemoryModel {
    pub k: u64,
    pub image_bytes: u64,
    pub feature_bytes: u64,
}

impl MemoryModel {
    pub fn new(k: usize, shape: Shape, feature_len: usize) -> Self {
        MemoryModel {
            k: k as u64,
            image_bytes: shape.len() as u64,
            feature_bytes: feature_len as u64 * 4,
        }
    }
}

/// Bytes a strategy needs for its batch buffers, excluding the network.
pub fn account_memory(kind: StrategyKind, mem: &MemoryModel) -> u64 {
    let MemoryModel {
        k,
        image_bytes: mi,
        feature_bytes: mf,
    } = *mem;
    match kind {
        StrategyKind::Preemption => (k + 1) * mi + (k + 2) * mf,
        StrategyKind::DualRv => k * (mi + mf),
        StrategyKind::InfoRv | StrategyKind::Random => k * mi,
    }
}

/// The formula behind [`account_memory`] with the numbers substituted.
pub fn memory_formula(kind: StrategyKind, mem: &MemoryModel) -> String {
    let MemoryModel {
        k,
        image_bytes: mi,
        feature_bytes: mf,
    } = *mem;
    match kind {
        StrategyKind::Preemption => {
            format!("(k+1)*M_I + (k+2)*M_f = {}*{mi} + {}*{mf}", k + 1, k + 2)
        }
        StrategyKind::DualRv => format!("k*(M_I + M_f) = {k}*({mi} + {mf})"),
        StrategyKind::InfoRv | StrategyKind::Random => format!("k*M_I = {k}*{mi}"),
    }
}

/// Scales a host timing to a slower clock.
pub fn estimate_mcu_time(t_host: f64, host_clock_hz: f64, target_clock_hz: f64) -> Result<f64> {
    if !(host_clock_hz > 0.0 && target_clock_hz > 0.0)
        || !host_clock_hz.is_finite()
        || !target_clock_hz.is_finite()
    {
        return Err(Error::InvalidParameter(format!(
            "clock rates must be positive: host {host_clock_hz}, target {target_clock_hz}"
        )));
    }
    Ok(t_host * host_clock_hz / target_clock_hz)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecisionTiming {
    pub mean_seconds: f64,
    pub decisions: usize,
}

/// Mean wall-clock seconds per steady-state decision.
///
/// Steps `strategy` over `samples` until `min_decisions` non-calibration
/// decisions were timed or the samples run out. Completed batches are
/// discarded and the strategy rearmed against the same model, so retraining
/// never enters the measurement. The model forward pass a decision needs is
/// part of its cost.
pub fn measure_decision_time(
    strategy: &mut dyn BatchStrategy,
    model: &dyn Classifier,
    samples: impl IntoIterator<Item = Sample>,
    min_decisions: usize,
) -> Result<DecisionTiming> {
    let mut total = 0.0;
    let mut decisions = 0;
    for x in samples {
        if decisions >= min_decisions {
            break;
        }
        let start = Instant::now();
        let d = strategy.step(x, model)?;
        let elapsed = start.elapsed().as_secs_f64();
        if !d.trace.calibrating {
            total += elapsed;
            decisions += 1;
        }
        if d.retrain {
            strategy.take_batch();
            strategy.rearm();
        }
    }
    let mean_seconds = if decisions == 0 {
        0.0
    } else {
        total / decisions as f64
    };
    Ok(DecisionTiming {
        mean_seconds,
        decisions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn memory_rows() {
        let mnist = MemoryModel::new(32, Shape::new(28, 28, 1), 200);
        let fashion = MemoryModel::new(32, Shape::new(28, 28, 1), 576);
        let bytes = |m| {
            [
                StrategyKind::InfoRv,
                StrategyKind::DualRv,
                StrategyKind::Preemption,
            ]
            .map(|k| account_memory(k, m))
        };
        assert_eq!(bytes(&mnist), [25088, 50688, 53072]);
        assert_eq!(bytes(&fashion), [25088, 98816, 104208]);
        let empty = MemoryModel { k: 0, ..mnist };
        assert_eq!(account_memory(StrategyKind::InfoRv, &empty), 0);
        assert_eq!(account_memory(StrategyKind::Random, &empty), 0);
        assert_eq!(
            memory_formula(StrategyKind::Preemption, &mnist),
            "(k+1)*M_I + (k+2)*M_f = 33*784 + 34*800"
        );
    }

    #[test]
    fn clock_scaling() {
        let est = |t| estimate_mcu_time(t, HOST_CLOCK_HZ, TARGET_CLOCK_HZ).unwrap();
        assert_eq!(format!("{:.4}", est(0.1494)), "0.7470");
        assert_eq!(format!("{:.4}", est(2.5593)), "12.7965");
        assert_eq!(estimate_mcu_time(1.25, 3e9, 3e9).unwrap(), 1.25);
        assert!(estimate_mcu_time(1.0, 0.0, 1.0).is_err());
        assert!(estimate_mcu_time(1.0, 1.0, -1.0).is_err());
    }
}
