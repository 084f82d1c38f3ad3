use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::datasets::Splits;
use super::oracle::Oracle;
use super::results::{DecisionRow, ExperimentRecord};
use crate::data::{DataStream, Dataset, LabeledSample};
use crate::model::{parse_architecture, LayerSpec, Network, TrainConfig};
use crate::strategies::{StrategyKind, StrategyParams};
use crate::{Error, Result};

/// Independent seed streams within a trial.
#[derive(Clone, Copy, Debug)]
#[repr(u64)]
pub enum SeedPurpose {
    Shuffle = 1,
    Init = 2,
    Strategy = 3,
    /// Offset by the retrain index.
    Train = 16,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one purpose in one trial. Strategies are not mixed in, so
/// every strategy sees the same shuffles and the same initial model.
pub fn derive_seed(base: u64, trial: usize, purpose: u64) -> u64 {
    splitmix64(base ^ splitmix64(trial as u64 ^ splitmix64(purpose)))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    pub records: Vec<ExperimentRecord>,
    pub decisions: Vec<DecisionRow>,
    /// Labels released by the oracle over the whole trial.
    pub queries: usize,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutput {
    pub strategy: StrategyKind,
    pub trials: Vec<TrialOutcome>,
}

impl ExperimentOutput {
    pub fn records(&self) -> Vec<ExperimentRecord> {
        self.trials
            .iter()
            .flat_map(|t| t.records.iter().cloned())
            .collect()
    }

    pub fn decisions(&self) -> Vec<DecisionRow> {
        self.trials
            .iter()
            .flat_map(|t| t.decisions.iter().cloned())
            .collect()
    }

    pub fn failures(&self) -> Vec<(usize, &str)> {
        self.trials
            .iter()
            .filter_map(|t| t.failure.as_deref().map(|f| (t.trial, f)))
            .collect()
    }
}

struct Plan<'a> {
    cfg: &'a ExperimentConfig,
    splits: &'a Splits,
    specs: Vec<LayerSpec>,
    strategy: StrategyParams,
}

/// Runs every trial of `cfg` on `splits`.
///
/// Each trial shuffles the training split with its own seed, trains the
/// initial model on the first `d0_size` items and streams the rest through
/// the strategy. Each completed batch is labeled by the oracle, appended to
/// the training set, and the model retrained and evaluated. A trial that
/// fails, for instance by diverging, keeps the records it produced and
/// reports the failure instead of aborting the others.
pub fn run_experiment(cfg: &ExperimentConfig, splits: &Splits) -> Result<ExperimentOutput> {
    cfg.validate()?;
    if cfg.d0_size >= splits.train.len() {
        return Err(Error::Config(format!(
            "d0_size {} leaves no stream from {} training items",
            cfg.d0_size,
            splits.train.len()
        )));
    }
    if splits.test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let plan = Plan {
        cfg,
        splits,
        specs: parse_architecture(&cfg.architecture, splits.train.class_count())?,
        strategy: cfg.strategy_params(),
    };
    let trials: Vec<TrialOutcome> = if cfg.timings {
        (0..cfg.trials).map(|t| plan.trial(t)).collect()
    } else {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| plan.trial(t))
            .collect()
    };
    for t in &trials {
        if let Some(f) = &t.failure {
            log::warn!("trial {} failed: {f}", t.trial);
        }
    }
    Ok(ExperimentOutput {
        strategy: cfg.strategy,
        trials,
    })
}

impl Plan<'_> {
    fn trial(&self, trial: usize) -> TrialOutcome {
        let mut out = TrialOutcome {
            trial,
            ..TrialOutcome::default()
        };
        if let Err(e) = self.run_trial(trial, &mut out) {
            out.failure = Some(e.to_string());
        }
        out
    }

    fn train_config(&self, trial: usize, n: usize) -> TrainConfig {
        TrainConfig {
            seed: derive_seed(self.cfg.seed, trial, SeedPurpose::Train as u64 + n as u64),
            ..self.cfg.train.clone()
        }
    }

    fn clock(&self) -> Option<Instant> {
        self.cfg.timings.then(Instant::now)
    }

    fn run_trial(&self, trial: usize, out: &mut TrialOutcome) -> Result<()> {
        let cfg = self.cfg;
        let seed = |p: SeedPurpose| derive_seed(cfg.seed, trial, p as u64);
        let train = &self.splits.train;

        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed(SeedPurpose::Shuffle)));
        let (d0_idx, rest) = order.split_at(cfg.d0_size);
        let stream_len = if cfg.stream_length == 0 {
            rest.len()
        } else {
            cfg.stream_length.min(rest.len())
        };

        let mut dataset = Dataset::new(
            train.shape(),
            train.class_count(),
            d0_idx.iter().map(|&i| train.items()[i].clone()).collect(),
        )?;
        let stream_items: Vec<LabeledSample> = rest[..stream_len]
            .iter()
            .enumerate()
            .map(|(t, &i)| {
                let item = &train.items()[i];
                LabeledSample {
                    sample: item.sample.with_id(t as u64),
                    label: item.label,
                }
            })
            .collect();
        let mut stream = DataStream::new(stream_items)?;
        let mut oracle = Oracle::for_stream(&stream);

        let mut net = Network::new(train.shape(), self.specs.clone(), seed(SeedPurpose::Init))?;
        let started = self.clock();
        net.train(&dataset, &self.train_config(trial, 0), false)?;
        let retrain_time = started.map_or(0.0, |s| s.elapsed().as_secs_f64());
        out.records.push(ExperimentRecord {
            trial,
            retrain_index: 0,
            samples_seen: 0,
            labels_spent: 0,
            dataset_size: dataset.len(),
            test_accuracy: net.evaluate(&self.splits.test)?,
            mean_decision_time_s: 0.0,
            retrain_time_s: retrain_time,
        });
        if cfg.retrain_limit == 0 {
            return Ok(());
        }

        let mut strategy = self.strategy.build(seed(SeedPurpose::Strategy))?;
        let mut n = 0;
        let (mut decide_total, mut decide_count) = (0.0, 0usize);
        while let Some(x) = stream.next_sample() {
            let started = self.clock();
            let d = strategy.step(x, &net)?;
            if let Some(s) = started {
                if !d.trace.calibrating {
                    decide_total += s.elapsed().as_secs_f64();
                    decide_count += 1;
                }
            }
            let tr = &d.trace;
            out.decisions.push(DecisionRow {
                trial,
                stream_id: tr.stream_id,
                informativeness: tr.informativeness,
                diversity_after: tr.diversity_after,
                gamma: tr.gamma,
                delta: tr.delta,
                kept: d.kept,
                trigger_fired: d.trigger_fired,
            });
            if !d.retrain {
                continue;
            }

            let batch = strategy.take_batch();
            let ids: Vec<u64> = batch.iter().map(|s| s.id()).collect();
            let labels = oracle.label(&ids, &stream)?;
            out.queries = oracle.query_count();
            for (sample, label) in batch.into_iter().zip(labels) {
                dataset.push(LabeledSample { sample, label })?;
            }
            n += 1;
            let started = self.clock();
            net.train(&dataset, &self.train_config(trial, n), cfg.warm_start)?;
            let retrain_time = started.map_or(0.0, |s| s.elapsed().as_secs_f64());
            out.records.push(ExperimentRecord {
                trial,
                retrain_index: n,
                samples_seen: stream.served(),
                labels_spent: oracle.query_count(),
                dataset_size: dataset.len(),
                test_accuracy: net.evaluate(&self.splits.test)?,
                mean_decision_time_s: if decide_count == 0 {
                    0.0
                } else {
                    decide_total / decide_count as f64
                },
                retrain_time_s: retrain_time,
            });
            (decide_total, decide_count) = (0.0, 0);
            strategy.rearm();
            if n == cfg.retrain_limit {
                break;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::datasets::synthetic;

    fn small_cfg() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        for o in [
            "d0_size=40",
            "k=8",
            "l=20",
            "j=5",
            "trials=2",
            "retrain_limit=2",
            "epochs=2",
            "synthetic_train=400",
            "synthetic_test=100",
        ] {
            cfg.apply_override(o).unwrap();
        }
        cfg
    }

    #[test]
    fn seeds_differ_by_trial_and_purpose() {
        let a = derive_seed(1, 0, SeedPurpose::Shuffle as u64);
        assert_ne!(a, derive_seed(1, 1, SeedPurpose::Shuffle as u64));
        assert_ne!(a, derive_seed(1, 0, SeedPurpose::Init as u64));
        assert_ne!(a, derive_seed(2, 0, SeedPurpose::Shuffle as u64));
    }

    #[test]
    fn budget_is_conserved_and_runs_repeat() {
        let cfg = small_cfg();
        let splits = synthetic(&cfg.synthetic, cfg.seed).unwrap();
        let out = run_experiment(&cfg, &splits).unwrap();
        assert!(out.failures().is_empty());
        for t in &out.trials {
            let spent: Vec<usize> = t.records.iter().map(|r| r.labels_spent).collect();
            assert_eq!(spent, vec![0, 8, 16]);
            for r in &t.records {
                assert_eq!(r.dataset_size, cfg.d0_size + r.labels_spent);
            }
            assert_eq!(t.queries, 16);
        }
        assert_eq!(out, run_experiment(&cfg, &splits).unwrap());
    }

    #[test]
    fn zero_retrains_gives_only_the_baseline() {
        let mut cfg = small_cfg();
        cfg.retrain_limit = 0;
        let splits = synthetic(&cfg.synthetic, cfg.seed).unwrap();
        let out = run_experiment(&cfg, &splits).unwrap();
        for t in &out.trials {
            assert_eq!(t.records.len(), 1);
            assert_eq!(t.records[0].retrain_index, 0);
            assert_eq!(t.queries, 0);
            assert!(t.decisions.is_empty());
        }
    }

    #[test]
    fn divergence_is_recorded_per_trial() {
        let mut cfg = small_cfg();
        cfg.train.learning_rate = 1e300;
        let splits = synthetic(&cfg.synthetic, cfg.seed).unwrap();
        let out = run_experiment(&cfg, &splits).unwrap();
        assert_eq!(out.failures().len(), 2);
        assert!(out.failures()[0].1.contains("diverged"));
    }

    #[test]
    fn oversized_d0_is_a_config_error() {
        let mut cfg = small_cfg();
        cfg.d0_size = 400;
        let splits = synthetic(&cfg.synthetic, cfg.seed).unwrap();
        assert!(run_experiment(&cfg, &splits).unwrap_err().is_config());
    }
}
