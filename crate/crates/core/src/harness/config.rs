use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::metrics::ObjectiveWeights;
use crate::model::{parse_architecture, TrainConfig};
use crate::strategies::{
    DualRvParams, InfoRvParams, PreemptionParams, RandomParams, StrategyKind, StrategyParams,
};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DatasetKind {
    Mnist,
    FashionMnist,
    Cifar10,
    Synthetic,
}

impl DatasetKind {
    pub fn name(&self) -> &'static str {
        match self {
            DatasetKind::Mnist => "mnist",
            DatasetKind::FashionMnist => "fashion_mnist",
            DatasetKind::Cifar10 => "cifar10",
            DatasetKind::Synthetic => "synthetic",
        }
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mnist" => Ok(DatasetKind::Mnist),
            "fashion_mnist" | "fashion-mnist" | "fashion" => Ok(DatasetKind::FashionMnist),
            "cifar10" | "cifar-10" | "cifar" => Ok(DatasetKind::Cifar10),
            "synthetic" => Ok(DatasetKind::Synthetic),
            other => Err(Error::Config(format!("unknown dataset `{other}`"))),
        }
    }
}

/// Seeded Gaussian blobs rendered as small grayscale images.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub side: usize,
    pub train: usize,
    pub test: usize,
    /// Standard deviation of per-pixel noise around each class prototype.
    pub noise: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            classes: 4,
            side: 8,
            train: 2000,
            test: 400,
            noise: 0.25,
        }
    }
}

/// Everything one experiment needs. Parsed from flat `key = value` text.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetKind,
    pub data_dir: PathBuf,
    /// Evaluate on at most this many test items (0 keeps all).
    pub test_limit: usize,
    pub d0_size: usize,
    /// Stream at most this many samples per trial (0 streams the whole remainder).
    pub stream_length: usize,
    pub strategy: StrategyKind,
    /// Batch size; for preemption, the sub-batch size.
    pub k: usize,
    pub w: usize,
    pub n_sub: usize,
    pub l: usize,
    pub j: usize,
    pub l_div: usize,
    pub j_div: usize,
    pub q: usize,
    pub r: usize,
    pub weights: ObjectiveWeights,
    pub p: f64,
    pub architecture: String,
    pub train: TrainConfig,
    pub warm_start: bool,
    pub trials: usize,
    pub seed: u64,
    pub retrain_limit: usize,
    pub out: PathBuf,
    /// Record wall-clock columns. Off by default so output is reproducible
    /// byte for byte; timing columns are then written as 0.
    pub timings: bool,
    pub synthetic: SyntheticSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetKind::Synthetic,
            data_dir: PathBuf::from("data"),
            test_limit: 0,
            d0_size: 150,
            stream_length: 0,
            strategy: StrategyKind::InfoRv,
            k: 32,
            w: 256,
            n_sub: 1,
            l: 100,
            j: 25,
            l_div: 50,
            j_div: 30,
            q: 10,
            r: 30,
            weights: ObjectiveWeights::default(),
            p: 0.25,
            architecture: "mlp".into(),
            train: TrainConfig::default(),
            warm_start: true,
            trials: 10,
            seed: 0,
            retrain_limit: 3,
            out: PathBuf::from("results"),
            timings: false,
            synthetic: SyntheticSpec::default(),
        }
    }
}

pub const KEYS: &[&str] = &[
    "dataset",
    "data_dir",
    "test_limit",
    "d0_size",
    "stream_length",
    "strategy",
    "k",
    "w",
    "n_sub",
    "l",
    "j",
    "l_div",
    "j_div",
    "q",
    "r",
    "lambda_i",
    "lambda_d",
    "alpha",
    "p",
    "architecture",
    "epochs",
    "batch_size",
    "learning_rate",
    "beta1",
    "beta2",
    "epsilon",
    "warm_start",
    "trials",
    "seed",
    "retrain_limit",
    "out",
    "timings",
    "synthetic_classes",
    "synthetic_side",
    "synthetic_train",
    "synthetic_test",
    "synthetic_noise",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse `{value}` for key `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "cannot parse `{value}` for key `{key}` as a flag"
        ))),
    }
}

impl ExperimentConfig {
    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
        self.set(key.trim(), value.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "dataset" => self.dataset = value.parse()?,
            "data_dir" => self.data_dir = PathBuf::from(value),
            "test_limit" => self.test_limit = parse(key, value)?,
            "d0_size" => self.d0_size = parse(key, value)?,
            "stream_length" => self.stream_length = parse(key, value)?,
            "strategy" => {
                self.strategy = value
                    .parse()
                    .map_err(|_| Error::Config(format!("unknown strategy `{value}`")))?
            }
            "k" => self.k = parse(key, value)?,
            "w" => self.w = parse(key, value)?,
            "n_sub" => self.n_sub = parse(key, value)?,
            "l" => self.l = parse(key, value)?,
            "j" => self.j = parse(key, value)?,
            "l_div" => self.l_div = parse(key, value)?,
            "j_div" => self.j_div = parse(key, value)?,
            "q" => self.q = parse(key, value)?,
            "r" => self.r = parse(key, value)?,
            "lambda_i" => self.weights.lambda_i = parse(key, value)?,
            "lambda_d" => self.weights.lambda_d = parse(key, value)?,
            "alpha" => self.weights.alpha = parse(key, value)?,
            "p" => self.p = parse(key, value)?,
            "architecture" => self.architecture = value.to_string(),
            "epochs" => self.train.epochs = parse(key, value)?,
            "batch_size" => self.train.batch_size = parse(key, value)?,
            "learning_rate" => self.train.learning_rate = parse(key, value)?,
            "beta1" => self.train.beta1 = parse(key, value)?,
            "beta2" => self.train.beta2 = parse(key, value)?,
            "epsilon" => self.train.epsilon = parse(key, value)?,
            "warm_start" => self.warm_start = parse_bool(key, value)?,
            "trials" => self.trials = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "retrain_limit" => self.retrain_limit = parse(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "timings" => self.timings = parse_bool(key, value)?,
            "synthetic_classes" => self.synthetic.classes = parse(key, value)?,
            "synthetic_side" => self.synthetic.side = parse(key, value)?,
            "synthetic_train" => self.synthetic.train = parse(key, value)?,
            "synthetic_test" => self.synthetic.test = parse(key, value)?,
            "synthetic_noise" => self.synthetic.noise = parse(key, value)?,
            other => return Err(Error::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Canonical text form; parsing it yields an equal config.
    pub fn to_text(&self) -> String {
        let w = &self.weights;
        let t = &self.train;
        let s = &self.synthetic;
        let values: Vec<String> = vec![
            self.dataset.name().into(),
            self.data_dir.display().to_string(),
            self.test_limit.to_string(),
            self.d0_size.to_string(),
            self.stream_length.to_string(),
            self.strategy.to_string(),
            self.k.to_string(),
            self.w.to_string(),
            self.n_sub.to_string(),
            self.l.to_string(),
            self.j.to_string(),
            self.l_div.to_string(),
            self.j_div.to_string(),
            self.q.to_string(),
            self.r.to_string(),
            w.lambda_i.to_string(),
            w.lambda_d.to_string(),
            w.alpha.to_string(),
            self.p.to_string(),
            self.architecture.clone(),
            t.epochs.to_string(),
            t.batch_size.to_string(),
            t.learning_rate.to_string(),
            t.beta1.to_string(),
            t.beta2.to_string(),
            t.epsilon.to_string(),
            self.warm_start.to_string(),
            self.trials.to_string(),
            self.seed.to_string(),
            self.retrain_limit.to_string(),
            self.out.display().to_string(),
            self.timings.to_string(),
            s.classes.to_string(),
            s.side.to_string(),
            s.train.to_string(),
            s.test.to_string(),
            s.noise.to_string(),
        ];
        let mut out = String::new();
        for (key, value) in KEYS.iter().zip(values) {
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }

    pub fn class_count(&self) -> usize {
        match self.dataset {
            DatasetKind::Synthetic => self.synthetic.classes,
            _ => 10,
        }
    }

    /// Strategy parameters for the configured strategy. An informativeness
    /// `j` larger than `l` is clamped to `l` with a warning.
    pub fn strategy_params(&self) -> StrategyParams {
        let j = if self.j > self.l {
            log::warn!("j = {} exceeds l = {}; clamping j to l", self.j, self.l);
            self.l
        } else {
            self.j
        };
        match self.strategy {
            StrategyKind::InfoRv => StrategyParams::InfoRv(InfoRvParams {
                l: self.l,
                j,
                k: self.k,
            }),
            StrategyKind::DualRv => StrategyParams::DualRv(DualRvParams {
                l_info: self.l,
                j_info: j,
                l_div: self.l_div,
                j_div: self.j_div,
                q: self.q,
                r: self.r,
                k: self.k,
            }),
            StrategyKind::Preemption => StrategyParams::Preemption(PreemptionParams {
                w: self.w,
                k_sub: self.k,
                n_sub: self.n_sub,
                weights: self.weights,
            }),
            StrategyKind::Random => StrategyParams::Random(RandomParams {
                p: self.p,
                k: self.k,
            }),
        }
    }

    /// Checks every precondition that does not need the dataset on disk.
    pub fn validate(&self) -> Result<()> {
        let config = |m: &str| Err(Error::Config(m.to_string()));
        if self.d0_size == 0 {
            return config("d0_size must be at least 1");
        }
        if self.trials == 0 {
            return config("trials must be at least 1");
        }
        let s = &self.synthetic;
        if self.dataset == DatasetKind::Synthetic
            && (s.classes < 2
                || s.side < 2
                || s.train == 0
                || s.test == 0
                || s.noise.is_nan()
                || s.noise < 0.0)
        {
            return config(
                "synthetic dataset needs classes >= 2, side >= 2, train, test >= 1 and noise >= 0",
            );
        }
        self.strategy_params().validate()?;
        self.train.validate()?;
        parse_architecture(&self.architecture, self.class_count())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_overrides() {
        let cfg = ExperimentConfig::from_text(
            "# demo\ndataset = mnist\nk = 16   # smaller\n\nstrategy=preemption\nn_sub = 2\n",
        )
        .unwrap();
        assert_eq!(cfg.dataset, DatasetKind::Mnist);
        assert_eq!(cfg.k, 16);
        assert_eq!(cfg.strategy, StrategyKind::Preemption);
        assert_eq!(cfg.strategy_params().labels_per_retrain(), 32);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ExperimentConfig::from_text("bogus = 1").unwrap_err();
        assert!(matches!(err, Error::UnknownKey(ref k) if k == "bogus"));
        assert!(err.is_config());
    }

    #[test]
    fn last_override_wins() {
        let mut cfg = ExperimentConfig::default();
        for o in ["k=4", "seed=3", "k=9"] {
            cfg.apply_override(o).unwrap();
        }
        assert_eq!((cfg.k, cfg.seed), (9, 3));
        assert!(cfg.apply_override("k").is_err());
        assert!(cfg.apply_override("k=abc").unwrap_err().is_config());
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_override("lambda_d=0.5").unwrap();
        cfg.apply_override("timings=true").unwrap();
        cfg.apply_override("architecture=flatten,dense:8:relu,dense:4:softmax")
            .unwrap();
        let back = ExperimentConfig::from_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn j_above_l_is_clamped() {
        let cfg = ExperimentConfig {
            l: 25,
            j: 32,
            ..Default::default()
        };
        match cfg.strategy_params() {
            StrategyParams::InfoRv(p) => assert_eq!(p.j, 25),
            other => panic!("unexpected {other:?}"),
        }
        cfg.validate().unwrap();
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for o in [
            "d0_size=0",
            "trials=0",
            "epochs=0",
            "p=2",
            "architecture=resnet",
            "q=1",
        ] {
            let strategy = if o == "p=2" {
                StrategyKind::Random
            } else {
                StrategyKind::DualRv
            };
            let mut cfg = ExperimentConfig {
                strategy,
                ..Default::default()
            };
            cfg.apply_override(o).unwrap();
            let err = cfg.validate().unwrap_err();
            assert!(err.is_config(), "{o}: {err}");
        }
    }
}
