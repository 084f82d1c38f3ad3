//! Command-line front end. Every failure prints one line of the form
//! `error code=N: message`; code 2 means a usage or configuration problem,
//! code 1 a runtime failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::data::Shape;
use crate::harness::{
    account_memory, comparison_rows, load_dataset, memory_formula, run_experiment, summarize,
    write_csv, write_results, DatasetKind, ExperimentConfig, ExperimentOutput, MemoryModel,
};
use crate::strategies::StrategyKind;
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "tactile",
    version,
    about = "Stream active learning experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write records, decisions and summary CSVs.
    Run(ConfigArgs),
    /// Run several strategies on the same seeds and join their summaries.
    Compare(CompareArgs),
    /// Load the configured dataset and print its shape and class counts.
    InspectDataset(ConfigArgs),
    /// Parse and check a config, printing the resolved values.
    ValidateConfig(ConfigArgs),
    /// Print the buffer memory a strategy needs.
    Account(AccountArgs),
}

#[derive(Debug, Args)]
struct ConfigArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key; repeatable, the last assignment wins.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory [default: ./results]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    common: ConfigArgs,
    /// Comma-separated strategy names, at least two.
    #[arg(long, value_delimiter = ',', required = true)]
    strategies: Vec<String>,
}

#[derive(Debug, Args)]
struct AccountArgs {
    #[arg(long)]
    dataset: String,
    #[arg(long)]
    strategy: String,
    #[arg(long)]
    k: usize,
    /// Feature vector length; defaults to the reference architecture's.
    #[arg(long)]
    feature_len: Option<usize>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        for o in &self.set {
            cfg.apply_override(o)?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(stdout, "{e}");
            return 0;
        }
        Err(e) => {
            let text = e.to_string();
            let line = text.lines().next().unwrap_or("invalid arguments");
            let line = line.trim_start_matches("error: ");
            let _ = writeln!(stderr, "error code=2: {line}");
            return 2;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let code = if e.is_config() { 2 } else { 1 };
            let msg = e.to_string().replace('\n', " ");
            let _ = writeln!(stderr, "error code={code}: {msg}");
            code
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Run(args) => cmd_run(&args.resolve()?, out),
        Command::Compare(args) => cmd_compare(&args, out),
        Command::InspectDataset(args) => cmd_inspect(&args.resolve()?, out),
        Command::ValidateConfig(args) => {
            let cfg = args.resolve()?;
            emit(out, format_args!("config ok\n{}", cfg.to_text()))?;
            Ok(0)
        }
        Command::Account(args) => cmd_account(&args, out),
    }
}

fn emit(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> Result<()> {
    out.write_fmt(text)
        .map_err(|e| Error::io(Path::new("<stdout>"), e))
}

fn report_failures(output: &ExperimentOutput, out: &mut dyn Write) -> Result<i32> {
    let failures = output.failures();
    for (trial, msg) in &failures {
        emit(
            out,
            format_args!("{} trial {trial} failed: {msg}\n", output.strategy),
        )?;
    }
    Ok(if failures.is_empty() { 0 } else { 1 })
}

fn cmd_run(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<i32> {
    let splits = load_dataset(cfg)?;
    let output = run_experiment(cfg, &splits)?;
    let records = output.records();
    write_results(&records, &output.decisions(), &cfg.out)?;
    for s in summarize(&records) {
        emit(
            out,
            format_args!(
                "retrain {}: mean accuracy {:.4} (var {:.6}), mean labels {:.1}\n",
                s.retrain_index, s.mean_accuracy, s.var_accuracy, s.mean_labels_spent
            ),
        )?;
    }
    emit(out, format_args!("wrote {}\n", cfg.out.display()))?;
    report_failures(&output, out)
}

fn cmd_compare(args: &CompareArgs, out: &mut dyn Write) -> Result<i32> {
    let base = args.common.resolve()?;
    let kinds = args
        .strategies
        .iter()
        .map(|s| {
            s.parse::<StrategyKind>()
                .map_err(|_| Error::Config(format!("unknown strategy `{s}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    if kinds.len() < 2 {
        return Err(Error::Config(
            "compare needs at least two strategies".into(),
        ));
    }
    let mut configs = Vec::new();
    for kind in &kinds {
        let mut cfg = base.clone();
        cfg.strategy = *kind;
        cfg.out = base.out.join(kind.name());
        cfg.validate()?;
        configs.push(cfg);
    }
    let splits = load_dataset(&base)?;
    let mut joined = Vec::new();
    let mut code = 0;
    for cfg in &configs {
        let output = run_experiment(cfg, &splits)?;
        let records = output.records();
        write_results(&records, &output.decisions(), &cfg.out)?;
        let summary = summarize(&records);
        for s in &summary {
            emit(
                out,
                format_args!(
                    "{} retrain {}: mean accuracy {:.4} (var {:.6})\n",
                    cfg.strategy, s.retrain_index, s.mean_accuracy, s.var_accuracy
                ),
            )?;
        }
        joined.extend(comparison_rows(cfg.strategy.name(), &summary));
        code = code.max(report_failures(&output, out)?);
    }
    let path = base.out.join("compare_summary.csv");
    write_csv(
        &path,
        &[
            "strategy",
            "retrain_index",
            "mean_accuracy",
            "var_accuracy",
            "mean_labels_spent",
        ],
        &joined,
    )?;
    emit(out, format_args!("wrote {}\n", path.display()))?;
    Ok(code)
}

fn cmd_inspect(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<i32> {
    let splits = load_dataset(cfg)?;
    for (name, ds) in [("train", &splits.train), ("test", &splits.test)] {
        let hist: Vec<String> = ds.class_histogram().iter().map(usize::to_string).collect();
        emit(
            out,
            format_args!(
                "{} {name}: {} items, shape {}, {} classes, per class [{}]\n",
                cfg.dataset.name(),
                ds.len(),
                ds.shape(),
                ds.class_count(),
                hist.join(" ")
            ),
        )?;
    }
    Ok(0)
}

/// Input shape and flatten-layer width of each dataset's reference network.
fn reference_dims(dataset: DatasetKind) -> (Shape, usize) {
    match dataset {
        DatasetKind::Mnist => (Shape::new(28, 28, 1), 200),
        DatasetKind::FashionMnist => (Shape::new(28, 28, 1), 576),
        DatasetKind::Cifar10 => (Shape::new(32, 32, 3), 1600),
        DatasetKind::Synthetic => (Shape::new(8, 8, 1), 64),
    }
}

fn cmd_account(args: &AccountArgs, out: &mut dyn Write) -> Result<i32> {
    let dataset: DatasetKind = args.dataset.parse()?;
    let kind: StrategyKind = args
        .strategy
        .parse()
        .map_err(|_| Error::Config(format!("unknown strategy `{}`", args.strategy)))?;
    let (shape, default_len) = reference_dims(dataset);
    let mem = MemoryModel::new(args.k, shape, args.feature_len.unwrap_or(default_len));
    emit(
        out,
        format_args!(
            "{} bytes = {}\n",
            account_memory(kind, &mem),
            memory_formula(kind, &mem)
        ),
    )?;
    Ok(0)
}
