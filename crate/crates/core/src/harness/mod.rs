//! Experiment harness: configuration, dataset loading, the simulated
//! oracle, the retraining loop, resource accounting and CSV output.

pub mod config;
pub mod datasets;
pub mod experiment;
pub mod oracle;
pub mod resources;
pub mod results;

pub use config::{DatasetKind, ExperimentConfig, SyntheticSpec};
pub use datasets::{load_cifar10, load_dataset, load_idx, synthetic, Splits};
pub use experiment::{derive_seed, run_experiment, ExperimentOutput, SeedPurpose, TrialOutcome};
pub use oracle::Oracle;
pub use resources::{
    account_memory, estimate_mcu_time, measure_decision_time, memory_formula, DecisionTiming,
    MemoryModel, HOST_CLOCK_HZ, TARGET_CLOCK_HZ,
};
pub use results::{
    comparison_rows, read_csv, summarize, write_csv, write_results, ComparisonRow, DecisionRow,
    ExperimentRecord, SummaryRow,
};
