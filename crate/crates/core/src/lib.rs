//! Stream active learning for resource-constrained devices.
//!
//! Samples arrive one at a time and a batch-handling strategy decides, on
//! the spot, whether each one is worth an oracle label. Once the strategy's
//! trigger fires the batch is labeled, appended to the training set and the
//! classifier is retrained.
//!
//! The crate is organised as:
//!
//! * [`data`]: samples, datasets, the forward-only stream and candidate batches.
//! * [`model`]: a small trainable classifier (conv / pool / dense layers, Adam).
//! * [`metrics`]: entropy, margin, cosine diversity and the log-det objective.
//! * [`strategies`]: Info RV, Dual RV, preemption streaming and random sampling.
//! * [`harness`]: dataset loaders, the labeling oracle, the experiment loop,
//!   resource accounting and CSV output.
//! * [`cli`]: the `tactile` command-line front end.

pub mod cli;
pub mod data;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod strategies;

pub use error::{Error, Result};
