//! A small sequential classifier trained with Adam on cross-entropy.

mod checkpoint;
mod layers;
mod network;
mod train;

pub use layers::{parse_architecture, preset, Activation, Dims, LayerSpec};
pub use network::{softmax_in_place, Network};
pub use train::{TrainConfig, TrainReport};

use crate::data::Sample;
use crate::Result;

/// What a selection strategy needs from a model: class probabilities and the
/// latent feature vector of an input.
pub trait Classifier: Sync {
    fn class_count(&self) -> usize;

    fn predict_proba(&self, x: &Sample) -> Result<Vec<f64>>;

    fn extract_features(&self, x: &Sample) -> Result<Vec<f64>>;

    /// Probabilities and features together; implementors should share the
    /// forward pass.
    fn predict_with_features(&self, x: &Sample) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((self.predict_proba(x)?, self.extract_features(x)?))
    }
}
