//! Streams, datasets and candidate batches.

use std::fmt;
use std::sync::Arc;

use crate::{Error, Result};

/// Image dimensions, stored row-major with channels fastest (HWC).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Shape {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl Shape {
    pub const fn new(height: usize, width: usize, channels: usize) -> Self {
        Shape {
            height,
            width,
            channels,
        }
    }

    pub const fn len(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.height, self.width, self.channels)
    }
}

/// One stream element. Pixel data is shared, so clones are cheap.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    id: u64,
    shape: Shape,
    data: Arc<[f32]>,
}

impl Sample {
    /// Builds a sample from normalized pixels; every value must lie in `[0, 1]`.
    pub fn new(id: u64, shape: Shape, data: Vec<f32>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::ShapeMismatch {
                expected: shape.len(),
                actual: data.len(),
            });
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidSample(format!(
                "pixel value {v} outside [0, 1]"
            )));
        }
        Ok(Sample {
            id,
            shape,
            data: data.into(),
        })
    }

    /// Builds a sample from raw 8-bit pixels, scaling by 1/255.
    pub fn from_bytes(id: u64, shape: Shape, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != shape.len() {
            return Err(Error::ShapeMismatch {
                expected: shape.len(),
                actual: bytes.len(),
            });
        }
        Ok(Sample {
            id,
            shape,
            data: bytes.iter().map(|&b| f32::from(b) / 255.0).collect(),
        })
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub(crate) fn with_id(&self, id: u64) -> Sample {
        Sample {
            id,
            shape: self.shape,
            data: Arc::clone(&self.data),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample {
    pub sample: Sample,
    pub label: usize,
}

/// An ordered, labeled collection sharing one shape.
#[derive(Clone, Debug)]
pub struct Dataset {
    shape: Shape,
    class_count: usize,
    items: Vec<LabeledSample>,
}

impl Dataset {
    pub fn new(shape: Shape, class_count: usize, items: Vec<LabeledSample>) -> Result<Self> {
        let mut ds = Dataset {
            shape,
            class_count,
            items: Vec::with_capacity(items.len()),
        };
        for item in items {
            ds.push(item)?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, item: LabeledSample) -> Result<()> {
        if item.sample.shape() != self.shape {
            return Err(Error::ShapeMismatch {
                expected: self.shape.len(),
                actual: item.sample.shape().len(),
            });
        }
        if item.label >= self.class_count {
            return Err(Error::LabelOutOfRange {
                label: item.label,
                classes: self.class_count,
            });
        }
        self.items.push(item);
        Ok(())
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn items(&self) -> &[LabeledSample] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Keeps only the first `n` items.
    pub fn truncate(&mut self, n: usize) {
        self.items.truncate(n);
    }

    pub fn class_histogram(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for item in &self.items {
            counts[item.label] += 1;
        }
        counts
    }
}

/// Forward-only stream of samples whose labels only the oracle may read.
#[derive(Debug)]
pub struct DataStream {
    items: Vec<LabeledSample>,
    cursor: usize,
}

impl DataStream {
    /// Ids must be strictly increasing in stream order.
    pub fn new(items: Vec<LabeledSample>) -> Result<Self> {
        if items
            .windows(2)
            .any(|w| w[0].sample.id() >= w[1].sample.id())
        {
            return Err(Error::InvalidParameter(
                "stream ids must be strictly increasing".into(),
            ));
        }
        Ok(DataStream { items, cursor: 0 })
    }

    /// Serves the next sample with its label withheld.
    pub fn next_sample(&mut self) -> Option<Sample> {
        let item = self.items.get(self.cursor)?;
        self.cursor += 1;
        Some(item.sample.clone())
    }

    /// Number of samples served so far.
    pub fn served(&self) -> usize {
        self.cursor
    }

    pub fn remaining(&self) -> usize {
        self.items.len() - self.cursor
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn has_served(&self, id: u64) -> bool {
        self.items[..self.cursor]
            .binary_search_by_key(&id, |it| it.sample.id())
            .is_ok()
    }

    /// Label table for the oracle; deliberately not public.
    pub(crate) fn label_table(&self) -> Vec<(u64, usize)> {
        self.items
            .iter()
            .map(|it| (it.sample.id(), it.label))
            .collect()
    }
}

/// The in-construction batch `K` and, optionally, its feature vectors `V`.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateBatch {
    capacity: usize,
    with_features: bool,
    samples: Vec<Sample>,
    features: Vec<Vec<f64>>,
}

impl CandidateBatch {
    /// A batch that stores samples only.
    pub fn new(capacity: usize) -> Self {
        CandidateBatch {
            capacity,
            with_features: false,
            samples: Vec::with_capacity(capacity),
            features: Vec::new(),
        }
    }

    /// A batch that keeps one feature vector per sample.
    pub fn with_features(capacity: usize) -> Self {
        CandidateBatch {
            with_features: true,
            features: Vec::with_capacity(capacity),
            ..CandidateBatch::new(capacity)
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn tracks_features(&self) -> bool {
        self.with_features
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.samples.len() >= self.capacity
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    fn check_feature(&self, feature: &Option<Vec<f64>>) -> Result<()> {
        match (self.with_features, feature.is_some()) {
            (true, false) => Err(Error::FeatureMode("batch tracks features but none given")),
            (false, true) => Err(Error::FeatureMode("batch does not track features")),
            _ => Ok(()),
        }
    }

    pub fn insert(&mut self, x: Sample, feature: Option<Vec<f64>>) -> Result<()> {
        if self.is_full() {
            return Err(Error::BatchFull {
                capacity: self.capacity,
            });
        }
        self.check_feature(&feature)?;
        self.samples.push(x);
        if let Some(f) = feature {
            self.features.push(f);
        }
        Ok(())
    }

    /// Replaces member `index`, returning the evicted sample and feature.
    pub fn swap(
        &mut self,
        index: usize,
        x: Sample,
        feature: Option<Vec<f64>>,
    ) -> Result<(Sample, Option<Vec<f64>>)> {
        if index >= self.samples.len() {
            return Err(Error::IndexOutOfRange {
                index,
                len: self.samples.len(),
            });
        }
        self.check_feature(&feature)?;
        let old = std::mem::replace(&mut self.samples[index], x);
        let old_feature = feature.map(|f| std::mem::replace(&mut self.features[index], f));
        Ok((old, old_feature))
    }

    /// Empties the batch, returning its samples in insertion order.
    pub fn drain(&mut self) -> Vec<Sample> {
        self.features.clear();
        std::mem::take(&mut self.samples)
    }

    pub fn clear(&mut self) {
        self.samples.clear();
        self.features.clear();
    }
}
