use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::{DatasetKind, ExperimentConfig, SyntheticSpec};
use crate::data::{Dataset, LabeledSample, Sample, Shape};
use crate::{Error, Result};

pub const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABEL_MAGIC: u32 = 0x0000_0801;
pub const CIFAR_RECORD: usize = 1 + 32 * 32 * 3;

/// Standard train and test splits of one dataset.
#[derive(Clone, Debug)]
pub struct Splits {
    pub train: Dataset,
    pub test: Dataset,
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn be_u32(bytes: &[u8], at: usize, path: &Path) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Truncated {
            path: path.to_path_buf(),
        })
}

fn check_magic(bytes: &[u8], expected: u32, path: &Path) -> Result<()> {
    let found = be_u32(bytes, 0, path)?;
    if found != expected {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected,
            found,
        });
    }
    Ok(())
}

/// Reads an IDX image/label file pair. Pixels are scaled to [0,1] and the
/// class count is one more than the largest label present.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let images = read(images_path)?;
    check_magic(&images, IDX_IMAGE_MAGIC, images_path)?;
    let count = be_u32(&images, 4, images_path)? as usize;
    let rows = be_u32(&images, 8, images_path)? as usize;
    let cols = be_u32(&images, 12, images_path)? as usize;
    let shape = Shape::new(rows, cols, 1);
    let pixels = &images[16..];
    if pixels.len() < count * shape.len() {
        return Err(Error::Truncated {
            path: images_path.to_path_buf(),
        });
    }

    let labels = read(labels_path)?;
    check_magic(&labels, IDX_LABEL_MAGIC, labels_path)?;
    let label_count = be_u32(&labels, 4, labels_path)? as usize;
    if label_count != count {
        return Err(Error::CountMismatch {
            images: count,
            labels: label_count,
        });
    }
    let label_bytes = &labels[8..];
    if label_bytes.len() < count {
        return Err(Error::Truncated {
            path: labels_path.to_path_buf(),
        });
    }

    let classes = label_bytes[..count]
        .iter()
        .max()
        .map_or(0, |&m| m as usize + 1);
    let items = pixels
        .chunks_exact(shape.len())
        .take(count)
        .zip(label_bytes)
        .enumerate()
        .map(|(i, (px, &label))| {
            Ok(LabeledSample {
                sample: Sample::from_bytes(i as u64, shape, px)?,
                label: label as usize,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(shape, classes, items)
}

/// Reads CIFAR-10 binary batches (one label byte, then 1024 bytes per
/// colour plane) and converts each record to a 32x32x3 interleaved sample.
pub fn load_cifar10(batch_paths: &[PathBuf]) -> Result<Dataset> {
    let shape = Shape::new(32, 32, 3);
    let plane = 32 * 32;
    let mut items = Vec::new();
    let mut hwc = vec![0u8; shape.len()];
    for path in batch_paths {
        let bytes = read(path)?;
        if bytes.len() % CIFAR_RECORD != 0 {
            return Err(Error::Format {
                path: path.clone(),
                message: format!("length {} is not a multiple of {CIFAR_RECORD}", bytes.len()),
            });
        }
        for record in bytes.chunks_exact(CIFAR_RECORD) {
            let label = record[0] as usize;
            if label >= 10 {
                return Err(Error::LabelOutOfRange { label, classes: 10 });
            }
            for p in 0..plane {
                for c in 0..3 {
                    hwc[p * 3 + c] = record[1 + c * plane + p];
                }
            }
            let id = items.len() as u64;
            items.push(LabeledSample {
                sample: Sample::from_bytes(id, shape, &hwc)?,
                label,
            });
        }
    }
    Dataset::new(shape, 10, items)
}

/// Gaussian blobs around per-class prototype images. Train and test are
/// drawn from the same prototypes with independent noise.
pub fn synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Splits> {
    let shape = Shape::new(spec.side, spec.side, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prototypes: Vec<Vec<f64>> = (0..spec.classes)
        .map(|_| (0..shape.len()).map(|_| rng.gen_range(0.1..0.9)).collect())
        .collect();
    let noise =
        Normal::new(0.0, spec.noise).map_err(|e| Error::Config(format!("synthetic_noise: {e}")))?;
    let mut draw = |n: usize| -> Result<Dataset> {
        let items = (0..n)
            .map(|i| {
                let label = rng.gen_range(0..spec.classes);
                let data = prototypes[label]
                    .iter()
                    .map(|&m| (m + noise.sample(&mut rng)).clamp(0.0, 1.0) as f32)
                    .collect();
                Ok(LabeledSample {
                    sample: Sample::new(i as u64, shape, data)?,
                    label,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(shape, spec.classes, items)
    };
    let train = draw(spec.train)?;
    let test = draw(spec.test)?;
    Ok(Splits { train, test })
}

fn idx_pair(dir: &Path, prefix: &str) -> Result<Dataset> {
    load_idx(
        &dir.join(format!("{prefix}-images-idx3-ubyte")),
        &dir.join(format!("{prefix}-labels-idx1-ubyte")),
    )
}

/// Loads the configured dataset. IDX datasets expect the standard file
/// names in `data_dir`; CIFAR-10 expects `data_batch_{1..5}.bin` and
/// `test_batch.bin`. The synthetic set is generated from the base seed.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Splits> {
    let dir = &cfg.data_dir;
    let mut splits = match cfg.dataset {
        DatasetKind::Mnist | DatasetKind::FashionMnist => Splits {
            train: idx_pair(dir, "train")?,
            test: idx_pair(dir, "t10k")?,
        },
        DatasetKind::Cifar10 => {
            let train: Vec<PathBuf> = (1..=5)
                .map(|i| dir.join(format!("data_batch_{i}.bin")))
                .collect();
            Splits {
                train: load_cifar10(&train)?,
                test: load_cifar10(&[dir.join("test_batch.bin")])?,
            }
        }
        DatasetKind::Synthetic => synthetic(&cfg.synthetic, cfg.seed)?,
    };
    if cfg.test_limit > 0 {
        splits.test.truncate(cfg.test_limit);
    }
    let classes = cfg.class_count();
    for ds in [&mut splits.train, &mut splits.test] {
        if ds.class_count() > classes {
            return Err(Error::Config(format!(
                "dataset has {} classes but {} expects {classes}",
                ds.class_count(),
                cfg.dataset.name()
            )));
        }
        *ds = Dataset::new(ds.shape(), classes, ds.items().to_vec())?;
    }
    Ok(splits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_is_seeded_and_balanced_enough() {
        let spec = SyntheticSpec::default();
        let a = synthetic(&spec, 5).unwrap();
        let b = synthetic(&spec, 5).unwrap();
        assert_eq!(
            a.train.items()[17].sample.data(),
            b.train.items()[17].sample.data()
        );
        assert_eq!(a.train.len(), spec.train);
        assert_eq!(a.test.len(), spec.test);
        assert!(a
            .train
            .class_histogram()
            .iter()
            .all(|&c| c > spec.train / 8));
        let c = synthetic(&spec, 6).unwrap();
        assert_ne!(
            a.train.items()[0].sample.data(),
            c.train.items()[0].sample.data()
        );
    }
}
