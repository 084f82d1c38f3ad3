use std::fmt;
use std::str::FromStr;

use crate::data::Shape;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Softmax,
    None,
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "softmax" => Ok(Activation::Softmax),
            "none" | "linear" => Ok(Activation::None),
            other => Err(Error::InvalidArchitecture(format!(
                "unknown activation `{other}`"
            ))),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Softmax => "softmax",
            Activation::None => "none",
        })
    }
}

/// One layer of a sequential network. Convolutions are stride 1 with no
/// padding; pooling uses a stride equal to the window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LayerSpec {
    Conv2d {
        filters: usize,
        kernel: usize,
        activation: Activation,
    },
    MaxPool2d {
        pool: usize,
    },
    Flatten,
    Dense {
        units: usize,
        activation: Activation,
    },
    Dropout {
        rate: f64,
    },
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerSpec::Conv2d {
                filters,
                kernel,
                activation,
            } => write!(f, "conv2d:{filters}:{kernel}:{activation}"),
            LayerSpec::MaxPool2d { pool } => write!(f, "maxpool2d:{pool}"),
            LayerSpec::Flatten => f.write_str("flatten"),
            LayerSpec::Dense { units, activation } => write!(f, "dense:{units}:{activation}"),
            LayerSpec::Dropout { rate } => write!(f, "dropout:{rate}"),
        }
    }
}

impl FromStr for LayerSpec {
    type Err = Error;

    /// Parses `conv2d:8:3:relu`, `maxpool2d:2`, `flatten`, `dense:10:softmax`
    /// or `dropout:0.25`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = || Error::InvalidArchitecture(format!("cannot parse layer `{s}`"));
        let num = |i: usize| -> Result<usize> {
            parts.get(i).and_then(|p| p.parse().ok()).ok_or_else(bad)
        };
        let act = |i: usize| -> Result<Activation> {
            parts.get(i).map_or(Ok(Activation::None), |p| p.parse())
        };
        let spec = match parts[0] {
            "conv2d" if parts.len() <= 4 => LayerSpec::Conv2d {
                filters: num(1)?,
                kernel: num(2)?,
                activation: act(3)?,
            },
            "maxpool2d" if parts.len() == 2 => LayerSpec::MaxPool2d { pool: num(1)? },
            "flatten" if parts.len() == 1 => LayerSpec::Flatten,
            "dense" if parts.len() <= 3 => LayerSpec::Dense {
                units: num(1)?,
                activation: act(2)?,
            },
            "dropout" if parts.len() == 2 => LayerSpec::Dropout {
                rate: parts[1].parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        Ok(spec)
    }
}

/// Activation tensor dimensions between layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dims {
    Spatial(Shape),
    Flat(usize),
}

impl Dims {
    pub fn len(&self) -> usize {
        match self {
            Dims::Spatial(s) => s.len(),
            Dims::Flat(n) => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl LayerSpec {
    pub fn output_dims(&self, input: Dims) -> Result<Dims> {
        let err = |m: String| Err(Error::InvalidArchitecture(m));
        match (*self, input) {
            (
                LayerSpec::Conv2d {
                    filters, kernel, ..
                },
                Dims::Spatial(s),
            ) => {
                if kernel == 0 || filters == 0 || kernel > s.height || kernel > s.width {
                    return err(format!("{self} does not fit input {s}"));
                }
                Ok(Dims::Spatial(Shape::new(
                    s.height - kernel + 1,
                    s.width - kernel + 1,
                    filters,
                )))
            }
            (LayerSpec::MaxPool2d { pool }, Dims::Spatial(s)) => {
                if pool == 0 || pool > s.height || pool > s.width {
                    return err(format!("{self} does not fit input {s}"));
                }
                Ok(Dims::Spatial(Shape::new(
                    s.height / pool,
                    s.width / pool,
                    s.channels,
                )))
            }
            (LayerSpec::Flatten, Dims::Spatial(s)) => Ok(Dims::Flat(s.len())),
            (LayerSpec::Dense { units, .. }, Dims::Flat(_)) if units > 0 => Ok(Dims::Flat(units)),
            (LayerSpec::Dropout { rate }, d) if (0.0..1.0).contains(&rate) => Ok(d),
            (spec, d) => err(format!("{spec} cannot follow an activation of shape {d:?}")),
        }
    }

    /// Number of trainable parameters given the layer's input dimensions.
    pub fn param_count(&self, input: Dims) -> usize {
        match (*self, input) {
            (
                LayerSpec::Conv2d {
                    filters, kernel, ..
                },
                Dims::Spatial(s),
            ) => filters * kernel * kernel * s.channels + filters,
            (LayerSpec::Dense { units, .. }, d) => units * d.len() + units,
            _ => 0,
        }
    }
}

/// Named architectures. `classes` sets the width of the softmax layer.
pub fn preset(name: &str, classes: usize) -> Result<Vec<LayerSpec>> {
    use Activation::{Relu, Softmax};
    let conv = |filters, activation| LayerSpec::Conv2d {
        filters,
        kernel: 3,
        activation,
    };
    let pool = LayerSpec::MaxPool2d { pool: 2 };
    let dense = |units, activation| LayerSpec::Dense { units, activation };
    let dropout = |rate| LayerSpec::Dropout { rate };
    let layers = match name {
        "mlp" => vec![LayerSpec::Flatten, dense(32, Relu), dense(classes, Softmax)],
        "mnist_cnn" => vec![
            conv(8, Relu),
            pool,
            conv(8, Relu),
            pool,
            LayerSpec::Flatten,
            dense(8, Relu),
            dense(classes, Softmax),
        ],
        "fashion_cnn" => vec![
            conv(16, Relu),
            pool,
            conv(32, Relu),
            pool,
            conv(64, Relu),
            LayerSpec::Flatten,
            dense(64, Relu),
            dropout(0.25),
            dense(classes, Softmax),
        ],
        "cifar_cnn" => vec![
            conv(32, Relu),
            conv(32, Relu),
            pool,
            dropout(0.3),
            conv(64, Relu),
            conv(64, Relu),
            pool,
            dropout(0.4),
            LayerSpec::Flatten,
            dense(64, Relu),
            dropout(0.5),
            dense(classes, Softmax),
        ],
        other => {
            return Err(Error::InvalidArchitecture(format!(
                "unknown preset `{other}`"
            )))
        }
    };
    Ok(layers)
}

/// Parses either a preset name or a comma-separated layer list.
pub fn parse_architecture(text: &str, classes: usize) -> Result<Vec<LayerSpec>> {
    let text = text.trim();
    if !text.contains(':') && !text.contains(',') && text != "flatten" {
        return preset(text, classes);
    }
    text.split(',').map(str::parse).collect()
}
