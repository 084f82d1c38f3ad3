//! Flat little-endian weight files.
//!
//! Layout: magic `TACM`, version `u32`, layer count `u32`, then per layer a
//! kind tag `u32` (0 conv2d, 1 maxpool2d, 2 flatten, 3 dense, 4 dropout), a
//! rank `u32` and that many `u32` weight dimensions (conv
//! `[filters, kernel, kernel, channels]`, dense `[units, inputs]`, rank 0
//! for parameter-free layers), the weights as row-major `f32`, a bias length
//! `u32` and the biases as `f32`.

use std::fs;
use std::path::Path;

use super::layers::LayerSpec;
use super::Network;
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"TACM";
const VERSION: u32 = 1;

fn header(spec: &LayerSpec, input_len: usize, input_channels: usize) -> (u32, Vec<u32>, usize) {
    match *spec {
        LayerSpec::Conv2d {
            filters, kernel, ..
        } => (
            0,
            vec![
                filters as u32,
                kernel as u32,
                kernel as u32,
                input_channels as u32,
            ],
            filters,
        ),
        LayerSpec::MaxPool2d { .. } => (1, vec![], 0),
        LayerSpec::Flatten => (2, vec![], 0),
        LayerSpec::Dense { units, .. } => (3, vec![units as u32, input_len as u32], units),
        LayerSpec::Dropout { .. } => (4, vec![], 0),
    }
}

fn channels(d: super::Dims) -> usize {
    match d {
        super::Dims::Spatial(s) => s.channels,
        super::Dims::Flat(_) => 0,
    }
}

impl Network {
    /// Serializes the weights. Values are narrowed to `f32`.
    pub fn to_checkpoint_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.layers.len() as u32).to_le_bytes());
        for layer in &self.layers {
            let (kind, dims, biases) =
                header(&layer.spec, layer.input.len(), channels(layer.input));
            out.extend_from_slice(&kind.to_le_bytes());
            out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
            for d in &dims {
                out.extend_from_slice(&d.to_le_bytes());
            }
            let nw = layer.params.len() - biases;
            for p in &layer.params[..nw] {
                out.extend_from_slice(&(*p as f32).to_le_bytes());
            }
            out.extend_from_slice(&(biases as u32).to_le_bytes());
            for p in &layer.params[nw..] {
                out.extend_from_slice(&(*p as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn save_weights(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_checkpoint_bytes()).map_err(|e| Error::io(path, e))
    }

    /// Loads weights written by [`Network::save_weights`] into a network of
    /// the same architecture.
    pub fn load_weights(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        self.read_checkpoint(&bytes)
            .map_err(|message| Error::Format {
                path: path.to_path_buf(),
                message,
            })
    }

    pub fn read_checkpoint(&mut self, bytes: &[u8]) -> std::result::Result<(), String> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err("bad magic, expected TACM".into());
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(format!("unsupported version {version}"));
        }
        let count = r.u32()? as usize;
        if count != self.layers.len() {
            return Err(format!(
                "checkpoint has {count} layers, network has {}",
                self.layers.len()
            ));
        }
        let mut loaded = Vec::with_capacity(count);
        for layer in &self.layers {
            let (kind, dims, biases) =
                header(&layer.spec, layer.input.len(), channels(layer.input));
            let got_kind = r.u32()?;
            let rank = r.u32()? as usize;
            let got_dims = (0..rank)
                .map(|_| r.u32())
                .collect::<std::result::Result<Vec<_>, _>>()?;
            if got_kind != kind || got_dims != dims {
                return Err(format!(
                    "layer {} shape mismatch: kind {got_kind} dims {got_dims:?}",
                    layer.spec
                ));
            }
            let nw = layer.params.len() - biases;
            let mut params = Vec::with_capacity(layer.params.len());
            for _ in 0..nw {
                params.push(r.f32()?);
            }
            if r.u32()? as usize != biases {
                return Err(format!("layer {} bias length mismatch", layer.spec));
            }
            for _ in 0..biases {
                params.push(r.f32()?);
            }
            loaded.push(params);
        }
        if r.pos != bytes.len() {
            return Err("trailing bytes after last layer".into());
        }
        for (layer, params) in self.layers.iter_mut().zip(loaded) {
            layer.params = params;
        }
        Ok(())
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let s = self
            .bytes
            .get(self.pos..self.pos + n)
            .ok_or_else(|| "truncated checkpoint".to_string())?;
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn f32(&mut self) -> std::result::Result<f64, String> {
        Ok(f64::from(f32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        )))
    }
}
