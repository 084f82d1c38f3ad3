use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layers::{Activation, Dims, LayerSpec};
use super::Classifier;
use crate::data::{LabeledSample, Sample, Shape};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Layer {
    pub(crate) spec: LayerSpec,
    pub(crate) input: Dims,
    pub(crate) output: Dims,
    /// Weights then biases. Conv weights are `[filter][ky][kx][channel]`,
    /// dense weights `[out][in]`.
    pub(crate) params: Vec<f64>,
}

impl Layer {
    fn weight_count(&self) -> usize {
        match self.spec {
            LayerSpec::Conv2d { filters, .. } | LayerSpec::Dense { units: filters, .. } => {
                self.params.len() - filters
            }
            _ => 0,
        }
    }
}

/// A sequential classifier whose flatten-layer output serves as the feature
/// vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    input: Shape,
    pub(crate) layers: Vec<Layer>,
    feature_cut: usize,
    classes: usize,
    seed: u64,
}

/// Activations recorded during a training forward pass.
pub(crate) struct Trace {
    /// `acts[0]` is the input, `acts[i + 1]` the output of layer `i`.
    acts: Vec<Vec<f64>>,
    masks: Vec<Option<Vec<f64>>>,
    logits: Vec<f64>,
}

impl Network {
    pub fn new(input: Shape, specs: Vec<LayerSpec>, seed: u64) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::InvalidArchitecture("no layers".into()));
        }
        let flattens: Vec<usize> = specs
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, LayerSpec::Flatten))
            .map(|(i, _)| i)
            .collect();
        if flattens.len() != 1 {
            return Err(Error::InvalidArchitecture(format!(
                "expected exactly one flatten layer, found {}",
                flattens.len()
            )));
        }
        let classes = match specs.last() {
            Some(LayerSpec::Dense {
                units,
                activation: Activation::Softmax,
            }) => *units,
            _ => {
                return Err(Error::InvalidArchitecture(
                    "last layer must be dense with softmax".into(),
                ))
            }
        };
        let softmaxes = specs
            .iter()
            .filter(|s| {
                matches!(
                    s,
                    LayerSpec::Dense {
                        activation: Activation::Softmax,
                        ..
                    } | LayerSpec::Conv2d {
                        activation: Activation::Softmax,
                        ..
                    }
                )
            })
            .count();
        if softmaxes != 1 {
            return Err(Error::InvalidArchitecture(
                "softmax is only allowed on the last layer".into(),
            ));
        }

        let mut dims = Dims::Spatial(input);
        let mut layers = Vec::with_capacity(specs.len());
        for spec in specs {
            let output = spec.output_dims(dims)?;
            layers.push(Layer {
                spec,
                input: dims,
                output,
                params: vec![0.0; spec.param_count(dims)],
            });
            dims = output;
        }
        let mut net = Network {
            input,
            layers,
            feature_cut: flattens[0],
            classes,
            seed,
        };
        net.reinitialize();
        Ok(net)
    }

    /// Seeded He-uniform weights for ReLU layers, Glorot-uniform otherwise,
    /// zero biases.
    pub fn reinitialize(&mut self) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for layer in &mut self.layers {
            let (fan_in, fan_out, activation) = match (layer.spec, layer.input) {
                (
                    LayerSpec::Conv2d {
                        filters,
                        kernel,
                        activation,
                    },
                    Dims::Spatial(s),
                ) => (
                    kernel * kernel * s.channels,
                    kernel * kernel * filters,
                    activation,
                ),
                (LayerSpec::Dense { units, activation }, d) => (d.len(), units, activation),
                _ => continue,
            };
            let limit = match activation {
                Activation::Relu => (6.0 / fan_in as f64).sqrt(),
                _ => (6.0 / (fan_in + fan_out) as f64).sqrt(),
            };
            let nw = layer.weight_count();
            for (i, p) in layer.params.iter_mut().enumerate() {
                *p = if i < nw {
                    rng.gen_range(-limit..limit)
                } else {
                    0.0
                };
            }
        }
    }

    pub fn input_shape(&self) -> Shape {
        self.input
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn feature_len(&self) -> usize {
        self.layers[self.feature_cut].output.len()
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.params.len()).sum()
    }

    pub fn params(&self, layer: usize) -> &[f64] {
        &self.layers[layer].params
    }

    pub fn params_mut(&mut self, layer: usize) -> &mut [f64] {
        &mut self.layers[layer].params
    }

    pub(crate) fn check_input(&self, x: &Sample) -> Result<()> {
        if x.shape() != self.input {
            return Err(Error::ShapeMismatch {
                expected: self.input.len(),
                actual: x.shape().len(),
            });
        }
        Ok(())
    }

    /// Inference pass returning `(probabilities, features)`.
    fn infer(&self, x: &Sample) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_input(x)?;
        let mut cur: Vec<f64> = x.data().iter().map(|&v| f64::from(v)).collect();
        let mut next = Vec::new();
        let mut features = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            match layer.spec {
                LayerSpec::Flatten | LayerSpec::Dropout { .. } => {}
                _ => {
                    linear_forward(layer, &cur, &mut next);
                    std::mem::swap(&mut cur, &mut next);
                    activate(layer, &mut cur);
                }
            }
            if i == self.feature_cut {
                features = cur.clone();
            }
        }
        Ok((cur, features))
    }

    /// Forward pass keeping every activation. Dropout is applied only when an
    /// rng is given.
    pub(crate) fn forward_trace(&self, x: &Sample, mut rng: Option<&mut ChaCha8Rng>) -> Trace {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        let mut masks = Vec::with_capacity(self.layers.len());
        let mut logits = Vec::new();
        acts.push(x.data().iter().map(|&v| f64::from(v)).collect::<Vec<f64>>());
        for layer in &self.layers {
            let input = acts.last().expect("input activation");
            let mut out = Vec::new();
            let mut mask = None;
            match layer.spec {
                LayerSpec::Flatten => out = input.clone(),
                LayerSpec::Dropout { rate } => match rng.as_deref_mut() {
                    Some(rng) if rate > 0.0 => {
                        let keep = 1.0 / (1.0 - rate);
                        let m: Vec<f64> = (0..input.len())
                            .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
                            .collect();
                        out = input.iter().zip(&m).map(|(a, b)| a * b).collect();
                        mask = Some(m);
                    }
                    _ => out = input.clone(),
                },
                _ => {
                    linear_forward(layer, input, &mut out);
                    if matches!(
                        layer.spec,
                        LayerSpec::Dense {
                            activation: Activation::Softmax,
                            ..
                        }
                    ) {
                        logits = out.clone();
                    }
                    activate(layer, &mut out);
                }
            }
            acts.push(out);
            masks.push(mask);
        }
        Trace {
            acts,
            masks,
            logits,
        }
    }

    /// Cross-entropy of a traced pass, computed stably from the logits.
    pub(crate) fn trace_loss(trace: &Trace, label: usize) -> f64 {
        let max = trace
            .logits
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let lse = max
            + trace
                .logits
                .iter()
                .map(|z| (z - max).exp())
                .sum::<f64>()
                .ln();
        lse - trace.logits[label]
    }

    /// Adds the gradient of the sample's cross-entropy loss into `grads`.
    pub(crate) fn backward(&self, trace: &Trace, label: usize, grads: &mut [Vec<f64>]) {
        let probs = trace.acts.last().expect("output");
        let mut g: Vec<f64> = probs.clone();
        g[label] -= 1.0;
        let mut g_in = Vec::new();
        for (li, layer) in self.layers.iter().enumerate().rev() {
            let input = &trace.acts[li];
            let output = &trace.acts[li + 1];
            let need_input_grad = li > 0;
            match layer.spec {
                LayerSpec::Flatten => continue,
                LayerSpec::Dropout { .. } => {
                    if let Some(mask) = &trace.masks[li] {
                        for (gi, m) in g.iter_mut().zip(mask) {
                            *gi *= m;
                        }
                    }
                    continue;
                }
                LayerSpec::MaxPool2d { pool } => {
                    let (Dims::Spatial(si), Dims::Spatial(so)) = (layer.input, layer.output) else {
                        unreachable!("pooling is spatial")
                    };
                    g_in.clear();
                    g_in.resize(si.len(), 0.0);
                    for oy in 0..so.height {
                        for ox in 0..so.width {
                            for c in 0..so.channels {
                                let mut best = (f64::NEG_INFINITY, 0);
                                for py in 0..pool {
                                    for px in 0..pool {
                                        let idx = ((oy * pool + py) * si.width + ox * pool + px)
                                            * si.channels
                                            + c;
                                        if input[idx] > best.0 {
                                            best = (input[idx], idx);
                                        }
                                    }
                                }
                                g_in[best.1] += g[(oy * so.width + ox) * so.channels + c];
                            }
                        }
                    }
                }
                LayerSpec::Dense { activation, .. } => {
                    if activation == Activation::Relu {
                        relu_mask(&mut g, output);
                    }
                    let n_in = layer.input.len();
                    let nw = layer.weight_count();
                    let grad = &mut grads[li];
                    for (o, &go) in g.iter().enumerate() {
                        if go == 0.0 {
                            continue;
                        }
                        let row = &mut grad[o * n_in..(o + 1) * n_in];
                        for (r, &xi) in row.iter_mut().zip(input) {
                            *r += go * xi;
                        }
                        grad[nw + o] += go;
                    }
                    if need_input_grad {
                        g_in.clear();
                        g_in.resize(n_in, 0.0);
                        for (o, &go) in g.iter().enumerate() {
                            if go == 0.0 {
                                continue;
                            }
                            let w = &layer.params[o * n_in..(o + 1) * n_in];
                            for (gi, &wi) in g_in.iter_mut().zip(w) {
                                *gi += go * wi;
                            }
                        }
                    }
                }
                LayerSpec::Conv2d {
                    filters,
                    kernel,
                    activation,
                } => {
                    if activation == Activation::Relu {
                        relu_mask(&mut g, output);
                    }
                    let (Dims::Spatial(si), Dims::Spatial(so)) = (layer.input, layer.output) else {
                        unreachable!("convolution is spatial")
                    };
                    let run = kernel * si.channels;
                    let nw = layer.weight_count();
                    let grad = &mut grads[li];
                    if need_input_grad {
                        g_in.clear();
                        g_in.resize(si.len(), 0.0);
                    }
                    for oy in 0..so.height {
                        for ox in 0..so.width {
                            for f in 0..filters {
                                let go = g[(oy * so.width + ox) * filters + f];
                                if go == 0.0 {
                                    continue;
                                }
                                grad[nw + f] += go;
                                for ky in 0..kernel {
                                    let xo = ((oy + ky) * si.width + ox) * si.channels;
                                    let wo = (f * kernel + ky) * run;
                                    for t in 0..run {
                                        grad[wo + t] += go * input[xo + t];
                                    }
                                    if need_input_grad {
                                        for t in 0..run {
                                            g_in[xo + t] += go * layer.params[wo + t];
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
            if need_input_grad {
                std::mem::swap(&mut g, &mut g_in);
            }
        }
    }

    pub(crate) fn zero_grads(&self) -> Vec<Vec<f64>> {
        self.layers
            .iter()
            .map(|l| vec![0.0; l.params.len()])
            .collect()
    }

    /// Mean cross-entropy and its gradient over `batch`, dropout disabled.
    pub fn loss_and_gradient(&self, batch: &[LabeledSample]) -> Result<(f64, Vec<Vec<f64>>)> {
        if batch.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut grads = self.zero_grads();
        let mut loss = 0.0;
        for item in batch {
            self.check_input(&item.sample)?;
            self.check_label(item.label)?;
            let trace = self.forward_trace(&item.sample, None);
            loss += Self::trace_loss(&trace, item.label);
            self.backward(&trace, item.label, &mut grads);
        }
        let scale = 1.0 / batch.len() as f64;
        for g in grads.iter_mut().flatten() {
            *g *= scale;
        }
        Ok((loss * scale, grads))
    }

    /// Mean cross-entropy over `data` in inference mode.
    pub fn loss(&self, data: &[LabeledSample]) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut total = 0.0;
        for item in data {
            self.check_input(&item.sample)?;
            self.check_label(item.label)?;
            total += Self::trace_loss(&self.forward_trace(&item.sample, None), item.label);
        }
        Ok(total / data.len() as f64)
    }

    pub(crate) fn check_label(&self, label: usize) -> Result<()> {
        if label >= self.classes {
            return Err(Error::LabelOutOfRange {
                label,
                classes: self.classes,
            });
        }
        Ok(())
    }
}

impl Classifier for Network {
    fn class_count(&self) -> usize {
        self.classes
    }

    fn predict_proba(&self, x: &Sample) -> Result<Vec<f64>> {
        Ok(self.infer(x)?.0)
    }

    fn extract_features(&self, x: &Sample) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut cur: Vec<f64> = x.data().iter().map(|&v| f64::from(v)).collect();
        let mut next = Vec::new();
        for layer in &self.layers[..=self.feature_cut] {
            if let LayerSpec::Conv2d { .. } | LayerSpec::MaxPool2d { .. } = layer.spec {
                linear_forward(layer, &cur, &mut next);
                std::mem::swap(&mut cur, &mut next);
                activate(layer, &mut cur);
            }
        }
        Ok(cur)
    }

    fn predict_with_features(&self, x: &Sample) -> Result<(Vec<f64>, Vec<f64>)> {
        self.infer(x)
    }
}

fn relu_mask(g: &mut [f64], output: &[f64]) {
    for (gi, &o) in g.iter_mut().zip(output) {
        if o <= 0.0 {
            *gi = 0.0;
        }
    }
}

/// Conv, pool or dense pre-activation of `input` into `out`.
fn linear_forward(layer: &Layer, input: &[f64], out: &mut Vec<f64>) {
    out.clear();
    match (layer.spec, layer.input, layer.output) {
        (
            LayerSpec::Conv2d {
                filters, kernel, ..
            },
            Dims::Spatial(si),
            Dims::Spatial(so),
        ) => {
            let run = kernel * si.channels;
            let nw = layer.weight_count();
            out.resize(so.len(), 0.0);
            for oy in 0..so.height {
                for ox in 0..so.width {
                    let base = (oy * so.width + ox) * filters;
                    for f in 0..filters {
                        let mut acc = layer.params[nw + f];
                        for ky in 0..kernel {
                            let xo = ((oy + ky) * si.width + ox) * si.channels;
                            let wo = (f * kernel + ky) * run;
                            acc += input[xo..xo + run]
                                .iter()
                                .zip(&layer.params[wo..wo + run])
                                .map(|(a, b)| a * b)
                                .sum::<f64>();
                        }
                        out[base + f] = acc;
                    }
                }
            }
        }
        (LayerSpec::MaxPool2d { pool }, Dims::Spatial(si), Dims::Spatial(so)) => {
            out.resize(so.len(), f64::NEG_INFINITY);
            for oy in 0..so.height {
                for ox in 0..so.width {
                    for c in 0..so.channels {
                        let mut m = f64::NEG_INFINITY;
                        for py in 0..pool {
                            for px in 0..pool {
                                let v = input[((oy * pool + py) * si.width + ox * pool + px)
                                    * si.channels
                                    + c];
                                if v > m {
                                    m = v;
                                }
                            }
                        }
                        out[(oy * so.width + ox) * so.channels + c] = m;
                    }
                }
            }
        }
        (LayerSpec::Dense { units, .. }, d, _) => {
            let n_in = d.len();
            let nw = layer.weight_count();
            out.extend((0..units).map(|o| {
                layer.params[nw + o]
                    + layer.params[o * n_in..(o + 1) * n_in]
                        .iter()
                        .zip(input)
                        .map(|(w, x)| w * x)
                        .sum::<f64>()
            }));
        }
        _ => out.extend_from_slice(input),
    }
}

fn activate(layer: &Layer, v: &mut [f64]) {
    let activation = match layer.spec {
        LayerSpec::Conv2d { activation, .. } | LayerSpec::Dense { activation, .. } => activation,
        _ => return,
    };
    match activation {
        Activation::Relu => {
            for x in v.iter_mut() {
                *x = x.max(0.0);
            }
        }
        Activation::Softmax => softmax_in_place(v),
        Activation::None => {}
    }
}

/// Max-subtracted softmax.
pub fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}
