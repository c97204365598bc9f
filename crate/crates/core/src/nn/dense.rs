use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::norm::{LayerNorm, LayerNormCache};
use super::{join, Activation, Parameters};
use crate::error::{Error, Result};

/// Affine map `y = act(x W + b)` with `W` stored as `inputs x outputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct DenseCache {
    input: Array2<f64>,
    pre: Array2<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            weight: Array2::zeros((inputs, outputs)),
            bias: Array1::zeros(outputs),
            activation,
        }
    }

    /// Uniform fan-scaled initialization: He bound `sqrt(6 / fan_in)` for
    /// rectifier-like activations, Xavier bound `sqrt(6 / (fan_in +
    /// fan_out))` otherwise. Biases start at zero.
    pub fn init<R: Rng>(inputs: usize, outputs: usize, activation: Activation, rng: &mut R) -> Self {
        let bound = match activation {
            Activation::LeakyRelu | Activation::Gelu => (6.0 / inputs as f64).sqrt(),
            Activation::Sigmoid | Activation::Identity => (6.0 / (inputs + outputs) as f64).sqrt(),
        };
        let mut layer = Self::zeros(inputs, outputs, activation);
        layer.weight.mapv_inplace(|_| rng.random_range(-bound..bound));
        layer
    }

    pub fn inputs(&self) -> usize {
        self.weight.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.ncols()
    }

    pub fn forward(&self, x: &Array2<f64>) -> Result<(Array2<f64>, DenseCache)> {
        if x.ncols() != self.inputs() {
            return Err(Error::DimensionMismatch {
                expected: self.inputs(),
                actual: x.ncols(),
            });
        }
        let pre = x.dot(&self.weight) + &self.bias;
        let act = self.activation;
        let out = pre.mapv(|v| act.apply(v));
        Ok((out, DenseCache { input: x.clone(), pre }))
    }

    /// Output without keeping a cache.
    pub fn infer(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward(x)?.0)
    }

    pub fn backward(&self, cache: &DenseCache, grad_out: &Array2<f64>) -> Result<(Dense, Array2<f64>)> {
        if grad_out.dim() != cache.pre.dim() {
            return Err(Error::invalid("dense cache does not match gradient shape"));
        }
        let act = self.activation;
        let dpre = if act == Activation::Identity {
            grad_out.clone()
        } else {
            let mut d = cache.pre.mapv(|v| act.derivative(v));
            d *= grad_out;
            d
        };
        let grads = Dense {
            weight: cache.input.t().dot(&dpre),
            bias: dpre.sum_axis(Axis(0)),
            activation: act,
        };
        Ok((grads, dpre.dot(&self.weight.t())))
    }
}

impl Parameters for Dense {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        let (r, c) = self.weight.dim();
        f(
            &join(prefix, "weight"),
            &[r, c],
            self.weight.as_slice().expect("contiguous"),
        );
        f(&join(prefix, "bias"), &[c], self.bias.as_slice().expect("contiguous"));
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        f(&join(prefix, "weight"), self.weight.as_slice_mut().expect("contiguous"));
        f(&join(prefix, "bias"), self.bias.as_slice_mut().expect("contiguous"));
    }
}

/// Chain of dense layers with an optional terminal layer norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseStack {
    pub layers: Vec<Dense>,
    pub norm: Option<LayerNorm>,
}

#[derive(Debug, Clone)]
pub struct StackCache {
    layers: Vec<DenseCache>,
    norm: Option<LayerNormCache>,
}

impl DenseStack {
    /// Layers of widths `dims[0] -> dims[1] -> ...`, with `activations[i]`
    /// applied after layer `i`.
    pub fn init<R: Rng>(dims: &[usize], activations: &[Activation], layer_norm: bool, rng: &mut R) -> Result<Self> {
        if dims.len() < 2 || activations.len() != dims.len() - 1 {
            return Err(Error::invalid("need one activation per layer and at least one layer"));
        }
        if dims.contains(&0) {
            return Err(Error::invalid("layer widths must be positive"));
        }
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(w, &a)| Dense::init(w[0], w[1], a, rng))
            .collect();
        let norm = if layer_norm {
            Some(LayerNorm::new(*dims.last().expect("checked length"))?)
        } else {
            None
        };
        Ok(Self { layers, norm })
    }

    pub fn inputs(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn outputs(&self) -> usize {
        self.layers.last().expect("non-empty stack").outputs()
    }

    pub fn forward(&self, x: &Array2<f64>) -> Result<(Array2<f64>, StackCache)> {
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for layer in &self.layers {
            let (next, cache) = layer.forward(&h)?;
            caches.push(cache);
            h = next;
        }
        let norm = match &self.norm {
            Some(ln) => {
                let (out, cache) = ln.forward(&h)?;
                h = out;
                Some(cache)
            }
            None => None,
        };
        Ok((h, StackCache { layers: caches, norm }))
    }

    pub fn infer(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward(x)?.0)
    }

    pub fn backward(&self, cache: &StackCache, grad_out: &Array2<f64>) -> Result<(DenseStack, Array2<f64>)> {
        if cache.layers.len() != self.layers.len() || cache.norm.is_some() != self.norm.is_some() {
            return Err(Error::invalid("stack cache does not match this stack"));
        }
        let mut g = grad_out.clone();
        let norm_grad = match (&self.norm, &cache.norm) {
            (Some(ln), Some(c)) => {
                let (pg, gi) = ln.backward(c, &g)?;
                g = gi;
                Some(pg)
            }
            _ => None,
        };
        let mut layer_grads = Vec::with_capacity(self.layers.len());
        for (layer, c) in self.layers.iter().zip(&cache.layers).rev() {
            let (pg, gi) = layer.backward(c, &g)?;
            layer_grads.push(pg);
            g = gi;
        }
        layer_grads.reverse();
        Ok((
            DenseStack {
                layers: layer_grads,
                norm: norm_grad,
            },
            g,
        ))
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.fill_zero();
        z
    }
}

impl Parameters for DenseStack {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        for (i, l) in self.layers.iter().enumerate() {
            l.visit(&join(prefix, &format!("layer{i}")), f);
        }
        if let Some(ln) = &self.norm {
            ln.visit(&join(prefix, "norm"), f);
        }
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        for (i, l) in self.layers.iter_mut().enumerate() {
            l.visit_mut(&join(prefix, &format!("layer{i}")), f);
        }
        if let Some(ln) = &mut self.norm {
            ln.visit_mut(&join(prefix, "norm"), f);
        }
    }
}
