//! Dense layers, layer normalization, AdamW and a binary checkpoint
//! container. Everything works on row-major batches (`rows = samples`) in
//! `f64`, with hand-written backward passes.

mod checkpoint;
mod dense;
mod norm;
mod optim;

pub use checkpoint::{
    read_checkpoint, write_checkpoint, Checkpoint, TensorEntry, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use dense::{Dense, DenseCache, DenseStack, StackCache};
pub use norm::{LayerNorm, LayerNormCache, LN_EPS};
pub use optim::{clip_global_norm, cosine_lr, global_norm, AdamW, AdamWConfig};

use serde::{Deserialize, Serialize};

/// Negative-side slope of the leaky ReLU.
pub const LEAKY_SLOPE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    LeakyRelu,
    /// Tanh approximation.
    Gelu,
    Sigmoid,
    Identity,
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const GELU_A: f64 = 0.044715;

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::LeakyRelu => {
                if x > 0.0 {
                    x
                } else {
                    LEAKY_SLOPE * x
                }
            }
            Activation::Gelu => 0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh()),
            Activation::Sigmoid => sigmoid(x),
            Activation::Identity => x,
        }
    }

    /// Derivative at pre-activation `x`.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::LeakyRelu => {
                if x > 0.0 {
                    1.0
                } else {
                    LEAKY_SLOPE
                }
            }
            Activation::Gelu => {
                let t = (GELU_C * (x + GELU_A * x * x * x)).tanh();
                0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
            }
            Activation::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Uniform visitation of a module's parameter tensors in a fixed order.
///
/// Gradient containers have the same type as the module they belong to,
/// so parameters and gradients line up tensor by tensor.
pub trait Parameters {
    /// Calls `f(name, shape, values)` for every tensor.
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64]));
    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64]));

    fn parameter_count(&self) -> usize {
        let mut n = 0;
        self.visit("", &mut |_, _, v| n += v.len());
        n
    }

    /// All values flattened in visitation order.
    fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit("", &mut |_, _, v| out.extend_from_slice(v));
        out
    }

    fn fill_zero(&mut self) {
        self.visit_mut("", &mut |_, v| v.fill(0.0));
    }

    /// `self += scale * other`, tensor by tensor.
    fn add_scaled(&mut self, other: &Self, scale: f64)
    where
        Self: Sized,
    {
        let flat = other.flatten();
        let mut offset = 0;
        self.visit_mut("", &mut |_, v| {
            let n = v.len();
            for (x, g) in v.iter_mut().zip(&flat[offset..offset + n]) {
                *x += scale * g;
            }
            offset += n;
        });
    }
}

pub(crate) fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}
