use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::{join, Parameters};
use crate::error::{Error, Result};

pub const LN_EPS: f64 = 1e-5;

/// Per-row normalization over the feature axis with learned gain and shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerNorm {
    pub gain: Array1<f64>,
    pub shift: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct LayerNormCache {
    normalized: Array2<f64>,
    inv_std: Array1<f64>,
}

impl LayerNorm {
    pub fn new(width: usize) -> Result<Self> {
        if width < 2 {
            return Err(Error::invalid("layer norm needs width >= 2"));
        }
        Ok(Self {
            gain: Array1::ones(width),
            shift: Array1::zeros(width),
        })
    }

    pub fn width(&self) -> usize {
        self.gain.len()
    }

    pub fn forward(&self, x: &Array2<f64>) -> Result<(Array2<f64>, LayerNormCache)> {
        let w = self.width();
        if x.ncols() != w {
            return Err(Error::DimensionMismatch {
                expected: w,
                actual: x.ncols(),
            });
        }
        let mean = x.mean_axis(Axis(1)).expect("non-empty width");
        let centered = x - &mean.view().insert_axis(Axis(1));
        let var = centered.mapv(|v| v * v).mean_axis(Axis(1)).expect("non-empty width");
        let inv_std = var.mapv(|v| 1.0 / (v + LN_EPS).sqrt());
        let normalized = &centered * &inv_std.view().insert_axis(Axis(1));
        let out = &normalized * &self.gain + &self.shift;
        Ok((out, LayerNormCache { normalized, inv_std }))
    }

    /// Returns parameter gradients (as a `LayerNorm`) and the input gradient.
    pub fn backward(&self, cache: &LayerNormCache, grad_out: &Array2<f64>) -> Result<(LayerNorm, Array2<f64>)> {
        if grad_out.dim() != cache.normalized.dim() {
            return Err(Error::invalid("layer norm cache does not match gradient shape"));
        }
        let n = self.width() as f64;
        let grads = LayerNorm {
            gain: (grad_out * &cache.normalized).sum_axis(Axis(0)),
            shift: grad_out.sum_axis(Axis(0)),
        };
        let dxhat = grad_out * &self.gain;
        let sum_d = dxhat.sum_axis(Axis(1)).insert_axis(Axis(1));
        let sum_dx = (&dxhat * &cache.normalized).sum_axis(Axis(1)).insert_axis(Axis(1));
        let inner = dxhat * n - &sum_d - &cache.normalized * &sum_dx;
        let grad_in = inner * &(cache.inv_std.view().insert_axis(Axis(1)).mapv(|s| s / n));
        Ok((grads, grad_in))
    }
}

impl Parameters for LayerNorm {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        f(
            &join(prefix, "gain"),
            &[self.gain.len()],
            self.gain.as_slice().expect("contiguous"),
        );
        f(
            &join(prefix, "shift"),
            &[self.shift.len()],
            self.shift.as_slice().expect("contiguous"),
        );
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        f(&join(prefix, "gain"), self.gain.as_slice_mut().expect("contiguous"));
        f(&join(prefix, "shift"), self.shift.as_slice_mut().expect("contiguous"));
    }
}
