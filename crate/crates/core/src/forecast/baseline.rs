use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Repeat the last observed value across the horizon.
pub fn naive_forecast(window: &[f64], horizon: usize) -> Vec<f64> {
    vec![*window.last().unwrap_or(&0.0); horizon]
}

/// Least-squares linear map from a window (plus intercept) to the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearBaseline {
    pub lookback: usize,
    pub horizon: usize,
    /// `(L + 1) x H`, last row is the intercept.
    pub weights: Vec<Vec<f64>>,
}

/// Ridge added to the normal equations, relative to their mean diagonal.
const RIDGE: f64 = 1e-8;

impl LinearBaseline {
    pub fn fit(windows: &[&[f64]], targets: &[&[f64]]) -> Result<Self> {
        let n = windows.len();
        if n == 0 || targets.len() != n {
            return Err(Error::invalid(
                "linear baseline needs matching, non-empty windows and targets",
            ));
        }
        let l = windows[0].len();
        let h = targets[0].len();
        if windows.iter().any(|w| w.len() != l) || targets.iter().any(|t| t.len() != h) {
            return Err(Error::invalid("ragged windows or targets"));
        }
        let x = DMatrix::from_fn(n, l + 1, |i, j| if j < l { windows[i][j] } else { 1.0 });
        let y = DMatrix::from_fn(n, h, |i, j| targets[i][j]);
        let mut xtx = x.transpose() * &x;
        let scale = (xtx.trace() / (l + 1) as f64).max(1.0);
        for i in 0..=l {
            xtx[(i, i)] += RIDGE * scale;
        }
        let xty = x.transpose() * y;
        let chol = xtx
            .cholesky()
            .ok_or_else(|| Error::NonFinite("normal equations are not positive definite".into()))?;
        let w = chol.solve(&xty);
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("linear baseline weights".into()));
        }
        Ok(Self {
            lookback: l,
            horizon: h,
            weights: (0..=l).map(|i| w.row(i).iter().copied().collect()).collect(),
        })
    }

    pub fn predict(&self, window: &[f64]) -> Result<Vec<f64>> {
        if window.len() != self.lookback {
            return Err(Error::DimensionMismatch {
                expected: self.lookback,
                actual: window.len(),
            });
        }
        let mut x = DVector::from_element(self.lookback + 1, 1.0);
        x.rows_mut(0, self.lookback).copy_from_slice(window);
        Ok((0..self.horizon)
            .map(|j| (0..=self.lookback).map(|i| x[i] * self.weights[i][j]).sum())
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn naive_examples() {
        assert_eq!(naive_forecast(&[1.0, 3.0], 3), [3.0, 3.0, 3.0]);
    }

    #[test]
    fn recovers_an_exact_linear_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let windows: Vec<Vec<f64>> = (0..60)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let targets: Vec<Vec<f64>> = windows
            .iter()
            .map(|w| vec![2.0 * w[0] - w[3] + 0.5, w[1] + w[2]])
            .collect();
        let wr: Vec<&[f64]> = windows.iter().map(|v| v.as_slice()).collect();
        let tr: Vec<&[f64]> = targets.iter().map(|v| v.as_slice()).collect();
        let m = LinearBaseline::fit(&wr, &tr).unwrap();
        let p = m.predict(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!((p[0] - (0.2 - 0.4 + 0.5)).abs() < 1e-6);
        assert!((p[1] - 0.5).abs() < 1e-6);
        assert!(m.predict(&[0.0; 3]).is_err());
    }
}
