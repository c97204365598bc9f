//! Point-forecast error metrics.

use crate::error::{Error, Result};

fn check(pred: &[f64], truth: &[f64]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: pred.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::invalid("metrics need at least one point"));
    }
    Ok(())
}

/// Mean squared error over the horizon.
pub fn mse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check(pred, truth)?;
    Ok(pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / pred.len() as f64)
}

/// Mean absolute error over the horizon.
pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check(pred, truth)?;
    Ok(pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred.len() as f64)
}

/// MSE averaged over channels, each channel an `H`-vector.
pub fn mse_multi(pred: &[Vec<f64>], truth: &[Vec<f64>]) -> Result<f64> {
    average_over_channels(pred, truth, mse)
}

pub fn mae_multi(pred: &[Vec<f64>], truth: &[Vec<f64>]) -> Result<f64> {
    average_over_channels(pred, truth, mae)
}

fn average_over_channels(
    pred: &[Vec<f64>],
    truth: &[Vec<f64>],
    metric: fn(&[f64], &[f64]) -> Result<f64>,
) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: pred.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::invalid("metrics need at least one channel"));
    }
    let mut total = 0.0;
    for (p, t) in pred.iter().zip(truth) {
        total += metric(p, t)?;
    }
    Ok(total / pred.len() as f64)
}

/// Running sums so evaluation can stream over many windows.
#[derive(Debug, Clone, Copy, Default)]
pub struct ErrorAccumulator {
    sq: f64,
    abs: f64,
    count: usize,
}

impl ErrorAccumulator {
    pub fn add(&mut self, pred: &[f64], truth: &[f64]) -> Result<()> {
        check(pred, truth)?;
        for (p, t) in pred.iter().zip(truth) {
            self.sq += (p - t).powi(2);
            self.abs += (p - t).abs();
        }
        self.count += pred.len();
        Ok(())
    }

    pub fn mse(&self) -> f64 {
        self.sq / self.count.max(1) as f64
    }

    pub fn mae(&self) -> f64 {
        self.abs / self.count.max(1) as f64
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let t = [1.0, 3.0, -2.0];
        assert_eq!(mse(&t, &t).unwrap(), 0.0);
        assert_eq!(mae(&t, &t).unwrap(), 0.0);
        let p: Vec<f64> = t.iter().map(|v| v + 2.0).collect();
        assert_eq!(mse(&p, &t).unwrap(), 4.0);
        assert_eq!(mae(&p, &t).unwrap(), 2.0);
        assert_eq!(mse(&[0.0, 0.0], &[1.0, 3.0]).unwrap(), 5.0);
        assert_eq!(mae(&[0.0, 0.0], &[1.0, 3.0]).unwrap(), 2.0);
        assert!(mse(&[0.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn multichannel_average() {
        let pred = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let truth = vec![vec![1.0, 3.0], vec![1.0, 1.0]];
        assert_eq!(mse_multi(&pred, &truth).unwrap(), 2.5);
        assert_eq!(mae_multi(&pred, &truth).unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn zero_iff_equal(a in proptest::collection::vec(-10f64..10.0, 1..20), shift in -1f64..1.0) {
            let b: Vec<f64> = a.iter().map(|v| v + shift).collect();
            let (m2, m1) = (mse(&a, &b).unwrap(), mae(&a, &b).unwrap());
            prop_assert!(m2 >= 0.0 && m1 >= 0.0);
            prop_assert_eq!(m2 == 0.0, shift == 0.0);
            prop_assert_eq!(m1 == 0.0, shift == 0.0);
        }
    }
}
