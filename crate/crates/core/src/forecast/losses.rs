use ndarray::{Array1, Array2, Axis};

use super::model::GateOutput;
use crate::error::{Error, Result};

/// Floor applied to the target-class probability before taking its log.
pub const PROB_FLOOR: f64 = 1e-12;

/// Mean squared error over every entry of a batch and its gradient.
pub fn batch_mse(pred: &Array2<f64>, target: &Array2<f64>) -> Result<(f64, Array2<f64>)> {
    if pred.dim() != target.dim() || pred.is_empty() {
        return Err(Error::invalid("prediction and target batches differ in shape"));
    }
    let diff = pred - target;
    let n = diff.len() as f64;
    let loss = diff.mapv(|v| v * v).sum() / n;
    Ok((loss, diff * (2.0 / n)))
}

/// Gate loss value and its gradients with respect to the route logits and
/// the positional score, averaged over the batch.
pub struct GateLoss {
    pub loss: f64,
    pub cross_entropy: f64,
    pub position_mse: f64,
    pub grad_logits: Array2<f64>,
    pub grad_position: Array1<f64>,
}

/// `-ln p[y_class] + alpha_pos * (s - y_pos)^2`, batch mean. The logit
/// gradient is the usual `p - onehot`, ignoring the probability floor.
pub fn loss_gate(gate: &GateOutput, classes: &[usize], positions: &[f64], alpha_pos: f64) -> Result<GateLoss> {
    let (b, k) = gate.p.dim();
    if classes.len() != b || positions.len() != b || b == 0 {
        return Err(Error::DimensionMismatch {
            expected: b,
            actual: classes.len(),
        });
    }
    if let Some(&c) = classes.iter().find(|&&c| c >= k) {
        return Err(Error::invalid(format!("class {c} out of range for {k} experts")));
    }
    let bf = b as f64;
    let mut grad_logits = gate.p.clone();
    let mut ce = 0.0;
    for (i, &c) in classes.iter().enumerate() {
        ce -= gate.p[[i, c]].max(PROB_FLOOR).ln();
        grad_logits[[i, c]] -= 1.0;
    }
    grad_logits /= bf;
    let diff = &gate.s - &Array1::from(positions.to_vec());
    let pos = diff.mapv(|v| v * v).sum() / bf;
    Ok(GateLoss {
        loss: ce / bf + alpha_pos * pos,
        cross_entropy: ce / bf,
        position_mse: pos,
        grad_logits,
        grad_position: diff * (2.0 * alpha_pos / bf),
    })
}

/// Fraction of rows whose argmax expert is `k`, lowest index on ties.
pub fn argmax_fractions(p: &Array2<f64>) -> Array1<f64> {
    let (b, k) = p.dim();
    let mut f = Array1::zeros(k);
    for row in p.rows() {
        let mut best = 0;
        for j in 1..k {
            if row[j] > row[best] {
                best = j;
            }
        }
        f[best] += 1.0;
    }
    f / b.max(1) as f64
}

/// `K * sum_k f_k * mean_p_k` and its gradient with respect to `p`. The
/// argmax fractions `f` are treated as constants.
pub fn load_balance(p: &Array2<f64>) -> (f64, Array2<f64>) {
    let (b, k) = p.dim();
    let f = argmax_fractions(p);
    let mean_p = p.mean_axis(Axis(0)).expect("non-empty batch");
    let value = k as f64 * f.dot(&mean_p);
    let row = &f * (k as f64 / b as f64);
    let grad = Array2::from_shape_fn((b, k), |(_, j)| row[j]);
    (value, grad)
}

pub struct FinalLoss {
    pub loss: f64,
    pub mse: f64,
    pub balance: f64,
    pub grad_prediction: Array2<f64>,
    pub grad_probabilities: Array2<f64>,
}

/// `MSE + gamma * K * sum_k f_k * mean_p_k`.
pub fn loss_final(pred: &Array2<f64>, target: &Array2<f64>, p: &Array2<f64>, gamma: f64) -> Result<FinalLoss> {
    let (mse, grad_prediction) = batch_mse(pred, target)?;
    let (balance, g) = load_balance(p);
    Ok(FinalLoss {
        loss: mse + gamma * balance,
        mse,
        balance,
        grad_prediction,
        grad_probabilities: g * gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn gate(p: Array2<f64>, s: Vec<f64>) -> GateOutput {
        GateOutput { p, s: Array1::from(s) }
    }

    #[test]
    #[allow(clippy::approx_constant)] // 2.3026 is the published worked value
    fn gate_loss_examples() {
        let g = gate(array![[0.0, 1.0]], vec![0.3]);
        assert_eq!(loss_gate(&g, &[1], &[0.3], 1.0).unwrap().loss, 0.0);
        let u = gate(Array2::from_elem((1, 10), 0.1), vec![0.0]);
        let l = loss_gate(&u, &[4], &[0.0], 1.0).unwrap();
        assert_abs_diff_eq!(l.loss, 10f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(l.loss, 2.3026, epsilon = 1e-4);
        let off = gate(Array2::from_elem((1, 10), 0.1), vec![0.0]);
        let l1 = loss_gate(&off, &[4], &[1.0], 1.0).unwrap();
        assert_abs_diff_eq!(l1.loss - l.loss, 1.0, epsilon = 1e-12);
        let zero = gate(array![[1.0, 0.0]], vec![0.5]);
        assert_abs_diff_eq!(
            loss_gate(&zero, &[1], &[0.5], 1.0).unwrap().loss,
            -PROB_FLOOR.ln(),
            epsilon = 1e-9
        );
        assert!(loss_gate(&zero, &[2], &[0.5], 1.0).is_err());
    }

    #[test]
    fn final_loss_examples() {
        let k = 4;
        // Rows whose argmaxes cover every expert once, each row uniform
        // except for a tiny bump so that argmax is well defined.
        let mut p = Array2::from_elem((k, k), 1.0 / k as f64);
        for i in 0..k {
            p[[i, i]] += 1e-15;
        }
        let y = Array2::from_elem((k, 3), 2.0);
        let l = loss_final(&y, &y, &p, 0.1).unwrap();
        assert_eq!(l.mse, 0.0);
        assert_abs_diff_eq!(l.balance, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l.loss, 0.1, epsilon = 1e-12);

        let one_hot = array![[0.0, 1.0, 0.0], [0.0, 1.0, 0.0]];
        let (b, _) = load_balance(&one_hot);
        assert_eq!(b, 3.0);
        let plain = loss_final(&array![[1.0]], &array![[0.0]], &array![[1.0]], 0.0).unwrap();
        assert_eq!(plain.loss, plain.mse);
    }

    #[test]
    fn mse_gradient_matches_finite_differences() {
        let p = array![[0.3, -1.0], [2.0, 0.5]];
        let t = array![[0.0, 1.0], [1.5, 0.5]];
        let (_, g) = batch_mse(&p, &t).unwrap();
        let eps = 1e-6;
        for i in 0..4 {
            let mut a = p.clone();
            let mut b = p.clone();
            a.as_slice_mut().unwrap()[i] += eps;
            b.as_slice_mut().unwrap()[i] -= eps;
            let fd = (batch_mse(&a, &t).unwrap().0 - batch_mse(&b, &t).unwrap().0) / (2.0 * eps);
            assert_abs_diff_eq!(fd, g.as_slice().unwrap()[i], epsilon = 1e-8);
        }
    }
}
