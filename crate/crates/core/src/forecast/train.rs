use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::losses::{argmax_fractions, batch_mse, loss_final, loss_gate};
use super::model::{ForecasterModel, GateHeads, ModelConfig, OutputGrads};
use crate::error::{Error, Result};
use crate::nn::{clip_global_norm, cosine_lr, join, Activation, AdamW, AdamWConfig, Dense, DenseStack, Parameters};
use crate::series::WindowSample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub embed_dim: usize,
    pub separate_experts: bool,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub patience: usize,
    /// Epoch cap per phase; also the length of each cosine schedule.
    pub max_epochs: usize,
    pub alpha_pos: f64,
    pub gamma: f64,
    pub clip_norm: f64,
    pub optimizer: AdamWConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            embed_dim: 256,
            separate_experts: false,
            learning_rate: 1e-3,
            batch_size: 256,
            patience: 7,
            max_epochs: 50,
            alpha_pos: 1.0,
            gamma: 0.1,
            clip_norm: 5.0,
            optimizer: AdamWConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || self.batch_size == 0 || self.patience == 0 || self.max_epochs == 0 {
            return Err(Error::invalid(
                "learning_rate, batch_size, patience and max_epochs must be positive",
            ));
        }
        if self.embed_dim < 2 || self.alpha_pos < 0.0 || self.gamma < 0.0 || !(self.clip_norm > 0.0) {
            return Err(Error::invalid("invalid embed_dim, alpha_pos, gamma or clip_norm"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub phase: u8,
    pub name: String,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub phases: Vec<PhaseReport>,
    /// Validation MSE of the phase-1 linear probe.
    pub probe_val_mse: f64,
    /// Argmax routing agreement with annotations after phase 2.
    pub gate_train_accuracy: f64,
    pub gate_val_accuracy: f64,
    pub final_val_mse: f64,
    /// Fraction of validation windows routed (by argmax) to each expert.
    pub expert_utilization: Vec<f64>,
}

pub fn batch_inputs(samples: &[WindowSample], idx: &[usize]) -> (Array2<f64>, Array2<f64>) {
    let l = samples[idx[0]].window.len();
    let h = samples[idx[0]].target.len();
    let x = Array2::from_shape_fn((idx.len(), l), |(i, j)| samples[idx[i]].window[j]);
    let y = Array2::from_shape_fn((idx.len(), h), |(i, j)| samples[idx[i]].target[j]);
    (x, y)
}

fn labels(samples: &[WindowSample], idx: &[usize]) -> Result<(Vec<usize>, Vec<f64>)> {
    idx.iter()
        .map(|&i| {
            samples[i]
                .annotation
                .map(|a| (a.y_class, a.y_pos))
                .ok_or_else(|| Error::invalid(format!("window ending at {} is not annotated", samples[i].t_end)))
        })
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().unzip())
}

fn chunks(n: usize, size: usize) -> Vec<Vec<usize>> {
    (0..n).collect::<Vec<_>>().chunks(size).map(|c| c.to_vec()).collect()
}

/// Shared epoch loop: shuffled mini-batches, clipped AdamW steps on a
/// cosine schedule, validation after every epoch, patience-based early
/// stopping, and restoration of the best snapshot at the end.
fn run_phase<P, F, V>(
    phase: u8,
    name: &str,
    params: &mut P,
    n_train: usize,
    cfg: &TrainConfig,
    mut batch_grad: F,
    mut validate: V,
) -> Result<PhaseReport>
where
    P: Parameters + Clone,
    F: FnMut(&P, &[usize]) -> Result<(f64, P)>,
    V: FnMut(&P) -> Result<f64>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x5EED_0000 + phase as u64));
    let mut opt = AdamW::new(params.parameter_count(), cfg.optimizer);
    let per_epoch = n_train.div_ceil(cfg.batch_size);
    let total = per_epoch * cfg.max_epochs;
    let mut order: Vec<usize> = (0..n_train).collect();
    let mut best = params.clone();
    let mut report = PhaseReport {
        phase,
        name: name.to_string(),
        epochs: Vec::new(),
        best_epoch: 0,
        best_val_loss: validate(params)?,
        stopped_early: false,
    };
    let mut step = 0usize;
    let mut waited = 0;
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let (loss, mut grads) = batch_grad(params, batch)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { phase, step, loss });
            }
            clip_global_norm(&mut grads, cfg.clip_norm);
            opt.step(params, &grads, cosine_lr(step, total, cfg.learning_rate)?)
                .map_err(|_| Error::Divergence { phase, step, loss })?;
            sum += loss * batch.len() as f64;
            step += 1;
        }
        let val = validate(params)?;
        if !val.is_finite() {
            return Err(Error::Divergence { phase, step, loss: val });
        }
        report.epochs.push(EpochRecord {
            epoch,
            train_loss: sum / n_train as f64,
            val_loss: val,
        });
        log::debug!(
            "phase {phase} epoch {epoch}: train {:.6} val {val:.6}",
            sum / n_train as f64
        );
        if val < report.best_val_loss {
            report.best_val_loss = val;
            report.best_epoch = epoch;
            best = params.clone();
            waited = 0;
        } else {
            waited += 1;
            if waited >= cfg.patience {
                report.stopped_early = true;
                break;
            }
        }
    }
    *params = best;
    Ok(report)
}

#[derive(Clone)]
struct EmbedProbe {
    embedder: DenseStack,
    probe: Dense,
}

impl Parameters for EmbedProbe {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        self.embedder.visit(&join(prefix, "embedder"), f);
        self.probe.visit(&join(prefix, "probe"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        self.embedder.visit_mut(&join(prefix, "embedder"), f);
        self.probe.visit_mut(&join(prefix, "probe"), f);
    }
}

/// Mean squared error of `model` over `samples`, in batches.
pub fn evaluate_mse(model: &ForecasterModel, samples: &[WindowSample], batch: usize) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for idx in chunks(samples.len(), batch.max(1)) {
        let (x, y) = batch_inputs(samples, &idx);
        let (mse, _) = batch_mse(&model.predict(&x)?, &y)?;
        total += mse * y.len() as f64;
        count += y.len();
    }
    Ok(total / count.max(1) as f64)
}

fn gate_accuracy(gate: &GateHeads, embeddings: &Array2<f64>, classes: &[usize]) -> Result<f64> {
    let (out, _, _) = gate.forward(embeddings)?;
    let mut hits = 0;
    for (row, &c) in out.p.rows().into_iter().zip(classes) {
        let mut best = 0;
        for j in 1..row.len() {
            if row[j] > row[best] {
                best = j;
            }
        }
        hits += usize::from(best == c);
    }
    Ok(hits as f64 / classes.len().max(1) as f64)
}

/// Annotated windows with their batch matrices precomputed.
pub struct PhaseData<'a> {
    pub train: &'a [WindowSample],
    pub val: &'a [WindowSample],
    train_classes: Vec<usize>,
    train_pos: Vec<f64>,
    val_classes: Vec<usize>,
    val_pos: Vec<f64>,
    train_x: Array2<f64>,
    val_x: Array2<f64>,
    val_y: Array2<f64>,
}

impl<'a> PhaseData<'a> {
    pub fn new(train: &'a [WindowSample], val: &'a [WindowSample], n_experts: usize) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptySplit { part: "train" });
        }
        if val.is_empty() {
            return Err(Error::EmptySplit { part: "validation" });
        }
        let all_train: Vec<usize> = (0..train.len()).collect();
        let all_val: Vec<usize> = (0..val.len()).collect();
        let (train_classes, train_pos) = labels(train, &all_train)?;
        let (val_classes, val_pos) = labels(val, &all_val)?;
        if let Some(&c) = train_classes.iter().chain(&val_classes).find(|&&c| c >= n_experts) {
            return Err(Error::invalid(format!(
                "annotation class {c} exceeds {n_experts} experts"
            )));
        }
        let (train_x, _) = batch_inputs(train, &all_train);
        let (val_x, val_y) = batch_inputs(val, &all_val);
        Ok(Self {
            train,
            val,
            train_classes,
            train_pos,
            val_classes,
            val_pos,
            train_x,
            val_x,
            val_y,
        })
    }
}

/// Phase 1: embedder plus a throwaway linear probe on forecasting MSE.
pub fn pretrain_embedder<R: rand::Rng>(
    model: &mut ForecasterModel,
    data: &PhaseData,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<PhaseReport> {
    let mut ep = EmbedProbe {
        embedder: model.embedder.clone(),
        probe: Dense::init(model.config.embed_dim, model.config.horizon, Activation::Identity, rng),
    };
    let train = data.train;
    let report = run_phase(
        1,
        "embedding pre-training",
        &mut ep,
        train.len(),
        cfg,
        |p, idx| {
            let (x, y) = batch_inputs(train, idx);
            let (e, ec) = p.embedder.forward(&x)?;
            let (pred, pc) = p.probe.forward(&e)?;
            let (loss, g) = batch_mse(&pred, &y)?;
            let (probe, de) = p.probe.backward(&pc, &g)?;
            let (embedder, _) = p.embedder.backward(&ec, &de)?;
            Ok((loss, EmbedProbe { embedder, probe }))
        },
        |p| Ok(batch_mse(&p.probe.infer(&p.embedder.infer(&data.val_x)?)?, &data.val_y)?.0),
    )?;
    model.embedder = ep.embedder;
    Ok(report)
}

/// Phase 2: route and position heads on the gate loss over frozen
/// embeddings. Returns the report and the (train, validation) argmax
/// accuracy against the annotations.
pub fn train_gate(model: &mut ForecasterModel, data: &PhaseData, cfg: &TrainConfig) -> Result<(PhaseReport, f64, f64)> {
    let train_e = model.embedder.infer(&data.train_x)?;
    let val_e = model.embedder.infer(&data.val_x)?;
    let mut gate = model.gate.clone();
    let report = run_phase(
        2,
        "gate specialization",
        &mut gate,
        data.train.len(),
        cfg,
        |g, idx| {
            let e = train_e.select(ndarray::Axis(0), idx);
            let (out, _, cache) = g.forward(&e)?;
            let c: Vec<usize> = idx.iter().map(|&i| data.train_classes[i]).collect();
            let y: Vec<f64> = idx.iter().map(|&i| data.train_pos[i]).collect();
            let l = loss_gate(&out, &c, &y, cfg.alpha_pos)?;
            let (grads, _) = g.backward(&cache, &l.grad_logits, &l.grad_position)?;
            Ok((l.loss, grads))
        },
        |g| Ok(loss_gate(&g.forward(&val_e)?.0, &data.val_classes, &data.val_pos, cfg.alpha_pos)?.loss),
    )?;
    model.gate = gate;
    let train_acc = gate_accuracy(&model.gate, &train_e, &data.train_classes)?;
    let val_acc = gate_accuracy(&model.gate, &val_e, &data.val_classes)?;
    Ok((report, train_acc, val_acc))
}

/// Phase 3: every parameter on MSE plus load balancing, early-stopped on
/// validation MSE.
pub fn train_end_to_end(model: &mut ForecasterModel, data: &PhaseData, cfg: &TrainConfig) -> Result<PhaseReport> {
    let train = data.train;
    let eval_batch = cfg.batch_size.max(256);
    run_phase(
        3,
        "end-to-end forecasting",
        model,
        train.len(),
        cfg,
        |m, idx| {
            let (x, y) = batch_inputs(train, idx);
            let (pred, cache) = m.forward(&x)?;
            let l = loss_final(&pred, &y, &cache.gate_out.p, cfg.gamma)?;
            let (grads, _) = m.backward(
                &cache,
                &OutputGrads {
                    prediction: Some(l.grad_prediction),
                    probabilities: Some(l.grad_probabilities),
                    ..Default::default()
                },
            )?;
            Ok((l.loss, grads))
        },
        |m| evaluate_mse(m, data.val, eval_batch),
    )
}

/// Three-phase training on annotated train and validation windows: embedder
/// pre-training, gate specialization with the embedder frozen, then
/// end-to-end forecasting.
pub fn train_three_phase(
    train: &[WindowSample],
    val: &[WindowSample],
    n_experts: usize,
    cfg: &TrainConfig,
) -> Result<(ForecasterModel, TrainingReport)> {
    cfg.validate()?;
    let data = PhaseData::new(train, val, n_experts)?;
    let model_cfg = ModelConfig {
        lookback: train[0].window.len(),
        horizon: train[0].target.len(),
        n_experts,
        embed_dim: cfg.embed_dim,
        separate_experts: cfg.separate_experts,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = ForecasterModel::init(model_cfg, &mut rng)?;
    let p1 = pretrain_embedder(&mut model, &data, cfg, &mut rng)?;
    let (p2, gate_train_accuracy, gate_val_accuracy) = train_gate(&mut model, &data, cfg)?;
    let p3 = train_end_to_end(&mut model, &data, cfg)?;
    let (_, cache) = model.forward(&data.val_x)?;
    let expert_utilization = argmax_fractions(&cache.gate_out.p).to_vec();
    Ok((
        model,
        TrainingReport {
            probe_val_mse: p1.best_val_loss,
            final_val_mse: p3.best_val_loss,
            phases: vec![p1, p2, p3],
            gate_train_accuracy,
            gate_val_accuracy,
            expert_utilization,
        },
    ))
}

/// Gate output for a batch of windows, convenient for inspection.
pub fn route(model: &ForecasterModel, x: &Array2<f64>) -> Result<(Array2<f64>, Array1<f64>)> {
    let (out, _, _) = model.gate.forward(&model.embed(x)?)?;
    Ok((out.p, out.s))
}
