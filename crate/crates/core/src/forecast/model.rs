use ndarray::{concatenate, s, Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{join, Activation, Checkpoint, Dense, DenseCache, DenseStack, Parameters, StackCache};

/// Architecture of the mixture-of-experts forecaster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub lookback: usize,
    pub horizon: usize,
    pub n_experts: usize,
    pub embed_dim: usize,
    /// Give every expert its own fusion trunk instead of sharing one.
    #[serde(default)]
    pub separate_experts: bool,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lookback == 0 || self.horizon == 0 {
            return Err(Error::invalid("lookback and horizon must be positive"));
        }
        if self.n_experts == 0 {
            return Err(Error::invalid("need at least one expert"));
        }
        if self.embed_dim < 2 {
            return Err(Error::invalid("embedding width must be at least 2"));
        }
        Ok(())
    }
}

/// Row-stochastic softmax with max subtraction.
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut p = logits.clone();
    for mut row in p.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - m).exp());
        let z = row.sum();
        row /= z;
    }
    p
}

/// Expert probabilities `p` (rows on the simplex) and positional scores `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct GateOutput {
    pub p: Array2<f64>,
    pub s: Array1<f64>,
}

/// The gate alone, used when the embedder is frozen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateHeads {
    pub route: Dense,
    /// Single unit with a sigmoid activation.
    pub position: Dense,
}

pub struct GateCache {
    route: DenseCache,
    position: DenseCache,
}

impl GateHeads {
    pub fn forward(&self, e: &Array2<f64>) -> Result<(GateOutput, Array2<f64>, GateCache)> {
        let (logits, route) = self.route.forward(e)?;
        let (s, position) = self.position.forward(e)?;
        let out = GateOutput {
            p: softmax_rows(&logits),
            s: s.column(0).to_owned(),
        };
        Ok((out, logits, GateCache { route, position }))
    }

    /// Gradients from `dL/dlogits` and `dL/ds`; returns the embedding
    /// gradient as well.
    pub fn backward(
        &self,
        cache: &GateCache,
        grad_logits: &Array2<f64>,
        grad_s: &Array1<f64>,
    ) -> Result<(GateHeads, Array2<f64>)> {
        let (gr, de_r) = self.route.backward(&cache.route, grad_logits)?;
        let (gp, de_p) = self
            .position
            .backward(&cache.position, &grad_s.view().insert_axis(Axis(1)).to_owned())?;
        Ok((
            GateHeads {
                route: gr,
                position: gp,
            },
            de_r + de_p,
        ))
    }
}

impl Parameters for GateHeads {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        self.route.visit(&join(prefix, "route"), f);
        self.position.visit(&join(prefix, "position"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        self.route.visit_mut(&join(prefix, "route"), f);
        self.position.visit_mut(&join(prefix, "position"), f);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecasterModel {
    pub config: ModelConfig,
    /// `L -> d_e -> d_e`, terminal layer norm.
    pub embedder: DenseStack,
    pub gate: GateHeads,
    /// `1 -> d_e -> d_e`.
    pub pos_encoder: DenseStack,
    /// `2 d_e -> d_e -> d_e`; one shared trunk, or one per expert.
    pub fusion: Vec<DenseStack>,
    /// `d_e -> d_e -> d_e -> H`, one per expert.
    pub heads: Vec<DenseStack>,
}

/// Everything the backward pass needs from one forward pass.
pub struct ForwardCache {
    embed: StackCache,
    pub embedding: Array2<f64>,
    gate: GateCache,
    pub gate_out: GateOutput,
    pos: StackCache,
    fusion: Vec<StackCache>,
    heads: Vec<StackCache>,
    /// Per-expert forecasts, `K x (B x H)`.
    pub expert_outputs: Vec<Array2<f64>>,
}

/// Upstream gradients for a backward pass; absent terms are zero.
#[derive(Default)]
pub struct OutputGrads {
    pub prediction: Option<Array2<f64>>,
    pub probabilities: Option<Array2<f64>>,
    pub logits: Option<Array2<f64>>,
    pub position: Option<Array1<f64>>,
}

const LR: Activation = Activation::LeakyRelu;
const ID: Activation = Activation::Identity;

impl ForecasterModel {
    pub fn init<R: Rng>(config: ModelConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let d = config.embed_dim;
        let k = config.n_experts;
        let embedder = DenseStack::init(&[config.lookback, d, d], &[LR, ID], true, rng)?;
        let gate = GateHeads {
            route: Dense::init(d, k, ID, rng),
            position: Dense::init(d, 1, Activation::Sigmoid, rng),
        };
        let pos_encoder = DenseStack::init(&[1, d, d], &[LR, ID], false, rng)?;
        let n_fusion = if config.separate_experts { k } else { 1 };
        let fusion = (0..n_fusion)
            .map(|_| DenseStack::init(&[2 * d, d, d], &[LR, LR], false, rng))
            .collect::<Result<Vec<_>>>()?;
        let heads = (0..k)
            .map(|_| DenseStack::init(&[d, d, d, config.horizon], &[LR, LR, ID], false, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config,
            embedder,
            gate,
            pos_encoder,
            fusion,
            heads,
        })
    }

    pub fn n_experts(&self) -> usize {
        self.heads.len()
    }

    /// Checkpoint whose manifest stores the architecture under `"model"`
    /// alongside the caller's `extra` entries.
    pub fn to_checkpoint(&self, mut extra: serde_json::Map<String, serde_json::Value>) -> Result<Checkpoint> {
        extra.insert("model".into(), serde_json::to_value(&self.config)?);
        Ok(Checkpoint::from_parameters(serde_json::Value::Object(extra), self))
    }

    /// Inverse of [`ForecasterModel::to_checkpoint`].
    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let config: ModelConfig = serde_json::from_value(
            ckpt.manifest
                .get("model")
                .cloned()
                .ok_or_else(|| Error::Serialization("checkpoint manifest has no model entry".into()))?,
        )?;
        // Every parameter is overwritten below; the seed only fills the shapes.
        let mut model = Self::init(config, &mut rand_chacha::ChaCha8Rng::seed_from_u64(0))?;
        ckpt.load_into(&mut model)?;
        Ok(model)
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.fill_zero();
        z
    }

    fn check_input(&self, x: &Array2<f64>) -> Result<()> {
        if x.ncols() != self.config.lookback {
            return Err(Error::DimensionMismatch {
                expected: self.config.lookback,
                actual: x.ncols(),
            });
        }
        Ok(())
    }

    pub fn embed(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_input(x)?;
        self.embedder.infer(x)
    }

    pub fn forward(&self, x: &Array2<f64>) -> Result<(Array2<f64>, ForwardCache)> {
        self.check_input(x)?;
        let (e, embed) = self.embedder.forward(x)?;
        let (gate_out, _, gate) = self.gate.forward(&e)?;
        let s_col = gate_out.s.view().insert_axis(Axis(1)).to_owned();
        let (e_pos, pos) = self.pos_encoder.forward(&s_col)?;
        let joined = concatenate(Axis(1), &[e.view(), e_pos.view()]).expect("matching rows");
        let mut fusion = Vec::with_capacity(self.fusion.len());
        let mut zs = Vec::with_capacity(self.fusion.len());
        for f in &self.fusion {
            let (z, c) = f.forward(&joined)?;
            zs.push(z);
            fusion.push(c);
        }
        let mut heads = Vec::with_capacity(self.heads.len());
        let mut outputs = Vec::with_capacity(self.heads.len());
        for (k, h) in self.heads.iter().enumerate() {
            let (y, c) = h.forward(&zs[k.min(zs.len() - 1)])?;
            outputs.push(y);
            heads.push(c);
        }
        let prediction = combine(&gate_out.p, &outputs)?;
        Ok((
            prediction,
            ForwardCache {
                embed,
                embedding: e,
                gate,
                gate_out,
                pos,
                fusion,
                heads,
                expert_outputs: outputs,
            },
        ))
    }

    pub fn predict(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward(x)?.0)
    }

    /// Parameter gradients plus the gradient with respect to the input batch.
    pub fn backward(&self, cache: &ForwardCache, grads: &OutputGrads) -> Result<(ForecasterModel, Array2<f64>)> {
        let b = cache.embedding.nrows();
        let k = self.n_experts();
        let d = self.config.embed_dim;
        let p = &cache.gate_out.p;

        let mut dp = grads.probabilities.clone().unwrap_or_else(|| Array2::zeros((b, k)));
        let mut head_grads = Vec::with_capacity(k);
        let mut dz: Vec<Array2<f64>> = vec![Array2::zeros((b, d)); self.fusion.len()];
        for (j, head) in self.heads.iter().enumerate() {
            let dout = match &grads.prediction {
                Some(dy) => {
                    let f = &cache.expert_outputs[j];
                    dp.column_mut(j).scaled_add(1.0, &(dy * f).sum_axis(Axis(1)));
                    dy * &p.column(j).insert_axis(Axis(1))
                }
                None => Array2::zeros((b, self.config.horizon)),
            };
            let (g, dzj) = head.backward(&cache.heads[j], &dout)?;
            head_grads.push(g);
            dz[j.min(self.fusion.len() - 1)] += &dzj;
        }

        let mut djoined = Array2::zeros((b, 2 * d));
        let mut fusion_grads = Vec::with_capacity(self.fusion.len());
        for (i, f) in self.fusion.iter().enumerate() {
            let (g, dj) = f.backward(&cache.fusion[i], &dz[i])?;
            fusion_grads.push(g);
            djoined += &dj;
        }
        let de_direct = djoined.slice(s![.., ..d]).to_owned();
        let de_pos = djoined.slice(s![.., d..]).to_owned();
        let (pos_grads, ds_col) = self.pos_encoder.backward(&cache.pos, &de_pos)?;

        let mut ds = ds_col.column(0).to_owned();
        if let Some(g) = &grads.position {
            ds += g;
        }
        // Softmax Jacobian: dlogit_j = p_j (dp_j - sum_i p_i dp_i).
        let inner = (p * &dp).sum_axis(Axis(1)).insert_axis(Axis(1));
        let mut dlogits = p * &(&dp - &inner);
        if let Some(g) = &grads.logits {
            dlogits += g;
        }
        let (gate_grads, de_gate) = self.gate.backward(&cache.gate, &dlogits, &ds)?;
        let de = de_direct + de_gate;
        let (embed_grads, dx) = self.embedder.backward(&cache.embed, &de)?;
        Ok((
            ForecasterModel {
                config: self.config.clone(),
                embedder: embed_grads,
                gate: gate_grads,
                pos_encoder: pos_grads,
                fusion: fusion_grads,
                heads: head_grads,
            },
            dx,
        ))
    }
}

/// `sum_k p_k * forecast_k`, row by row.
pub fn combine(p: &Array2<f64>, forecasts: &[Array2<f64>]) -> Result<Array2<f64>> {
    if forecasts.len() != p.ncols() || forecasts.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: p.ncols(),
            actual: forecasts.len(),
        });
    }
    let mut out = Array2::zeros(forecasts[0].dim());
    for (k, f) in forecasts.iter().enumerate() {
        if f.nrows() != p.nrows() {
            return Err(Error::DimensionMismatch {
                expected: p.nrows(),
                actual: f.nrows(),
            });
        }
        out += &(f * &p.column(k).insert_axis(Axis(1)));
    }
    Ok(out)
}

impl Parameters for ForecasterModel {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        self.embedder.visit(&join(prefix, "embedder"), f);
        self.gate.visit(&join(prefix, "gate"), f);
        self.pos_encoder.visit(&join(prefix, "pos_encoder"), f);
        for (i, s) in self.fusion.iter().enumerate() {
            s.visit(&join(prefix, &format!("fusion{i}")), f);
        }
        for (i, s) in self.heads.iter().enumerate() {
            s.visit(&join(prefix, &format!("head{i}")), f);
        }
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        self.embedder.visit_mut(&join(prefix, "embedder"), f);
        self.gate.visit_mut(&join(prefix, "gate"), f);
        self.pos_encoder.visit_mut(&join(prefix, "pos_encoder"), f);
        for (i, s) in self.fusion.iter_mut().enumerate() {
            s.visit_mut(&join(prefix, &format!("fusion{i}")), f);
        }
        for (i, s) in self.heads.iter_mut().enumerate() {
            s.visit_mut(&join(prefix, &format!("head{i}")), f);
        }
    }
}
