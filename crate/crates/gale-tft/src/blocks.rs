//! The building blocks of the forecaster: gating units, gated residual
//! networks, variable selection, feature embeddings, the recurrent
//! encoder-decoder, and interpretable multi-head attention.
//!
//! Each block is a bundle of parameter handles registered under a
//! dot-separated name prefix, with an `apply` method that records its
//! computation on a tape. Blocks are rank-agnostic over leading axes:
//! inputs may be `[B, d]` or `[B, T, d]`.

use crate::layout::EmbedKind;
use crate::{Result, TftError};
use gale_autodiff::{
    dropout, lstm_cell, LstmParamIds, NodeId, ParamId, ParamStore, Tape, Tensor,
};
use rand_chacha::ChaCha8Rng;

/// Additive score that drives masked attention weights to exactly zero
/// after softmax (`exp(-1e9)` underflows to 0.0).
const MASK_SCORE: f64 = -1e9;

/// Mutable state threaded through one forward pass: the tape being built,
/// the parameter store the pass reads, the dropout RNG, and whether
/// stochastic regularization is active.
pub struct ForwardCtx<'a> {
    pub tape: &'a mut Tape,
    pub store: &'a ParamStore,
    pub rng: &'a mut ChaCha8Rng,
    pub dropout_rate: f64,
    pub training: bool,
}

impl<'a> ForwardCtx<'a> {
    pub fn new(
        tape: &'a mut Tape,
        store: &'a ParamStore,
        rng: &'a mut ChaCha8Rng,
        dropout_rate: f64,
        training: bool,
    ) -> Self {
        Self {
            tape,
            store,
            rng,
            dropout_rate,
            training,
        }
    }

    pub(crate) fn dropout(&mut self, x: NodeId) -> Result<NodeId> {
        Ok(dropout(self.tape, self.rng, x, self.dropout_rate, self.training)?)
    }

    /// `x • W` applied to the trailing axis; leading axes pass through.
    pub(crate) fn project(&mut self, x: NodeId, w: ParamId) -> Result<NodeId> {
        let w = self.tape.param(self.store, w);
        let shape = self.tape.value(x).shape().to_vec();
        let d_out = self.tape.value(w).shape()[1];
        if shape.len() == 2 {
            return Ok(self.tape.matmul(x, w)?);
        }
        let d_in = *shape.last().ok_or_else(|| {
            TftError::ShapeMismatch("projection input must have a feature axis".into())
        })?;
        let rows = self.tape.value(x).len() / d_in;
        let flat = self.tape.reshape(x, vec![rows, d_in])?;
        let out = self.tape.matmul(flat, w)?;
        let mut out_shape = shape;
        *out_shape.last_mut().unwrap() = d_out;
        Ok(self.tape.reshape(out, out_shape)?)
    }

    /// `x • W + b` on the trailing axis.
    pub(crate) fn affine(&mut self, x: NodeId, w: ParamId, b: ParamId) -> Result<NodeId> {
        let out = self.project(x, w)?;
        let b = self.tape.param(self.store, b);
        Ok(self.tape.add(out, b)?)
    }

    fn last_axis(&self, x: NodeId) -> usize {
        self.tape.value(x).shape().len() - 1
    }
}

/// Gated linear unit: `sigmoid(x W_g + b_g) ⊙ (x W_v + b_v)`. The gate can
/// suppress a branch entirely, which is how the surrounding residual
/// connections skip unneeded nonlinear processing.
#[derive(Debug, Clone)]
pub struct GluParams {
    w_gate: ParamId,
    b_gate: ParamId,
    w_value: ParamId,
    b_value: ParamId,
}

impl GluParams {
    pub fn register(store: &mut ParamStore, prefix: &str, d_in: usize, d_out: usize) -> Self {
        Self {
            w_gate: store.register_glorot(format!("{prefix}.w_gate"), d_in, d_out),
            b_gate: store.register_zeros(format!("{prefix}.b_gate"), d_out),
            w_value: store.register_glorot(format!("{prefix}.w_value"), d_in, d_out),
            b_value: store.register_zeros(format!("{prefix}.b_value"), d_out),
        }
    }

    pub fn apply(&self, ctx: &mut ForwardCtx, x: NodeId) -> Result<NodeId> {
        let gate = ctx.affine(x, self.w_gate, self.b_gate)?;
        let gate = ctx.tape.sigmoid(gate);
        let value = ctx.affine(x, self.w_value, self.b_value)?;
        Ok(ctx.tape.mul(gate, value)?)
    }
}

/// Gated residual network: a two-layer ELU transform whose output is gated
/// and added back onto the (possibly projected) input, then normalized.
/// An optional context vector joins the first layer additively.
#[derive(Debug, Clone)]
pub struct GrnParams {
    w_in: ParamId,
    b_in: ParamId,
    w_ctx: Option<ParamId>,
    w_out: ParamId,
    b_out: ParamId,
    gate: GluParams,
    skip: Option<(ParamId, ParamId)>,
    ln_gain: ParamId,
    ln_bias: ParamId,
}

impl GrnParams {
    pub fn register(
        store: &mut ParamStore,
        prefix: &str,
        d_in: usize,
        d_out: usize,
        d_context: Option<usize>,
    ) -> Self {
        Self {
            w_in: store.register_glorot(format!("{prefix}.w_in"), d_in, d_out),
            b_in: store.register_zeros(format!("{prefix}.b_in"), d_out),
            w_ctx: d_context.map(|dc| store.register_glorot(format!("{prefix}.w_ctx"), dc, d_out)),
            w_out: store.register_glorot(format!("{prefix}.w_out"), d_out, d_out),
            b_out: store.register_zeros(format!("{prefix}.b_out"), d_out),
            gate: GluParams::register(store, &format!("{prefix}.gate"), d_out, d_out),
            skip: (d_in != d_out).then(|| {
                (
                    store.register_glorot(format!("{prefix}.w_skip"), d_in, d_out),
                    store.register_zeros(format!("{prefix}.b_skip"), d_out),
                )
            }),
            ln_gain: store.register_full(format!("{prefix}.ln_gain"), d_out, 1.0),
            ln_bias: store.register_zeros(format!("{prefix}.ln_bias"), d_out),
        }
    }

    /// `context`, when present, must share the input's leading axes. Omitting
    /// it is equivalent to passing zeros: the context term simply drops out.
    pub fn apply(&self, ctx: &mut ForwardCtx, input: NodeId, context: Option<NodeId>) -> Result<NodeId> {
        let mut hidden = ctx.affine(input, self.w_in, self.b_in)?;
        match (context, self.w_ctx) {
            (Some(c), Some(w)) => {
                let contribution = ctx.project(c, w)?;
                hidden = ctx.tape.add(hidden, contribution)?;
            }
            (Some(_), None) => {
                return Err(TftError::ShapeMismatch(
                    "context passed to a context-free residual block".into(),
                ))
            }
            (None, _) => {}
        }
        let hidden = ctx.tape.elu(hidden);
        let pre_gate = ctx.affine(hidden, self.w_out, self.b_out)?;
        let pre_gate = ctx.dropout(pre_gate)?;
        let gated = self.gate.apply(ctx, pre_gate)?;
        let residual = match self.skip {
            Some((w, b)) => ctx.affine(input, w, b)?,
            None => input,
        };
        let sum = ctx.tape.add(residual, gated)?;
        let gain = ctx.tape.param(ctx.store, self.ln_gain);
        let bias = ctx.tape.param(ctx.store, self.ln_bias);
        Ok(ctx.tape.layer_norm(sum, gain, bias)?)
    }
}

/// Variable selection network: softmax weights from a selector network over
/// the flattened concat of all embedded variables, applied to per-variable
/// nonlinear transforms. Returns the weighted combination and the weights.
#[derive(Debug, Clone)]
pub struct VsnParams {
    selector: GrnParams,
    per_var: Vec<GrnParams>,
    d: usize,
}

impl VsnParams {
    pub fn register(
        store: &mut ParamStore,
        prefix: &str,
        n_vars: usize,
        d: usize,
        d_context: Option<usize>,
    ) -> Self {
        Self {
            selector: GrnParams::register(
                store,
                &format!("{prefix}.selector"),
                n_vars * d,
                n_vars,
                d_context,
            ),
            per_var: (0..n_vars)
                .map(|i| GrnParams::register(store, &format!("{prefix}.var{i}"), d, d, None))
                .collect(),
            d,
        }
    }

    pub fn apply(
        &self,
        ctx: &mut ForwardCtx,
        features: &[NodeId],
        context: Option<NodeId>,
    ) -> Result<(NodeId, NodeId)> {
        if features.is_empty() {
            return Err(TftError::EmptyFeatureList);
        }
        if features.len() != self.per_var.len() {
            return Err(TftError::ShapeMismatch(format!(
                "selection network built for {} variables, got {}",
                self.per_var.len(),
                features.len()
            )));
        }
        let axis = ctx.last_axis(features[0]);
        let flat = ctx.tape.concat(features, axis)?;
        let scores = self.selector.apply(ctx, flat, context)?;
        let weights = ctx.tape.softmax(scores)?;
        let mut combined: Option<NodeId> = None;
        for (i, (&feature, transform)) in features.iter().zip(&self.per_var).enumerate() {
            let transformed = transform.apply(ctx, feature, None)?;
            let weight = ctx.tape.slice(weights, axis, i, 1)?;
            let weight = ctx.tape.repeat_axis(weight, axis, self.d)?;
            let term = ctx.tape.mul(transformed, weight)?;
            combined = Some(match combined {
                Some(acc) => ctx.tape.add(acc, term)?,
                None => term,
            });
        }
        Ok((combined.expect("nonempty features"), weights))
    }
}

/// Per-variable embedding: continuous columns map through a learned `1 → d`
/// affine layer, integer-coded columns through a `cardinality × d` table.
#[derive(Debug, Clone)]
pub struct EmbedParams {
    kind: EmbedKind,
    weight: ParamId,
    bias: Option<ParamId>,
}

impl EmbedParams {
    pub fn register(store: &mut ParamStore, prefix: &str, kind: &EmbedKind, d: usize) -> Self {
        match kind {
            EmbedKind::Linear => Self {
                kind: kind.clone(),
                weight: store.register_glorot(format!("{prefix}.weight"), 1, d),
                bias: Some(store.register_zeros(format!("{prefix}.bias"), d)),
            },
            EmbedKind::Table { cardinality, .. } => Self {
                kind: kind.clone(),
                weight: store.register_glorot(format!("{prefix}.table"), *cardinality, d),
                bias: None,
            },
        }
    }

    /// Embed one variable's raw values; `lead` is the batch shape (`[B]` or
    /// `[B, T]`) and the result appends the embedding axis: `[lead.., d]`.
    pub fn apply(&self, ctx: &mut ForwardCtx, values: &[f64], lead: &[usize]) -> Result<NodeId> {
        let rows: usize = lead.iter().product();
        if rows != values.len() {
            return Err(TftError::ShapeMismatch(format!(
                "{} values cannot fill a {lead:?} batch",
                values.len()
            )));
        }
        let d = ctx.store.value(self.weight).shape()[1];
        let flat = match (&self.kind, self.bias) {
            (EmbedKind::Linear, Some(bias)) => {
                let x = ctx.tape.leaf(Tensor::new(vec![rows, 1], values.to_vec())?);
                ctx.affine(x, self.weight, bias)?
            }
            (kind @ EmbedKind::Table { .. }, _) => {
                let indices: Vec<usize> = values
                    .iter()
                    .map(|&v| kind.decode_index(v).expect("table kind always decodes"))
                    .collect();
                let table = ctx.tape.param(ctx.store, self.weight);
                ctx.tape.embed_lookup(table, &indices)?
            }
            (EmbedKind::Linear, None) => unreachable!("linear embeddings register a bias"),
        };
        let mut shape = lead.to_vec();
        shape.push(d);
        Ok(ctx.tape.reshape(flat, shape)?)
    }
}

/// Recurrent encoder-decoder over the selected temporal features: one LSTM
/// consumes the past, a second continues over the future from the encoder's
/// final state, and a gated skip renormalizes against the block input.
#[derive(Debug, Clone)]
pub struct Seq2SeqParams {
    encoder: LstmParamIds,
    decoder: LstmParamIds,
    gate: GluParams,
    ln_gain: ParamId,
    ln_bias: ParamId,
}

impl Seq2SeqParams {
    pub fn register(store: &mut ParamStore, prefix: &str, d: usize) -> Self {
        Self {
            encoder: LstmParamIds::register(store, &format!("{prefix}.encoder"), d, d),
            decoder: LstmParamIds::register(store, &format!("{prefix}.decoder"), d, d),
            gate: GluParams::register(store, &format!("{prefix}.gate"), d, d),
            ln_gain: store.register_full(format!("{prefix}.ln_gain"), d, 1.0),
            ln_bias: store.register_zeros(format!("{prefix}.ln_bias"), d),
        }
    }

    /// `past` is `[B, k, d]`, `future` `[B, τ, d]`; `state_h`/`state_c`
    /// initialize the encoder. Output covers both segments: `[B, k+τ, d]`.
    pub fn apply(
        &self,
        ctx: &mut ForwardCtx,
        past: NodeId,
        future: NodeId,
        state_h: NodeId,
        state_c: NodeId,
    ) -> Result<NodeId> {
        let shape = ctx.tape.value(past).shape().to_vec();
        if shape.len() != 3 {
            return Err(TftError::ShapeMismatch(format!(
                "recurrent block expects [batch, steps, features], got {shape:?}"
            )));
        }
        let (batch, k, d) = (shape[0], shape[1], shape[2]);
        let horizon = ctx.tape.value(future).shape()[1];

        let mut h = state_h;
        let mut c = state_c;
        let mut steps = Vec::with_capacity(k + horizon);
        for (ids, source, len) in [(&self.encoder, past, k), (&self.decoder, future, horizon)] {
            let weights = ids.on_tape(ctx.tape, ctx.store);
            for t in 0..len {
                let x = ctx.tape.slice(source, 1, t, 1)?;
                let x = ctx.tape.reshape(x, vec![batch, d])?;
                let (h_next, c_next) = lstm_cell(ctx.tape, &weights, x, h, c)?;
                h = h_next;
                c = c_next;
                steps.push(ctx.tape.reshape(h, vec![batch, 1, d])?);
            }
        }
        let outputs = ctx.tape.concat(&steps, 1)?;
        let inputs = ctx.tape.concat(&[past, future], 1)?;
        let dropped = ctx.dropout(outputs)?;
        let gated = self.gate.apply(ctx, dropped)?;
        let sum = ctx.tape.add(inputs, gated)?;
        let gain = ctx.tape.param(ctx.store, self.ln_gain);
        let bias = ctx.tape.param(ctx.store, self.ln_bias);
        Ok(ctx.tape.layer_norm(sum, gain, bias)?)
    }
}

/// Multi-head attention with per-head query/key projections but a single
/// shared value projection: the per-head score matrices are averaged and
/// applied once, so the averaged matrix is directly readable as "how much
/// each output step attends to each input step".
#[derive(Debug, Clone)]
pub struct AttentionParams {
    w_query: Vec<ParamId>,
    w_key: Vec<ParamId>,
    w_value: ParamId,
    w_out: ParamId,
    head_dim: usize,
}

impl AttentionParams {
    pub fn register(store: &mut ParamStore, prefix: &str, d: usize, n_heads: usize) -> Self {
        let head_dim = d / n_heads;
        Self {
            w_query: (0..n_heads)
                .map(|h| store.register_glorot(format!("{prefix}.head{h}.w_query"), d, head_dim))
                .collect(),
            w_key: (0..n_heads)
                .map(|h| store.register_glorot(format!("{prefix}.head{h}.w_key"), d, head_dim))
                .collect(),
            w_value: store.register_glorot(format!("{prefix}.w_value"), d, head_dim),
            w_out: store.register_glorot(format!("{prefix}.w_out"), head_dim, d),
            head_dim,
        }
    }

    /// Inputs are `[B, T, d]`. Returns the attended output `[B, T, d]` and
    /// the head-averaged attention weights `[B, T, T]`.
    pub fn apply(
        &self,
        ctx: &mut ForwardCtx,
        queries: NodeId,
        keys: NodeId,
        values: NodeId,
        causal: bool,
    ) -> Result<(NodeId, NodeId)> {
        let t = ctx.tape.value(queries).shape()[1];
        let scale = 1.0 / (self.head_dim as f64).sqrt();
        let mask = if causal {
            let mut scores = vec![0.0; t * t];
            for row in 0..t {
                for col in row + 1..t {
                    scores[row * t + col] = MASK_SCORE;
                }
            }
            Some(ctx.tape.leaf(Tensor::new(vec![t, t], scores)?))
        } else {
            None
        };

        let projected_values = ctx.project(values, self.w_value)?;
        let mut attn_sum: Option<NodeId> = None;
        for (w_q, w_k) in self.w_query.iter().zip(&self.w_key) {
            let q = ctx.project(queries, *w_q)?;
            let k = ctx.project(keys, *w_k)?;
            let k_t = ctx.tape.transpose(k)?;
            let scores = ctx.tape.batch_matmul(q, k_t)?;
            let mut scores = ctx.tape.scale(scores, scale);
            if let Some(mask) = mask {
                scores = ctx.tape.add(scores, mask)?;
            }
            let attn = ctx.tape.softmax(scores)?;
            attn_sum = Some(match attn_sum {
                Some(acc) => ctx.tape.add(acc, attn)?,
                None => attn,
            });
        }
        let mean_attn = ctx
            .tape
            .scale(attn_sum.expect("at least one head"), 1.0 / self.w_query.len() as f64);
        let pooled = ctx.tape.batch_matmul(mean_attn, projected_values)?;
        let out = ctx.project(pooled, self.w_out)?;
        Ok((out, mean_attn))
    }
}
