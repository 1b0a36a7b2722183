//! The assembled forecaster: embeddings, variable selection, static context
//! encoders, recurrent sequence processing, enrichment, causal attention,
//! and per-quantile output heads.

use crate::batch::Batch;
use crate::blocks::{
    AttentionParams, EmbedParams, ForwardCtx, GluParams, GrnParams, Seq2SeqParams, VsnParams,
};
use crate::config::TftConfig;
use crate::layout::FeatureLayout;
use crate::{Result, TftError};
use gale_autodiff::{NodeId, ParamId, ParamStore, Tape, Tensor};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// On-disk companion to the weight checkpoint.
#[derive(Serialize, Deserialize)]
struct ModelMeta {
    config: TftConfig,
    layout: FeatureLayout,
}

/// Four encodings of the combined static features, each steering a
/// different part of the temporal pipeline.
struct StaticEncoders {
    selection: GrnParams,
    cell: GrnParams,
    hidden: GrnParams,
    enrich: GrnParams,
}

impl StaticEncoders {
    fn register(store: &mut ParamStore, prefix: &str, d: usize) -> Self {
        Self {
            selection: GrnParams::register(store, &format!("{prefix}.selection"), d, d, None),
            cell: GrnParams::register(store, &format!("{prefix}.cell"), d, d, None),
            hidden: GrnParams::register(store, &format!("{prefix}.hidden"), d, d, None),
            enrich: GrnParams::register(store, &format!("{prefix}.enrich"), d, d, None),
        }
    }

    fn apply(
        &self,
        ctx: &mut ForwardCtx,
        combined: NodeId,
    ) -> Result<(NodeId, NodeId, NodeId, NodeId)> {
        Ok((
            self.selection.apply(ctx, combined, None)?,
            self.cell.apply(ctx, combined, None)?,
            self.hidden.apply(ctx, combined, None)?,
            self.enrich.apply(ctx, combined, None)?,
        ))
    }
}

struct ModelParams {
    static_embeds: Vec<EmbedParams>,
    observed_embeds: Vec<EmbedParams>,
    known_embeds: Vec<EmbedParams>,
    target_embed: EmbedParams,
    /// Present only when the layout has static columns.
    static_path: Option<(VsnParams, StaticEncoders)>,
    past_vsn: VsnParams,
    future_vsn: VsnParams,
    seq2seq: Seq2SeqParams,
    enrichment: GrnParams,
    attention: AttentionParams,
    attn_gate: GluParams,
    attn_ln: (ParamId, ParamId),
    positionwise: GrnParams,
    heads: Vec<(ParamId, ParamId)>,
}

/// All tape nodes a forward pass exposes for loss, inspection, and export.
pub struct ForwardOutputs {
    /// `[B, horizon, n_quantiles]`
    pub forecast: NodeId,
    /// Head-averaged attention weights `[B, k+τ, k+τ]`.
    pub attention: NodeId,
    /// `[B, n_static]`, absent when the layout has no static columns.
    pub static_weights: Option<NodeId>,
    /// `[B, k, n_observed + n_known + 1]`
    pub past_weights: NodeId,
    /// `[B, τ, n_known]`
    pub future_weights: NodeId,
}

pub struct TftModel {
    config: TftConfig,
    layout: FeatureLayout,
    store: ParamStore,
    params: ModelParams,
}

impl TftModel {
    /// Build a model with freshly initialized weights. Parameter registration
    /// order is fixed by the layout, so equal configs and layouts produce
    /// identical stores (and checkpoint-compatible names).
    pub fn new(config: TftConfig, layout: FeatureLayout) -> Result<Self> {
        config.validate()?;
        let d = config.hidden_size;
        let mut store = ParamStore::new(config.seed);

        let embeds = |store: &mut ParamStore, group: &str, cols: &[crate::layout::FeatureColumn]| {
            cols.iter()
                .map(|col| {
                    EmbedParams::register(
                        store,
                        &format!("embed.{group}.{}", col.name),
                        &col.embedding,
                        d,
                    )
                })
                .collect::<Vec<_>>()
        };
        let static_embeds = embeds(&mut store, "static", &layout.static_columns);
        let observed_embeds = embeds(&mut store, "observed", &layout.observed_columns);
        let known_embeds = embeds(&mut store, "known", &layout.known_columns);
        let target_embed = EmbedParams::register(
            &mut store,
            "embed.target",
            &crate::layout::EmbedKind::Linear,
            d,
        );

        let static_path = (!layout.static_columns.is_empty()).then(|| {
            (
                VsnParams::register(
                    &mut store,
                    "select.static",
                    layout.static_columns.len(),
                    d,
                    None,
                ),
                StaticEncoders::register(&mut store, "context", d),
            )
        });
        let past_vsn = VsnParams::register(
            &mut store,
            "select.past",
            layout.n_past_variables(),
            d,
            Some(d),
        );
        let future_vsn = VsnParams::register(
            &mut store,
            "select.future",
            layout.known_columns.len(),
            d,
            Some(d),
        );
        let seq2seq = Seq2SeqParams::register(&mut store, "temporal", d);
        let enrichment = GrnParams::register(
            &mut store,
            "enrich",
            d,
            d,
            static_path.is_some().then_some(d),
        );
        let attention = AttentionParams::register(&mut store, "attn", d, config.num_heads);
        let attn_gate = GluParams::register(&mut store, "attn_gate", d, d);
        let attn_ln = (
            store.register_full("attn_ln_gain", d, 1.0),
            store.register_zeros("attn_ln_bias", d),
        );
        let positionwise = GrnParams::register(&mut store, "positionwise", d, d, None);
        let heads = (0..config.quantiles.len())
            .map(|i| {
                (
                    store.register_glorot(format!("head.{i}.weight"), d, 1),
                    store.register_zeros(format!("head.{i}.bias"), 1),
                )
            })
            .collect();

        Ok(Self {
            config,
            layout,
            store,
            params: ModelParams {
                static_embeds,
                observed_embeds,
                known_embeds,
                target_embed,
                static_path,
                past_vsn,
                future_vsn,
                seq2seq,
                enrichment,
                attention,
                attn_gate,
                attn_ln,
                positionwise,
                heads,
            },
        })
    }

    pub fn config(&self) -> &TftConfig {
        &self.config
    }

    pub fn layout(&self) -> &FeatureLayout {
        &self.layout
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    /// Record the full forward pass for `batch` on `tape`. With `training`
    /// set, dropout draws from `rng`; otherwise the pass is deterministic.
    pub fn forward(
        &self,
        tape: &mut Tape,
        rng: &mut ChaCha8Rng,
        batch: &Batch,
        training: bool,
    ) -> Result<ForwardOutputs> {
        self.check_batch(batch)?;
        let d = self.config.hidden_size;
        let k = self.config.encoder_length;
        let horizon = self.config.horizon;
        let b = batch.static_inputs.shape()[0];
        let mut ctx = ForwardCtx::new(tape, &self.store, rng, self.config.dropout, training);

        // Static branch: embed, select, and encode into four context vectors.
        let static_ctx = match &self.params.static_path {
            Some((vsn, encoders)) => {
                let n_s = self.layout.static_columns.len();
                let features = self
                    .params
                    .static_embeds
                    .iter()
                    .enumerate()
                    .map(|(i, embed)| {
                        let values = stride_column(batch.static_inputs.data(), i, n_s);
                        embed.apply(&mut ctx, &values, &[b])
                    })
                    .collect::<Result<Vec<_>>>()?;
                let (combined, weights) = vsn.apply(&mut ctx, &features, None)?;
                let (c_sel, c_cell, c_hidden, c_enrich) = encoders.apply(&mut ctx, combined)?;
                Some((c_sel, c_cell, c_hidden, c_enrich, weights))
            }
            None => None,
        };

        // Past branch: observed covariates, the known columns' past rows, and
        // the target's own history, selected per step under the static context.
        let n_o = self.layout.observed_columns.len();
        let n_k = self.layout.known_columns.len();
        let mut past_features = Vec::with_capacity(self.layout.n_past_variables());
        for (i, embed) in self.params.observed_embeds.iter().enumerate() {
            let values = stride_column(batch.observed_past.data(), i, n_o);
            past_features.push(embed.apply(&mut ctx, &values, &[b, k])?);
        }
        for (j, embed) in self.params.known_embeds.iter().enumerate() {
            let values = window_column(batch.known_inputs.data(), b, k + horizon, n_k, j, 0, k);
            past_features.push(embed.apply(&mut ctx, &values, &[b, k])?);
        }
        past_features.push(self.params.target_embed.apply(
            &mut ctx,
            batch.target_past.data(),
            &[b, k],
        )?);

        let past_ctx = match static_ctx {
            Some((c_sel, ..)) => Some(expand_steps(&mut ctx, c_sel, k)?),
            None => None,
        };
        let (past_selected, past_weights) =
            self.params.past_vsn.apply(&mut ctx, &past_features, past_ctx)?;

        // Future branch: known columns only.
        let future_features = self
            .params
            .known_embeds
            .iter()
            .enumerate()
            .map(|(j, embed)| {
                let values = window_column(
                    batch.known_inputs.data(),
                    b,
                    k + horizon,
                    n_k,
                    j,
                    k,
                    k + horizon,
                );
                embed.apply(&mut ctx, &values, &[b, horizon])
            })
            .collect::<Result<Vec<_>>>()?;
        let future_ctx = match static_ctx {
            Some((c_sel, ..)) => Some(expand_steps(&mut ctx, c_sel, horizon)?),
            None => None,
        };
        let (future_selected, future_weights) =
            self.params
                .future_vsn
                .apply(&mut ctx, &future_features, future_ctx)?;

        // Recurrent pass over both segments, initialized from the static
        // hidden/cell contexts (zero when no statics exist).
        let (state_h, state_c) = match static_ctx {
            Some((_, c_cell, c_hidden, ..)) => (c_hidden, c_cell),
            None => (
                ctx.tape.leaf(Tensor::zeros(&[b, d])),
                ctx.tape.leaf(Tensor::zeros(&[b, d])),
            ),
        };
        let temporal =
            self.params
                .seq2seq
                .apply(&mut ctx, past_selected, future_selected, state_h, state_c)?;

        // Static enrichment, causal self-attention with a gated skip, and
        // per-position refinement.
        let enrich_ctx = match static_ctx {
            Some((.., c_enrich, _)) => Some(expand_steps(&mut ctx, c_enrich, k + horizon)?),
            None => None,
        };
        let enriched = self.params.enrichment.apply(&mut ctx, temporal, enrich_ctx)?;
        let (attended, attention) =
            self.params
                .attention
                .apply(&mut ctx, enriched, enriched, enriched, true)?;
        let attended = ctx.dropout(attended)?;
        let gated = self.params.attn_gate.apply(&mut ctx, attended)?;
        let summed = ctx.tape.add(enriched, gated)?;
        let gain = ctx.tape.param(ctx.store, self.params.attn_ln.0);
        let bias = ctx.tape.param(ctx.store, self.params.attn_ln.1);
        let attended = ctx.tape.layer_norm(summed, gain, bias)?;
        let refined = self.params.positionwise.apply(&mut ctx, attended, None)?;

        // Quantile heads read only the future positions.
        let future_repr = ctx.tape.slice(refined, 1, k, horizon)?;
        let quantile_outputs = self
            .params
            .heads
            .iter()
            .map(|&(w, bias)| ctx.affine(future_repr, w, bias))
            .collect::<Result<Vec<_>>>()?;
        let forecast = ctx.tape.concat(&quantile_outputs, 2)?;

        Ok(ForwardOutputs {
            forecast,
            attention,
            static_weights: static_ctx.map(|(.., w)| w),
            past_weights,
            future_weights,
        })
    }

    /// Run inference and return the forecast values `[B, τ, |Q|]`.
    pub fn predict(&self, batch: &Batch) -> Result<Tensor> {
        let mut tape = Tape::new();
        let mut rng = inference_rng();
        let out = self.forward(&mut tape, &mut rng, batch, false)?;
        Ok(tape.value(out.forecast).clone())
    }

    /// Persist weights (manifest + binary blob) and the config/layout pair
    /// needed to rebuild the parameter registry.
    pub fn save(&self, dir: &std::path::Path) -> Result<()> {
        gale_autodiff::save_checkpoint(&self.store, dir)?;
        let meta = ModelMeta {
            config: self.config.clone(),
            layout: self.layout.clone(),
        };
        let json = serde_json::to_string_pretty(&meta)
            .map_err(|e| TftError::Format(e.to_string()))?;
        std::fs::write(dir.join("tft_config.json"), json)?;
        Ok(())
    }

    /// Rebuild a model from [`TftModel::save`] output: registration replays
    /// from the stored config and layout, then the saved weights overwrite
    /// the fresh initialization.
    pub fn load(dir: &std::path::Path) -> Result<Self> {
        let json = std::fs::read_to_string(dir.join("tft_config.json"))?;
        let meta: ModelMeta =
            serde_json::from_str(&json).map_err(|e| TftError::Format(e.to_string()))?;
        let mut model = Self::new(meta.config, meta.layout)?;
        gale_autodiff::load_checkpoint(dir, &mut model.store)?;
        Ok(model)
    }

    fn check_batch(&self, batch: &Batch) -> Result<()> {
        let b = batch.static_inputs.shape()[0];
        let k = self.config.encoder_length;
        let horizon = self.config.horizon;
        let expected = [
            (
                "static_inputs",
                vec![b, self.layout.static_columns.len()],
                batch.static_inputs.shape(),
            ),
            (
                "observed_past",
                vec![b, k, self.layout.observed_columns.len()],
                batch.observed_past.shape(),
            ),
            (
                "known_inputs",
                vec![b, k + horizon, self.layout.known_columns.len()],
                batch.known_inputs.shape(),
            ),
            ("target_past", vec![b, k, 1], batch.target_past.shape()),
            (
                "target_future",
                vec![b, horizon, 1],
                batch.target_future.shape(),
            ),
        ];
        for (name, want, got) in expected {
            if got != want.as_slice() {
                return Err(TftError::ShapeMismatch(format!(
                    "{name}: expected {want:?}, got {got:?}"
                )));
            }
        }
        Ok(())
    }
}

/// Fixed-stream RNG for passes where dropout is inactive; the draws are
/// never consumed but the forward signature still needs a generator.
pub(crate) fn inference_rng() -> ChaCha8Rng {
    use rand_chacha::rand_core::SeedableRng;
    ChaCha8Rng::seed_from_u64(0)
}

/// Every `n_vars`-th value starting at `var`: one variable's values from an
/// interleaved `[.., n_vars]` buffer.
fn stride_column(data: &[f64], var: usize, n_vars: usize) -> Vec<f64> {
    data.iter().skip(var).step_by(n_vars).copied().collect()
}

/// One variable's values over a step range `[lo, hi)` from a
/// `[b, steps, n_vars]` buffer.
fn window_column(
    data: &[f64],
    b: usize,
    steps: usize,
    n_vars: usize,
    var: usize,
    lo: usize,
    hi: usize,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(b * (hi - lo));
    for r in 0..b {
        for t in lo..hi {
            out.push(data[(r * steps + t) * n_vars + var]);
        }
    }
    out
}

/// Broadcast a `[B, d]` context across `steps` time positions: `[B, steps, d]`.
fn expand_steps(ctx: &mut ForwardCtx, x: NodeId, steps: usize) -> Result<NodeId> {
    let shape = ctx.tape.value(x).shape().to_vec();
    let widened = ctx.tape.reshape(x, vec![shape[0], 1, shape[1]])?;
    Ok(ctx.tape.repeat_axis(widened, 1, steps)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::batch::{assemble_batch, window_origins};
    use crate::loss::quantile_loss;
    use chrono::{TimeZone, Utc};
    use gale_autodiff::gradcheck;
    use gale_data::{Aggregation, FeatureRole, FeatureSpec, SeriesFrame};

    fn demo_frame(n: usize) -> SeriesFrame {
        let t0 = Utc.with_ymd_and_hms(2019, 1, 1, 0, 0, 0).unwrap();
        let timestamps: Vec<_> = (0..n)
            .map(|i| t0 + chrono::Duration::hours(i as i64))
            .collect();
        let schema = vec![
            FeatureSpec::new("capacity", FeatureRole::Static, Aggregation::Mean),
            FeatureSpec::new("wind", FeatureRole::ObservedPast, Aggregation::Mean),
            FeatureSpec::new("hour", FeatureRole::KnownFuture, Aggregation::Mean),
            FeatureSpec::new("power", FeatureRole::Target, Aggregation::Mean),
        ];
        let columns = std::collections::BTreeMap::from([
            ("capacity".to_string(), vec![0.8; n]),
            (
                "wind".to_string(),
                (0..n).map(|i| (i as f64 * 0.7).sin()).collect(),
            ),
            ("hour".to_string(), (0..n).map(|i| (i % 24) as f64).collect()),
            (
                "power".to_string(),
                (0..n).map(|i| 0.5 + 0.3 * (i as f64 * 0.7).sin()).collect(),
            ),
        ]);
        SeriesFrame::new(timestamps, columns, chrono::Duration::hours(1), schema).unwrap()
    }

    fn tiny_config() -> TftConfig {
        TftConfig {
            hidden_size: 8,
            num_heads: 2,
            encoder_length: 4,
            horizon: 2,
            quantiles: vec![0.1, 0.5, 0.9],
            dropout: 0.1,
            learning_rate: 1e-3,
            batch_size: 8,
            max_epochs: 2,
            patience: 1,
            seed: 3,
        }
    }

    fn fixture(config: &TftConfig) -> (TftModel, Batch) {
        let frame = demo_frame(40);
        let layout = FeatureLayout::from_frame(&frame, None).unwrap();
        let origins = window_origins(
            &frame,
            &layout,
            config.encoder_length,
            config.horizon,
            true,
        )
        .unwrap();
        let batch = assemble_batch(
            &frame,
            &layout,
            config.encoder_length,
            config.horizon,
            &origins[..3],
        )
        .unwrap();
        let model = TftModel::new(config.clone(), layout).unwrap();
        (model, batch)
    }

    #[test]
    fn forward_output_shape_matches_contract() {
        let config = tiny_config();
        let (model, batch) = fixture(&config);
        let mut tape = Tape::new();
        let mut rng = inference_rng();
        let out = model.forward(&mut tape, &mut rng, &batch, false).unwrap();
        assert_eq!(tape.value(out.forecast).shape(), &[3, 2, 3]);
        assert_eq!(tape.value(out.attention).shape(), &[3, 6, 6]);
        assert_eq!(tape.value(out.past_weights).shape(), &[3, 4, 3]);
        assert_eq!(tape.value(out.future_weights).shape(), &[3, 2, 1]);
        let static_weights = out.static_weights.expect("layout has a static column");
        assert_eq!(tape.value(static_weights).shape(), &[3, 1]);
        assert!(tape.value(out.forecast).data().iter().all(|v| v.is_finite()));
        for row in tape.value(out.past_weights).data().chunks(3) {
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn static_encoders_zero_everything_gives_zero_contexts() {
        let mut store = ParamStore::new(0);
        let encoders = StaticEncoders::register(&mut store, "context", 4);
        let ids: Vec<_> = store
            .iter()
            .map(|(id, p)| (id, p.value.shape().to_vec()))
            .collect();
        for (id, shape) in ids {
            store.set_value(id, Tensor::zeros(&shape));
        }
        let mut tape = Tape::new();
        let mut rng = inference_rng();
        let mut ctx = ForwardCtx::new(&mut tape, &store, &mut rng, 0.0, false);
        let combined = ctx.tape.leaf(Tensor::zeros(&[2, 4]));
        let (a, b, c, d) = encoders.apply(&mut ctx, combined).unwrap();
        for node in [a, b, c, d] {
            assert!(tape.value(node).data().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn static_encoders_produce_distinct_contexts() {
        let mut store = ParamStore::new(17);
        let encoders = StaticEncoders::register(&mut store, "context", 4);
        let mut tape = Tape::new();
        let mut rng = inference_rng();
        let mut ctx = ForwardCtx::new(&mut tape, &store, &mut rng, 0.0, false);
        let combined = ctx.tape.leaf(Tensor::new(vec![1, 4], vec![0.4, -0.9, 1.3, 0.2]).unwrap());
        let (a, b, c, d) = encoders.apply(&mut ctx, combined).unwrap();
        let outputs = [a, b, c, d].map(|n| tape.value(n).data().to_vec());
        for i in 0..4 {
            for j in i + 1..4 {
                assert_ne!(outputs[i], outputs[j], "contexts {i} and {j} collide");
            }
        }
    }

    #[test]
    fn static_encoders_gradient_matches_central_difference() {
        let mut store = ParamStore::new(18);
        let encoders = StaticEncoders::register(&mut store, "context", 4);
        let x0 = vec![0.3, -0.5, 0.8, -0.1];

        let run = |data: &[f64]| -> (Tape, NodeId, NodeId) {
            let mut tape = Tape::new();
            let mut rng = inference_rng();
            let mut ctx = ForwardCtx::new(&mut tape, &store, &mut rng, 0.0, false);
            let x = ctx.tape.leaf(Tensor::new(vec![1, 4], data.to_vec()).unwrap());
            let (a, b, c, d) = encoders.apply(&mut ctx, x).unwrap();
            let ab = ctx.tape.add(a, b).unwrap();
            let abc = ctx.tape.add(ab, c).unwrap();
            let all = ctx.tape.add(abc, d).unwrap();
            let loss = ctx.tape.mean(all, None).unwrap();
            (tape, x, loss)
        };
        let (mut tape, x, loss) = run(&x0);
        tape.backward(loss).unwrap();
        let analytic = tape.grad(x).unwrap().data().to_vec();
        let numeric = gradcheck::central_diff(
            |probe| {
                let (tape, _, loss) = run(probe);
                tape.value(loss).item()
            },
            &x0,
            1e-5,
        );
        assert!(gradcheck::max_error(&analytic, &numeric) < 1e-5);
    }

    #[test]
    fn perturbing_a_late_input_leaves_earlier_attention_rows_unchanged() {
        let config = tiny_config();
        let (model, batch) = fixture(&config);
        let run = |batch: &Batch| {
            let mut tape = Tape::new();
            let mut rng = inference_rng();
            let out = model.forward(&mut tape, &mut rng, batch, false).unwrap();
            (
                tape.value(out.attention).clone(),
                tape.value(out.forecast).clone(),
            )
        };
        let (base_attn, base_forecast) = run(&batch);

        let mut perturbed = batch.clone();
        {
            // Shift the observed covariate at the last past step of row 0.
            let data = perturbed.observed_past.data_mut();
            data[3] += 0.5;
        }
        let (new_attn, new_forecast) = run(&perturbed);

        let t_total = 6;
        for row in 0..3 {
            let lo = row * t_total;
            assert_eq!(
                &base_attn.data()[lo..lo + t_total],
                &new_attn.data()[lo..lo + t_total],
                "attention row {row} precedes the perturbation and must not move"
            );
        }
        assert_ne!(base_forecast.data(), new_forecast.data());
    }

    #[test]
    fn duplicate_batch_rows_forecast_identically() {
        let config = tiny_config();
        let frame = demo_frame(40);
        let layout = FeatureLayout::from_frame(&frame, None).unwrap();
        let batch = assemble_batch(&frame, &layout, 4, 2, &[10, 10]).unwrap();
        let model = TftModel::new(config, layout).unwrap();
        let forecast = model.predict(&batch).unwrap();
        let row = forecast.len() / 2;
        assert_eq!(&forecast.data()[..row], &forecast.data()[row..]);
    }

    #[test]
    fn full_composition_gradient_matches_central_difference() {
        let config = TftConfig {
            hidden_size: 4,
            num_heads: 2,
            encoder_length: 2,
            horizon: 1,
            quantiles: vec![0.5],
            dropout: 0.0,
            seed: 5,
            ..TftConfig::default()
        };
        let frame = demo_frame(20);
        let layout = FeatureLayout::from_frame(&frame, None).unwrap();
        let batch = assemble_batch(&frame, &layout, 2, 1, &[5, 9]).unwrap();
        let mut model = TftModel::new(config.clone(), layout).unwrap();
        let probe_param = model.store().find("embed.target.weight").unwrap();
        let w0 = model.store().value(probe_param).data().to_vec();

        let mut loss_at = |data: &[f64]| -> f64 {
            model
                .store_mut()
                .set_value(probe_param, Tensor::new(vec![1, 4], data.to_vec()).unwrap());
            let mut tape = Tape::new();
            let mut rng = inference_rng();
            let out = model.forward(&mut tape, &mut rng, &batch, false).unwrap();
            let target = tape.leaf(batch.target_future.clone());
            let loss = quantile_loss(&mut tape, out.forecast, target, &config.quantiles).unwrap();
            tape.value(loss).item()
        };
        let numeric = gradcheck::central_diff(|probe| loss_at(probe), &w0, 1e-5);

        model
            .store_mut()
            .set_value(probe_param, Tensor::new(vec![1, 4], w0.clone()).unwrap());
        let mut tape = Tape::new();
        let mut rng = inference_rng();
        let out = model.forward(&mut tape, &mut rng, &batch, false).unwrap();
        let target = tape.leaf(batch.target_future.clone());
        let loss = quantile_loss(&mut tape, out.forecast, target, &config.quantiles).unwrap();
        tape.backward(loss).unwrap();
        tape.accumulate_param_grads(model.store_mut());
        let analytic = model.store().grad(probe_param).data().to_vec();
        assert!(gradcheck::max_error(&analytic, &numeric) < 1e-4);
    }

    #[test]
    fn mismatched_batch_shapes_are_rejected() {
        let config = tiny_config();
        let (model, mut batch) = fixture(&config);
        batch.target_past = Tensor::zeros(&[3, 2, 1]);
        let mut tape = Tape::new();
        let mut rng = inference_rng();
        assert!(matches!(
            model.forward(&mut tape, &mut rng, &batch, false),
            Err(TftError::ShapeMismatch(_))
        ));
    }
}
