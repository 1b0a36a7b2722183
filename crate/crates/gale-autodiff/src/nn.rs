use crate::params::{ParamId, ParamStore};
use crate::tape::{NodeId, Tape};
use crate::tensor::Tensor;
use crate::{AutodiffError, Result};
use rand::Rng;

/// Parameter handles for one LSTM cell. Gate order inside the stacked
/// `4 * hidden` dimension is input, forget, cell, output; the forget-gate
/// bias slice starts at 1.0 so fresh cells retain state by default.
#[derive(Debug, Clone, Copy)]
pub struct LstmParamIds {
    pub w_input: ParamId,
    pub w_hidden: ParamId,
    pub bias: ParamId,
}

impl LstmParamIds {
    pub fn register(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
    ) -> Self {
        let w_input = store.register_glorot(format!("{prefix}.w_input"), input_dim, 4 * hidden_dim);
        let w_hidden =
            store.register_glorot(format!("{prefix}.w_hidden"), hidden_dim, 4 * hidden_dim);
        let mut bias = Tensor::zeros(&[4 * hidden_dim]);
        for v in &mut bias.data_mut()[hidden_dim..2 * hidden_dim] {
            *v = 1.0;
        }
        let bias = store.register(format!("{prefix}.bias"), bias);
        Self {
            w_input,
            w_hidden,
            bias,
        }
    }

    /// Push the three parameters onto a tape once per forward pass.
    pub fn on_tape(&self, tape: &mut Tape, store: &ParamStore) -> LstmCellWeights {
        let hidden_dim = store.value(self.w_hidden).shape()[0];
        LstmCellWeights {
            w_input: tape.param(store, self.w_input),
            w_hidden: tape.param(store, self.w_hidden),
            bias: tape.param(store, self.bias),
            hidden_dim,
        }
    }
}

/// Tape-resident LSTM weights, shared across the timesteps of one unroll.
#[derive(Debug, Clone, Copy)]
pub struct LstmCellWeights {
    pub w_input: NodeId,
    pub w_hidden: NodeId,
    pub bias: NodeId,
    pub hidden_dim: usize,
}

/// One LSTM step: takes `x [B, input_dim]`, `h [B, hidden]`, `c [B, hidden]`
/// and returns the next `(h, c)`.
pub fn lstm_cell(
    tape: &mut Tape,
    weights: &LstmCellWeights,
    x: NodeId,
    h: NodeId,
    c: NodeId,
) -> Result<(NodeId, NodeId)> {
    let d = weights.hidden_dim;
    let from_x = tape.matmul(x, weights.w_input)?;
    let from_h = tape.matmul(h, weights.w_hidden)?;
    let pre = tape.add(from_x, from_h)?;
    let pre = tape.add(pre, weights.bias)?;
    let input_gate = tape.slice(pre, 1, 0, d)?;
    let input_gate = tape.sigmoid(input_gate);
    let forget_gate = tape.slice(pre, 1, d, d)?;
    let forget_gate = tape.sigmoid(forget_gate);
    let cell_cand = tape.slice(pre, 1, 2 * d, d)?;
    let cell_cand = tape.tanh(cell_cand);
    let output_gate = tape.slice(pre, 1, 3 * d, d)?;
    let output_gate = tape.sigmoid(output_gate);
    let kept = tape.mul(forget_gate, c)?;
    let written = tape.mul(input_gate, cell_cand)?;
    let c_next = tape.add(kept, written)?;
    let c_act = tape.tanh(c_next);
    let h_next = tape.mul(output_gate, c_act)?;
    Ok((h_next, c_next))
}

/// Inverted dropout: during training each element is zeroed with probability
/// `rate` and survivors are scaled by `1 / (1 - rate)`, so the expectation is
/// the identity. Outside training (or at rate 0) the input passes through.
pub fn dropout<R: Rng>(
    tape: &mut Tape,
    rng: &mut R,
    x: NodeId,
    rate: f64,
    training: bool,
) -> Result<NodeId> {
    if !(0.0..1.0).contains(&rate) {
        return Err(AutodiffError::InvalidDropoutRate(rate));
    }
    if !training || rate == 0.0 {
        return Ok(x);
    }
    let keep = 1.0 / (1.0 - rate);
    let mask: Vec<f64> = (0..tape.value(x).len())
        .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
        .collect();
    let mask = tape.leaf(Tensor::new(tape.value(x).shape().to_vec(), mask)?);
    tape.mul(x, mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cell_fixture(input_dim: usize, hidden_dim: usize) -> (ParamStore, LstmParamIds) {
        let mut store = ParamStore::new(11);
        let ids = LstmParamIds::register(&mut store, "lstm", input_dim, hidden_dim);
        (store, ids)
    }

    #[test]
    fn zero_state_zero_input_stays_zero_with_zero_bias() {
        let (mut store, ids) = cell_fixture(3, 4);
        store.set_value(ids.bias, Tensor::zeros(&[16]));
        let mut tape = Tape::new();
        let w = ids.on_tape(&mut tape, &store);
        let x = tape.leaf(Tensor::zeros(&[2, 3]));
        let h = tape.leaf(Tensor::zeros(&[2, 4]));
        let c = tape.leaf(Tensor::zeros(&[2, 4]));
        let (h2, c2) = lstm_cell(&mut tape, &w, x, h, c).unwrap();
        // tanh(0) = 0 kills both the candidate and the output activation.
        assert!(tape.value(h2).data().iter().all(|v| *v == 0.0));
        assert!(tape.value(c2).data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn saturated_gates_carry_cell_state_through() {
        let (mut store, ids) = cell_fixture(2, 3);
        // Forget bias +30 opens the forget gate; input bias -30 closes the
        // input gate; with x = h = 0 the cell state must pass through.
        let mut bias = Tensor::zeros(&[12]);
        for v in &mut bias.data_mut()[0..3] {
            *v = -30.0;
        }
        for v in &mut bias.data_mut()[3..6] {
            *v = 30.0;
        }
        store.set_value(ids.bias, bias);
        let mut tape = Tape::new();
        let w = ids.on_tape(&mut tape, &store);
        let x = tape.leaf(Tensor::zeros(&[1, 2]));
        let h = tape.leaf(Tensor::zeros(&[1, 3]));
        let c_prev = Tensor::vector(&[0.7, -0.2, 0.4]).reshaped(vec![1, 3]).unwrap();
        let c = tape.leaf(c_prev.clone());
        let (_, c2) = lstm_cell(&mut tape, &w, x, h, c).unwrap();
        for (a, b) in tape.value(c2).data().iter().zip(c_prev.data()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn dropout_rate_zero_is_identity_node() {
        let mut tape = Tape::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = tape.leaf(Tensor::vector(&[1.0, 2.0, 3.0]));
        let y = dropout(&mut tape, &mut rng, x, 0.0, true).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn dropout_inactive_outside_training() {
        let mut tape = Tape::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = tape.leaf(Tensor::vector(&[1.0, 2.0, 3.0]));
        let y = dropout(&mut tape, &mut rng, x, 0.9, false).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn dropout_rejects_rate_one() {
        let mut tape = Tape::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = tape.leaf(Tensor::vector(&[1.0]));
        assert!(matches!(
            dropout(&mut tape, &mut rng, x, 1.0, true),
            Err(AutodiffError::InvalidDropoutRate(_))
        ));
    }

    #[test]
    fn dropout_preserves_mean_in_expectation() {
        // Monte Carlo estimate of E[dropout(1)] over many masks.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200_000;
        let mut total = 0.0;
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::full(&[n], 1.0));
        let y = dropout(&mut tape, &mut rng, x, 0.3, true).unwrap();
        for v in tape.value(y).data() {
            total += v;
        }
        let mean = total / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }
}
