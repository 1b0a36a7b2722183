//! Finite-difference validation of every backward rule.
//!
//! Each case builds an expression from leaves, reduces it to a scalar with a
//! fixed weighting (so sign errors cannot cancel), and compares the tape
//! gradient of every input against a central difference of the forward pass.

use gale_autodiff::gradcheck::{central_diff, max_error, DEFAULT_STEP};
use gale_autodiff::{lstm_cell, LstmParamIds, NodeId, ParamStore, Tape, Tensor};

const TOL: f64 = 1e-6;

/// Deterministic non-uniform weights keep the scalar loss sensitive to every
/// output coordinate.
fn weighted_loss(tape: &mut Tape, out: NodeId) -> NodeId {
    let n = tape.value(out).len();
    let w: Vec<f64> = (0..n).map(|j| 0.3 + (j as f64 * 0.7).sin()).collect();
    let shape = tape.value(out).shape().to_vec();
    let w = tape.leaf(Tensor::new(shape, w).unwrap());
    let prod = tape.mul(out, w).unwrap();
    tape.mean(prod, None).unwrap()
}

/// Check d(loss)/d(inputs[i]) for every input of `build`.
fn check_case<F>(inputs: &[Tensor], build: F)
where
    F: Fn(&mut Tape, &[NodeId]) -> NodeId,
{
    let forward = |tensors: &[Tensor]| -> f64 {
        let mut tape = Tape::new();
        let ids: Vec<NodeId> = tensors.iter().map(|t| tape.leaf(t.clone())).collect();
        let out = build(&mut tape, &ids);
        let loss = weighted_loss(&mut tape, out);
        tape.value(loss).item()
    };

    let mut tape = Tape::new();
    let ids: Vec<NodeId> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
    let out = build(&mut tape, &ids);
    let loss = weighted_loss(&mut tape, out);
    tape.backward(loss).unwrap();

    for (i, input) in inputs.iter().enumerate() {
        let analytic = tape
            .grad(ids[i])
            .map(|g| g.data().to_vec())
            .unwrap_or_else(|| vec![0.0; input.len()]);
        let numeric = central_diff(
            |x| {
                let mut probe = inputs.to_vec();
                probe[i] = Tensor::new(input.shape().to_vec(), x.to_vec()).unwrap();
                forward(&probe)
            },
            input.data(),
            DEFAULT_STEP,
        );
        let err = max_error(&analytic, &numeric);
        assert!(err < TOL, "input {i}: max gradient error {err}");
    }
}

fn filled(shape: &[usize], f: impl Fn(usize) -> f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(f).collect()).unwrap()
}

#[test]
fn matmul_grads() {
    let a = filled(&[3, 4], |i| (i as f64 * 0.37).sin());
    let b = filled(&[4, 2], |i| (i as f64 * 0.53).cos());
    check_case(&[a, b], |t, ids| t.matmul(ids[0], ids[1]).unwrap());
}

#[test]
fn batch_matmul_grads() {
    let a = filled(&[2, 3, 4], |i| (i as f64 * 0.31).sin());
    let b = filled(&[2, 4, 2], |i| (i as f64 * 0.41).cos());
    check_case(&[a, b], |t, ids| t.batch_matmul(ids[0], ids[1]).unwrap());
}

#[test]
fn transpose_grads() {
    let a = filled(&[2, 3, 4], |i| (i as f64 * 0.29).sin());
    check_case(&[a], |t, ids| t.transpose(ids[0]).unwrap());
}

#[test]
fn add_equal_and_broadcast_grads() {
    let a = filled(&[2, 3], |i| i as f64 * 0.2 - 0.5);
    let b = filled(&[2, 3], |i| (i as f64 * 0.9).cos());
    check_case(&[a.clone(), b], |t, ids| t.add(ids[0], ids[1]).unwrap());

    // Suffix broadcast: bias over the trailing axis.
    let bias = filled(&[3], |i| 0.3 * i as f64 - 0.2);
    check_case(&[a.clone(), bias], |t, ids| t.add(ids[0], ids[1]).unwrap());

    // Scalar broadcast.
    let s = Tensor::scalar(0.7);
    check_case(&[a, s], |t, ids| t.add(ids[0], ids[1]).unwrap());
}

#[test]
fn sub_mul_neg_scale_grads() {
    let a = filled(&[5], |i| (i as f64 * 0.61).sin());
    let b = filled(&[5], |i| (i as f64 * 0.43).cos() + 1.1);
    check_case(&[a.clone(), b.clone()], |t, ids| t.sub(ids[0], ids[1]).unwrap());
    check_case(&[a.clone(), b], |t, ids| t.mul(ids[0], ids[1]).unwrap());
    check_case(&[a.clone()], |t, ids| t.neg(ids[0]));
    check_case(&[a], |t, ids| t.scale(ids[0], -2.3));
}

#[test]
fn activation_grads() {
    // Points straddle zero but avoid it, keeping finite differences clean.
    let x = filled(&[6], |i| (i as f64 - 2.4) * 0.8);
    check_case(&[x.clone()], |t, ids| t.elu(ids[0]));
    check_case(&[x.clone()], |t, ids| t.sigmoid(ids[0]));
    check_case(&[x], |t, ids| t.tanh(ids[0]));
}

#[test]
fn softmax_grads() {
    let x = filled(&[2, 4], |i| (i as f64 * 1.3).sin() * 2.0);
    check_case(&[x], |t, ids| t.softmax(ids[0]).unwrap());
}

#[test]
fn layer_norm_grads() {
    let x = filled(&[3, 5], |i| (i as f64 * 0.77).sin() * 1.5);
    let gain = filled(&[5], |i| 1.0 + 0.1 * i as f64);
    let bias = filled(&[5], |i| -0.2 + 0.05 * i as f64);
    check_case(&[x, gain, bias], |t, ids| {
        t.layer_norm(ids[0], ids[1], ids[2]).unwrap()
    });
}

#[test]
fn reduction_grads() {
    let x = filled(&[2, 3, 4], |i| (i as f64 * 0.23).sin());
    for axis in [None, Some(0), Some(1), Some(2)] {
        check_case(&[x.clone()], move |t, ids| t.sum(ids[0], axis).unwrap());
        check_case(&[x.clone()], move |t, ids| t.mean(ids[0], axis).unwrap());
    }
}

#[test]
fn concat_grads() {
    let a = filled(&[2, 2], |i| i as f64 * 0.4);
    let b = filled(&[2, 3], |i| (i as f64 * 0.6).cos());
    let c = filled(&[2, 1], |i| -0.3 + i as f64);
    check_case(&[a, b, c], |t, ids| t.concat(ids, 1).unwrap());

    let a = filled(&[1, 3], |i| i as f64 * 0.4 - 0.1);
    let b = filled(&[2, 3], |i| (i as f64 * 0.8).sin());
    check_case(&[a, b], |t, ids| t.concat(ids, 0).unwrap());
}

#[test]
fn slice_and_reshape_grads() {
    let x = filled(&[3, 5], |i| (i as f64 * 0.51).sin());
    check_case(&[x.clone()], |t, ids| t.slice(ids[0], 1, 1, 3).unwrap());
    check_case(&[x.clone()], |t, ids| t.slice(ids[0], 0, 2, 1).unwrap());
    check_case(&[x], |t, ids| t.reshape(ids[0], vec![5, 3]).unwrap());
}

#[test]
fn repeat_axis_grads() {
    let x = filled(&[2, 1, 3], |i| (i as f64 * 0.9).cos());
    check_case(&[x], |t, ids| t.repeat_axis(ids[0], 1, 4).unwrap());
}

#[test]
fn embed_lookup_grads() {
    // Repeated index 1 exercises scatter-add in the backward pass.
    let table = filled(&[4, 3], |i| (i as f64 * 0.35).sin());
    check_case(&[table], |t, ids| {
        t.embed_lookup(ids[0], &[1, 3, 1, 0]).unwrap()
    });
}

#[test]
fn max_elem_grads() {
    // Well-separated values avoid ties, where the subgradient is one-sided.
    let a = filled(&[6], |i| i as f64 * 0.5 - 1.0);
    let b = filled(&[6], |i| 1.3 - i as f64 * 0.45);
    check_case(&[a, b], |t, ids| t.max_elem(ids[0], ids[1]).unwrap());
}

#[test]
fn composite_network_grads() {
    // matmul -> bias -> elu -> layer_norm -> softmax, all in one graph.
    let x = filled(&[2, 4], |i| (i as f64 * 0.47).sin());
    let w = filled(&[4, 5], |i| (i as f64 * 0.19).cos() * 0.6);
    let b = filled(&[5], |i| 0.1 * i as f64 - 0.2);
    let gain = filled(&[5], |i| 1.0 + 0.07 * i as f64);
    let bias = filled(&[5], |i| 0.02 * i as f64);
    check_case(&[x, w, b, gain, bias], |t, ids| {
        let h = t.matmul(ids[0], ids[1]).unwrap();
        let h = t.add(h, ids[2]).unwrap();
        let h = t.elu(h);
        let h = t.layer_norm(h, ids[3], ids[4]).unwrap();
        t.softmax(h).unwrap()
    });
}

#[test]
fn shared_input_grads_accumulate() {
    // f(x) = x * x + x used twice more via concat; checks fan-out accumulation.
    let x = filled(&[3], |i| 0.4 * i as f64 + 0.3);
    check_case(&[x], |t, ids| {
        let sq = t.mul(ids[0], ids[0]).unwrap();
        t.concat(&[sq, ids[0], ids[0]], 0).unwrap()
    });
}

#[test]
fn lstm_unrolled_three_steps_grads() {
    let (input_dim, hidden) = (3, 4);
    let mut store = ParamStore::new(17);
    let ids = LstmParamIds::register(&mut store, "cell", input_dim, hidden);
    let xs: Vec<Tensor> = (0..3)
        .map(|s| filled(&[2, input_dim], |i| ((i + 7 * s) as f64 * 0.33).sin()))
        .collect();

    let run = |store: &ParamStore| -> (Tape, NodeId) {
        let mut tape = Tape::new();
        let w = ids.on_tape(&mut tape, store);
        let mut h = tape.leaf(Tensor::zeros(&[2, hidden]));
        let mut c = tape.leaf(Tensor::zeros(&[2, hidden]));
        for x in &xs {
            let xn = tape.leaf(x.clone());
            let (h2, c2) = lstm_cell(&mut tape, &w, xn, h, c).unwrap();
            h = h2;
            c = c2;
        }
        (tape, h)
    };

    let (mut tape, h) = run(&store);
    let loss = weighted_loss(&mut tape, h);
    tape.backward(loss).unwrap();
    tape.accumulate_param_grads(&mut store);

    for pid in [ids.w_input, ids.w_hidden, ids.bias] {
        let base = store.value(pid).clone();
        let analytic = store.grad(pid).data().to_vec();
        let numeric = central_diff(
            |x| {
                let mut probe = store.clone();
                probe.set_value(pid, Tensor::new(base.shape().to_vec(), x.to_vec()).unwrap());
                let (mut tape, h) = run(&probe);
                let loss = weighted_loss(&mut tape, h);
                tape.value(loss).item()
            },
            base.data(),
            DEFAULT_STEP,
        );
        let err = max_error(&analytic, &numeric);
        assert!(err < TOL, "param {pid:?}: max gradient error {err}");
    }
}
