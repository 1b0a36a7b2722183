use crate::params::{ParamId, ParamStore};
use crate::tensor::Tensor;
use crate::{AutodiffError, Result};

/// Handle to a node recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(pub(crate) usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf { param: Option<ParamId> },
    Matmul(NodeId, NodeId),
    BatchMatmul(NodeId, NodeId),
    SwapLastAxes(NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Neg(NodeId),
    Scale(NodeId, f64),
    Elu(NodeId),
    Sigmoid(NodeId),
    Tanh(NodeId),
    SoftmaxLast(NodeId),
    LayerNorm { x: NodeId, gain: NodeId, bias: NodeId },
    Sum { x: NodeId, axis: Option<usize> },
    Mean { x: NodeId, axis: Option<usize> },
    Concat { inputs: Vec<NodeId>, axis: usize },
    Slice { x: NodeId, axis: usize, start: usize, len: usize },
    Reshape(NodeId),
    RepeatAxis { x: NodeId, axis: usize, times: usize },
    EmbedLookup { table: NodeId, indices: Vec<usize> },
    MaxElem(NodeId, NodeId),
}

struct Node {
    value: Tensor,
    op: Op,
}

/// Records primitive operations in execution order; `backward` replays them in
/// reverse, accumulating gradients per node. Gradients persist across calls,
/// so invoking `backward` twice without a fresh tape doubles them.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Option<Tensor>>,
}

const LAYER_NORM_EPS: f64 = 1e-5;

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    /// Record a constant input; it still receives a gradient buffer so callers
    /// can differentiate with respect to it.
    pub fn leaf(&mut self, value: Tensor) -> NodeId {
        self.push(value, Op::Leaf { param: None })
    }

    /// Record a trainable parameter by copying its current value onto the tape.
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> NodeId {
        let value = store.value(id).clone();
        self.push(value, Op::Leaf { param: Some(id) })
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    /// Gradient of the last `backward` pass(es) for `id`, if any reached it.
    pub fn grad(&self, id: NodeId) -> Option<&Tensor> {
        self.grads.get(id.0).and_then(|g| g.as_ref())
    }

    // ---- primitives ----

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(shape_err("matmul", sa, sb));
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let out = matmul2d(self.value(a).data(), self.value(b).data(), m, k, n);
        let value = Tensor::new(vec![m, n], out)?;
        Ok(self.push(value, Op::Matmul(a, b)))
    }

    /// Batched matrix product of `[B, m, k]` by `[B, k, n]`.
    pub fn batch_matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa.len() != 3 || sb.len() != 3 || sa[0] != sb[0] || sa[2] != sb[1] {
            return Err(shape_err("batch_matmul", sa, sb));
        }
        let (bsz, m, k, n) = (sa[0], sa[1], sa[2], sb[2]);
        let mut out = vec![0.0; bsz * m * n];
        for i in 0..bsz {
            let av = &self.value(a).data()[i * m * k..(i + 1) * m * k];
            let bv = &self.value(b).data()[i * k * n..(i + 1) * k * n];
            let chunk = matmul2d(av, bv, m, k, n);
            out[i * m * n..(i + 1) * m * n].copy_from_slice(&chunk);
        }
        let value = Tensor::new(vec![bsz, m, n], out)?;
        Ok(self.push(value, Op::BatchMatmul(a, b)))
    }

    /// Transpose: swap the last two axes (rank >= 2).
    pub fn transpose(&mut self, a: NodeId) -> Result<NodeId> {
        let s = self.value(a).shape();
        if s.len() < 2 {
            return Err(shape_err("transpose", s, s));
        }
        let value = swap_last_axes(self.value(a));
        Ok(self.push(value, Op::SwapLastAxes(a)))
    }

    /// Elementwise add. `b` may have the same shape as `a`, be a scalar, or be
    /// a suffix of `a`'s shape (broadcast over the leading axes).
    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (sa, sb) = (
            self.value(a).shape().to_vec(),
            self.value(b).shape().to_vec(),
        );
        if !broadcast_ok(&sa, &sb) {
            return Err(shape_err("add", &sa, &sb));
        }
        let bv = self.value(b);
        let mut out = self.value(a).clone();
        let blen = bv.len().max(1);
        for (i, o) in out.data_mut().iter_mut().enumerate() {
            *o += self.nodes[b.0].value.data()[i % blen];
        }
        Ok(self.push(out, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(shape_err("sub", self.value(a).shape(), self.value(b).shape()));
        }
        let mut out = self.value(a).clone();
        for (i, o) in out.data_mut().iter_mut().enumerate() {
            *o -= self.nodes[b.0].value.data()[i];
        }
        Ok(self.push(out, Op::Sub(a, b)))
    }

    /// Elementwise (Hadamard) product of equal-shape tensors.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(shape_err("mul", self.value(a).shape(), self.value(b).shape()));
        }
        let mut out = self.value(a).clone();
        for (i, o) in out.data_mut().iter_mut().enumerate() {
            *o *= self.nodes[b.0].value.data()[i];
        }
        Ok(self.push(out, Op::Mul(a, b)))
    }

    pub fn neg(&mut self, a: NodeId) -> NodeId {
        let mut out = self.value(a).clone();
        for o in out.data_mut() {
            *o = -*o;
        }
        self.push(out, Op::Neg(a))
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        let mut out = self.value(a).clone();
        for o in out.data_mut() {
            *o *= c;
        }
        self.push(out, Op::Scale(a, c))
    }

    pub fn elu(&mut self, a: NodeId) -> NodeId {
        let mut out = self.value(a).clone();
        for o in out.data_mut() {
            if *o <= 0.0 {
                *o = o.exp() - 1.0;
            }
        }
        self.push(out, Op::Elu(a))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let mut out = self.value(a).clone();
        for o in out.data_mut() {
            *o = sigmoid_scalar(*o);
        }
        self.push(out, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let mut out = self.value(a).clone();
        for o in out.data_mut() {
            *o = o.tanh();
        }
        self.push(out, Op::Tanh(a))
    }

    /// Softmax over the last axis.
    pub fn softmax(&mut self, a: NodeId) -> Result<NodeId> {
        let s = self.value(a).shape();
        if s.is_empty() {
            return Err(shape_err("softmax", s, s));
        }
        let n = *s.last().unwrap();
        let mut out = self.value(a).clone();
        for row in out.data_mut().chunks_mut(n) {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                sum += *v;
            }
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
        Ok(self.push(out, Op::SoftmaxLast(a)))
    }

    /// Layer normalization over the last axis with learned gain and bias
    /// (both 1-D of the last-axis length); epsilon fixed at 1e-5.
    pub fn layer_norm(&mut self, x: NodeId, gain: NodeId, bias: NodeId) -> Result<NodeId> {
        let s = self.value(x).shape().to_vec();
        let n = *s.last().ok_or_else(|| shape_err("layer_norm", &s, &s))?;
        if self.value(gain).shape() != [n] || self.value(bias).shape() != [n] {
            return Err(shape_err("layer_norm", &s, self.value(gain).shape()));
        }
        let mut out = self.value(x).clone();
        let gd = self.nodes[gain.0].value.data().to_vec();
        let bd = self.nodes[bias.0].value.data().to_vec();
        for row in out.data_mut().chunks_mut(n) {
            let mean = row.iter().sum::<f64>() / n as f64;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - mean) * inv * gd[j] + bd[j];
            }
        }
        Ok(self.push(out, Op::LayerNorm { x, gain, bias }))
    }

    /// Sum over one axis, or over all elements when `axis` is `None`.
    pub fn sum(&mut self, x: NodeId, axis: Option<usize>) -> Result<NodeId> {
        let value = reduce(self.value(x), axis, false)?;
        Ok(self.push(value, Op::Sum { x, axis }))
    }

    /// Mean over one axis, or over all elements when `axis` is `None`.
    pub fn mean(&mut self, x: NodeId, axis: Option<usize>) -> Result<NodeId> {
        let value = reduce(self.value(x), axis, true)?;
        Ok(self.push(value, Op::Mean { x, axis }))
    }

    pub fn concat(&mut self, inputs: &[NodeId], axis: usize) -> Result<NodeId> {
        let first = *inputs.first().ok_or(AutodiffError::EmptyConcat)?;
        let base = self.value(first).shape().to_vec();
        if axis >= base.len() {
            return Err(AutodiffError::AxisOutOfRange { axis, shape: base });
        }
        let mut axis_total = 0;
        for &id in inputs {
            let s = self.value(id).shape();
            if s.len() != base.len()
                || s.iter()
                    .enumerate()
                    .any(|(i, &d)| i != axis && d != base[i])
            {
                return Err(shape_err("concat", &base, s));
            }
            axis_total += s[axis];
        }
        let mut shape = base.clone();
        shape[axis] = axis_total;
        let outer = self.value(first).outer_size(axis);
        let inner = self.value(first).inner_size(axis);
        let mut out = vec![0.0; shape.iter().product()];
        let row_out = axis_total * inner;
        let mut offset = 0;
        for &id in inputs {
            let t = self.value(id);
            let rows = t.shape()[axis];
            for o in 0..outer {
                let src = &t.data()[o * rows * inner..(o + 1) * rows * inner];
                let dst = &mut out[o * row_out + offset..o * row_out + offset + rows * inner];
                dst.copy_from_slice(src);
            }
            offset += rows * inner;
        }
        let value = Tensor::new(shape, out)?;
        Ok(self.push(
            value,
            Op::Concat {
                inputs: inputs.to_vec(),
                axis,
            },
        ))
    }

    pub fn slice(&mut self, x: NodeId, axis: usize, start: usize, len: usize) -> Result<NodeId> {
        let s = self.value(x).shape().to_vec();
        if axis >= s.len() {
            return Err(AutodiffError::AxisOutOfRange { axis, shape: s });
        }
        if start + len > s[axis] {
            return Err(AutodiffError::SliceOutOfRange {
                axis,
                start,
                len,
                shape: s,
            });
        }
        let t = self.value(x);
        let outer = t.outer_size(axis);
        let inner = t.inner_size(axis);
        let mut shape = s.clone();
        shape[axis] = len;
        let mut out = vec![0.0; outer * len * inner];
        for o in 0..outer {
            let src = &t.data()[(o * s[axis] + start) * inner..(o * s[axis] + start + len) * inner];
            out[o * len * inner..(o + 1) * len * inner].copy_from_slice(src);
        }
        let value = Tensor::new(shape, out)?;
        Ok(self.push(value, Op::Slice { x, axis, start, len }))
    }

    pub fn reshape(&mut self, x: NodeId, shape: Vec<usize>) -> Result<NodeId> {
        let value = self.value(x).reshaped(shape)?;
        Ok(self.push(value, Op::Reshape(x)))
    }

    /// Expand an axis of size 1 to `times` copies.
    pub fn repeat_axis(&mut self, x: NodeId, axis: usize, times: usize) -> Result<NodeId> {
        let s = self.value(x).shape().to_vec();
        if axis >= s.len() {
            return Err(AutodiffError::AxisOutOfRange { axis, shape: s });
        }
        if s[axis] != 1 {
            return Err(shape_err("repeat_axis", &s, &[times]));
        }
        let t = self.value(x);
        let outer = t.outer_size(axis);
        let inner = t.inner_size(axis);
        let mut shape = s.clone();
        shape[axis] = times;
        let mut out = vec![0.0; outer * times * inner];
        for o in 0..outer {
            let src = &t.data()[o * inner..(o + 1) * inner];
            for r in 0..times {
                out[(o * times + r) * inner..(o * times + r + 1) * inner].copy_from_slice(src);
            }
        }
        let value = Tensor::new(shape, out)?;
        Ok(self.push(value, Op::RepeatAxis { x, axis, times }))
    }

    /// Gather rows of a `[rows, d]` table; output is `[indices.len(), d]`.
    pub fn embed_lookup(&mut self, table: NodeId, indices: &[usize]) -> Result<NodeId> {
        let s = self.value(table).shape().to_vec();
        if s.len() != 2 {
            return Err(shape_err("embed_lookup", &s, &[indices.len()]));
        }
        let (rows, d) = (s[0], s[1]);
        let mut out = vec![0.0; indices.len() * d];
        for (i, &idx) in indices.iter().enumerate() {
            if idx >= rows {
                return Err(AutodiffError::EmbedIndexOutOfRange { index: idx, rows });
            }
            out[i * d..(i + 1) * d]
                .copy_from_slice(&self.value(table).data()[idx * d..(idx + 1) * d]);
        }
        let value = Tensor::new(vec![indices.len(), d], out)?;
        Ok(self.push(
            value,
            Op::EmbedLookup {
                table,
                indices: indices.to_vec(),
            },
        ))
    }

    /// Elementwise maximum; the subgradient follows the winning side
    /// (ties go to the first argument).
    pub fn max_elem(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        if self.value(a).shape() != self.value(b).shape() {
            return Err(shape_err(
                "max_elem",
                self.value(a).shape(),
                self.value(b).shape(),
            ));
        }
        let mut out = self.value(a).clone();
        for (i, o) in out.data_mut().iter_mut().enumerate() {
            let bv = self.nodes[b.0].value.data()[i];
            if bv > *o {
                *o = bv;
            }
        }
        Ok(self.push(out, Op::MaxElem(a, b)))
    }

    // ---- backward ----

    /// Accumulate gradients of `loss` into every node reachable from it.
    /// Gradients add onto whatever a previous `backward` left behind.
    pub fn backward(&mut self, loss: NodeId) -> Result<()> {
        if self.value(loss).len() != 1 {
            return Err(AutodiffError::NonScalarLoss(
                self.value(loss).shape().to_vec(),
            ));
        }
        if self.grads.len() < self.nodes.len() {
            self.grads.resize(self.nodes.len(), None);
        }
        // Local seed buffers so earlier accumulated grads are preserved.
        let mut local: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        local[loss.0] = Some(Tensor::full(self.value(loss).shape(), 1.0));

        for i in (0..=loss.0).rev() {
            let Some(g) = local[i].take() else { continue };
            self.backprop_node(i, &g, &mut local);
            match &mut self.grads[i] {
                Some(acc) => {
                    for (a, b) in acc.data_mut().iter_mut().zip(g.data()) {
                        *a += *b;
                    }
                }
                slot => *slot = Some(g),
            }
        }
        Ok(())
    }

    /// Add accumulated parameter gradients into their store slots.
    pub fn accumulate_param_grads(&self, store: &mut ParamStore) {
        for (i, node) in self.nodes.iter().enumerate() {
            if let Op::Leaf { param: Some(pid) } = node.op {
                if let Some(Some(g)) = self.grads.get(i) {
                    store.add_gradient(pid, g);
                }
            }
        }
    }

    fn backprop_node(&self, i: usize, g: &Tensor, local: &mut [Option<Tensor>]) {
        let add_to = |local: &mut [Option<Tensor>], id: NodeId, contrib: Tensor| {
            match &mut local[id.0] {
                Some(acc) => {
                    for (a, b) in acc.data_mut().iter_mut().zip(contrib.data()) {
                        *a += *b;
                    }
                }
                slot => *slot = Some(contrib),
            }
        };

        match &self.nodes[i].op {
            Op::Leaf { .. } => {}
            Op::Matmul(a, b) => {
                let (sa, sb) = (self.value(*a).shape(), self.value(*b).shape());
                let (m, k, n) = (sa[0], sa[1], sb[1]);
                let bt = swap_last_axes(self.value(*b));
                let da = matmul2d(g.data(), bt.data(), m, n, k);
                let at = swap_last_axes(self.value(*a));
                let db = matmul2d(at.data(), g.data(), k, m, n);
                add_to(local, *a, Tensor::new(vec![m, k], da).unwrap());
                add_to(local, *b, Tensor::new(vec![k, n], db).unwrap());
            }
            Op::BatchMatmul(a, b) => {
                let (sa, sb) = (self.value(*a).shape(), self.value(*b).shape());
                let (bsz, m, k, n) = (sa[0], sa[1], sa[2], sb[2]);
                let mut da = vec![0.0; bsz * m * k];
                let mut db = vec![0.0; bsz * k * n];
                for t in 0..bsz {
                    let gv = &g.data()[t * m * n..(t + 1) * m * n];
                    let av = &self.value(*a).data()[t * m * k..(t + 1) * m * k];
                    let bv = &self.value(*b).data()[t * k * n..(t + 1) * k * n];
                    let bt = transpose2d(bv, k, n);
                    da[t * m * k..(t + 1) * m * k]
                        .copy_from_slice(&matmul2d(gv, &bt, m, n, k));
                    let at = transpose2d(av, m, k);
                    db[t * k * n..(t + 1) * k * n]
                        .copy_from_slice(&matmul2d(&at, gv, k, m, n));
                }
                add_to(local, *a, Tensor::new(sa.to_vec(), da).unwrap());
                add_to(local, *b, Tensor::new(sb.to_vec(), db).unwrap());
            }
            Op::SwapLastAxes(a) => {
                add_to(local, *a, swap_last_axes(g));
            }
            Op::Add(a, b) => {
                add_to(local, *a, g.clone());
                let sb = self.value(*b).shape().to_vec();
                add_to(local, *b, reduce_to_suffix(g, &sb));
            }
            Op::Sub(a, b) => {
                add_to(local, *a, g.clone());
                let mut ng = g.clone();
                for v in ng.data_mut() {
                    *v = -*v;
                }
                add_to(local, *b, ng);
            }
            Op::Mul(a, b) => {
                let mut da = g.clone();
                for (v, bv) in da.data_mut().iter_mut().zip(self.value(*b).data()) {
                    *v *= *bv;
                }
                let mut db = g.clone();
                for (v, av) in db.data_mut().iter_mut().zip(self.value(*a).data()) {
                    *v *= *av;
                }
                add_to(local, *a, da);
                add_to(local, *b, db);
            }
            Op::Neg(a) => {
                let mut da = g.clone();
                for v in da.data_mut() {
                    *v = -*v;
                }
                add_to(local, *a, da);
            }
            Op::Scale(a, c) => {
                let mut da = g.clone();
                for v in da.data_mut() {
                    *v *= *c;
                }
                add_to(local, *a, da);
            }
            Op::Elu(a) => {
                let mut da = g.clone();
                for (v, x) in da.data_mut().iter_mut().zip(self.value(*a).data()) {
                    if *x <= 0.0 {
                        *v *= x.exp();
                    }
                }
                add_to(local, *a, da);
            }
            Op::Sigmoid(a) => {
                let y = &self.nodes[i].value;
                let mut da = g.clone();
                for (v, yv) in da.data_mut().iter_mut().zip(y.data()) {
                    *v *= yv * (1.0 - yv);
                }
                add_to(local, *a, da);
            }
            Op::Tanh(a) => {
                let y = &self.nodes[i].value;
                let mut da = g.clone();
                for (v, yv) in da.data_mut().iter_mut().zip(y.data()) {
                    *v *= 1.0 - yv * yv;
                }
                add_to(local, *a, da);
            }
            Op::SoftmaxLast(a) => {
                let y = &self.nodes[i].value;
                let n = *y.shape().last().unwrap();
                let mut da = g.clone();
                for (drow, yrow) in da.data_mut().chunks_mut(n).zip(y.data().chunks(n)) {
                    let dot: f64 = drow.iter().zip(yrow).map(|(d, y)| d * y).sum();
                    for (d, y) in drow.iter_mut().zip(yrow) {
                        *d = y * (*d - dot);
                    }
                }
                add_to(local, *a, da);
            }
            Op::LayerNorm { x, gain, bias } => {
                let xv = self.value(*x);
                let n = *xv.shape().last().unwrap();
                let gd = self.value(*gain).data();
                let mut dx = Tensor::zeros(xv.shape());
                let mut dgain = vec![0.0; n];
                let mut dbias = vec![0.0; n];
                for ((xrow, grow), dxrow) in xv
                    .data()
                    .chunks(n)
                    .zip(g.data().chunks(n))
                    .zip(dx.data_mut().chunks_mut(n))
                {
                    let mean = xrow.iter().sum::<f64>() / n as f64;
                    let var = xrow.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
                    let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
                    let ys: Vec<f64> = xrow.iter().map(|v| (v - mean) * inv).collect();
                    let gh: Vec<f64> = grow.iter().zip(gd).map(|(g, w)| g * w).collect();
                    let mean_gh = gh.iter().sum::<f64>() / n as f64;
                    let mean_ghy = gh.iter().zip(&ys).map(|(a, y)| a * y).sum::<f64>() / n as f64;
                    for j in 0..n {
                        dxrow[j] = inv * (gh[j] - mean_gh - ys[j] * mean_ghy);
                        dgain[j] += grow[j] * ys[j];
                        dbias[j] += grow[j];
                    }
                }
                add_to(local, *x, dx);
                add_to(local, *gain, Tensor::vector(&dgain));
                add_to(local, *bias, Tensor::vector(&dbias));
            }
            Op::Sum { x, axis } => {
                add_to(local, *x, spread(self.value(*x).shape(), g, *axis, 1.0));
            }
            Op::Mean { x, axis } => {
                let denom = match axis {
                    None => self.value(*x).len() as f64,
                    Some(ax) => self.value(*x).shape()[*ax] as f64,
                };
                add_to(
                    local,
                    *x,
                    spread(self.value(*x).shape(), g, *axis, 1.0 / denom),
                );
            }
            Op::Concat { inputs, axis } => {
                let axis = *axis;
                let out_axis: usize = self.nodes[i].value.shape()[axis];
                let outer = self.nodes[i].value.outer_size(axis);
                let inner = self.nodes[i].value.inner_size(axis);
                let mut offset = 0;
                for &id in inputs {
                    let s = self.value(id).shape().to_vec();
                    let rows = s[axis];
                    let mut di = vec![0.0; outer * rows * inner];
                    for o in 0..outer {
                        let src = &g.data()
                            [o * out_axis * inner + offset..o * out_axis * inner + offset + rows * inner];
                        di[o * rows * inner..(o + 1) * rows * inner].copy_from_slice(src);
                    }
                    add_to(local, id, Tensor::new(s, di).unwrap());
                    offset += rows * inner;
                }
            }
            Op::Slice { x, axis, start, len } => {
                let s = self.value(*x).shape().to_vec();
                let outer = self.value(*x).outer_size(*axis);
                let inner = self.value(*x).inner_size(*axis);
                let mut dx = vec![0.0; self.value(*x).len()];
                for o in 0..outer {
                    let dst = &mut dx
                        [(o * s[*axis] + start) * inner..(o * s[*axis] + start + len) * inner];
                    dst.copy_from_slice(&g.data()[o * len * inner..(o + 1) * len * inner]);
                }
                add_to(local, *x, Tensor::new(s, dx).unwrap());
            }
            Op::Reshape(x) => {
                let s = self.value(*x).shape().to_vec();
                add_to(local, *x, g.reshaped(s).unwrap());
            }
            Op::RepeatAxis { x, axis, times } => {
                let s = self.value(*x).shape().to_vec();
                let outer = self.value(*x).outer_size(*axis);
                let inner = self.value(*x).inner_size(*axis);
                let mut dx = vec![0.0; self.value(*x).len()];
                for o in 0..outer {
                    for r in 0..*times {
                        let src = &g.data()[(o * times + r) * inner..(o * times + r + 1) * inner];
                        for (d, sv) in dx[o * inner..(o + 1) * inner].iter_mut().zip(src) {
                            *d += *sv;
                        }
                    }
                }
                add_to(local, *x, Tensor::new(s, dx).unwrap());
            }
            Op::EmbedLookup { table, indices } => {
                let s = self.value(*table).shape().to_vec();
                let d = s[1];
                let mut dt = vec![0.0; self.value(*table).len()];
                for (row, &idx) in indices.iter().enumerate() {
                    for j in 0..d {
                        dt[idx * d + j] += g.data()[row * d + j];
                    }
                }
                add_to(local, *table, Tensor::new(s, dt).unwrap());
            }
            Op::MaxElem(a, b) => {
                let av = self.value(*a).data();
                let bv = self.value(*b).data();
                let mut da = Tensor::zeros(self.value(*a).shape());
                let mut db = Tensor::zeros(self.value(*b).shape());
                for idx in 0..g.len() {
                    if av[idx] >= bv[idx] {
                        da.data_mut()[idx] = g.data()[idx];
                    } else {
                        db.data_mut()[idx] = g.data()[idx];
                    }
                }
                add_to(local, *a, da);
                add_to(local, *b, db);
            }
        }
    }
}

fn shape_err(op: &'static str, lhs: &[usize], rhs: &[usize]) -> AutodiffError {
    AutodiffError::ShapeMismatch {
        op,
        lhs: lhs.to_vec(),
        rhs: rhs.to_vec(),
    }
}

fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn matmul2d(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for p in 0..k {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for (o, bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    out
}

fn transpose2d(a: &[f64], m: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            out[j * m + i] = a[i * n + j];
        }
    }
    out
}

fn swap_last_axes(t: &Tensor) -> Tensor {
    let s = t.shape();
    let r = s.len();
    let (m, n) = (s[r - 2], s[r - 1]);
    let batch: usize = s[..r - 2].iter().product();
    let mut shape = s.to_vec();
    shape.swap(r - 2, r - 1);
    let mut out = vec![0.0; t.len()];
    for b in 0..batch {
        let src = &t.data()[b * m * n..(b + 1) * m * n];
        out[b * m * n..(b + 1) * m * n].copy_from_slice(&transpose2d(src, m, n));
    }
    Tensor::new(shape, out).unwrap()
}

/// rhs-of-add broadcast rule: equal shapes, scalar, or suffix of lhs shape.
fn broadcast_ok(a: &[usize], b: &[usize]) -> bool {
    if a == b {
        return true;
    }
    let blen: usize = b.iter().product();
    if blen == 1 {
        return true;
    }
    b.len() <= a.len() && a[a.len() - b.len()..] == *b
}

/// Reduce a gradient of the full shape down to a broadcast suffix shape.
fn reduce_to_suffix(g: &Tensor, target: &[usize]) -> Tensor {
    if g.shape() == target {
        return g.clone();
    }
    let tlen: usize = target.iter().product::<usize>().max(1);
    let mut out = vec![0.0; tlen];
    for (i, v) in g.data().iter().enumerate() {
        out[i % tlen] += *v;
    }
    Tensor::new(target.to_vec(), out).unwrap()
}

fn reduce(t: &Tensor, axis: Option<usize>, mean: bool) -> crate::Result<Tensor> {
    match axis {
        None => {
            let mut s: f64 = t.data().iter().sum();
            if mean {
                s /= t.len() as f64;
            }
            Ok(Tensor::scalar(s))
        }
        Some(ax) => {
            let shape = t.shape().to_vec();
            if ax >= shape.len() {
                return Err(AutodiffError::AxisOutOfRange { axis: ax, shape });
            }
            let outer = t.outer_size(ax);
            let inner = t.inner_size(ax);
            let n = shape[ax];
            let mut out_shape = shape.clone();
            out_shape.remove(ax);
            let mut out = vec![0.0; outer * inner];
            for o in 0..outer {
                for r in 0..n {
                    for j in 0..inner {
                        out[o * inner + j] += t.data()[(o * n + r) * inner + j];
                    }
                }
            }
            if mean {
                for v in &mut out {
                    *v /= n as f64;
                }
            }
            Tensor::new(out_shape, out)
        }
    }
}

/// Inverse of `reduce`: broadcast a reduced gradient back over the axis.
fn spread(shape: &[usize], g: &Tensor, axis: Option<usize>, scale: f64) -> Tensor {
    let mut out = Tensor::zeros(shape);
    match axis {
        None => {
            let gv = g.item() * scale;
            for v in out.data_mut() {
                *v = gv;
            }
        }
        Some(ax) => {
            let outer: usize = shape[..ax].iter().product();
            let n = shape[ax];
            let inner: usize = shape[ax + 1..].iter().product();
            for o in 0..outer {
                for r in 0..n {
                    for j in 0..inner {
                        out.data_mut()[(o * n + r) * inner + j] =
                            g.data()[o * inner + j] * scale;
                    }
                }
            }
        }
    }
    out
}
