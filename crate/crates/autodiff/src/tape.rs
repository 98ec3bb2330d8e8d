use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::TensorError;
use crate::gemm::{fold_batch, gemm, unfold_batch_add};
use crate::tensor::{numel_of, Tensor};

static TAPE_COUNTER: AtomicU64 = AtomicU64::new(1);

/// Handle to a value recorded on a [`Tape`]. Valid only with the tape that
/// issued it; other tapes reject it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TensorRef {
    tape: u64,
    index: usize,
}

#[derive(Debug)]
enum Op {
    Leaf,
    Add(usize, usize),
    AddBias {
        x: usize,
        bias: usize,
    },
    Mul(usize, usize),
    Relu(usize),
    Scale {
        x: usize,
        factor: f64,
    },
    Matmul(usize, usize),
    UnfoldTime {
        x: usize,
        window: usize,
        stride: usize,
        pad: usize,
    },
    GlobalAvgPool(usize),
    SumAll(usize),
    MeanAll(usize),
    Softmax(usize),
    CrossEntropy {
        logits: usize,
        labels: Vec<usize>,
    },
    StackRows(Vec<usize>),
}

#[derive(Debug)]
struct Node {
    shape: Vec<usize>,
    data: Vec<f64>,
    requires_grad: bool,
    op: Op,
}

/// Gradients of a scalar loss with respect to the tape's gradient-requiring
/// leaves, produced by [`Tape::backward`].
#[derive(Debug)]
pub struct Gradients {
    tape: u64,
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient for a leaf, or `None` when the reference is from another
    /// tape, is not a gradient-requiring leaf, or the loss never reached it.
    pub fn get(&self, r: TensorRef) -> Option<&Tensor> {
        if r.tape != self.tape {
            return None;
        }
        self.grads.get(r.index).and_then(Option::as_ref)
    }

    pub fn take(&mut self, r: TensorRef) -> Option<Tensor> {
        if r.tape != self.tape {
            return None;
        }
        self.grads.get_mut(r.index).and_then(Option::take)
    }
}

/// Arena of recorded operations. Insertion order is a topological order of
/// the computation graph, which is what [`Tape::backward`] walks in reverse.
#[derive(Debug)]
pub struct Tape {
    id: u64,
    nodes: Vec<Node>,
    consumed: bool,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            id: TAPE_COUNTER.fetch_add(1, Ordering::Relaxed),
            nodes: Vec::new(),
            consumed: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn check(&self, r: TensorRef) -> Result<usize, TensorError> {
        if r.tape != self.id || r.index >= self.nodes.len() {
            return Err(TensorError::ForeignTape);
        }
        Ok(r.index)
    }

    fn push(
        &mut self,
        shape: Vec<usize>,
        data: Vec<f64>,
        requires_grad: bool,
        op: Op,
        op_name: &'static str,
    ) -> Result<TensorRef, TensorError> {
        if !data.iter().all(|v| v.is_finite()) {
            return Err(TensorError::NonFinite(op_name));
        }
        debug_assert_eq!(numel_of(&shape), data.len());
        self.nodes.push(Node {
            shape,
            data,
            requires_grad,
            op,
        });
        Ok(TensorRef {
            tape: self.id,
            index: self.nodes.len() - 1,
        })
    }

    fn requires(&self, index: usize) -> bool {
        self.nodes[index].requires_grad
    }

    /// Records an input value. Only leaves with `requires_grad` receive
    /// gradients from [`Tape::backward`].
    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> TensorRef {
        self.nodes.push(Node {
            shape: value.shape().to_vec(),
            data: value.data().to_vec(),
            requires_grad,
            op: Op::Leaf,
        });
        TensorRef {
            tape: self.id,
            index: self.nodes.len() - 1,
        }
    }

    pub fn shape(&self, r: TensorRef) -> Result<&[usize], TensorError> {
        let i = self.check(r)?;
        Ok(&self.nodes[i].shape)
    }

    /// The forward value at `r`, cloned out of the tape.
    pub fn value(&self, r: TensorRef) -> Result<Tensor, TensorError> {
        let i = self.check(r)?;
        Ok(Tensor::from_parts(
            self.nodes[i].shape.clone(),
            self.nodes[i].data.clone(),
        ))
    }

    /// Elementwise sum of two same-shaped tensors.
    pub fn add(&mut self, a: TensorRef, b: TensorRef) -> Result<TensorRef, TensorError> {
        let (ia, ib) = (self.check(a)?, self.check(b)?);
        if self.nodes[ia].shape != self.nodes[ib].shape {
            return Err(TensorError::ShapeMismatch {
                op: "add",
                lhs: self.nodes[ia].shape.clone(),
                rhs: self.nodes[ib].shape.clone(),
            });
        }
        let data: Vec<f64> = self.nodes[ia]
            .data
            .iter()
            .zip(&self.nodes[ib].data)
            .map(|(x, y)| x + y)
            .collect();
        let rg = self.requires(ia) || self.requires(ib);
        self.push(
            self.nodes[ia].shape.clone(),
            data,
            rg,
            Op::Add(ia, ib),
            "add",
        )
    }

    /// Adds a rank-1 bias along the last axis of `x`.
    pub fn add_bias(&mut self, x: TensorRef, bias: TensorRef) -> Result<TensorRef, TensorError> {
        let (ix, ib) = (self.check(x)?, self.check(bias)?);
        let c = match *self.nodes[ib].shape {
            [c] => c,
            _ => {
                return Err(TensorError::UnsupportedRank {
                    op: "add_bias",
                    shape: self.nodes[ib].shape.clone(),
                })
            }
        };
        if self.nodes[ix].shape.last() != Some(&c) {
            return Err(TensorError::ShapeMismatch {
                op: "add_bias",
                lhs: self.nodes[ix].shape.clone(),
                rhs: self.nodes[ib].shape.clone(),
            });
        }
        let bias_data = &self.nodes[ib].data;
        let data: Vec<f64> = self.nodes[ix]
            .data
            .chunks_exact(c)
            .flat_map(|row| row.iter().zip(bias_data).map(|(x, b)| x + b))
            .collect();
        let rg = self.requires(ix) || self.requires(ib);
        self.push(
            self.nodes[ix].shape.clone(),
            data,
            rg,
            Op::AddBias { x: ix, bias: ib },
            "add_bias",
        )
    }

    /// Elementwise product of two same-shaped tensors.
    pub fn mul(&mut self, a: TensorRef, b: TensorRef) -> Result<TensorRef, TensorError> {
        let (ia, ib) = (self.check(a)?, self.check(b)?);
        if self.nodes[ia].shape != self.nodes[ib].shape {
            return Err(TensorError::ShapeMismatch {
                op: "mul",
                lhs: self.nodes[ia].shape.clone(),
                rhs: self.nodes[ib].shape.clone(),
            });
        }
        let data: Vec<f64> = self.nodes[ia]
            .data
            .iter()
            .zip(&self.nodes[ib].data)
            .map(|(x, y)| x * y)
            .collect();
        let rg = self.requires(ia) || self.requires(ib);
        self.push(
            self.nodes[ia].shape.clone(),
            data,
            rg,
            Op::Mul(ia, ib),
            "mul",
        )
    }

    pub fn relu(&mut self, x: TensorRef) -> Result<TensorRef, TensorError> {
        let ix = self.check(x)?;
        let data: Vec<f64> = self.nodes[ix].data.iter().map(|v| v.max(0.0)).collect();
        let rg = self.requires(ix);
        self.push(self.nodes[ix].shape.clone(), data, rg, Op::Relu(ix), "relu")
    }

    pub fn scale(&mut self, x: TensorRef, factor: f64) -> Result<TensorRef, TensorError> {
        if !factor.is_finite() {
            return Err(TensorError::NonFiniteScale(factor));
        }
        let ix = self.check(x)?;
        let data: Vec<f64> = self.nodes[ix].data.iter().map(|v| v * factor).collect();
        let rg = self.requires(ix);
        self.push(
            self.nodes[ix].shape.clone(),
            data,
            rg,
            Op::Scale { x: ix, factor },
            "scale",
        )
    }

    /// Matrix product. Accepts `[m,k] x [k,n]`, and the batched forms
    /// `[b,m,k] x [k,n]` and `[m,k] x [b,k,n]` where the 2-D operand is
    /// shared across the leading batch axis.
    pub fn matmul(&mut self, a: TensorRef, b: TensorRef) -> Result<TensorRef, TensorError> {
        let (ia, ib) = (self.check(a)?, self.check(b)?);
        let (la, lb) = (self.nodes[ia].shape.clone(), self.nodes[ib].shape.clone());
        let mismatch = || TensorError::ShapeMismatch {
            op: "matmul",
            lhs: la.clone(),
            rhs: lb.clone(),
        };
        let (batch, m, k, n, out_shape) = match (la.as_slice(), lb.as_slice()) {
            ([m, k], [k2, n]) => {
                if k != k2 {
                    return Err(mismatch());
                }
                (1, *m, *k, *n, vec![*m, *n])
            }
            ([bt, m, k], [k2, n]) => {
                if k != k2 {
                    return Err(mismatch());
                }
                (*bt, *m, *k, *n, vec![*bt, *m, *n])
            }
            ([m, k], [bt, k2, n]) => {
                if k != k2 {
                    return Err(mismatch());
                }
                (*bt, *m, *k, *n, vec![*bt, *m, *n])
            }
            _ => return Err(mismatch()),
        };
        let b_batched = lb.len() == 3;
        let mut data = vec![0.0; batch * m * n];
        if b_batched {
            // A shared left matrix makes the batch one wide multiply:
            // [m, k] x [bt, k, n] regroups columns to [m, k] x [k, bt*n].
            let folded = fold_batch(&self.nodes[ib].data, batch, k, n);
            let mut wide = vec![0.0; m * batch * n];
            gemm(
                m,
                k,
                batch * n,
                1.0,
                &self.nodes[ia].data[..],
                false,
                &folded,
                false,
                0.0,
                &mut wide,
            );
            unfold_batch_add(&wide, batch, m, n, &mut data);
        } else {
            // A shared right matrix makes the batch one tall multiply:
            // [bt, m, k] x [k, n] stacks rows to [bt*m, k] x [k, n].
            gemm(
                batch * m,
                k,
                n,
                1.0,
                &self.nodes[ia].data[..],
                false,
                &self.nodes[ib].data[..],
                false,
                0.0,
                &mut data,
            );
        }
        let rg = self.requires(ia) || self.requires(ib);
        self.push(out_shape, data, rg, Op::Matmul(ia, ib), "matmul")
    }

    /// Slides a window of `window` frames with `stride` over the time axis
    /// of a `[t, v, c]` tensor, zero-padding `pad` frames at each end, and
    /// lays the taps out along the channel axis: the result is
    /// `[t_out, v, window * c]` with `t_out = (t + 2*pad - window)/stride + 1`.
    pub fn unfold_time(
        &mut self,
        x: TensorRef,
        window: usize,
        stride: usize,
        pad: usize,
    ) -> Result<TensorRef, TensorError> {
        let ix = self.check(x)?;
        let (t, v, c) = match *self.nodes[ix].shape {
            [t, v, c] => (t, v, c),
            _ => {
                return Err(TensorError::UnsupportedRank {
                    op: "unfold_time",
                    shape: self.nodes[ix].shape.clone(),
                })
            }
        };
        let padded = t + 2 * pad;
        if window == 0 || stride == 0 || window > padded {
            return Err(TensorError::BadWindow {
                op: "unfold_time",
                window,
                stride,
                pad,
                len: t,
            });
        }
        let t_out = (padded - window) / stride + 1;
        let mut data = vec![0.0; t_out * v * window * c];
        let src = &self.nodes[ix].data;
        for to in 0..t_out {
            for g in 0..window {
                let padded_idx = to * stride + g;
                if padded_idx < pad || padded_idx >= pad + t {
                    continue;
                }
                let ti = padded_idx - pad;
                for vi in 0..v {
                    let dst_base = ((to * v + vi) * window + g) * c;
                    let src_base = (ti * v + vi) * c;
                    data[dst_base..dst_base + c].copy_from_slice(&src[src_base..src_base + c]);
                }
            }
        }
        let rg = self.requires(ix);
        self.push(
            vec![t_out, v, window * c],
            data,
            rg,
            Op::UnfoldTime {
                x: ix,
                window,
                stride,
                pad,
            },
            "unfold_time",
        )
    }

    /// Mean over the time and node axes of a `[t, v, c]` tensor, giving `[c]`.
    pub fn global_avg_pool(&mut self, x: TensorRef) -> Result<TensorRef, TensorError> {
        let ix = self.check(x)?;
        let (t, v, c) = match *self.nodes[ix].shape {
            [t, v, c] => (t, v, c),
            _ => {
                return Err(TensorError::UnsupportedRank {
                    op: "global_avg_pool",
                    shape: self.nodes[ix].shape.clone(),
                })
            }
        };
        let mut data = vec![0.0; c];
        for row in self.nodes[ix].data.chunks_exact(c) {
            for (acc, x) in data.iter_mut().zip(row) {
                *acc += x;
            }
        }
        let denom = (t * v) as f64;
        for acc in &mut data {
            *acc /= denom;
        }
        let rg = self.requires(ix);
        self.push(vec![c], data, rg, Op::GlobalAvgPool(ix), "global_avg_pool")
    }

    pub fn sum_all(&mut self, x: TensorRef) -> Result<TensorRef, TensorError> {
        let ix = self.check(x)?;
        let sum: f64 = self.nodes[ix].data.iter().sum();
        let rg = self.requires(ix);
        self.push(Vec::new(), vec![sum], rg, Op::SumAll(ix), "sum_all")
    }

    pub fn mean_all(&mut self, x: TensorRef) -> Result<TensorRef, TensorError> {
        let ix = self.check(x)?;
        let n = self.nodes[ix].data.len() as f64;
        let mean = self.nodes[ix].data.iter().sum::<f64>() / n;
        let rg = self.requires(ix);
        self.push(Vec::new(), vec![mean], rg, Op::MeanAll(ix), "mean_all")
    }

    /// Softmax along the last axis, stabilized by subtracting the row max.
    pub fn softmax(&mut self, x: TensorRef) -> Result<TensorRef, TensorError> {
        let ix = self.check(x)?;
        let shape = self.nodes[ix].shape.clone();
        let c = match shape.last() {
            Some(&c) if c > 0 => c,
            _ => {
                return Err(TensorError::UnsupportedRank {
                    op: "softmax",
                    shape,
                })
            }
        };
        let mut data = Vec::with_capacity(self.nodes[ix].data.len());
        for row in self.nodes[ix].data.chunks_exact(c) {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
            let sum: f64 = exps.iter().sum();
            data.extend(exps.iter().map(|e| e / sum));
        }
        let rg = self.requires(ix);
        self.push(shape, data, rg, Op::Softmax(ix), "softmax")
    }

    /// Mean cross-entropy of `[n, c]` logits against integer labels,
    /// computed through a max-subtracted log-sum-exp so large logits do not
    /// overflow.
    pub fn cross_entropy(
        &mut self,
        logits: TensorRef,
        labels: &[usize],
    ) -> Result<TensorRef, TensorError> {
        let ix = self.check(logits)?;
        let (n, c) = match *self.nodes[ix].shape {
            [n, c] => (n, c),
            _ => {
                return Err(TensorError::UnsupportedRank {
                    op: "cross_entropy",
                    shape: self.nodes[ix].shape.clone(),
                })
            }
        };
        if labels.len() != n {
            return Err(TensorError::LabelCountMismatch {
                labels: labels.len(),
                rows: n,
            });
        }
        let mut total = 0.0;
        for (row, &label) in self.nodes[ix].data.chunks_exact(c).zip(labels) {
            if label >= c {
                return Err(TensorError::LabelOutOfRange { label, classes: c });
            }
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            total += lse - row[label];
        }
        let mean = total / n as f64;
        let rg = self.requires(ix);
        self.push(
            Vec::new(),
            vec![mean],
            rg,
            Op::CrossEntropy {
                logits: ix,
                labels: labels.to_vec(),
            },
            "cross_entropy",
        )
    }

    /// Stacks rank-1 tensors of equal length into a `[n, c]` matrix.
    pub fn stack_rows(&mut self, rows: &[TensorRef]) -> Result<TensorRef, TensorError> {
        if rows.is_empty() {
            return Err(TensorError::EmptyStack);
        }
        let mut indices = Vec::with_capacity(rows.len());
        for &r in rows {
            indices.push(self.check(r)?);
        }
        let c = match *self.nodes[indices[0]].shape {
            [c] => c,
            _ => {
                return Err(TensorError::UnsupportedRank {
                    op: "stack_rows",
                    shape: self.nodes[indices[0]].shape.clone(),
                })
            }
        };
        let mut data = Vec::with_capacity(rows.len() * c);
        let mut rg = false;
        for &i in &indices {
            if self.nodes[i].shape.as_slice() != [c] {
                return Err(TensorError::ShapeMismatch {
                    op: "stack_rows",
                    lhs: vec![c],
                    rhs: self.nodes[i].shape.clone(),
                });
            }
            data.extend_from_slice(&self.nodes[i].data);
            rg = rg || self.requires(i);
        }
        self.push(
            vec![rows.len(), c],
            data,
            rg,
            Op::StackRows(indices),
            "stack_rows",
        )
    }

    /// Reverse-mode sweep from a scalar loss. Walks nodes in reverse
    /// insertion order, accumulating vector-Jacobian products; intermediate
    /// gradients are freed as soon as they have been propagated. The tape is
    /// consumed: a second call errors.
    pub fn backward(&mut self, loss: TensorRef) -> Result<Gradients, TensorError> {
        let loss_idx = self.check(loss)?;
        if self.consumed {
            return Err(TensorError::TapeConsumed);
        }
        if self.nodes[loss_idx].data.len() != 1 {
            return Err(TensorError::NonScalarLoss(
                self.nodes[loss_idx].shape.clone(),
            ));
        }
        if !self.nodes[loss_idx].requires_grad {
            return Err(TensorError::DetachedGraph);
        }
        self.consumed = true;

        let mut grads: Vec<Option<Vec<f64>>> = Vec::new();
        grads.resize_with(loss_idx + 1, || None);
        grads[loss_idx] = Some(vec![1.0]);

        for i in (0..=loss_idx).rev() {
            let Some(grad) = grads[i].take() else {
                continue;
            };
            if !grad.iter().all(|g| g.is_finite()) {
                return Err(TensorError::NonFinite("backward"));
            }
            self.propagate(i, &grad, &mut grads);
            if matches!(self.nodes[i].op, Op::Leaf) && self.nodes[i].requires_grad {
                grads[i] = Some(grad);
            }
        }

        let mut out: Vec<Option<Tensor>> = Vec::new();
        out.resize_with(self.nodes.len(), || None);
        for (i, slot) in grads.into_iter().enumerate() {
            if let Some(g) = slot {
                out[i] = Some(Tensor::from_parts(self.nodes[i].shape.clone(), g));
            }
        }
        Ok(Gradients {
            tape: self.id,
            grads: out,
        })
    }

    fn propagate(&self, i: usize, grad: &[f64], grads: &mut [Option<Vec<f64>>]) {
        fn acc(grads: &mut [Option<Vec<f64>>], index: usize, len: usize) -> &mut Vec<f64> {
            grads[index].get_or_insert_with(|| vec![0.0; len])
        }

        match &self.nodes[i].op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                for input in [*a, *b] {
                    if self.requires(input) {
                        let slot = acc(grads, input, grad.len());
                        for (s, g) in slot.iter_mut().zip(grad) {
                            *s += g;
                        }
                    }
                }
            }
            Op::AddBias { x, bias } => {
                if self.requires(*x) {
                    let slot = acc(grads, *x, grad.len());
                    for (s, g) in slot.iter_mut().zip(grad) {
                        *s += g;
                    }
                }
                if self.requires(*bias) {
                    let c = self.nodes[*bias].data.len();
                    let slot = acc(grads, *bias, c);
                    for row in grad.chunks_exact(c) {
                        for (s, g) in slot.iter_mut().zip(row) {
                            *s += g;
                        }
                    }
                }
            }
            Op::Mul(a, b) => {
                if self.requires(*a) {
                    let other = &self.nodes[*b].data;
                    let slot = acc(grads, *a, grad.len());
                    for ((s, g), o) in slot.iter_mut().zip(grad).zip(other) {
                        *s += g * o;
                    }
                }
                if self.requires(*b) {
                    let other = &self.nodes[*a].data;
                    let slot = acc(grads, *b, grad.len());
                    for ((s, g), o) in slot.iter_mut().zip(grad).zip(other) {
                        *s += g * o;
                    }
                }
            }
            Op::Relu(x) => {
                if self.requires(*x) {
                    let input = &self.nodes[*x].data;
                    let slot = acc(grads, *x, grad.len());
                    for ((s, g), v) in slot.iter_mut().zip(grad).zip(input) {
                        if *v > 0.0 {
                            *s += g;
                        }
                    }
                }
            }
            Op::Scale { x, factor } => {
                if self.requires(*x) {
                    let slot = acc(grads, *x, grad.len());
                    for (s, g) in slot.iter_mut().zip(grad) {
                        *s += g * factor;
                    }
                }
            }
            Op::Matmul(a, b) => self.propagate_matmul(*a, *b, grad, grads),
            Op::UnfoldTime {
                x,
                window,
                stride,
                pad,
            } => {
                if self.requires(*x) {
                    let [t, v, c] = *self.nodes[*x].shape else {
                        unreachable!("unfold_time input was validated rank 3");
                    };
                    let t_out = (t + 2 * pad - window) / stride + 1;
                    let slot = acc(grads, *x, t * v * c);
                    for to in 0..t_out {
                        for g in 0..*window {
                            let padded_idx = to * stride + g;
                            if padded_idx < *pad || padded_idx >= pad + t {
                                continue;
                            }
                            let ti = padded_idx - pad;
                            for vi in 0..v {
                                let src_base = ((to * v + vi) * window + g) * c;
                                let dst_base = (ti * v + vi) * c;
                                for ch in 0..c {
                                    slot[dst_base + ch] += grad[src_base + ch];
                                }
                            }
                        }
                    }
                }
            }
            Op::GlobalAvgPool(x) => {
                if self.requires(*x) {
                    let [t, v, c] = *self.nodes[*x].shape else {
                        unreachable!("global_avg_pool input was validated rank 3");
                    };
                    let scale = 1.0 / (t * v) as f64;
                    let slot = acc(grads, *x, t * v * c);
                    for row in slot.chunks_exact_mut(c) {
                        for (s, g) in row.iter_mut().zip(grad) {
                            *s += g * scale;
                        }
                    }
                }
            }
            Op::SumAll(x) => {
                if self.requires(*x) {
                    let n = self.nodes[*x].data.len();
                    let slot = acc(grads, *x, n);
                    for s in slot.iter_mut() {
                        *s += grad[0];
                    }
                }
            }
            Op::MeanAll(x) => {
                if self.requires(*x) {
                    let n = self.nodes[*x].data.len();
                    let g = grad[0] / n as f64;
                    let slot = acc(grads, *x, n);
                    for s in slot.iter_mut() {
                        *s += g;
                    }
                }
            }
            Op::Softmax(x) => {
                if self.requires(*x) {
                    let c = *self.nodes[i].shape.last().expect("softmax rank >= 1");
                    let y = &self.nodes[i].data;
                    let slot = acc(grads, *x, y.len());
                    for ((srow, grow), yrow) in slot
                        .chunks_exact_mut(c)
                        .zip(grad.chunks_exact(c))
                        .zip(y.chunks_exact(c))
                    {
                        let dot: f64 = grow.iter().zip(yrow).map(|(g, y)| g * y).sum();
                        for ((s, g), y) in srow.iter_mut().zip(grow).zip(yrow) {
                            *s += y * (g - dot);
                        }
                    }
                }
            }
            Op::CrossEntropy { logits, labels } => {
                if self.requires(*logits) {
                    let [n, c] = *self.nodes[*logits].shape else {
                        unreachable!("cross_entropy input was validated rank 2");
                    };
                    let g0 = grad[0] / n as f64;
                    let slot = acc(grads, *logits, n * c);
                    let rows = self.nodes[*logits].data.chunks_exact(c);
                    for ((srow, row), &label) in slot.chunks_exact_mut(c).zip(rows).zip(labels) {
                        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                        let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
                        let sum: f64 = exps.iter().sum();
                        for (j, (s, e)) in srow.iter_mut().zip(&exps).enumerate() {
                            let p = e / sum;
                            let target = if j == label { 1.0 } else { 0.0 };
                            *s += (p - target) * g0;
                        }
                    }
                }
            }
            Op::StackRows(rows) => {
                let c = self.nodes[rows[0]].data.len();
                for (r, &input) in rows.iter().enumerate() {
                    if self.requires(input) {
                        let slot = acc(grads, input, c);
                        for (s, g) in slot.iter_mut().zip(&grad[r * c..(r + 1) * c]) {
                            *s += g;
                        }
                    }
                }
            }
        }
    }

    fn propagate_matmul(&self, a: usize, b: usize, grad: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let la = &self.nodes[a].shape;
        let lb = &self.nodes[b].shape;
        let (batch, m, k, n) = match (la.as_slice(), lb.as_slice()) {
            ([m, k], [_, n]) => (1, *m, *k, *n),
            ([bt, m, k], [_, n]) => (*bt, *m, *k, *n),
            ([m, k], [bt, _, n]) => (*bt, *m, *k, *n),
            _ => unreachable!("matmul inputs were validated"),
        };
        let b_batched = lb.len() == 3;
        let a_data = &self.nodes[a].data;
        let b_data = &self.nodes[b].data;
        if b_batched {
            // Regroup the batch into wide matrices, mirroring the forward pass.
            let wide_grad = fold_batch(grad, batch, m, n);
            if self.requires(a) {
                let slot: &mut Vec<f64> = grads[a].get_or_insert_with(|| vec![0.0; a_data.len()]);
                let folded_b = fold_batch(b_data, batch, k, n);
                // dA = dZ * B^T, summed over the batch by the shared columns.
                gemm(
                    m,
                    batch * n,
                    k,
                    1.0,
                    &wide_grad,
                    false,
                    &folded_b,
                    true,
                    1.0,
                    &mut slot[..],
                );
            }
            if self.requires(b) {
                let slot: &mut Vec<f64> = grads[b].get_or_insert_with(|| vec![0.0; b_data.len()]);
                // dB = A^T * dZ, scattered back to batch order.
                let mut wide = vec![0.0; k * batch * n];
                gemm(
                    k,
                    m,
                    batch * n,
                    1.0,
                    a_data,
                    true,
                    &wide_grad,
                    false,
                    0.0,
                    &mut wide,
                );
                unfold_batch_add(&wide, batch, k, n, slot);
            }
            return;
        }
        if self.requires(a) {
            let slot: &mut Vec<f64> = grads[a].get_or_insert_with(|| vec![0.0; a_data.len()]);
            // dA = dZ * B^T over the stacked batch rows.
            gemm(
                batch * m,
                n,
                k,
                1.0,
                grad,
                false,
                b_data,
                true,
                1.0,
                &mut slot[..],
            );
        }
        if self.requires(b) {
            let slot: &mut Vec<f64> = grads[b].get_or_insert_with(|| vec![0.0; b_data.len()]);
            // dB = A^T * dZ with the batch rows stacked.
            gemm(k, batch * m, n, 1.0, a_data, true, grad, false, 1.0, slot);
        }
    }
}
