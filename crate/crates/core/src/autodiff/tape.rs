use std::borrow::Cow;

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Handle to a node of a [`Program`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafKind {
    /// Trainable weights.
    Param,
    /// Data fed to the program, e.g. the point cloud.
    Input,
    /// Integer class label consumed by the cross-entropy primitive.
    Label,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf {
        kind: LeafKind,
        name: String,
    },
    Affine {
        input: NodeId,
        weight: NodeId,
        bias: NodeId,
    },
    Relu(NodeId),
    MaxPool(NodeId),
    SoftmaxCrossEntropy {
        logits: NodeId,
        label: NodeId,
    },
    Gather {
        input: NodeId,
        rows: Vec<usize>,
    },
}

/// A straight-line program over the supported primitives.
///
/// Nodes can only reference nodes created before them, so insertion order is
/// a topological order.
#[derive(Debug, Clone, Default)]
pub struct Program {
    ops: Vec<Op>,
}

impl Program {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, op: Op) -> NodeId {
        self.ops.push(op);
        let id = self.ops.len() - 1;
        // Operands must already exist, which keeps node order topological.
        assert!(
            self.operands(id).iter().all(|o| o.0 < id),
            "operand refers to a node outside this program"
        );
        NodeId(id)
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn param(&mut self, name: impl Into<String>) -> NodeId {
        self.push(Op::Leaf {
            kind: LeafKind::Param,
            name: name.into(),
        })
    }

    pub fn input(&mut self, name: impl Into<String>) -> NodeId {
        self.push(Op::Leaf {
            kind: LeafKind::Input,
            name: name.into(),
        })
    }

    pub fn label(&mut self, name: impl Into<String>) -> NodeId {
        self.push(Op::Leaf {
            kind: LeafKind::Label,
            name: name.into(),
        })
    }

    /// `input · weight + bias`, with `input: [rows, in]`, `weight: [in, out]`,
    /// `bias: [out]`.
    pub fn affine(&mut self, input: NodeId, weight: NodeId, bias: NodeId) -> NodeId {
        self.push(Op::Affine {
            input,
            weight,
            bias,
        })
    }

    pub fn relu(&mut self, input: NodeId) -> NodeId {
        self.push(Op::Relu(input))
    }

    /// Feature-wise maximum over rows: `[rows, features] -> [1, features]`.
    /// The winning row of every feature is recorded on the tape.
    pub fn max_pool(&mut self, input: NodeId) -> NodeId {
        self.push(Op::MaxPool(input))
    }

    /// Scalar `-ln softmax(logits)[label]`.
    pub fn softmax_cross_entropy(&mut self, logits: NodeId, label: NodeId) -> NodeId {
        self.push(Op::SoftmaxCrossEntropy { logits, label })
    }

    /// Selects `rows` of `input` in the given order. Rows may repeat.
    pub fn gather(&mut self, input: NodeId, rows: Vec<usize>) -> NodeId {
        self.push(Op::Gather { input, rows })
    }

    /// Removes `dropped` rows of an input with `total_rows` rows, keeping the
    /// survivors in their original order.
    pub fn drop_rows(&mut self, input: NodeId, total_rows: usize, dropped: &[usize]) -> NodeId {
        let mut keep = vec![true; total_rows];
        for &i in dropped {
            if i < total_rows {
                keep[i] = false;
            }
        }
        let rows = (0..total_rows).filter(|&i| keep[i]).collect();
        self.gather(input, rows)
    }

    pub fn leaf_kind(&self, node: NodeId) -> Option<LeafKind> {
        match self.ops.get(node.0) {
            Some(Op::Leaf { kind, .. }) => Some(*kind),
            _ => None,
        }
    }

    pub fn leaf_name(&self, node: NodeId) -> Option<&str> {
        match self.ops.get(node.0) {
            Some(Op::Leaf { name, .. }) => Some(name),
            _ => None,
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.ops
            .iter()
            .enumerate()
            .filter(|(_, op)| matches!(op, Op::Leaf { .. }))
            .map(|(i, _)| NodeId(i))
    }

    fn operands(&self, node: usize) -> Vec<NodeId> {
        match &self.ops[node] {
            Op::Leaf { .. } => vec![],
            Op::Affine {
                input,
                weight,
                bias,
            } => vec![*input, *weight, *bias],
            Op::Relu(x) | Op::MaxPool(x) => vec![*x],
            Op::SoftmaxCrossEntropy { logits, label } => vec![*logits, *label],
            Op::Gather { input, .. } => vec![*input],
        }
    }
}

/// Value bound to a leaf for one evaluation.
#[derive(Debug, Clone)]
pub enum Binding<'a> {
    /// Borrowed tensor; shared read-only weights are bound this way.
    Tensor(&'a Tensor),
    Owned(Tensor),
    Label(usize),
    /// Use the argmax of the logits fed to the consuming cross-entropy node.
    PredictedLabel,
}

#[derive(Debug, Clone, Default)]
pub struct Bindings<'a> {
    entries: Vec<(NodeId, Binding<'a>)>,
}

impl<'a> Bindings<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn tensor(mut self, node: NodeId, value: &'a Tensor) -> Self {
        self.entries.push((node, Binding::Tensor(value)));
        self
    }

    pub fn owned(mut self, node: NodeId, value: Tensor) -> Self {
        self.entries.push((node, Binding::Owned(value)));
        self
    }

    pub fn label(mut self, node: NodeId, label: usize) -> Self {
        self.entries.push((node, Binding::Label(label)));
        self
    }

    pub fn predicted_label(mut self, node: NodeId) -> Self {
        self.entries.push((node, Binding::PredictedLabel));
        self
    }

    pub fn insert(&mut self, node: NodeId, binding: Binding<'a>) {
        self.entries.push((node, binding));
    }
}

#[derive(Debug, Clone)]
enum Slot<'a> {
    Tensor(Cow<'a, Tensor>),
    Label(Option<usize>),
}

#[derive(Debug, Clone)]
enum Aux {
    None,
    ArgMax(Vec<usize>),
    Softmax { probs: Vec<f64>, label: usize },
}

#[derive(Debug)]
struct ForwardState<'a> {
    values: Vec<Slot<'a>>,
    aux: Vec<Aux>,
}

/// One evaluation of a [`Program`] under fixed bindings.
///
/// A tape is single use: bind, run [`Tape::forward`], then optionally
/// [`Tape::backward`].
#[derive(Debug)]
pub struct Tape<'p, 'a> {
    program: &'p Program,
    bindings: Vec<Option<Binding<'a>>>,
    state: Option<ForwardState<'a>>,
}

/// Evaluates `program` under `bindings` and returns the filled tape.
pub fn evaluate<'p, 'a>(program: &'p Program, bindings: Bindings<'a>) -> Result<Tape<'p, 'a>> {
    let mut tape = Tape::new(program, bindings)?;
    tape.forward()?;
    Ok(tape)
}

impl<'p, 'a> Tape<'p, 'a> {
    pub fn new(program: &'p Program, bindings: Bindings<'a>) -> Result<Self> {
        let mut slots: Vec<Option<Binding<'a>>> = vec![None; program.ops.len()];
        for (node, binding) in bindings.entries {
            let kind = program
                .leaf_kind(node)
                .ok_or_else(|| Error::structural(format!("node {} is not a leaf", node.0)))?;
            let compatible = matches!(
                (kind, &binding),
                (LeafKind::Label, Binding::Label(_) | Binding::PredictedLabel)
                    | (
                        LeafKind::Param | LeafKind::Input,
                        Binding::Tensor(_) | Binding::Owned(_)
                    )
            );
            if !compatible {
                return Err(Error::structural(format!(
                    "leaf '{}' ({kind:?}) cannot take this binding",
                    program.leaf_name(node).unwrap_or_default()
                )));
            }
            slots[node.0] = Some(binding);
        }
        for leaf in program.leaves() {
            if slots[leaf.0].is_none() {
                return Err(Error::structural(format!(
                    "leaf '{}' is unbound",
                    program.leaf_name(leaf).unwrap_or_default()
                )));
            }
        }
        Ok(Tape {
            program,
            bindings: slots,
            state: None,
        })
    }

    pub fn is_evaluated(&self) -> bool {
        self.state.is_some()
    }

    /// Runs every node in program order. Repeated calls recompute identical values.
    pub fn forward(&mut self) -> Result<()> {
        let ops = &self.program.ops;
        let mut values: Vec<Slot<'a>> = Vec::with_capacity(ops.len());
        let mut aux = Vec::with_capacity(ops.len());
        for (idx, op) in ops.iter().enumerate() {
            let (slot, extra) = match op {
                Op::Leaf { name, .. } => {
                    let slot = match self.bindings[idx].as_ref() {
                        Some(Binding::Tensor(t)) => Slot::Tensor(Cow::Borrowed(*t)),
                        Some(Binding::Owned(t)) => Slot::Tensor(Cow::Owned(t.clone())),
                        Some(Binding::Label(l)) => Slot::Label(Some(*l)),
                        Some(Binding::PredictedLabel) => Slot::Label(None),
                        None => return Err(Error::structural(format!("leaf '{name}' is unbound"))),
                    };
                    if let Slot::Tensor(t) = &slot {
                        t.ensure_finite(&format!("leaf '{name}'"))?;
                    }
                    (slot, Aux::None)
                }
                Op::Affine {
                    input,
                    weight,
                    bias,
                } => {
                    let x = tensor_at(&values, *input)?;
                    let w = tensor_at(&values, *weight)?;
                    let b = tensor_at(&values, *bias)?;
                    (
                        Slot::Tensor(Cow::Owned(affine_forward(x, w, b)?)),
                        Aux::None,
                    )
                }
                Op::Relu(x) => {
                    let x = tensor_at(&values, *x)?;
                    let data = x
                        .data()
                        .iter()
                        .map(|&v| if v > 0.0 { v } else { 0.0 })
                        .collect();
                    (
                        Slot::Tensor(Cow::Owned(Tensor::with_shape_of(data, x))),
                        Aux::None,
                    )
                }
                Op::MaxPool(x) => {
                    let x = tensor_at(&values, *x)?;
                    let (out, argmax) = max_pool_forward(x)?;
                    (Slot::Tensor(Cow::Owned(out)), Aux::ArgMax(argmax))
                }
                Op::SoftmaxCrossEntropy { logits, label } => {
                    let z = tensor_at(&values, *logits)?;
                    let label = match values.get(label.0) {
                        Some(Slot::Label(l)) => *l,
                        _ => {
                            return Err(Error::structural(
                                "cross-entropy label operand is not a label leaf",
                            ))
                        }
                    };
                    let (loss, probs, label) = softmax_xent_forward(z, label)?;
                    (
                        Slot::Tensor(Cow::Owned(Tensor::scalar(loss))),
                        Aux::Softmax { probs, label },
                    )
                }
                Op::Gather { input, rows } => {
                    let x = tensor_at(&values, *input)?;
                    (
                        Slot::Tensor(Cow::Owned(gather_forward(x, rows)?)),
                        Aux::None,
                    )
                }
            };
            if let Slot::Tensor(t) = &slot {
                if !matches!(op, Op::Leaf { .. }) {
                    t.ensure_finite(&format!("node {idx}"))?;
                }
            }
            values.push(slot);
            aux.push(extra);
        }
        self.state = Some(ForwardState { values, aux });
        Ok(())
    }

    fn state(&self) -> Result<&ForwardState<'a>> {
        self.state
            .as_ref()
            .ok_or_else(|| Error::State("tape has not been evaluated".into()))
    }

    pub fn value(&self, node: NodeId) -> Result<&Tensor> {
        tensor_at(&self.state()?.values, node)
    }

    /// Winning row per feature for a max-pool node.
    pub fn argmax(&self, node: NodeId) -> Result<&[usize]> {
        match self.state()?.aux.get(node.0) {
            Some(Aux::ArgMax(a)) => Ok(a),
            _ => Err(Error::structural(format!(
                "node {} is not a max-pool node",
                node.0
            ))),
        }
    }

    /// The label actually used by a cross-entropy node.
    pub fn resolved_label(&self, node: NodeId) -> Result<usize> {
        match self.state()?.aux.get(node.0) {
            Some(Aux::Softmax { label, .. }) => Ok(*label),
            _ => Err(Error::structural(format!(
                "node {} is not a cross-entropy node",
                node.0
            ))),
        }
    }

    /// Reverse sweep from a scalar `output`. Every tensor leaf gets a gradient
    /// of its own shape (zero when it does not influence `output`).
    pub fn backward(&self, output: NodeId) -> Result<Gradients> {
        let state = self
            .state
            .as_ref()
            .ok_or_else(|| Error::State("backward called before forward".into()))?;
        let out = tensor_at(&state.values, output)?;
        if !out.is_scalar() {
            return Err(Error::structural(format!(
                "backward needs a scalar output, got shape {:?}",
                out.shape()
            )));
        }

        let ops = &self.program.ops;
        let mut adj: Vec<Option<Tensor>> = vec![None; ops.len()];
        adj[output.0] = Some(Tensor::with_shape_of(vec![1.0], out));

        for idx in (0..=output.0).rev() {
            let Some(dy) = adj[idx].take() else { continue };
            match &ops[idx] {
                Op::Leaf { .. } => {
                    adj[idx] = Some(dy);
                    continue;
                }
                Op::Affine {
                    input,
                    weight,
                    bias,
                } => {
                    let x = tensor_at(&state.values, *input)?;
                    let w = tensor_at(&state.values, *weight)?;
                    let b = tensor_at(&state.values, *bias)?;
                    let (dx, dw, db) = affine_backward(x, w, b, &dy);
                    accumulate(&mut adj, *input, dx);
                    accumulate(&mut adj, *weight, dw);
                    accumulate(&mut adj, *bias, db);
                }
                Op::Relu(x) => {
                    let y = tensor_at(&state.values, NodeId(idx))?;
                    let data = dy
                        .data()
                        .iter()
                        .zip(y.data())
                        .map(|(&g, &v)| if v > 0.0 { g } else { 0.0 })
                        .collect();
                    let xt = tensor_at(&state.values, *x)?;
                    accumulate(&mut adj, *x, Tensor::with_shape_of(data, xt));
                }
                Op::MaxPool(x) => {
                    let Aux::ArgMax(argmax) = &state.aux[idx] else {
                        unreachable!("max-pool node without argmax")
                    };
                    let xt = tensor_at(&state.values, *x)?;
                    let (_, cols) = xt.as_matrix().expect("validated in forward");
                    let mut dx = Tensor::zeros(xt.shape().to_vec());
                    for (j, &winner) in argmax.iter().enumerate() {
                        dx.data_mut()[winner * cols + j] += dy.data()[j];
                    }
                    accumulate(&mut adj, *x, dx);
                }
                Op::SoftmaxCrossEntropy { logits, .. } => {
                    let Aux::Softmax { probs, label } = &state.aux[idx] else {
                        unreachable!("cross-entropy node without probabilities")
                    };
                    let g = dy.data()[0];
                    let mut d: Vec<f64> = probs.iter().map(|p| p * g).collect();
                    d[*label] -= g;
                    let zt = tensor_at(&state.values, *logits)?;
                    accumulate(&mut adj, *logits, Tensor::with_shape_of(d, zt));
                }
                Op::Gather { input, rows } => {
                    let xt = tensor_at(&state.values, *input)?;
                    let (_, cols) = xt.as_matrix().expect("validated in forward");
                    let mut dx = Tensor::zeros(xt.shape().to_vec());
                    for (i, &r) in rows.iter().enumerate() {
                        let src = &dy.data()[i * cols..(i + 1) * cols];
                        for (d, s) in dx.data_mut()[r * cols..(r + 1) * cols].iter_mut().zip(src) {
                            *d += s;
                        }
                    }
                    accumulate(&mut adj, *input, dx);
                }
            }
        }

        let mut grads: Vec<Option<Tensor>> = vec![None; ops.len()];
        for leaf in self.program.leaves() {
            if let Slot::Tensor(t) = &state.values[leaf.0] {
                grads[leaf.0] = Some(
                    adj[leaf.0]
                        .take()
                        .unwrap_or_else(|| Tensor::zeros(t.shape().to_vec())),
                );
            }
        }
        Ok(Gradients { grads })
    }
}

/// Gradients of a scalar with respect to every tensor leaf of a program.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, leaf: NodeId) -> Option<&Tensor> {
        self.grads.get(leaf.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, leaf: NodeId) -> Option<Tensor> {
        self.grads.get_mut(leaf.0).and_then(Option::take)
    }
}

fn accumulate(adj: &mut [Option<Tensor>], node: NodeId, grad: Tensor) {
    match &mut adj[node.0] {
        Some(existing) => existing.add_assign(&grad),
        slot @ None => *slot = Some(grad),
    }
}

fn tensor_at<'s>(values: &'s [Slot<'_>], node: NodeId) -> Result<&'s Tensor> {
    match values.get(node.0) {
        Some(Slot::Tensor(t)) => Ok(t.as_ref()),
        Some(Slot::Label(_)) => Err(Error::structural(format!(
            "node {} is a label, not a tensor",
            node.0
        ))),
        None => Err(Error::structural(format!(
            "node {} is not defined before its use",
            node.0
        ))),
    }
}

fn affine_forward(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (rows, inner) = x
        .as_matrix()
        .ok_or_else(|| Error::structural("affine input must have rank 1 or 2"))?;
    let (w_in, out) = match w.shape() {
        [a, b] => (*a, *b),
        s => {
            return Err(Error::structural(format!(
                "affine weight must be a matrix, got {s:?}"
            )))
        }
    };
    if w_in != inner {
        return Err(Error::structural(format!(
            "affine: input has {inner} columns but weight expects {w_in}"
        )));
    }
    if b.len() != out {
        return Err(Error::structural(format!(
            "affine: bias has {} entries, expected {out}",
            b.len()
        )));
    }
    let xd = x.data();
    let wd = w.data();
    let mut y = Vec::with_capacity(rows * out);
    for i in 0..rows {
        let mut acc = b.data().to_vec();
        for (k, &xik) in xd[i * inner..(i + 1) * inner].iter().enumerate() {
            if xik == 0.0 {
                continue;
            }
            for (a, &wkj) in acc.iter_mut().zip(&wd[k * out..(k + 1) * out]) {
                *a += xik * wkj;
            }
        }
        y.extend_from_slice(&acc);
    }
    Tensor::matrix(rows, out, y)
}

fn affine_backward(x: &Tensor, w: &Tensor, b: &Tensor, dy: &Tensor) -> (Tensor, Tensor, Tensor) {
    let (rows, inner) = x.as_matrix().expect("validated in forward");
    let out = w.shape()[1];
    let xd = x.data();
    let wd = w.data();
    let dyd = dy.data();

    let mut dx = vec![0.0; rows * inner];
    let mut dw = vec![0.0; inner * out];
    let mut db = vec![0.0; out];
    for i in 0..rows {
        let g = &dyd[i * out..(i + 1) * out];
        for (d, &gj) in db.iter_mut().zip(g) {
            *d += gj;
        }
        let xi = &xd[i * inner..(i + 1) * inner];
        let dxi = &mut dx[i * inner..(i + 1) * inner];
        for k in 0..inner {
            let wk = &wd[k * out..(k + 1) * out];
            dxi[k] = wk.iter().zip(g).map(|(a, b)| a * b).sum();
            let xik = xi[k];
            if xik != 0.0 {
                for (d, &gj) in dw[k * out..(k + 1) * out].iter_mut().zip(g) {
                    *d += xik * gj;
                }
            }
        }
    }
    (
        Tensor::with_shape_of(dx, x),
        Tensor::with_shape_of(dw, w),
        Tensor::with_shape_of(db, b),
    )
}

fn max_pool_forward(x: &Tensor) -> Result<(Tensor, Vec<usize>)> {
    let (rows, cols) = x
        .as_matrix()
        .ok_or_else(|| Error::structural("max-pool input must have rank 1 or 2"))?;
    let d = x.data();
    let mut best = d[..cols].to_vec();
    let mut argmax = vec![0usize; cols];
    for i in 1..rows {
        for (j, &v) in d[i * cols..(i + 1) * cols].iter().enumerate() {
            // strict comparison keeps the lowest index on ties
            if v > best[j] {
                best[j] = v;
                argmax[j] = i;
            }
        }
    }
    Ok((Tensor::matrix(1, cols, best)?, argmax))
}

fn softmax_xent_forward(z: &Tensor, label: Option<usize>) -> Result<(f64, Vec<f64>, usize)> {
    let (rows, k) = z
        .as_matrix()
        .ok_or_else(|| Error::structural("logits must have rank 1 or 2"))?;
    if rows != 1 {
        return Err(Error::structural(format!(
            "cross-entropy expects a single row of logits, got {rows}"
        )));
    }
    let logits = z.data();
    let label = match label {
        Some(l) if l < k => l,
        Some(l) => {
            return Err(Error::structural(format!(
                "label {l} out of range for {k} classes"
            )))
        }
        None => argmax_first(logits),
    };
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|&v| (v - m).exp()).sum();
    let lse = m + sum.ln();
    let probs = logits.iter().map(|&v| (v - lse).exp()).collect();
    Ok((lse - logits[label], probs, label))
}

fn gather_forward(x: &Tensor, rows: &[usize]) -> Result<Tensor> {
    let (n, cols) = x
        .as_matrix()
        .ok_or_else(|| Error::structural("gather input must have rank 1 or 2"))?;
    if rows.is_empty() {
        return Err(Error::structural("gather must select at least one row"));
    }
    let mut out = Vec::with_capacity(rows.len() * cols);
    for &r in rows {
        if r >= n {
            return Err(Error::structural(format!(
                "gather row {r} out of range for {n} rows"
            )));
        }
        out.extend_from_slice(x.row(r));
    }
    Tensor::matrix(rows.len(), cols, out)
}

/// Index of the maximum, lowest index on ties.
pub(crate) fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
