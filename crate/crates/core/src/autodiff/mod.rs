//! Minimal reverse-mode differentiation over dense `f64` tensors.
//!
//! Only the primitives the point classifier needs are supported: affine
//! maps, ReLU, feature-wise max over the point axis, softmax cross-entropy
//! and row gathering. A [`Program`] describes the computation once; each
//! evaluation happens on its own [`Tape`], which borrows the bound tensors.
//! Weights can therefore be shared read-only across threads while every
//! thread drives its own tape.

mod tape;
mod tensor;

pub(crate) use tape::argmax_first;
pub use tape::{evaluate, Binding, Bindings, Gradients, LeafKind, NodeId, Program, Tape};
pub use tensor::Tensor;
