//! Dense `f64` tensors with reverse-mode automatic differentiation on an
//! operation tape, plus the Adam optimizer and binary checkpoint IO.
//!
//! A [`Tape`] records forward operations in insertion order, which is
//! already a topological order, so [`Tape::backward`] is a single reverse
//! sweep. Every forward and backward value is scanned for non-finite
//! entries, turning numeric blowups into errors at the operation that
//! produced them. The [`gradcheck`] module provides the finite-difference
//! oracle used to verify every operation's gradients.

mod adam;
mod checkpoint;
mod error;
mod gemm;
mod tape;
mod tensor;

pub mod gradcheck;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{
    load_checkpoint, read_checkpoint_file, save_checkpoint, write_checkpoint_file, CheckpointError,
    CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use error::TensorError;
pub use tape::{Gradients, Tape, TensorRef};
pub use tensor::Tensor;
