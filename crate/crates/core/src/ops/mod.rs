//! Differentiable primitive operations.
//!
//! Feature maps are `[channels, signal]`, optionally with a leading batch
//! axis: every op accepts rank 2 or rank 3 and returns the same rank.
//! Each op computes its output eagerly and, when the tape is live and an
//! input is tracked, records a VJP thunk. Thunks follow a strict two-phase
//! discipline — read everything into locals, drop the borrows, then
//! accumulate — so an op applied to the same tensor twice (e.g. `mul(x,
//! x)`) cannot double-borrow.

pub mod activation;
pub mod conv;
pub mod dropout;
pub mod elementwise;
pub mod embed;
pub mod linear;
pub mod loss;
pub mod norm;
pub mod pool;
pub mod shape;

pub use activation::{leaky_relu, relu};
pub use conv::{conv_embed, conv_seq};
pub use dropout::dropout;
pub use elementwise::{add, mul, sum_all, sum_weighted};
pub use embed::embed_lookup;
pub use linear::affine;
pub use loss::{softmax_cross_entropy, softmax_rows};
pub use norm::batchnorm;
pub use pool::{avg_pool_k2, global_avg_pool, global_max_pool};
pub use shape::{concat_channels, reshape};

use crate::error::{Error, Result};
use crate::float::Real;
use crate::tensor::Tensor;
use alloc::vec::Vec;

/// View a rank-2 `[c, s]` or rank-3 `[b, c, s]` shape as batched.
/// Returns `(b, c, s, had_batch_axis)`.
pub(crate) fn as_batched<T: Real>(x: &Tensor<T>, what: &str) -> Result<(usize, usize, usize, bool)> {
    let shape = x.shape();
    match shape.as_slice() {
        [c, s] => Ok((1, *c, *s, false)),
        [b, c, s] => Ok((*b, *c, *s, true)),
        _ => Err(Error::Shape(alloc::format!(
            "{what}: want [c, s] or [batch, c, s], got {shape:?}"
        ))),
    }
}

/// Rebuild an output shape with the same rank convention as the input.
pub(crate) fn batched_shape(batched: bool, b: usize, c: usize, s: usize) -> Vec<usize> {
    if batched {
        alloc::vec![b, c, s]
    } else {
        alloc::vec![c, s]
    }
}
