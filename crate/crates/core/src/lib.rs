//! Densely connected 1-D text convolution networks, from scratch.
//!
//! Everything numerical lives here: tensors, the gradient tape, the op
//! set, the model family, the optimizer/schedule pair, the training
//! loop, and the post-hoc analyses. The crate is `no_std + alloc` so it
//! can be embedded; file IO, dataset parsing and the CLI live in the
//! companion `dwenet` crate.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod analysis;
pub mod data;
pub mod error;
pub mod float;
pub mod gradcheck;
pub mod model;
pub mod ops;
pub mod optim;
pub mod rng;
pub mod tape;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use float::Real;
pub use model::{Connectivity, Model, ModelConfig};
pub use tape::GradTape;
pub use tensor::Tensor;

/// Whether a forward pass is a training step or an evaluation pass.
/// Controls batch norm statistics and dropout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

impl Mode {
    pub fn is_train(self) -> bool {
        matches!(self, Mode::Train)
    }
}
