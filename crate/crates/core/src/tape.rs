//! Gradient tape for reverse-mode differentiation.
//!
//! Every differentiable op that sees at least one tracked input pushes a
//! VJP thunk onto the tape during the forward pass. `backward` seeds the
//! scalar loss with grad 1 and runs the thunks in reverse order; each
//! thunk reads its output's accumulated grad and adds contributions into
//! its inputs' grad buffers.
//!
//! The tape is single-use: a second `backward` is an error (closures are
//! `FnOnce` and have already been consumed). Training creates one tape
//! per step; evaluation uses `GradTape::disabled()`, which records
//! nothing.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::cell::{Cell, RefCell};
use core::marker::PhantomData;

use crate::error::{Error, Result};
use crate::float::Real;
use crate::tensor::Tensor;

type Thunk = Box<dyn FnOnce()>;

pub struct GradTape<T: Real> {
    nodes: RefCell<Vec<Thunk>>,
    enabled: bool,
    consumed: Cell<bool>,
    _marker: PhantomData<T>,
}

impl<T: Real> GradTape<T> {
    /// Tape that records; use for training steps and grad checks.
    pub fn new() -> Self {
        GradTape {
            nodes: RefCell::new(Vec::new()),
            enabled: true,
            consumed: Cell::new(false),
            _marker: PhantomData,
        }
    }

    /// Tape that ignores `record` calls; use for evaluation/inference.
    pub fn disabled() -> Self {
        GradTape {
            nodes: RefCell::new(Vec::new()),
            enabled: false,
            consumed: Cell::new(false),
            _marker: PhantomData,
        }
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    /// True when a node must be recorded: tape is live and some input is
    /// a tracked leaf or the output of an earlier recorded op.
    pub fn tracks(&self, inputs: &[&Tensor<T>]) -> bool {
        self.enabled && inputs.iter().any(|t| t.is_tracked())
    }

    /// Number of recorded nodes. Mostly for tests.
    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Push a VJP thunk. The thunk must read the output grad (bailing
    /// out if it is `None`: the op did not feed the loss) and accumulate
    /// into input grads. No-op on a disabled tape.
    pub fn record(&self, vjp: impl FnOnce() + 'static) {
        if self.enabled {
            self.nodes.borrow_mut().push(Box::new(vjp));
        }
    }

    /// Seed `loss` with grad 1 and run all recorded thunks newest-first.
    pub fn backward(&self, loss: &Tensor<T>) -> Result<()> {
        if !self.enabled {
            return Err(Error::Autodiff(alloc::format!(
                "backward on a disabled tape; build the graph with GradTape::new()"
            )));
        }
        if self.consumed.get() {
            return Err(Error::Autodiff(alloc::format!(
                "tape already consumed by a previous backward; \
                 build a fresh tape per step"
            )));
        }
        if loss.len() != 1 {
            return Err(Error::Autodiff(alloc::format!(
                "backward needs a scalar loss, got shape {:?}",
                loss.shape()
            )));
        }
        self.consumed.set(true);
        loss.set_grad_ones();
        let nodes = core::mem::take(&mut *self.nodes.borrow_mut());
        for vjp in nodes.into_iter().rev() {
            vjp();
        }
        Ok(())
    }
}

impl<T: Real> Default for GradTape<T> {
    fn default() -> Self {
        GradTape::new()
    }
}
