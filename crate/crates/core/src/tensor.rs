//! Dense row-major tensors with an optional gradient buffer.
//!
//! A `Tensor` is a cheaply clonable handle (`Rc<RefCell<..>>`) to shape +
//! data + optional grad. Values are immutable after construction except
//! for the grad buffer and explicit in-place parameter updates performed
//! by the optimizer. Handles are not `Send`; anything crossing threads
//! (datasets, metrics, raw weight vectors) is plain data.

use alloc::rc::Rc;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::{Ref, RefCell};
use core::fmt;

use crate::error::{Error, Result};
use crate::float::Real;

struct TensorInner<T> {
    shape: Vec<usize>,
    data: Vec<T>,
    grad: Option<Vec<T>>,
    requires_grad: bool,
    // True for leaves with requires_grad and for outputs of recorded ops;
    // tells ops whether a node must be recorded for this input.
    tracked: bool,
}

/// Shared handle to a dense tensor.
pub struct Tensor<T: Real>(Rc<RefCell<TensorInner<T>>>);

impl<T: Real> Clone for Tensor<T> {
    fn clone(&self) -> Self {
        Tensor(Rc::clone(&self.0))
    }
}

impl<T: Real> fmt::Debug for Tensor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inner = self.0.borrow();
        f.debug_struct("Tensor")
            .field("shape", &inner.shape)
            .field("requires_grad", &inner.requires_grad)
            .finish()
    }
}

fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl<T: Real> Tensor<T> {
    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Result<Self> {
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::Shape(alloc::format!(
                "zero extent in shape {shape:?}"
            )));
        }
        if numel(shape) != data.len() {
            return Err(Error::Shape(alloc::format!(
                "shape {:?} wants {} values, got {}",
                shape,
                numel(shape),
                data.len()
            )));
        }
        Ok(Tensor(Rc::new(RefCell::new(TensorInner {
            shape: shape.to_vec(),
            data,
            grad: None,
            requires_grad: false,
            tracked: false,
        }))))
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Tensor::from_vec(shape, vec![T::zero(); numel(shape)]).expect("zeros shape")
    }

    pub fn full(shape: &[usize], value: T) -> Self {
        Tensor::from_vec(shape, vec![value; numel(shape)]).expect("full shape")
    }

    pub fn scalar(value: T) -> Self {
        Tensor::from_vec(&[1], vec![value]).expect("scalar")
    }

    /// Mark as a differentiable leaf (a parameter or a grad-check input).
    pub fn requires_grad(self) -> Self {
        {
            let mut inner = self.0.borrow_mut();
            inner.requires_grad = true;
            inner.tracked = true;
        }
        self
    }

    pub fn is_leaf_param(&self) -> bool {
        self.0.borrow().requires_grad
    }

    pub(crate) fn is_tracked(&self) -> bool {
        self.0.borrow().tracked
    }

    pub(crate) fn mark_tracked(&self) {
        self.0.borrow_mut().tracked = true;
    }

    pub fn shape(&self) -> Vec<usize> {
        self.0.borrow().shape.clone()
    }

    pub fn rank(&self) -> usize {
        self.0.borrow().shape.len()
    }

    pub fn len(&self) -> usize {
        self.0.borrow().data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Borrow the value buffer.
    pub fn data(&self) -> Ref<'_, [T]> {
        Ref::map(self.0.borrow(), |inner| inner.data.as_slice())
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.0.borrow().data.clone()
    }

    pub fn item(&self) -> T {
        let inner = self.0.borrow();
        debug_assert_eq!(inner.data.len(), 1, "item() on non-scalar");
        inner.data[0]
    }

    /// Clone of the gradient buffer, if one has been accumulated.
    pub fn grad(&self) -> Option<Vec<T>> {
        self.0.borrow().grad.clone()
    }

    /// Overwrite the value buffer in place (optimizer updates, BN running
    /// stats). Length must match.
    pub fn set_data(&self, new: &[T]) {
        let mut inner = self.0.borrow_mut();
        assert_eq!(inner.data.len(), new.len(), "set_data length mismatch");
        inner.data.copy_from_slice(new);
    }

    /// Apply an in-place update to the value buffer.
    pub fn update_data(&self, f: impl FnOnce(&mut [T])) {
        f(&mut self.0.borrow_mut().data)
    }

    /// Add `delta` into the grad buffer, allocating zeros on first use.
    pub(crate) fn accumulate_grad(&self, delta: &[T]) {
        let mut inner = self.0.borrow_mut();
        let n = inner.data.len();
        assert_eq!(n, delta.len(), "grad length mismatch");
        let grad = inner.grad.get_or_insert_with(|| vec![T::zero(); n]);
        for (g, d) in grad.iter_mut().zip(delta) {
            *g += *d;
        }
    }

    pub(crate) fn set_grad_ones(&self) {
        let mut inner = self.0.borrow_mut();
        let n = inner.data.len();
        inner.grad = Some(vec![T::one(); n]);
    }

    pub fn zero_grad(&self) {
        self.0.borrow_mut().grad = None;
    }

    /// Identity comparison: same underlying buffer.
    pub fn ptr_eq(&self, other: &Tensor<T>) -> bool {
        Rc::ptr_eq(&self.0, &other.0)
    }

    /// Pure copy with no grad history, intact values.
    pub fn detached_copy(&self) -> Tensor<T> {
        let inner = self.0.borrow();
        Tensor::from_vec(&inner.shape, inner.data.clone()).expect("copy shape")
    }

    pub(crate) fn expect_rank(&self, rank: usize, what: &str) -> Result<Vec<usize>> {
        let shape = self.shape();
        if shape.len() != rank {
            return Err(Error::Shape(alloc::format!(
                "{what}: expected rank {rank}, got shape {shape:?}"
            )));
        }
        Ok(shape)
    }

    /// In debug and test builds, assert every element is finite after a
    /// forward op.
    pub(crate) fn debug_assert_finite(&self, op: &str) {
        if cfg!(debug_assertions) {
            let inner = self.0.borrow();
            for (i, v) in inner.data.iter().enumerate() {
                assert!(
                    v.is_finite(),
                    "non-finite value {v} at index {i} after {op}"
                );
            }
        }
    }
}

/// Channel slice of a `[c, s]` or `[b, c, s]` tensor, as raw values.
/// Used by tests and by the dependency heatmap to split concatenated
/// feature maps back into their source groups.
pub fn slice_channels<T: Real>(x: &Tensor<T>, from: usize, to: usize) -> Result<Tensor<T>> {
    let shape = x.shape();
    let (batch, c, s) = match shape.as_slice() {
        [c, s] => (1usize, *c, *s),
        [b, c, s] => (*b, *c, *s),
        _ => {
            return Err(Error::Shape(alloc::format!(
                "slice_channels: want rank 2 or 3, got {shape:?}"
            )))
        }
    };
    if from >= to || to > c {
        return Err(Error::Shape(alloc::format!(
            "slice_channels: range {from}..{to} out of {c} channels"
        )));
    }
    let data = x.data();
    let width = to - from;
    let mut out = Vec::with_capacity(batch * width * s);
    for b in 0..batch {
        let base = b * c * s;
        out.extend_from_slice(&data[base + from * s..base + to * s]);
    }
    drop(data);
    let out_shape: Vec<usize> = if shape.len() == 2 {
        vec![width, s]
    } else {
        vec![batch, width, s]
    };
    Tensor::from_vec(&out_shape, out)
}

/// Convert a name plus shape into a diagnostic string for error paths.
pub fn describe<T: Real>(name: &str, t: &Tensor<T>) -> String {
    alloc::format!("{name}{:?}", t.shape())
}
