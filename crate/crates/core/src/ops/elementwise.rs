//! Elementwise arithmetic: addition (residual connections), product, and
//! sum-to-scalar.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::float::Real;
use crate::tape::GradTape;
use crate::tensor::Tensor;

fn same_shape<T: Real>(a: &Tensor<T>, b: &Tensor<T>, what: &str) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Shape(alloc::format!(
            "{what}: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// Elementwise `a + b` over identical shapes.
pub fn add<T: Real>(tape: &GradTape<T>, a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    same_shape(a, b, "add")?;
    let data: Vec<T> = a.data().iter().zip(b.data().iter()).map(|(&x, &y)| x + y).collect();
    let out = Tensor::from_vec(&a.shape(), data)?;
    if tape.tracks(&[a, b]) {
        out.mark_tracked();
        let (a, b, o) = (a.clone(), b.clone(), out.clone());
        tape.record(move || {
            let Some(g) = o.grad() else { return };
            if a.is_tracked() {
                a.accumulate_grad(&g);
            }
            if b.is_tracked() {
                b.accumulate_grad(&g);
            }
        });
    }
    out.debug_assert_finite("add");
    Ok(out)
}

/// Elementwise `a * b` over identical shapes.
pub fn mul<T: Real>(tape: &GradTape<T>, a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    same_shape(a, b, "mul")?;
    let data: Vec<T> = a.data().iter().zip(b.data().iter()).map(|(&x, &y)| x * y).collect();
    let out = Tensor::from_vec(&a.shape(), data)?;
    if tape.tracks(&[a, b]) {
        out.mark_tracked();
        let (a, b, o) = (a.clone(), b.clone(), out.clone());
        tape.record(move || {
            let Some(g) = o.grad() else { return };
            // Read both inputs before touching any grad buffer: a and b
            // may be the same tensor.
            let da: Vec<T> = b.data().iter().zip(&g).map(|(&y, &gi)| y * gi).collect();
            let db: Vec<T> = a.data().iter().zip(&g).map(|(&x, &gi)| x * gi).collect();
            if a.is_tracked() {
                a.accumulate_grad(&da);
            }
            if b.is_tracked() {
                b.accumulate_grad(&db);
            }
        });
    }
    out.debug_assert_finite("mul");
    Ok(out)
}

/// Sum every element into a scalar.
pub fn sum_all<T: Real>(tape: &GradTape<T>, x: &Tensor<T>) -> Tensor<T> {
    let total = x.data().iter().copied().sum();
    let out = Tensor::scalar(total);
    if tape.tracks(&[x]) {
        out.mark_tracked();
        let (x, o) = (x.clone(), out.clone());
        tape.record(move || {
            let Some(g) = o.grad() else { return };
            let d = alloc::vec![g[0]; x.len()];
            x.accumulate_grad(&d);
        });
    }
    out
}

/// Sum with fixed, position-dependent weights (cycling 1/7 … 7/7).
/// Gradient checks reduce op outputs through this instead of `sum_all`
/// so every output position receives a distinct upstream gradient; a
/// plain sum cannot see permutation or slice-offset mistakes.
pub fn sum_weighted<T: Real>(tape: &GradTape<T>, x: &Tensor<T>) -> Tensor<T> {
    let w = |i: usize| T::from_count(i % 7 + 1) / T::from_count(7);
    let total = x.data().iter().enumerate().map(|(i, &v)| v * w(i)).sum();
    let out = Tensor::scalar(total);
    if tape.tracks(&[x]) {
        out.mark_tracked();
        let (x, o) = (x.clone(), out.clone());
        tape.record(move || {
            let Some(g) = o.grad() else { return };
            let d: Vec<T> = (0..x.len()).map(|i| g[0] * w(i)).collect();
            x.accumulate_grad(&d);
        });
    }
    out
}
