//! ReLU and leaky ReLU.
//!
//! Subgradient convention at exactly 0: derivative 0 for ReLU, `slope`
//! for leaky ReLU (the positive-branch derivative 1 applies only for
//! x > 0).

use alloc::vec::Vec;

use crate::float::Real;
use crate::tape::GradTape;
use crate::tensor::Tensor;

/// max(0, x), elementwise.
pub fn relu<T: Real>(tape: &GradTape<T>, x: &Tensor<T>) -> Tensor<T> {
    let data: Vec<T> = x.data().iter().map(|&v| if v > T::zero() { v } else { T::zero() }).collect();
    let out = Tensor::from_vec(&x.shape(), data).expect("relu shape");
    if tape.tracks(&[x]) {
        out.mark_tracked();
        let (x, o) = (x.clone(), out.clone());
        tape.record(move || {
            let Some(g) = o.grad() else { return };
            let d: Vec<T> = x
                .data()
                .iter()
                .zip(&g)
                .map(|(&v, &gi)| if v > T::zero() { gi } else { T::zero() })
                .collect();
            x.accumulate_grad(&d);
        });
    }
    out
}

/// x for x > 0, slope·x otherwise.
pub fn leaky_relu<T: Real>(tape: &GradTape<T>, x: &Tensor<T>, slope: T) -> Tensor<T> {
    let data: Vec<T> = x.data().iter().map(|&v| if v > T::zero() { v } else { slope * v }).collect();
    let out = Tensor::from_vec(&x.shape(), data).expect("leaky_relu shape");
    if tape.tracks(&[x]) {
        out.mark_tracked();
        let (x, o) = (x.clone(), out.clone());
        tape.record(move || {
            let Some(g) = o.grad() else { return };
            let d: Vec<T> = x
                .data()
                .iter()
                .zip(&g)
                .map(|(&v, &gi)| if v > T::zero() { gi } else { slope * gi })
                .collect();
            x.accumulate_grad(&d);
        });
    }
    out
}
