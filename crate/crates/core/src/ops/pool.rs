//! Pooling: kernel-2 average pooling for transitions, global max/avg for
//! the classifier head.

use alloc::vec;
use alloc::vec::Vec;

use super::{as_batched, batched_shape};
use crate::error::{Error, Result};
use crate::float::Real;
use crate::tape::GradTape;
use crate::tensor::Tensor;

/// Average pooling, kernel 2, stride 2. Output length floor(s/2); a
/// trailing odd element is dropped.
pub fn avg_pool_k2<T: Real>(tape: &GradTape<T>, x: &Tensor<T>) -> Result<Tensor<T>> {
    let (b, c, s, batched) = as_batched(x, "avg_pool_k2")?;
    if s < 2 {
        return Err(Error::Shape(alloc::format!(
            "avg_pool_k2: signal length {s} cannot be halved"
        )));
    }
    let s_out = s / 2;
    let half = T::from_f(0.5);
    let mut data = Vec::with_capacity(b * c * s_out);
    {
        let xd = x.data();
        for row in 0..b * c {
            let xrow = &xd[row * s..(row + 1) * s];
            for p in 0..s_out {
                data.push((xrow[2 * p] + xrow[2 * p + 1]) * half);
            }
        }
    }
    let out = Tensor::from_vec(&batched_shape(batched, b, c, s_out), data)?;
    if tape.tracks(&[x]) {
        out.mark_tracked();
        let (x, o) = (x.clone(), out.clone());
        tape.record(move || {
            let Some(g) = o.grad() else { return };
            let mut dx = vec![T::zero(); b * c * s];
            for row in 0..b * c {
                for p in 0..s_out {
                    let gv = g[row * s_out + p] * half;
                    dx[row * s + 2 * p] += gv;
                    dx[row * s + 2 * p + 1] += gv;
                }
            }
            x.accumulate_grad(&dx);
        });
    }
    Ok(out)
}

/// Max over the whole signal axis, per channel. Output `[c, 1]`.
/// Gradient flows to the first position attaining the max.
pub fn global_max_pool<T: Real>(tape: &GradTape<T>, x: &Tensor<T>) -> Result<Tensor<T>> {
    let (b, c, s, batched) = as_batched(x, "global_max_pool")?;
    let mut data = Vec::with_capacity(b * c);
    let mut argmax = Vec::with_capacity(b * c);
    {
        let xd = x.data();
        for row in 0..b * c {
            let xrow = &xd[row * s..(row + 1) * s];
            let (mut best, mut best_at) = (xrow[0], 0usize);
            for (j, &v) in xrow.iter().enumerate().skip(1) {
                if v > best {
                    best = v;
                    best_at = j;
                }
            }
            data.push(best);
            argmax.push(best_at);
        }
    }
    let out = Tensor::from_vec(&batched_shape(batched, b, c, 1), data)?;
    if tape.tracks(&[x]) {
        out.mark_tracked();
        let (x, o) = (x.clone(), out.clone());
        tape.record(move || {
            let Some(g) = o.grad() else { return };
            let mut dx = vec![T::zero(); b * c * s];
            for (row, &at) in argmax.iter().enumerate() {
                dx[row * s + at] += g[row];
            }
            x.accumulate_grad(&dx);
        });
    }
    Ok(out)
}

/// Mean over the whole signal axis, per channel. Output `[c, 1]`.
pub fn global_avg_pool<T: Real>(tape: &GradTape<T>, x: &Tensor<T>) -> Result<Tensor<T>> {
    let (b, c, s, batched) = as_batched(x, "global_avg_pool")?;
    let inv = T::from_count(s).recip();
    let mut data = Vec::with_capacity(b * c);
    {
        let xd = x.data();
        for row in 0..b * c {
            let sum: T = xd[row * s..(row + 1) * s].iter().copied().sum();
            data.push(sum * inv);
        }
    }
    let out = Tensor::from_vec(&batched_shape(batched, b, c, 1), data)?;
    if tape.tracks(&[x]) {
        out.mark_tracked();
        let (x, o) = (x.clone(), out.clone());
        tape.record(move || {
            let Some(g) = o.grad() else { return };
            let mut dx = vec![T::zero(); b * c * s];
            for row in 0..b * c {
                let gv = g[row] * inv;
                for dv in &mut dx[row * s..(row + 1) * s] {
                    *dv += gv;
                }
            }
            x.accumulate_grad(&dx);
        });
    }
    Ok(out)
}
