//! Structural ops: channel concatenation (the dense-connectivity
//! workhorse) and reshape.

use alloc::vec::Vec;

use super::{as_batched, batched_shape};
use crate::error::{Error, Result};
use crate::float::Real;
use crate::tape::GradTape;
use crate::tensor::Tensor;

/// Stack feature maps along the channel axis, in input order. All inputs
/// must agree on batch size and signal length.
pub fn concat_channels<T: Real>(tape: &GradTape<T>, xs: &[Tensor<T>]) -> Result<Tensor<T>> {
    if xs.is_empty() {
        return Err(Error::Shape(alloc::format!(
            "concat_channels: empty input list"
        )));
    }
    let (b0, _, s0, batched) = as_batched(&xs[0], "concat_channels")?;
    let mut channels = Vec::with_capacity(xs.len());
    let mut c_total = 0;
    for x in xs {
        let (b, c, s, _) = as_batched(x, "concat_channels")?;
        if b != b0 || s != s0 {
            return Err(Error::Shape(alloc::format!(
                "concat_channels: got {:?} alongside {:?}",
                x.shape(),
                xs[0].shape()
            )));
        }
        channels.push(c);
        c_total += c;
    }

    let mut data = Vec::with_capacity(b0 * c_total * s0);
    for bi in 0..b0 {
        for x in xs {
            let src = x.data();
            let per = src.len() / b0;
            data.extend_from_slice(&src[bi * per..(bi + 1) * per]);
        }
    }
    let out = Tensor::from_vec(&batched_shape(batched, b0, c_total, s0), data)?;

    let inputs: Vec<&Tensor<T>> = xs.iter().collect();
    if tape.tracks(&inputs) {
        out.mark_tracked();
        let xs: Vec<Tensor<T>> = xs.to_vec();
        let o = out.clone();
        tape.record(move || {
            let Some(g) = o.grad() else { return };
            // Split the output grad back into per-input slices.
            let mut deltas: Vec<Vec<T>> = xs
                .iter()
                .map(|x| Vec::with_capacity(x.len()))
                .collect();
            let mut pos = 0;
            for _ in 0..b0 {
                for (x, d) in xs.iter().zip(deltas.iter_mut()) {
                    let per = x.len() / b0;
                    d.extend_from_slice(&g[pos..pos + per]);
                    pos += per;
                }
            }
            for (x, d) in xs.iter().zip(deltas) {
                if x.is_tracked() {
                    x.accumulate_grad(&d);
                }
            }
        });
    }
    out.debug_assert_finite("concat_channels");
    Ok(out)
}

/// Reinterpret the value buffer under a new shape with the same element
/// count. Gradient passes through unchanged.
pub fn reshape<T: Real>(tape: &GradTape<T>, x: &Tensor<T>, new_shape: &[usize]) -> Result<Tensor<T>> {
    let n: usize = new_shape.iter().product();
    if n != x.len() || new_shape.iter().any(|&d| d == 0) {
        return Err(Error::Shape(alloc::format!(
            "reshape: {:?} has {} values, target {:?} wants {}",
            x.shape(),
            x.len(),
            new_shape,
            n
        )));
    }
    let out = Tensor::from_vec(new_shape, x.to_vec())?;
    if tape.tracks(&[x]) {
        out.mark_tracked();
        let (x, o) = (x.clone(), out.clone());
        tape.record(move || {
            let Some(g) = o.grad() else { return };
            x.accumulate_grad(&g);
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn concat_stacks_channel_counts() {
        // [x(64,10), y(32,10)] -> (96,10)
        let tape = GradTape::<f32>::disabled();
        let x = Tensor::zeros(&[64, 10]);
        let y = Tensor::zeros(&[32, 10]);
        let out = concat_channels(&tape, &[x, y]).unwrap();
        assert_eq!(out.shape(), vec![96, 10]);
    }

    #[test]
    fn concat_single_input_is_identity() {
        let tape = GradTape::<f32>::disabled();
        let x = Tensor::from_vec(&[5, 7], (0..35).map(|i| i as f32).collect()).unwrap();
        let out = concat_channels(&tape, &[x.clone()]).unwrap();
        assert_eq!(out.shape(), vec![5, 7]);
        assert_eq!(out.to_vec(), x.to_vec());
    }

    #[test]
    fn concat_backward_routes_slices() {
        // Upstream grad of ones -> each input grad all ones in its slice.
        let tape = GradTape::<f64>::new();
        let x = Tensor::from_vec(&[2, 2], vec![1.0; 4]).unwrap().requires_grad();
        let y = Tensor::from_vec(&[1, 2], vec![1.0; 2]).unwrap().requires_grad();
        let cat = concat_channels(&tape, &[x.clone(), y.clone()]).unwrap();
        let loss = sum_for_test(&tape, &cat);
        tape.backward(&loss).unwrap();
        assert_eq!(x.grad().unwrap(), vec![1.0; 4]);
        assert_eq!(y.grad().unwrap(), vec![1.0; 2]);
    }

    #[test]
    fn concat_batched_interleaves_per_example() {
        let tape = GradTape::<f32>::disabled();
        let x = Tensor::from_vec(&[2, 1, 2], vec![1., 2., 3., 4.]).unwrap();
        let y = Tensor::from_vec(&[2, 1, 2], vec![5., 6., 7., 8.]).unwrap();
        let out = concat_channels(&tape, &[x, y]).unwrap();
        assert_eq!(out.shape(), vec![2, 2, 2]);
        assert_eq!(out.to_vec(), vec![1., 2., 5., 6., 3., 4., 7., 8.]);
    }

    #[test]
    fn concat_rejects_mismatched_signal() {
        let tape = GradTape::<f32>::disabled();
        let x = Tensor::zeros(&[2, 3]);
        let y = Tensor::zeros(&[2, 4]);
        assert!(concat_channels(&tape, &[x, y]).is_err());
    }

    #[test]
    fn reshape_roundtrip_preserves_grad() {
        let tape = GradTape::<f64>::new();
        let x = Tensor::from_vec(&[2, 3], vec![1.0; 6]).unwrap().requires_grad();
        let flat = reshape(&tape, &x, &[6]).unwrap();
        assert_eq!(flat.shape(), vec![6]);
        let loss = sum_for_test(&tape, &flat);
        tape.backward(&loss).unwrap();
        assert_eq!(x.grad().unwrap(), vec![1.0; 6]);
        assert!(reshape(&GradTape::<f64>::disabled(), &x, &[7]).is_err());
    }

    /// Minimal sum-to-scalar with a recorded VJP, local to these tests so
    /// shape.rs does not depend on elementwise.rs.
    fn sum_for_test<T: Real>(tape: &GradTape<T>, x: &Tensor<T>) -> Tensor<T> {
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
}
