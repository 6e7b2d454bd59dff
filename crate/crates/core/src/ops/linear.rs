//! Affine (fully connected) layer: y = Wx + b.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::float::Real;
use crate::tape::GradTape;
use crate::tensor::Tensor;

/// `x` is `[n_in]` or `[batch, n_in]`; `w` is `[n_out, n_in]`; `bias` is
/// `[n_out]`. Output matches the input rank.
pub fn affine<T: Real>(
    tape: &GradTape<T>,
    x: &Tensor<T>,
    w: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>> {
    let xshape = x.shape();
    let (b, n_in, batched) = match xshape.as_slice() {
        [n] => (1usize, *n, false),
        [b, n] => (*b, *n, true),
        _ => {
            return Err(Error::Shape(alloc::format!(
                "affine: want [n_in] or [batch, n_in], got {xshape:?}"
            )))
        }
    };
    let wshape = w.expect_rank(2, "affine weight")?;
    let (n_out, wn_in) = (wshape[0], wshape[1]);
    if wn_in != n_in {
        return Err(Error::Shape(alloc::format!(
            "affine: input width {n_in} vs weight {wshape:?}"
        )));
    }
    if bias.shape() != [n_out] {
        return Err(Error::Shape(alloc::format!(
            "affine: bias {:?} for {n_out} outputs",
            bias.shape()
        )));
    }

    let mut data = vec![T::zero(); b * n_out];
    {
        let xd = x.data();
        let wd = w.data();
        let bd = bias.data();
        for bi in 0..b {
            let xrow = &xd[bi * n_in..(bi + 1) * n_in];
            let orow = &mut data[bi * n_out..(bi + 1) * n_out];
            for (o, ov) in orow.iter_mut().enumerate() {
                let wrow = &wd[o * n_in..(o + 1) * n_in];
                let dot: T = wrow.iter().zip(xrow).map(|(&wv, &xv)| wv * xv).sum();
                *ov = dot + bd[o];
            }
        }
    }
    let out_shape: Vec<usize> = if batched { vec![b, n_out] } else { vec![n_out] };
    let out = Tensor::from_vec(&out_shape, data)?;

    if tape.tracks(&[x, w, bias]) {
        out.mark_tracked();
        let (x, w, bias, o) = (x.clone(), w.clone(), bias.clone(), out.clone());
        tape.record(move || {
            let Some(g) = o.grad() else { return };
            let xd = x.data();
            let wd = w.data();
            let mut dx = vec![T::zero(); b * n_in];
            let mut dw = vec![T::zero(); n_out * n_in];
            let mut db = vec![T::zero(); n_out];
            for bi in 0..b {
                let xrow = &xd[bi * n_in..(bi + 1) * n_in];
                let grow = &g[bi * n_out..(bi + 1) * n_out];
                let dxrow = &mut dx[bi * n_in..(bi + 1) * n_in];
                for (o, &gv) in grow.iter().enumerate() {
                    db[o] += gv;
                    if gv == T::zero() {
                        continue;
                    }
                    let wrow = &wd[o * n_in..(o + 1) * n_in];
                    let dwrow = &mut dw[o * n_in..(o + 1) * n_in];
                    for i in 0..n_in {
                        dwrow[i] += gv * xrow[i];
                        dxrow[i] += gv * wrow[i];
                    }
                }
            }
            drop(xd);
            drop(wd);
            if x.is_tracked() {
                x.accumulate_grad(&dx);
            }
            if w.is_tracked() {
                w.accumulate_grad(&dw);
            }
            if bias.is_tracked() {
                bias.accumulate_grad(&db);
            }
        });
    }
    out.debug_assert_finite("affine");
    Ok(out)
}
