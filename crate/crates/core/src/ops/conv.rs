//! 1-D convolutions: `conv_seq` along the signal axis of a feature map,
//! and `conv_embed`, the 3×(d+2) kernel that turns an embedded text into
//! its first 64-channel feature map.
//!
//! Both are cross-correlations with stride 1 and zero padding. Inner
//! loops are written as contiguous slice traversals (axpy/dot shape) so
//! they vectorize; this pair dominates training time.

use alloc::vec;
use alloc::vec::Vec;

use super::{as_batched, batched_shape};
use crate::error::{Error, Result};
use crate::float::Real;
use crate::tape::GradTape;
use crate::tensor::Tensor;

/// y[o, p] = sum_c sum_t w[o, c, t] · xpad[c, p + t]  (+ bias[o])
///
/// Input `[c_in, s]` or `[b, c_in, s]`; kernels `[c_out, c_in, f]`;
/// output signal length s + 2·pad − f + 1.
pub fn conv_seq<T: Real>(
    tape: &GradTape<T>,
    x: &Tensor<T>,
    kernels: &Tensor<T>,
    bias: Option<&Tensor<T>>,
    pad: usize,
) -> Result<Tensor<T>> {
    let (b, c_in, s, batched) = as_batched(x, "conv_seq")?;
    let kshape = kernels.expect_rank(3, "conv_seq kernels")?;
    let (c_out, kc, f) = (kshape[0], kshape[1], kshape[2]);
    if kc != c_in {
        return Err(Error::Shape(alloc::format!(
            "conv_seq: input has {c_in} channels, kernels expect {kc}"
        )));
    }
    let padded = s + 2 * pad;
    if f > padded {
        return Err(Error::Shape(alloc::format!(
            "conv_seq: kernel width {f} exceeds padded signal {padded}"
        )));
    }
    if let Some(bt) = bias {
        let bshape = bt.expect_rank(1, "conv_seq bias")?;
        if bshape[0] != c_out {
            return Err(Error::Shape(alloc::format!(
                "conv_seq: bias has {} entries for {c_out} output channels",
                bshape[0]
            )));
        }
    }
    let s_out = padded - f + 1;

    let out_data = {
        let xd = x.data();
        let wd = kernels.data();
        let bd: Option<Vec<T>> = bias.map(|t| t.to_vec());
        let mut out = vec![T::zero(); b * c_out * s_out];
        let mut xp = vec![T::zero(); c_in * padded];
        for bi in 0..b {
            let xb = &xd[bi * c_in * s..(bi + 1) * c_in * s];
            for c in 0..c_in {
                xp[c * padded + pad..c * padded + pad + s]
                    .copy_from_slice(&xb[c * s..(c + 1) * s]);
            }
            let ob = &mut out[bi * c_out * s_out..(bi + 1) * c_out * s_out];
            for o in 0..c_out {
                let orow = &mut ob[o * s_out..(o + 1) * s_out];
                if let Some(bd) = &bd {
                    orow.fill(bd[o]);
                }
                for c in 0..c_in {
                    let xrow = &xp[c * padded..(c + 1) * padded];
                    let wrow = &wd[(o * c_in + c) * f..(o * c_in + c + 1) * f];
                    for (t, &w) in wrow.iter().enumerate() {
                        for (ov, &xv) in orow.iter_mut().zip(&xrow[t..t + s_out]) {
                            *ov += w * xv;
                        }
                    }
                }
            }
        }
        out
    };
    let out = Tensor::from_vec(&batched_shape(batched, b, c_out, s_out), out_data)?;

    let mut inputs = vec![x, kernels];
    if let Some(bt) = bias {
        inputs.push(bt);
    }
    if tape.tracks(&inputs) {
        out.mark_tracked();
        let (x, w, o) = (x.clone(), kernels.clone(), out.clone());
        let bias = bias.cloned();
        tape.record(move || {
            let Some(g) = o.grad() else { return };
            let padded = s + 2 * pad;
            let xd = x.data();
            let wd = w.data();
            let mut dw = vec![T::zero(); wd.len()];
            let mut dx = vec![T::zero(); xd.len()];
            let mut db = vec![T::zero(); c_out];
            let mut xp = vec![T::zero(); c_in * padded];
            let mut dxp = vec![T::zero(); c_in * padded];
            for bi in 0..b {
                let xb = &xd[bi * c_in * s..(bi + 1) * c_in * s];
                for c in 0..c_in {
                    xp[c * padded + pad..c * padded + pad + s]
                        .copy_from_slice(&xb[c * s..(c + 1) * s]);
                }
                dxp.fill(T::zero());
                let gb = &g[bi * c_out * s_out..(bi + 1) * c_out * s_out];
                for o in 0..c_out {
                    let grow = &gb[o * s_out..(o + 1) * s_out];
                    db[o] += grow.iter().copied().sum();
                    for c in 0..c_in {
                        let xrow = &xp[c * padded..(c + 1) * padded];
                        let dxrow = &mut dxp[c * padded..(c + 1) * padded];
                        let wbase = (o * c_in + c) * f;
                        for t in 0..f {
                            // dW[o,c,t] = <grad row, shifted input row>
                            let dot: T = grow
                                .iter()
                                .zip(&xrow[t..t + s_out])
                                .map(|(&gv, &xv)| gv * xv)
                                .sum();
                            dw[wbase + t] += dot;
                            // dXpad[t + p] += w[t] · grad[p]
                            let wv = wd[wbase + t];
                            for (dv, &gv) in dxrow[t..t + s_out].iter_mut().zip(grow) {
                                *dv += wv * gv;
                            }
                        }
                    }
                }
                let dxb = &mut dx[bi * c_in * s..(bi + 1) * c_in * s];
                for c in 0..c_in {
                    dxb[c * s..(c + 1) * s]
                        .copy_from_slice(&dxp[c * padded + pad..c * padded + pad + s]);
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
            if let Some(bt) = &bias {
                if bt.is_tracked() {
                    bt.accumulate_grad(&db);
                }
            }
        });
    }
    out.debug_assert_finite("conv_seq");
    Ok(out)
}

/// The initial text convolution: a 3×(d+2) kernel slid along the token
/// axis of an embedded input `[b, s, d]`, with the embedding axis padded
/// once on both sides so the kernel spans it entirely and that axis
/// collapses. Sequence axis padded by 1, so the signal length is
/// preserved: output `[b, c_out, s]`.
pub fn conv_embed<T: Real>(
    tape: &GradTape<T>,
    x: &Tensor<T>,
    kernels: &Tensor<T>,
    bias: Option<&Tensor<T>>,
) -> Result<Tensor<T>> {
    let xshape = x.expect_rank(3, "conv_embed input")?;
    let (b, s, d) = (xshape[0], xshape[1], xshape[2]);
    let kshape = kernels.expect_rank(3, "conv_embed kernels")?;
    let (c_out, kf, kd) = (kshape[0], kshape[1], kshape[2]);
    if kf != 3 || kd != d + 2 {
        return Err(Error::Shape(alloc::format!(
            "conv_embed: kernels {kshape:?} do not match the 3x(d+2) contract for d={d}"
        )));
    }
    if let Some(bt) = bias {
        if bt.shape() != [c_out] {
            return Err(Error::Shape(alloc::format!(
                "conv_embed: bias shape {:?} for {c_out} channels",
                bt.shape()
            )));
        }
    }
    let (sp, dp) = (s + 2, d + 2); // padded extents

    let out_data = {
        let xd = x.data();
        let wd = kernels.data();
        let bd: Option<Vec<T>> = bias.map(|t| t.to_vec());
        let mut out = vec![T::zero(); b * c_out * s];
        let mut xp = vec![T::zero(); sp * dp];
        for bi in 0..b {
            let xb = &xd[bi * s * d..(bi + 1) * s * d];
            for j in 0..s {
                xp[(j + 1) * dp + 1..(j + 1) * dp + 1 + d].copy_from_slice(&xb[j * d..(j + 1) * d]);
            }
            let ob = &mut out[bi * c_out * s..(bi + 1) * c_out * s];
            for o in 0..c_out {
                let wrows = &wd[o * 3 * dp..(o + 1) * 3 * dp];
                let orow = &mut ob[o * s..(o + 1) * s];
                for (p, ov) in orow.iter_mut().enumerate() {
                    let mut acc = bd.as_ref().map_or(T::zero(), |bd| bd[o]);
                    for t in 0..3 {
                        let xrow = &xp[(p + t) * dp..(p + t + 1) * dp];
                        let wrow = &wrows[t * dp..(t + 1) * dp];
                        acc += xrow.iter().zip(wrow).map(|(&xv, &wv)| xv * wv).sum();
                    }
                    *ov = acc;
                }
            }
        }
        out
    };
    let out = Tensor::from_vec(&[b, c_out, s], out_data)?;

    let mut inputs = vec![x, kernels];
    if let Some(bt) = bias {
        inputs.push(bt);
    }
    if tape.tracks(&inputs) {
        out.mark_tracked();
        let (x, w, o) = (x.clone(), kernels.clone(), out.clone());
        let bias = bias.cloned();
        tape.record(move || {
            let Some(g) = o.grad() else { return };
            let xd = x.data();
            let wd = w.data();
            let mut dw = vec![T::zero(); wd.len()];
            let mut dx = vec![T::zero(); xd.len()];
            let mut db = vec![T::zero(); c_out];
            let mut xp = vec![T::zero(); sp * dp];
            let mut dxp = vec![T::zero(); sp * dp];
            for bi in 0..b {
                let xb = &xd[bi * s * d..(bi + 1) * s * d];
                for j in 0..s {
                    xp[(j + 1) * dp + 1..(j + 1) * dp + 1 + d]
                        .copy_from_slice(&xb[j * d..(j + 1) * d]);
                }
                dxp.fill(T::zero());
                let gb = &g[bi * c_out * s..(bi + 1) * c_out * s];
                for o in 0..c_out {
                    let grow = &gb[o * s..(o + 1) * s];
                    db[o] += grow.iter().copied().sum();
                    let wrows = &wd[o * 3 * dp..(o + 1) * 3 * dp];
                    let dwrows = &mut dw[o * 3 * dp..(o + 1) * 3 * dp];
                    for (p, &gv) in grow.iter().enumerate() {
                        if gv == T::zero() {
                            continue;
                        }
                        for t in 0..3 {
                            let xrow = &xp[(p + t) * dp..(p + t + 1) * dp];
                            for (dwv, &xv) in dwrows[t * dp..(t + 1) * dp].iter_mut().zip(xrow) {
                                *dwv += gv * xv;
                            }
                            let wrow = &wrows[t * dp..(t + 1) * dp];
                            for (dxv, &wv) in dxp[(p + t) * dp..(p + t + 1) * dp]
                                .iter_mut()
                                .zip(wrow)
                            {
                                *dxv += gv * wv;
                            }
                        }
                    }
                }
                let dxb = &mut dx[bi * s * d..(bi + 1) * s * d];
                for j in 0..s {
                    dxb[j * d..(j + 1) * d]
                        .copy_from_slice(&dxp[(j + 1) * dp + 1..(j + 1) * dp + 1 + d]);
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
            if let Some(bt) = &bias {
                if bt.is_tracked() {
                    bt.accumulate_grad(&db);
                }
            }
        });
    }
    out.debug_assert_finite("conv_embed");
    Ok(out)
}
