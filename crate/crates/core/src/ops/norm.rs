//! Batch normalization over the channel axis of `[b, c, s]` feature
//! maps, with running statistics for eval mode.
//!
//! Train mode normalizes by the biased batch variance (over batch ×
//! signal per channel) and updates running stats with momentum; the
//! running variance stores the unbiased estimate, following the usual
//! framework convention. Eval mode is a fixed affine map through the
//! running stats.

use alloc::vec;
use alloc::vec::Vec;

use super::{as_batched, batched_shape};
use crate::error::{Error, Result};
use crate::float::Real;
use crate::tape::GradTape;
use crate::tensor::Tensor;
use crate::Mode;

/// y = gamma · (x − mean) / sqrt(var + eps) + beta, per channel.
///
/// `running_mean` / `running_var` are plain `[c]` buffers (never
/// tracked); train mode overwrites them in place.
#[allow(clippy::too_many_arguments)]
pub fn batchnorm<T: Real>(
    tape: &GradTape<T>,
    x: &Tensor<T>,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
    running_mean: &Tensor<T>,
    running_var: &Tensor<T>,
    mode: Mode,
    eps: T,
    momentum: T,
) -> Result<Tensor<T>> {
    let (b, c, s, batched) = as_batched(x, "batchnorm")?;
    for (t, name) in [
        (gamma, "gamma"),
        (beta, "beta"),
        (running_mean, "running_mean"),
        (running_var, "running_var"),
    ] {
        if t.shape() != [c] {
            return Err(Error::Shape(alloc::format!(
                "batchnorm: {name} shape {:?} for {c} channels",
                t.shape()
            )));
        }
    }
    let n = b * s; // reduction count per channel
    if mode.is_train() && n < 2 {
        return Err(Error::Shape(alloc::format!(
            "batchnorm: train mode needs batch*signal > 1, got {n}"
        )));
    }

    // Per-channel (mean, inv_std) used for normalization.
    let (mean, inv_std) = {
        if mode.is_train() {
            let xd = x.data();
            let mut mean = vec![T::zero(); c];
            let mut var = vec![T::zero(); c];
            for ci in 0..c {
                let mut sum = T::zero();
                for bi in 0..b {
                    let row = &xd[(bi * c + ci) * s..(bi * c + ci + 1) * s];
                    sum += row.iter().copied().sum();
                }
                let m = sum / T::from_count(n);
                let mut sq = T::zero();
                for bi in 0..b {
                    let row = &xd[(bi * c + ci) * s..(bi * c + ci + 1) * s];
                    sq += row.iter().map(|&v| (v - m) * (v - m)).sum();
                }
                mean[ci] = m;
                var[ci] = sq / T::from_count(n); // biased, for normalization
            }
            drop(xd);
            // Running update: momentum-weighted toward the batch stats,
            // variance stored unbiased.
            let unbias = T::from_count(n) / T::from_count(n - 1);
            running_mean.update_data(|rm| {
                for (r, &m) in rm.iter_mut().zip(&mean) {
                    *r = (T::one() - momentum) * *r + momentum * m;
                }
            });
            running_var.update_data(|rv| {
                for (r, &v) in rv.iter_mut().zip(&var) {
                    *r = (T::one() - momentum) * *r + momentum * v * unbias;
                }
            });
            let inv_std: Vec<T> = var.iter().map(|&v| (v + eps).sqrt().recip()).collect();
            (mean, inv_std)
        } else {
            let mean = running_mean.to_vec();
            let inv_std: Vec<T> = running_var
                .to_vec()
                .iter()
                .map(|&v| (v + eps).sqrt().recip())
                .collect();
            (mean, inv_std)
        }
    };

    // Normalized values are saved for the backward pass.
    let mut xhat = vec![T::zero(); b * c * s];
    let mut out_data = vec![T::zero(); b * c * s];
    {
        let xd = x.data();
        let gd = gamma.data();
        let bd = beta.data();
        for bi in 0..b {
            for ci in 0..c {
                let base = (bi * c + ci) * s;
                let (m, istd, g, bt) = (mean[ci], inv_std[ci], gd[ci], bd[ci]);
                for j in 0..s {
                    let h = (xd[base + j] - m) * istd;
                    xhat[base + j] = h;
                    out_data[base + j] = g * h + bt;
                }
            }
        }
    }
    let out = Tensor::from_vec(&batched_shape(batched, b, c, s), out_data)?;

    if tape.tracks(&[x, gamma, beta]) {
        out.mark_tracked();
        let (x, gamma, beta, o) = (x.clone(), gamma.clone(), beta.clone(), out.clone());
        let train = mode.is_train();
        tape.record(move || {
            let Some(g) = o.grad() else { return };
            let gd = gamma.data();
            let mut dgamma = vec![T::zero(); c];
            let mut dbeta = vec![T::zero(); c];
            let mut dx = vec![T::zero(); b * c * s];
            for ci in 0..c {
                let mut sum_g = T::zero();
                let mut sum_gh = T::zero();
                for bi in 0..b {
                    let base = (bi * c + ci) * s;
                    for j in 0..s {
                        let gi = g[base + j];
                        sum_g += gi;
                        sum_gh += gi * xhat[base + j];
                    }
                }
                dbeta[ci] = sum_g;
                dgamma[ci] = sum_gh;
                let scale = gd[ci] * inv_std[ci];
                if train {
                    // dx = (gamma/std)·(g − mean(g) − xhat·mean(g·xhat)),
                    // means over the (batch, signal) reduction set.
                    let mg = sum_g / T::from_count(n);
                    let mgh = sum_gh / T::from_count(n);
                    for bi in 0..b {
                        let base = (bi * c + ci) * s;
                        for j in 0..s {
                            dx[base + j] =
                                scale * (g[base + j] - mg - xhat[base + j] * mgh);
                        }
                    }
                } else {
                    // Running stats are constants in eval mode.
                    for bi in 0..b {
                        let base = (bi * c + ci) * s;
                        for j in 0..s {
                            dx[base + j] = scale * g[base + j];
                        }
                    }
                }
            }
            drop(gd);
            if x.is_tracked() {
                x.accumulate_grad(&dx);
            }
            if gamma.is_tracked() {
                gamma.accumulate_grad(&dgamma);
            }
            if beta.is_tracked() {
                beta.accumulate_grad(&dbeta);
            }
        });
    }
    out.debug_assert_finite("batchnorm");
    Ok(out)
}

/// Fresh `[c]` running-stat buffers: mean 0, var 1.
pub fn init_running_stats<T: Real>(c: usize) -> (Tensor<T>, Tensor<T>) {
    (Tensor::zeros(&[c]), Tensor::full(&[c], T::one()))
}
