//! Fused, max-stabilized softmax + cross-entropy. Returns the mean
//! negative log-likelihood as a scalar plus the (detached) row
//! probabilities for metrics.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::float::Real;
use crate::tape::GradTape;
use crate::tensor::Tensor;

pub fn softmax_cross_entropy<T: Real>(
    tape: &GradTape<T>,
    logits: &Tensor<T>,
    labels: &[usize],
) -> Result<(Tensor<T>, Tensor<T>)> {
    let shape = logits.expect_rank(2, "softmax_cross_entropy logits")?;
    let (b, k) = (shape[0], shape[1]);
    if labels.len() != b {
        return Err(Error::Shape(alloc::format!(
            "softmax_cross_entropy: {b} rows vs {} labels",
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::Data(alloc::format!(
            "softmax_cross_entropy: label {bad} out of {k} classes"
        )));
    }

    let mut probs = Vec::with_capacity(b * k);
    let mut total = T::zero();
    {
        let ld = logits.data();
        for (bi, &label) in labels.iter().enumerate() {
            let row = &ld[bi * k..(bi + 1) * k];
            let m = row.iter().copied().fold(row[0], |a, v| if v > a { v } else { a });
            let mut denom = T::zero();
            for &v in row {
                denom += (v - m).exp();
            }
            for &v in row {
                probs.push((v - m).exp() / denom);
            }
            // -ln p[label] computed in log space: ln(denom) - (l - m)
            total += denom.ln() - (row[label] - m);
        }
    }
    let loss = Tensor::scalar(total / T::from_count(b));
    let probs = Tensor::from_vec(&[b, k], probs)?;

    if tape.tracks(&[logits]) {
        loss.mark_tracked();
        let (logits_t, loss_t, probs_t) = (logits.clone(), loss.clone(), probs.clone());
        let labels: Vec<usize> = labels.to_vec();
        tape.record(move || {
            let Some(g) = loss_t.grad() else { return };
            // d logits = (p − one_hot) · g / batch
            let scale = g[0] / T::from_count(b);
            let pd = probs_t.data();
            let mut d = Vec::with_capacity(b * k);
            for (bi, &label) in labels.iter().enumerate() {
                for j in 0..k {
                    let y = if j == label { T::one() } else { T::zero() };
                    d.push((pd[bi * k + j] - y) * scale);
                }
            }
            drop(pd);
            logits_t.accumulate_grad(&d);
        });
    }
    loss.debug_assert_finite("softmax_cross_entropy");
    Ok((loss, probs))
}

/// Row-wise softmax of `[b, k]` logits with no gradient involvement —
/// the inference-side companion of the fused loss above.
pub fn softmax_rows<T: Real>(logits: &Tensor<T>) -> Result<Tensor<T>> {
    let shape = logits.expect_rank(2, "softmax_rows logits")?;
    let (b, k) = (shape[0], shape[1]);
    let ld = logits.data();
    let mut probs = Vec::with_capacity(b * k);
    for bi in 0..b {
        let row = &ld[bi * k..(bi + 1) * k];
        let m = row.iter().copied().fold(row[0], |a, v| if v > a { v } else { a });
        let mut denom = T::zero();
        for &v in row {
            denom += (v - m).exp();
        }
        for &v in row {
            probs.push((v - m).exp() / denom);
        }
    }
    drop(ld);
    Tensor::from_vec(&[b, k], probs)
}
