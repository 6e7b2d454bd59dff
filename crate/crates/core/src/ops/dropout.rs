//! Inverted dropout: survivors are scaled by 1/(1−rate) at train time so
//! eval mode is a pure identity.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::float::Real;
use crate::rng::SeedRng;
use crate::tape::GradTape;
use crate::tensor::Tensor;
use crate::Mode;

pub fn dropout<T: Real>(
    tape: &GradTape<T>,
    x: &Tensor<T>,
    rate: f64,
    mode: Mode,
    rng: &mut SeedRng,
) -> Result<Tensor<T>> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(alloc::format!(
            "dropout rate must be in [0, 1), got {rate}"
        )));
    }
    if !mode.is_train() || rate == 0.0 {
        // Identity: reuse the handle, no node needed.
        return Ok(x.clone());
    }
    let scale = T::from_f(1.0 / (1.0 - rate));
    let mask: Vec<T> = (0..x.len())
        .map(|_| if rng.uniform01() >= rate { scale } else { T::zero() })
        .collect();
    let data: Vec<T> = x.data().iter().zip(&mask).map(|(&v, &m)| v * m).collect();
    let out = Tensor::from_vec(&x.shape(), data)?;
    if tape.tracks(&[x]) {
        out.mark_tracked();
        let (x, o) = (x.clone(), out.clone());
        tape.record(move || {
            let Some(g) = o.grad() else { return };
            let d: Vec<T> = g.iter().zip(&mask).map(|(&gi, &m)| gi * m).collect();
            x.accumulate_grad(&d);
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_zero_and_eval_are_identity() {
        let tape = GradTape::<f32>::disabled();
        let mut rng = SeedRng::seed_from_u64(1);
        let x = Tensor::from_vec(&[4], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = dropout(&tape, &x, 0.0, Mode::Train, &mut rng).unwrap();
        assert_eq!(y.to_vec(), x.to_vec());
        let y = dropout(&tape, &x, 0.2, Mode::Eval, &mut rng).unwrap();
        assert_eq!(y.to_vec(), x.to_vec());
    }

    #[test]
    fn rate_one_rejected() {
        let tape = GradTape::<f32>::disabled();
        let mut rng = SeedRng::seed_from_u64(1);
        let x = Tensor::<f32>::zeros(&[2]);
        assert!(dropout(&tape, &x, 1.0, Mode::Train, &mut rng).is_err());
        assert!(dropout(&tape, &x, -0.1, Mode::Train, &mut rng).is_err());
    }

    #[test]
    fn survivor_fraction_and_scaling() {
        // rate 0.5 over 1e5 elements: survivors within 0.5 ± 0.01, each ×2.
        let tape = GradTape::<f64>::disabled();
        let mut rng = SeedRng::seed_from_u64(42);
        let n = 100_000;
        let x = Tensor::full(&[n], 1.0);
        let y = dropout(&tape, &x, 0.5, Mode::Train, &mut rng).unwrap();
        let yd = y.to_vec();
        let survivors = yd.iter().filter(|&&v| v != 0.0).count();
        let frac = survivors as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.01, "survivor fraction {frac}");
        assert!(yd.iter().all(|&v| v == 0.0 || (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn fixed_seed_fixed_mask() {
        let tape = GradTape::<f32>::disabled();
        let x = Tensor::full(&[64], 1.0f32);
        let run = || {
            let mut rng = SeedRng::seed_from_u64(7);
            dropout(&tape, &x, 0.3, Mode::Train, &mut rng).unwrap().to_vec()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn backward_applies_same_mask() {
        let tape = GradTape::<f64>::new();
        let mut rng = SeedRng::seed_from_u64(3);
        let x = Tensor::full(&[32], 1.0).requires_grad();
        let y = dropout(&tape, &x, 0.5, Mode::Train, &mut rng).unwrap();
        let kept = y.to_vec();
        let loss = crate::ops::sum_all(&tape, &y);
        tape.backward(&loss).unwrap();
        // grad equals the mask itself (2 where kept, 0 where dropped)
        assert_eq!(x.grad().unwrap(), kept);
    }
}
