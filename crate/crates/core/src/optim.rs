//! He initialization, the one-cycle learning-rate/momentum schedule, and
//! Adam with decoupled weight decay.
//!
//! Schedules are computed in f64 regardless of the training dtype so the
//! closed-form endpoint tests are exact.

use alloc::vec;
use alloc::vec::Vec;

// f64's inherent sqrt/cos/round/powi are std-only; route through the
// libm-backed trait so no_std builds resolve them too.
#[allow(unused_imports)]
use num_traits::Float as _;

use crate::error::{Error, Result};
use crate::float::Real;
use crate::rng::SeedRng;
use crate::tensor::Tensor;

/// Zero-mean normal with std sqrt(2 / fan_in).
pub fn he_init<T: Real>(shape: &[usize], fan_in: usize, rng: &mut SeedRng) -> Tensor<T> {
    assert!(fan_in >= 1, "he_init: fan_in must be positive");
    let std = (2.0 / fan_in as f64).sqrt();
    let n: usize = shape.iter().product();
    let data: Vec<T> = (0..n).map(|_| T::from_f(rng.normal::<f64>().to_f() * std)).collect();
    Tensor::from_vec(shape, data).expect("he_init shape")
}

/// One-cycle schedule: cosine rise from lr_max/div to lr_max over the
/// first pct_up of steps, cosine fall to lr_max/(div·final_div) over the
/// rest. Momentum mirrors inversely between mom_high (at both ends) and
/// mom_low (at the lr peak).
#[derive(Clone, Debug, PartialEq)]
pub struct OneCycleSpec {
    pub lr_max: f64,
    pub total_steps: usize,
    pub pct_up: f64,
    pub div: f64,
    pub final_div: f64,
    pub mom_high: f64,
    pub mom_low: f64,
}

impl OneCycleSpec {
    /// Module defaults: pct_up 0.3, div 25, final_div 1e4, momentum
    /// cycling 0.8 → 0.7 → 0.8.
    pub fn new(lr_max: f64, total_steps: usize) -> Result<Self> {
        let spec = OneCycleSpec {
            lr_max,
            total_steps,
            pct_up: 0.3,
            div: 25.0,
            final_div: 1e4,
            mom_high: 0.8,
            mom_low: 0.7,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lr_max <= 0.0
            || self.total_steps < 2
            || !(0.0 < self.pct_up && self.pct_up < 1.0)
            || self.div <= 1.0
            || self.final_div <= 1.0
        {
            return Err(Error::Config(alloc::format!(
                "one-cycle spec out of range: lr_max {}, total {}, pct_up {}, div {}, final_div {}",
                self.lr_max,
                self.total_steps,
                self.pct_up,
                self.div,
                self.final_div
            )));
        }
        Ok(())
    }

    /// Step index of the lr peak: round(pct_up · total), clamped so both
    /// phases are non-empty.
    pub fn peak_step(&self) -> usize {
        let raw = (self.pct_up * self.total_steps as f64).round() as usize;
        raw.clamp(1, self.total_steps - 1)
    }
}

/// (learning rate, momentum) at `step` ∈ [0, total_steps].
pub fn one_cycle(step: usize, spec: &OneCycleSpec) -> Result<(f64, f64)> {
    if step > spec.total_steps {
        return Err(Error::Config(alloc::format!(
            "one_cycle: step {step} past total {}",
            spec.total_steps
        )));
    }
    let peak = spec.peak_step();
    let lr_start = spec.lr_max / spec.div;
    let lr_final = spec.lr_max / (spec.div * spec.final_div);
    // Cosine interpolation from a to b as x goes 0 -> 1. The convex
    // combination (not a + (b-a)·w) keeps both endpoints exact even
    // when a and b differ by many orders of magnitude.
    let anneal = |a: f64, b: f64, x: f64| {
        let w = (1.0 - (core::f64::consts::PI * x).cos()) / 2.0;
        a * (1.0 - w) + b * w
    };
    let (lr, mom) = if step <= peak {
        let x = step as f64 / peak as f64;
        (
            anneal(lr_start, spec.lr_max, x),
            anneal(spec.mom_high, spec.mom_low, x),
        )
    } else {
        let x = (step - peak) as f64 / (spec.total_steps - peak) as f64;
        (
            anneal(spec.lr_max, lr_final, x),
            anneal(spec.mom_low, spec.mom_high, x),
        )
    };
    Ok((lr, mom))
}

/// Fixed Adam hyper-parameters (β1 arrives per step from the momentum
/// schedule).
#[derive(Clone, Debug, PartialEq)]
pub struct AdamParams {
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    /// true = decoupled (AdamW) decay; false = classic L2 added to the
    /// gradient before the moment updates (ablation flag).
    pub decoupled_decay: bool,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            beta2: 0.99,
            eps: 1e-8,
            weight_decay: 1e-2,
            decoupled_decay: true,
        }
    }
}

/// Per-parameter moment buffers plus the step counter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T: Real> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub t: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![T::zero(); len],
            v: vec![T::zero(); len],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update of `param` in place, consuming its
/// accumulated gradient (a missing gradient counts as zero). Bias
/// correction uses the current β1, the convention when β1 follows a
/// schedule.
pub fn adam_step<T: Real>(
    param: &Tensor<T>,
    state: &mut AdamState<T>,
    lr: f64,
    beta1: f64,
    opts: &AdamParams,
) -> Result<()> {
    let n = param.len();
    if state.m.len() != n || state.v.len() != n {
        return Err(Error::Train(alloc::format!(
            "adam_step: state sized {} for parameter of {}",
            state.m.len(),
            n
        )));
    }
    let grad = param.grad();
    if let Some(g) = &grad {
        if g.len() != n {
            return Err(Error::Train(alloc::format!(
                "adam_step: grad length {} vs parameter {}",
                g.len(),
                n
            )));
        }
    }
    state.t += 1;
    let b1 = T::from_f(beta1);
    let b2 = T::from_f(opts.beta2);
    let one = T::one();
    let corr1 = T::from_f(1.0 - beta1.powi(state.t as i32));
    let corr2 = T::from_f(1.0 - opts.beta2.powi(state.t as i32));
    let lr_t = T::from_f(lr);
    let eps = T::from_f(opts.eps);
    let lam = T::from_f(opts.weight_decay);
    let decay_mul = T::from_f(1.0 - lr * opts.weight_decay);

    param.update_data(|p| {
        for i in 0..n {
            let mut g = grad.as_ref().map_or(T::zero(), |g| g[i]);
            if !opts.decoupled_decay && opts.weight_decay != 0.0 {
                g += lam * p[i];
            }
            state.m[i] = b1 * state.m[i] + (one - b1) * g;
            state.v[i] = b2 * state.v[i] + (one - b2) * g * g;
            let m_hat = state.m[i] / corr1;
            let v_hat = state.v[i] / corr2;
            if opts.decoupled_decay && opts.weight_decay != 0.0 {
                p[i] *= decay_mul;
            }
            p[i] -= lr_t * m_hat / (v_hat.sqrt() + eps);
        }
    });
    Ok(())
}
