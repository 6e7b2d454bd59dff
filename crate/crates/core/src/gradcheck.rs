//! Central finite-difference gradient checking, 64-bit only.
//!
//! `grad_check` runs the function once through a live tape for analytic
//! gradients, then perturbs every input element by ±h and compares. The
//! relative error uses the max(1, |a|, |n|) denominator so near-zero
//! gradients are compared absolutely instead of blowing up the ratio.

use alloc::vec::Vec;

use crate::tape::GradTape;
use crate::tensor::Tensor;

pub const STEP: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub passed: bool,
    /// (input index, element index) of the worst disagreement.
    pub worst: Option<(usize, usize)>,
    pub checked_elements: usize,
}

/// Compare analytic and numeric gradients of a scalar-valued function.
///
/// `f` must be deterministic across calls (fix any RNG per call) and is
/// invoked with a live tape once, then with disabled tapes 2·N more
/// times. Inputs the caller wants checked must be `requires_grad`.
pub fn grad_check<F>(f: F, inputs: &[Tensor<f64>], tol: f64) -> GradCheckReport
where
    F: Fn(&GradTape<f64>, &[Tensor<f64>]) -> Tensor<f64>,
{
    let tape = GradTape::new();
    let loss = f(&tape, inputs);
    tape.backward(&loss).expect("grad_check backward");
    let analytic: Vec<Vec<f64>> = inputs
        .iter()
        .map(|t| t.grad().unwrap_or_else(|| alloc::vec![0.0; t.len()]))
        .collect();
    for t in inputs {
        t.zero_grad();
    }

    let eval = |inputs: &[Tensor<f64>]| -> f64 {
        let tape = GradTape::disabled();
        f(&tape, inputs).item()
    };

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        passed: true,
        worst: None,
        checked_elements: 0,
    };
    for (i, t) in inputs.iter().enumerate() {
        for j in 0..t.len() {
            let orig = t.data()[j];
            t.update_data(|d| d[j] = orig + STEP);
            let plus = eval(inputs);
            t.update_data(|d| d[j] = orig - STEP);
            let minus = eval(inputs);
            t.update_data(|d| d[j] = orig);

            let numeric = (plus - minus) / (2.0 * STEP);
            let a = analytic[i][j];
            let rel = (a - numeric).abs() / 1.0_f64.max(a.abs()).max(numeric.abs());
            report.checked_elements += 1;
            if rel > report.max_rel_err {
                report.max_rel_err = rel;
                report.worst = Some((i, j));
            }
        }
    }
    report.passed = report.max_rel_err <= tol;
    report
}
