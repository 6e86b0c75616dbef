//! Central finite-difference gradient checking in 64-bit arithmetic.

use crate::error::Result;
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug)]
pub struct GradCheck {
    pub step: f64,
    /// Maximum accepted relative error.
    pub rel_tol: f64,
    /// Below this analytic magnitude elements are compared absolutely.
    pub abs_floor: f64,
    /// Skip elements whose perturbation moves any ReLU or max-pool onto
    /// another branch, where central differences average across a kink.
    pub skip_kinks: bool,
}

impl Default for GradCheck {
    fn default() -> Self {
        GradCheck {
            step: 1e-4,
            rel_tol: 1e-3,
            abs_floor: 1e-6,
            skip_kinks: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    /// Largest error over all checked elements, relative where the analytic
    /// value exceeds the floor and absolute (scaled by the floor) otherwise.
    pub max_error: f64,
    /// (input index, element index) of the largest error.
    pub worst: Option<(usize, usize)>,
    pub checked: usize,
    /// Elements left out because of a kink crossing.
    pub skipped: usize,
    pub passed: bool,
}

impl GradCheck {
    /// Compares the tape gradient of `loss(inputs)` with central differences
    /// for every element of every input.
    pub fn run<F>(&self, inputs: &[Tensor<f64>], loss: F) -> Result<GradCheckReport>
    where
        F: for<'t> Fn(&'t Tape<f64>, &[Var<'t, f64>]) -> Result<Var<'t, f64>>,
    {
        let new_tape = || if self.skip_kinks { Tape::with_branch_log() } else { Tape::new() };
        let (analytic, branches): (Vec<Tensor<f64>>, _) = {
            let tape = new_tape();
            let vars: Vec<_> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
            let out = loss(&tape, &vars)?;
            let grads = tape.backward(out)?;
            (vars.iter().map(|&v| grads.get_or_zero(v)).collect(), tape.branch_log())
        };
        let eval = |inputs: &[Tensor<f64>]| -> Result<(f64, bool)> {
            let tape = new_tape();
            let vars: Vec<_> = inputs.iter().map(|t| tape.constant(t.clone())).collect();
            let value = loss(&tape, &vars)?.item();
            Ok((value, tape.branch_log() == branches))
        };

        let mut work: Vec<Tensor<f64>> = inputs.to_vec();
        let mut report = GradCheckReport {
            max_error: 0.0,
            worst: None,
            checked: 0,
            skipped: 0,
            passed: true,
        };
        for (k, grad) in analytic.iter().enumerate() {
            for i in 0..work[k].len() {
                let orig = work[k].data()[i];
                work[k].data_mut()[i] = orig + self.step;
                let (plus, same_plus) = eval(&work)?;
                work[k].data_mut()[i] = orig - self.step;
                let (minus, same_minus) = eval(&work)?;
                work[k].data_mut()[i] = orig;
                if !(same_plus && same_minus) {
                    report.skipped += 1;
                    continue;
                }
                let numeric = (plus - minus) / (2.0 * self.step);
                let a = grad.data()[i];
                let err = if a.abs() < self.abs_floor {
                    // Scaled so that the same tolerance applies to both regimes.
                    (a - numeric).abs() / self.abs_floor * self.rel_tol
                } else {
                    (a - numeric).abs() / a.abs().max(numeric.abs())
                };
                report.checked += 1;
                if err > report.max_error || report.worst.is_none() {
                    report.max_error = err;
                    report.worst = Some((k, i));
                }
            }
        }
        report.passed = report.max_error < self.rel_tol;
        Ok(report)
    }
}
