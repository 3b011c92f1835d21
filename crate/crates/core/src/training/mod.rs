//! Fitting: MSE loss on complex residuals, Adam, the full-batch training
//! loop with best-test checkpointing, closed-form least-squares premodels,
//! two-stage (linear then nonlinear) training and gradient checking.

mod adam;
mod gradcheck;
mod linear_ls;
mod loop_;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{gradient_check, GradCheckReport};
pub use linear_ls::fit_linear_ls;
pub use loop_::{train, train_restarts, two_stage, two_stage_restarts, TrainReport};
pub(crate) use loop_::predict;

/// `(1/N) Σ |target − pred|²`.
pub fn mse_loss(pred: &[Complex64], target: &[Complex64]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::LengthMismatch {
            what: "prediction vs target",
            left: pred.len(),
            right: target.len(),
        });
    }
    if pred.is_empty() {
        return Ok(0.0);
    }
    Ok(pred
        .iter()
        .zip(target)
        .map(|(p, t)| (t - p).norm_sqr())
        .sum::<f64>()
        / pred.len() as f64)
}
