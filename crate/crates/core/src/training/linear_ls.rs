use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frontend::SiDataset;
use crate::neuralnet::{Layout, ModelArch, ParamVector};

/// Relative ridge added to the Gram diagonal (scaled by its mean).
const RIDGE: f64 = 1e-9;

/// Least-squares complex FIR taps `h` minimizing
/// `Σ_{k∈range} |y[k] − Σ_i h_i x[k−i]|²` with zero history before index 0.
pub(crate) fn fit_fir(
    x: &[Complex64],
    y: &[Complex64],
    range: Range<usize>,
    len: usize,
) -> Result<Vec<Complex64>> {
    if range.len() <= len {
        return Err(Error::Argument(format!(
            "need more than {len} fitting samples, got {}",
            range.len()
        )));
    }
    let mut gram = DMatrix::<Complex64>::zeros(len, len);
    let mut rhs = DVector::<Complex64>::zeros(len);
    let mut phi = vec![Complex64::new(0.0, 0.0); len];
    for k in range {
        for (i, p) in phi.iter_mut().enumerate() {
            *p = if i <= k { x[k - i] } else { Complex64::new(0.0, 0.0) };
        }
        for i in 0..len {
            let ci = phi[i].conj();
            rhs[i] += ci * y[k];
            for j in i..len {
                gram[(i, j)] += ci * phi[j];
            }
        }
    }
    for i in 0..len {
        for j in 0..i {
            gram[(i, j)] = gram[(j, i)].conj();
        }
    }
    let mean_diag = (0..len).map(|i| gram[(i, i)].re).sum::<f64>() / len as f64;
    let ridge = RIDGE * mean_diag;
    for i in 0..len {
        gram[(i, i)] += Complex64::new(ridge, 0.0);
    }
    let chol = gram.cholesky().ok_or_else(|| {
        Error::Numerical("Gram matrix is not positive definite even with ridge".into())
    })?;
    let h = chol.solve(&rhs);
    if h.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::Numerical("least-squares solution is not finite".into()));
    }
    Ok(h.iter().copied().collect())
}

/// Closed-form linear premodel fitted on the training range, returned as
/// parameters of the linear architecture with `context_len` taps.
pub fn fit_linear_ls(dataset: &SiDataset, context_len: usize) -> Result<ParamVector> {
    let arch = ModelArch::linear(context_len);
    arch.validate()?;
    let taps = fit_fir(
        dataset.input.samples(),
        dataset.target.samples(),
        dataset.split.train.clone(),
        context_len,
    )?;
    Ok(ParamVector {
        values: taps.iter().flat_map(|t| [t.re, t.im]).collect(),
        layout: Layout::for_arch(&arch),
    })
}
