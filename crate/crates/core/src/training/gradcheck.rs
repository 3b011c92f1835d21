use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::neuralnet::{Model, ModelArch};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub n_params: usize,
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

/// Floor on the relative-error denominator so that exactly-zero gradients
/// (dead ReLU units) compare against finite-difference round-off.
const DENOM_FLOOR: f64 = 1e-5;
const STEP: f64 = 1e-6;

/// Compares analytic MSE-loss gradients with central differences
/// (step 1e-6) on `n` random complex samples and random parameters.
pub fn gradient_check(arch: &ModelArch, n: usize, seed: u64) -> Result<GradCheckReport> {
    let model = Model::new(arch)?;
    let mut rng = SplitMix64::new(seed);
    let x: Vec<Complex64> = (0..n).map(|_| rng.complex_gaussian(1.0)).collect();
    let y: Vec<Complex64> = (0..n).map(|_| rng.complex_gaussian(1.0)).collect();
    let mut p = model.init(rng.next_u64()).values;
    for v in p.iter_mut() {
        *v += rng.uniform(-0.5, 0.5);
    }

    let loss = |p: &[f64]| -> f64 {
        let pred = model.forward(p, &x);
        pred.iter().zip(&y).map(|(a, b)| (b - a).norm_sqr()).sum::<f64>() / n as f64
    };
    let trace = model.forward_traced(&p, &x);
    let g: Vec<Complex64> = trace
        .output()
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - a) * (-2.0 / n as f64))
        .collect();
    let analytic = model.backward(&p, &trace, &g);

    let mut report = GradCheckReport {
        n_params: p.len(),
        max_rel_error: 0.0,
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
    };
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + STEP;
        let up = loss(&p);
        p[i] = orig - STEP;
        let down = loss(&p);
        p[i] = orig;
        let numeric = (up - down) / (2.0 * STEP);
        let a = analytic[i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(DENOM_FLOOR);
        if rel > report.max_rel_error || i == 0 {
            report.max_rel_error = rel.max(report.max_rel_error);
            report.worst_index = i;
            report.analytic = a;
            report.numeric = numeric;
        }
    }
    Ok(report)
}
