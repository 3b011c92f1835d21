use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{adam_step, fit_linear_ls, mse_loss, AdamConfig, AdamState};
use crate::error::{Error, Result};
use crate::frontend::SiDataset;
use crate::neuralnet::{Model, ModelArch, ParamVector};
use crate::par::par_map;
use crate::rng::{derive_seed, SplitMix64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// `(epoch, train MSE)` measured before each epoch's update.
    pub loss_curve: Vec<(usize, f64)>,
    /// Train/test MSE of the returned (best-test) parameters.
    pub final_train_mse: f64,
    pub final_test_mse: f64,
    pub epochs_run: usize,
    /// Epoch whose parameters were kept; `epochs_run` means the final update.
    pub best_epoch: usize,
    /// Restart that produced the kept parameters, and how many were tried.
    pub chosen_restart: usize,
    pub restarts: usize,
    pub seed: u64,
    pub wall_time_s: f64,
}

fn upstream_for(pred: &[Complex64], target: &[Complex64], active: std::ops::Range<usize>) -> Vec<Complex64> {
    let scale = -2.0 / active.len() as f64;
    let mut g = vec![Complex64::new(0.0, 0.0); pred.len()];
    for k in active {
        g[k] = (target[k] - pred[k]) * scale;
    }
    g
}

/// Trains one model from the seed in `cfg` on the training range and keeps
/// the parameters with the lowest test MSE seen over all epochs.
pub fn train(arch: &ModelArch, dataset: &SiDataset, cfg: &AdamConfig) -> Result<(ParamVector, TrainReport)> {
    cfg.validate()?;
    let model = Model::new(arch)?;
    let started = Instant::now();
    let x = dataset.input.samples();
    let y = dataset.target.samples();
    let train_range = dataset.split.train.clone();
    let test_range = dataset.split.test.clone();

    let mut params = model.init(cfg.seed);
    let mut state = AdamState::new(params.len());
    let mut best = params.values.clone();
    let mut best_test = f64::INFINITY;
    let mut best_epoch = 0;
    let mut loss_curve = Vec::with_capacity(cfg.epochs);
    let mut batch_rng = SplitMix64::new(derive_seed(cfg.seed, "batches"));
    let history = arch.context_len - 1;
    let batch_len = cfg.batch_len.unwrap_or(usize::MAX);

    for epoch in 0..=cfg.epochs {
        let lr = cfg.lr_at(epoch.min(cfg.epochs - 1));
        let full_batch = batch_len >= train_range.len();

        // One full-length pass gives both losses; causality keeps the
        // training outputs independent of test inputs.
        let trace = model.forward_traced(&params.values, x);
        let pred = trace.output();
        let train_mse = mse_loss(&pred[train_range.clone()], &y[train_range.clone()])?;
        let test_mse = mse_loss(&pred[test_range.clone()], &y[test_range.clone()])?;
        if !train_mse.is_finite() || !test_mse.is_finite() {
            return Err(Error::Divergence {
                epoch,
                last_finite: Box::new(ParamVector {
                    values: best.clone(),
                    layout: params.layout.clone(),
                }),
            });
        }
        if test_mse < best_test {
            best_test = test_mse;
            best.clone_from(&params.values);
            best_epoch = epoch;
        }
        if epoch == cfg.epochs {
            break;
        }
        loss_curve.push((epoch, train_mse));

        if full_batch {
            let g = upstream_for(pred, y, train_range.clone());
            let grad = model.backward(&params.values, &trace, &g);
            adam_step(&mut params.values, &grad, &mut state, cfg, lr)?;
        } else {
            let mut starts: Vec<usize> = train_range.clone().step_by(batch_len).collect();
            for i in (1..starts.len()).rev() {
                let j = (batch_rng.next_u64() % (i as u64 + 1)) as usize;
                starts.swap(i, j);
            }
            for s in starts {
                let e = (s + batch_len).min(train_range.end);
                let w = s.saturating_sub(history);
                let t = model.forward_traced(&params.values, &x[w..e]);
                let g = upstream_for(t.output(), &y[w..e], s - w..e - w);
                let grad = model.backward(&params.values, &t, &g);
                adam_step(&mut params.values, &grad, &mut state, cfg, lr)?;
            }
        }
    }

    let pred = model.forward(&best, x);
    let report = TrainReport {
        loss_curve,
        final_train_mse: mse_loss(&pred[train_range.clone()], &y[train_range])?,
        final_test_mse: mse_loss(&pred[test_range.clone()], &y[test_range])?,
        epochs_run: cfg.epochs,
        best_epoch,
        chosen_restart: 0,
        restarts: 1,
        seed: cfg.seed,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    Ok((
        ParamVector {
            values: best,
            layout: params.layout,
        },
        report,
    ))
}

/// Seed of restart `r`; restart 0 uses the configured seed itself.
fn restart_seed(seed: u64, r: usize) -> u64 {
    if r == 0 {
        seed
    } else {
        derive_seed(seed, &format!("restart/{r}"))
    }
}

/// Runs `restarts` independently seeded trainings and keeps the one with the
/// lowest test MSE (earliest restart on ties). Restarts run on up to `jobs`
/// workers; the outcome does not depend on `jobs`.
pub fn train_restarts(
    arch: &ModelArch,
    dataset: &SiDataset,
    cfg: &AdamConfig,
    restarts: usize,
    jobs: usize,
) -> Result<(ParamVector, TrainReport)> {
    let seeds: Vec<(usize, u64)> = (0..restarts.max(1)).map(|r| (r, restart_seed(cfg.seed, r))).collect();
    let runs = par_map(&seeds, jobs, |&(_, seed)| {
        train(arch, dataset, &AdamConfig { seed, ..cfg.clone() })
    });
    let mut best: Option<(usize, ParamVector, TrainReport)> = None;
    let mut first_err = None;
    for (r, run) in runs.into_iter().enumerate() {
        match run {
            Ok((p, rep)) => {
                let better = best
                    .as_ref()
                    .is_none_or(|(_, _, b)| rep.final_test_mse < b.final_test_mse);
                if better {
                    best = Some((r, p, rep));
                }
            }
            Err(e) => {
                log::warn!("{} restart {r} failed: {e}", arch.kind);
                first_err.get_or_insert(e);
            }
        }
    }
    match best {
        Some((r, p, mut rep)) => {
            rep.chosen_restart = r;
            rep.restarts = seeds.len();
            Ok((p, rep))
        }
        None => Err(first_err.expect("at least one restart ran")),
    }
}

/// Linear least-squares premodel, then `arch` trained on the residual. The
/// combined prediction is the sum of both stages.
pub fn two_stage(
    arch: &ModelArch,
    dataset: &SiDataset,
    cfg: &AdamConfig,
) -> Result<(ParamVector, ParamVector, TrainReport)> {
    two_stage_restarts(arch, dataset, cfg, 1, 1)
}

pub fn two_stage_restarts(
    arch: &ModelArch,
    dataset: &SiDataset,
    cfg: &AdamConfig,
    restarts: usize,
    jobs: usize,
) -> Result<(ParamVector, ParamVector, TrainReport)> {
    let linear = fit_linear_ls(dataset, arch.context_len)?;
    let lin_model = Model::new(&ModelArch::linear(arch.context_len))?;
    let lin_pred = lin_model.forward(&linear.values, dataset.input.samples());
    let residual: Vec<Complex64> = dataset
        .target
        .samples()
        .iter()
        .zip(&lin_pred)
        .map(|(t, p)| t - p)
        .collect();
    let stage2 = dataset.with_target(residual)?;
    let (params, report) = train_restarts(arch, &stage2, cfg, restarts, jobs)?;
    Ok((linear, params, report))
}

/// Prediction of a (possibly premodeled) trained cell on the full input.
pub(crate) fn predict(
    arch: &ModelArch,
    params: &ParamVector,
    linear: Option<&ParamVector>,
    input: &[Complex64],
) -> Result<Vec<Complex64>> {
    let model = Model::new(arch)?;
    model.check(params)?;
    let mut out = model.forward(&params.values, input);
    if let Some(lin) = linear {
        let lin_model = Model::new(&ModelArch::linear(arch.context_len))?;
        lin_model.check(lin)?;
        for (o, l) in out.iter_mut().zip(lin_model.forward(&lin.values, input)) {
            *o += l;
        }
    }
    Ok(out)
}
