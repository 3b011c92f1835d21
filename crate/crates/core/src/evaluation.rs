//! Self-interference attenuation and the model × dataset × premodeling grid.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontend::{Provenance, SiDataset};
use crate::neuralnet::{count_macs, count_params, ModelArch, ModelKind, ParamVector};
use crate::par::par_map;
use crate::rng::derive_seed;
use crate::training::{predict, train_restarts, two_stage_restarts, AdamConfig, TrainReport};

/// Reported SIA when the residual vanishes.
pub const SIA_CAP_DB: f64 = 120.0;

/// `10·log10(Σ|target|² / Σ|target − pred|²)`, capped at [`SIA_CAP_DB`].
pub fn sia(target: &[Complex64], pred: &[Complex64]) -> Result<f64> {
    if target.len() != pred.len() {
        return Err(Error::LengthMismatch {
            what: "SIA target vs prediction",
            left: target.len(),
            right: pred.len(),
        });
    }
    let signal: f64 = target.iter().map(|t| t.norm_sqr()).sum();
    if signal == 0.0 {
        return Err(Error::UndefinedMetric("SIA of an all-zero target"));
    }
    let residual: f64 = target.iter().zip(pred).map(|(t, p)| (t - p).norm_sqr()).sum();
    if residual == 0.0 {
        return Ok(SIA_CAP_DB);
    }
    Ok((10.0 * (signal / residual).log10()).min(SIA_CAP_DB))
}

/// SIA over the dataset's test range for a full-length prediction.
pub fn sia_on_test(dataset: &SiDataset, pred: &[Complex64]) -> Result<f64> {
    let r = dataset.split.test.clone();
    if pred.len() != dataset.len() {
        return Err(Error::LengthMismatch {
            what: "prediction vs dataset",
            left: pred.len(),
            right: dataset.len(),
        });
    }
    sia(&dataset.target.samples()[r.clone()], &pred[r])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetId {
    Hammerstein,
    Wiener,
    /// Weak PA nonlinearity over a line-of-sight channel.
    NearLinear,
    Recorded,
}

impl DatasetId {
    pub const ALL: [DatasetId; 4] = [
        DatasetId::Recorded,
        DatasetId::Hammerstein,
        DatasetId::Wiener,
        DatasetId::NearLinear,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DatasetId::Hammerstein => "hammerstein",
            DatasetId::Wiener => "wiener",
            DatasetId::NearLinear => "near_linear",
            DatasetId::Recorded => "recorded",
        }
    }

    pub fn provenance(&self) -> Provenance {
        match self {
            DatasetId::Hammerstein | DatasetId::NearLinear => Provenance::Hammerstein,
            DatasetId::Wiener => Provenance::Wiener,
            DatasetId::Recorded => Provenance::Recorded,
        }
    }
}

impl fmt::Display for DatasetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DatasetId::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| Error::Argument(format!("unknown dataset '{s}'")))
    }
}

/// Training budget for one cell. The Adam seed is overwritten per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellConfig {
    pub adam: AdamConfig,
    pub restarts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub final_train_mse: f64,
    pub final_test_mse: f64,
    pub restarts: usize,
    pub chosen_restart: usize,
    pub lr: f64,
    pub wall_time_s: f64,
}

impl TrainSummary {
    fn from_report(r: &TrainReport, cfg: &AdamConfig) -> Self {
        Self {
            epochs_run: r.epochs_run,
            best_epoch: r.best_epoch,
            final_train_mse: r.final_train_mse,
            final_test_mse: r.final_test_mse,
            restarts: r.restarts,
            chosen_restart: r.chosen_restart,
            lr: cfg.lr,
            wall_time_s: r.wall_time_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_kind: ModelKind,
    pub dataset: DatasetId,
    pub dataset_provenance: Provenance,
    pub premodeling: bool,
    /// Test-range SIA; `None` when the cell failed.
    pub sia_db: Option<f64>,
    pub param_count: usize,
    /// Extra parameters of the linear premodel, zero without premodeling.
    pub premodel_param_count: usize,
    pub gmacs_computed: f64,
    pub gmacs_published: Option<f64>,
    pub seed: u64,
    pub train: Option<TrainSummary>,
    pub error: Option<String>,
}

impl EvalReport {
    pub fn key(&self) -> (ModelKind, DatasetId, bool) {
        (self.model_kind, self.dataset, self.premodeling)
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Trains one cell and measures its test SIA. Training failures are
/// recorded in the report rather than returned.
pub fn evaluate_cell(
    arch: &ModelArch,
    dataset_id: DatasetId,
    dataset: &SiDataset,
    premodeling: bool,
    cfg: &CellConfig,
    jobs: usize,
) -> EvalReport {
    evaluate_cell_trained(arch, dataset_id, dataset, premodeling, cfg, jobs).0
}

/// Fitted parameters of a cell: the optional linear premodel and the model.
#[derive(Debug, Clone)]
pub struct TrainedCell {
    pub premodel: Option<ParamVector>,
    pub params: ParamVector,
}

/// [`evaluate_cell`] that also hands back the fitted parameters.
pub fn evaluate_cell_trained(
    arch: &ModelArch,
    dataset_id: DatasetId,
    dataset: &SiDataset,
    premodeling: bool,
    cfg: &CellConfig,
    jobs: usize,
) -> (EvalReport, Option<TrainedCell>) {
    let n_samples = dataset.len();
    let mut report = EvalReport {
        model_kind: arch.kind,
        dataset: dataset_id,
        dataset_provenance: dataset.provenance,
        premodeling,
        sia_db: None,
        param_count: count_params(arch),
        premodel_param_count: if premodeling {
            count_params(&ModelArch::linear(arch.context_len))
        } else {
            0
        },
        gmacs_computed: count_macs(arch, n_samples),
        gmacs_published: Some(arch.kind.published_gmacs()),
        seed: cfg.adam.seed,
        train: None,
        error: None,
    };

    let outcome = (|| -> Result<(f64, TrainReport, TrainedCell)> {
        let (linear, params, rep) = if premodeling {
            let (l, p, r) = two_stage_restarts(arch, dataset, &cfg.adam, cfg.restarts, jobs)?;
            (Some(l), p, r)
        } else {
            let (p, r) = train_restarts(arch, dataset, &cfg.adam, cfg.restarts, jobs)?;
            (None, p, r)
        };
        let pred = predict(arch, &params, linear.as_ref(), dataset.input.samples())?;
        let sia = sia_on_test(dataset, &pred)?;
        Ok((sia, rep, TrainedCell { premodel: linear, params }))
    })();

    match outcome {
        Ok((s, rep, trained)) => {
            report.sia_db = Some(s);
            report.train = Some(TrainSummary::from_report(&rep, &cfg.adam));
            (report, Some(trained))
        }
        Err(e) => {
            log::warn!("cell {}/{dataset_id}/premodel={premodeling} failed: {e}", arch.kind);
            report.error = Some(e.to_string());
            (report, None)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PremodelSelection {
    On,
    Off,
    Both,
}

impl PremodelSelection {
    pub fn flags(&self) -> Vec<bool> {
        match self {
            PremodelSelection::On => vec![true],
            PremodelSelection::Off => vec![false],
            PremodelSelection::Both => vec![false, true],
        }
    }
}

impl FromStr for PremodelSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "on" => Ok(Self::On),
            "off" => Ok(Self::Off),
            "both" => Ok(Self::Both),
            _ => Err(Error::Argument(format!("premodel must be on, off or both, got '{s}'"))),
        }
    }
}

/// Resolved grid: architectures, datasets, premodeling flags and per-kind
/// training budgets.
pub struct GridSpec<'a> {
    pub models: Vec<ModelArch>,
    pub datasets: Vec<(DatasetId, &'a SiDataset)>,
    pub premodel: PremodelSelection,
    pub training: &'a dyn Fn(ModelKind) -> CellConfig,
    pub seed: u64,
    pub jobs: usize,
}

/// Per-cell training seed derived from the global seed.
pub fn cell_seed(global: u64, kind: ModelKind, dataset: DatasetId, premodeling: bool) -> u64 {
    let flag = if premodeling { "premodel" } else { "plain" };
    derive_seed(global, &format!("train/{kind}/{dataset}/{flag}"))
}

/// Evaluates every cell, in model-major, then dataset, then flag order.
/// Cells run on up to `jobs` workers; results do not depend on `jobs`.
pub fn run_grid(spec: &GridSpec<'_>) -> Vec<EvalReport> {
    let mut cells = vec![];
    for arch in &spec.models {
        for &(id, ds) in &spec.datasets {
            for flag in spec.premodel.flags() {
                let mut cfg = (spec.training)(arch.kind);
                cfg.adam.seed = cell_seed(spec.seed, arch.kind, id, flag);
                cells.push((arch, id, ds, flag, cfg));
            }
        }
    }
    log::info!("evaluating {} cells on {} worker(s)", cells.len(), spec.jobs.max(1));
    par_map(&cells, spec.jobs, |(arch, id, ds, flag, cfg)| {
        let r = evaluate_cell(arch, *id, ds, *flag, cfg, 1);
        log::info!(
            "{:>18} {:>12} premodel={:<5} SIA {}",
            arch.kind.as_str(),
            id.as_str(),
            flag,
            r.sia_db.map_or("failed".to_string(), |s| format!("{s:.2} dB"))
        );
        r
    })
}

/// Flat CSV row; wall-clock time is left out so reruns are byte-identical.
#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    model: &'a str,
    dataset: &'a str,
    provenance: String,
    premodeling: bool,
    sia_db: Option<f64>,
    param_count: usize,
    premodel_param_count: usize,
    gmacs_computed: f64,
    gmacs_published: Option<f64>,
    epochs: Option<usize>,
    best_epoch: Option<usize>,
    restarts: Option<usize>,
    chosen_restart: Option<usize>,
    final_train_mse: Option<f64>,
    final_test_mse: Option<f64>,
    cell_seed: u64,
    global_seed: u64,
    config_hash: &'a str,
    sia_scope: &'a str,
    status: &'a str,
}

pub fn reports_to_csv(reports: &[EvalReport], config_hash: &str, global_seed: u64) -> Result<String> {
    let mut w = csv::Writer::from_writer(vec![]);
    for r in reports {
        let t = r.train.as_ref();
        w.serialize(CsvRow {
            model: r.model_kind.as_str(),
            dataset: r.dataset.as_str(),
            provenance: r.dataset_provenance.to_string(),
            premodeling: r.premodeling,
            sia_db: r.sia_db,
            param_count: r.param_count,
            premodel_param_count: r.premodel_param_count,
            gmacs_computed: r.gmacs_computed,
            gmacs_published: r.gmacs_published,
            epochs: t.map(|t| t.epochs_run),
            best_epoch: t.map(|t| t.best_epoch),
            restarts: t.map(|t| t.restarts),
            chosen_restart: t.map(|t| t.chosen_restart),
            final_train_mse: t.map(|t| t.final_train_mse),
            final_test_mse: t.map(|t| t.final_test_mse),
            cell_seed: r.seed,
            global_seed,
            config_hash,
            sia_scope: "test",
            status: if r.is_ok() { "ok" } else { "failed" },
        })
        .map_err(|e| Error::Serde(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Serde(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serde(e.to_string()))
}

/// Human-readable summary in the layout of the published comparison:
/// one row per model, one column per dataset, `plain (premodeled)` SIA.
pub fn format_table(reports: &[EvalReport]) -> String {
    let mut models: Vec<ModelKind> = vec![];
    let mut datasets: Vec<DatasetId> = vec![];
    for r in reports {
        if !models.contains(&r.model_kind) {
            models.push(r.model_kind);
        }
        if !datasets.contains(&r.dataset) {
            datasets.push(r.dataset);
        }
    }
    let cell = |m: ModelKind, d: DatasetId, flag: bool| -> String {
        reports
            .iter()
            .find(|r| r.key() == (m, d, flag))
            .map_or(String::from("-"), |r| {
                r.sia_db.map_or("fail".into(), |s| format!("{s:.1}"))
            })
    };
    let mut out = format!("{:<20}{:>8}{:>10}", "model", "#params", "GMACs");
    for d in &datasets {
        out.push_str(&format!("{:>22}", d.as_str()));
    }
    out.push('\n');
    for &m in &models {
        let arch_params = reports.iter().find(|r| r.model_kind == m).map_or(0, |r| r.param_count);
        let gmacs = reports.iter().find(|r| r.model_kind == m).map_or(0.0, |r| r.gmacs_computed);
        out.push_str(&format!("{:<20}{:>8}{:>10.5}", m.as_str(), arch_params, gmacs));
        for &d in &datasets {
            out.push_str(&format!("{:>22}", format!("{} ({})", cell(m, d, false), cell(m, d, true))));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = SplitMix64::new(seed);
        (0..n).map(|_| rng.complex_gaussian(1.0)).collect()
    }

    #[test]
    fn analytic_cases() {
        let t = random(100, 1);
        let zeros = vec![Complex64::new(0.0, 0.0); 100];
        assert!(sia(&t, &zeros).unwrap().abs() < 1e-12);
        assert_eq!(sia(&t, &t).unwrap(), SIA_CAP_DB);
        let half: Vec<_> = t.iter().map(|v| v * 0.5).collect();
        let expect = 10.0 * 4.0f64.log10();
        assert!((sia(&t, &half).unwrap() - expect).abs() < 1e-12);
        assert!((expect - 6.0206).abs() < 1e-4);
        assert!(matches!(sia(&zeros, &t), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn scale_invariant() {
        let t = random(200, 2);
        let p: Vec<_> = t.iter().zip(random(200, 3)).map(|(a, n)| a + n * 0.1).collect();
        let c = Complex64::new(-2.5, 0.7);
        let ts: Vec<_> = t.iter().map(|v| v * c).collect();
        let ps: Vec<_> = p.iter().map(|v| v * c).collect();
        assert!((sia(&t, &p).unwrap() - sia(&ts, &ps).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn more_noise_means_less_attenuation() {
        // Fraction of paired draws where the noisier prediction scores lower.
        let t = random(500, 4);
        let mut wins = 0;
        let trials = 200;
        for s in 0..trials {
            let n1 = random(500, 1000 + s);
            let n2 = random(500, 5000 + s);
            let p1: Vec<_> = t.iter().zip(&n1).map(|(a, n)| a + n * 0.1).collect();
            let p2: Vec<_> = p1.iter().zip(&n2).map(|(a, n)| a + n * 0.1).collect();
            if sia(&t, &p2).unwrap() < sia(&t, &p1).unwrap() {
                wins += 1;
            }
        }
        assert!(wins as f64 / trials as f64 > 0.95);
    }

    #[test]
    fn selections() {
        assert_eq!(PremodelSelection::Both.flags(), vec![false, true]);
        assert_eq!("off".parse::<PremodelSelection>().unwrap(), PremodelSelection::Off);
        assert!("maybe".parse::<PremodelSelection>().is_err());
        for d in DatasetId::ALL {
            assert_eq!(d.as_str().parse::<DatasetId>().unwrap(), d);
        }
    }
}
