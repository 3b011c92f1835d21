use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evaluation::{CellConfig, DatasetId, PremodelSelection};
use crate::frontend::{AdParams, ChannelProfile, PaParams};
use crate::neuralnet::{ModelKind, DEFAULT_CONTEXT_LEN};
use crate::signal::{OfdmConfig, WelchConfig};
use crate::training::AdamConfig;

/// Every tunable constant of an experiment. Missing keys take defaults;
/// `fdsic init` prints the complete file.
///
/// Sub-seeds are derived from `seed` by label (see [`crate::rng`]):
/// `ofdm/<dataset>`, `channel`, `noise/<dataset>` for data and
/// `train/<model>/<dataset>/<plain|premodel>` for training cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub jobs: usize,
    pub out_dir: String,
    pub ofdm: OfdmConfig,
    pub pa: PaParams,
    pub ad: AdParams,
    pub channel: ChannelSection,
    pub noise: NoiseSection,
    pub test_fraction: f64,
    pub near_linear: NearLinearSection,
    pub welch: WelchConfig,
    pub grid: GridSection,
    pub training: TrainingTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub profile: ChannelProfile,
    pub taps: usize,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            profile: ChannelProfile::default(),
            taps: DEFAULT_CONTEXT_LEN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    /// Power of the noiseless SI over receiver noise power, in dB.
    pub si_to_noise_db: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            si_to_noise_db: 60.0,
        }
    }
}

/// Weakly nonlinear Hammerstein data over a line-of-sight channel, standing
/// in for nearly linear recordings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NearLinearSection {
    pub pa: PaParams,
    pub profile: ChannelProfile,
    pub si_to_noise_db: f64,
}

impl Default for NearLinearSection {
    fn default() -> Self {
        Self {
            pa: PaParams { f: 10.0, c_f: 0.1 },
            profile: ChannelProfile::Dirac,
            si_to_noise_db: 60.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub models: Vec<ModelKind>,
    pub datasets: Vec<DatasetId>,
    pub premodel: PremodelSelection,
    pub context_len: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            models: ModelKind::ALL.to_vec(),
            datasets: vec![DatasetId::Hammerstein, DatasetId::Wiener],
            premodel: PremodelSelection::Both,
            context_len: DEFAULT_CONTEXT_LEN,
        }
    }
}

/// Per-model training budget as written in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSection {
    pub lr: f64,
    pub final_lr_fraction: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub epochs: usize,
    pub batch_len: Option<usize>,
    pub restarts: usize,
}

impl Default for TrainingSection {
    fn default() -> Self {
        let a = AdamConfig::default();
        Self {
            lr: a.lr,
            final_lr_fraction: a.final_lr_fraction,
            beta1: a.beta1,
            beta2: a.beta2,
            eps: a.eps,
            epochs: a.epochs,
            batch_len: a.batch_len,
            restarts: 1,
        }
    }
}

impl TrainingSection {
    fn with(lr: f64, final_lr_fraction: f64, epochs: usize, batch_len: Option<usize>, restarts: usize) -> Self {
        Self {
            lr,
            final_lr_fraction,
            epochs,
            batch_len,
            restarts,
            ..Self::default()
        }
    }

    pub fn cell_config(&self) -> CellConfig {
        CellConfig {
            adam: AdamConfig {
                lr: self.lr,
                beta1: self.beta1,
                beta2: self.beta2,
                eps: self.eps,
                epochs: self.epochs,
                batch_len: self.batch_len,
                final_lr_fraction: self.final_lr_fraction,
                seed: 0,
            },
            restarts: self.restarts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingTable {
    pub linear: TrainingSection,
    pub hammerstein: TrainingSection,
    pub wiener: TrainingSection,
    pub wiener_hammerstein: TrainingSection,
    pub ffnn: TrainingSection,
}

impl Default for TrainingTable {
    fn default() -> Self {
        Self {
            linear: TrainingSection::with(5e-2, 0.01, 500, None, 1),
            hammerstein: TrainingSection::with(1e-2, 0.01, 300, Some(250), 1),
            wiener: TrainingSection::with(1e-2, 0.01, 300, Some(250), 1),
            wiener_hammerstein: TrainingSection::with(3e-3, 0.03, 600, Some(250), 3),
            ffnn: TrainingSection::with(1e-2, 0.01, 300, Some(250), 1),
        }
    }
}

impl TrainingTable {
    pub fn for_kind(&self, kind: ModelKind) -> &TrainingSection {
        match kind {
            ModelKind::Linear => &self.linear,
            ModelKind::Hammerstein => &self.hammerstein,
            ModelKind::Wiener => &self.wiener,
            ModelKind::WienerHammerstein => &self.wiener_hammerstein,
            ModelKind::Ffnn => &self.ffnn,
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            jobs: 1,
            out_dir: "out".into(),
            ofdm: OfdmConfig::default(),
            pa: PaParams::default(),
            ad: AdParams::default(),
            channel: ChannelSection::default(),
            noise: NoiseSection::default(),
            test_fraction: crate::frontend::DEFAULT_TEST_FRACTION,
            near_linear: NearLinearSection::default(),
            welch: WelchConfig::default(),
            grid: GridSection::default(),
            training: TrainingTable::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.ofdm.validate()?;
        self.pa.validate()?;
        self.near_linear.pa.validate()?;
        self.ad.validate()?;
        if self.channel.taps == 0 || self.grid.context_len == 0 {
            return Err(Error::Config("channel taps and context_len must be positive".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config("test_fraction must lie in (0, 1)".into()));
        }
        if !self.noise.si_to_noise_db.is_finite() || !self.near_linear.si_to_noise_db.is_finite() {
            return Err(Error::Config("si_to_noise_db must be finite".into()));
        }
        for kind in ModelKind::ALL {
            let t = self.training.for_kind(kind);
            t.cell_config().adam.validate()?;
            if t.restarts == 0 {
                return Err(Error::Config(format!("training.{kind}: restarts must be ≥ 1")));
            }
        }
        Ok(())
    }

    /// First 16 hex digits of SHA-256 over the canonical JSON encoding.
    /// `jobs` and `out_dir` do not affect results and are excluded.
    pub fn hash(&self) -> String {
        let canonical = Self {
            jobs: 0,
            out_dir: String::new(),
            ..self.clone()
        };
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(&Sha256::digest(&json)[..8])
    }

    pub fn cell_config(&self, kind: ModelKind) -> CellConfig {
        self.training.for_kind(kind).cell_config()
    }
}
