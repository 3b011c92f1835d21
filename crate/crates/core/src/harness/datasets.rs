use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::ExperimentConfig;
use crate::error::{Error, Result};
use crate::evaluation::DatasetId;
use crate::frontend::{
    export_dataset, fir_filter, gen_hammerstein, gen_wiener, import_dataset, load_recording,
    make_channel, pa_apply, NoiseSpec, PaParams, RecordingFormat, SiDataset, Split,
};
use crate::rng::derive_seed;
use crate::signal::{generate_ofdm, mean_power, ComplexSeq, OfdmConfig, CS16K_MAGIC};

/// Paths of an externally recorded (transmit, received SI) pair.
#[derive(Debug, Clone)]
pub struct RealData {
    pub input: PathBuf,
    pub target: PathBuf,
}

impl RealData {
    /// `cs16k v1` when the input starts with the format magic, raw
    /// interleaved `f32` otherwise.
    pub fn load(&self) -> Result<SiDataset> {
        let head = std::fs::read(&self.input).map_err(|e| Error::io(&self.input, e))?;
        let format = if head.starts_with(CS16K_MAGIC) {
            RecordingFormat::Cs16k
        } else {
            RecordingFormat::RawF32
        };
        load_recording(&self.input, &self.target, format)
    }
}

fn transmit(cfg: &ExperimentConfig, id: DatasetId) -> Result<ComplexSeq> {
    generate_ofdm(&OfdmConfig {
        seed: derive_seed(cfg.seed, &format!("ofdm/{id}")),
        ..cfg.ofdm.clone()
    })
}

/// Everything that determines a synthetic dataset, hashed for the cache key.
#[derive(Serialize)]
struct DatasetKey<'a> {
    id: DatasetId,
    seed: u64,
    ofdm: &'a OfdmConfig,
    pa: Option<&'a PaParams>,
    ad: Option<&'a crate::frontend::AdParams>,
    channel: serde_json::Value,
    si_to_noise_db: f64,
    test_fraction: f64,
}

pub fn dataset_config_hash(cfg: &ExperimentConfig, id: DatasetId) -> String {
    let key = match id {
        DatasetId::Hammerstein | DatasetId::Wiener => DatasetKey {
            id,
            seed: cfg.seed,
            ofdm: &cfg.ofdm,
            pa: (id == DatasetId::Hammerstein).then_some(&cfg.pa),
            ad: (id == DatasetId::Wiener).then_some(&cfg.ad),
            channel: serde_json::to_value(&cfg.channel).expect("serializable"),
            si_to_noise_db: cfg.noise.si_to_noise_db,
            test_fraction: cfg.test_fraction,
        },
        DatasetId::NearLinear | DatasetId::Recorded => DatasetKey {
            id,
            seed: cfg.seed,
            ofdm: &cfg.ofdm,
            pa: Some(&cfg.near_linear.pa),
            ad: None,
            channel: serde_json::json!({ "profile": cfg.near_linear.profile, "taps": cfg.channel.taps }),
            si_to_noise_db: cfg.near_linear.si_to_noise_db,
            test_fraction: cfg.test_fraction,
        },
    };
    let json = serde_json::to_vec(&key).expect("serializable");
    hex::encode(&Sha256::digest(&json)[..8])
}

/// Synthetic dataset plus the receiver noise that went into it, as seen at
/// the model output (after LNA gain for Wiener data).
struct Synthesized {
    dataset: SiDataset,
    noise: Vec<Complex64>,
}

fn synthesize(cfg: &ExperimentConfig, id: DatasetId) -> Result<Synthesized> {
    let s = transmit(cfg, id)?;
    let split = Split::tail_fraction(s.len(), cfg.test_fraction)?;
    let noise_seed = derive_seed(cfg.seed, &format!("noise/{id}"));
    match id {
        DatasetId::Hammerstein | DatasetId::NearLinear => {
            let (pa, ch, snr) = if id == DatasetId::Hammerstein {
                let ch = make_channel(cfg.channel.profile, cfg.channel.taps, derive_seed(cfg.seed, "channel"))?;
                (cfg.pa, ch, cfg.noise.si_to_noise_db)
            } else {
                let nl = &cfg.near_linear;
                let ch = make_channel(nl.profile, cfg.channel.taps, derive_seed(cfg.seed, "channel"))?;
                (nl.pa, ch, nl.si_to_noise_db)
            };
            let driven: Vec<Complex64> = s.samples().iter().map(|&x| pa_apply(x, &pa)).collect();
            let clean_power = mean_power(&fir_filter(&driven, &ch.taps));
            let noise = NoiseSpec::relative_to(clean_power, snr, noise_seed);
            let dataset = gen_hammerstein(&s, &pa, &ch, &noise, split)?;
            Ok(Synthesized {
                noise: noise.draw(s.len()),
                dataset,
            })
        }
        DatasetId::Wiener => {
            let ch = make_channel(cfg.channel.profile, cfg.channel.taps, derive_seed(cfg.seed, "channel"))?;
            let clean_power = mean_power(&fir_filter(s.samples(), &ch.taps));
            let noise = NoiseSpec::relative_to(clean_power, cfg.noise.si_to_noise_db, noise_seed);
            let dataset = gen_wiener(&s, &ch, &cfg.ad, &noise, split)?;
            let alpha = cfg.ad.alpha;
            Ok(Synthesized {
                noise: noise.draw(s.len()).into_iter().map(|n| n * alpha).collect(),
                dataset,
            })
        }
        DatasetId::Recorded => Err(Error::Argument(
            "recorded data cannot be synthesized; pass --real-data".into(),
        )),
    }
}

/// Generates a synthetic dataset at the resolution of the on-disk format,
/// so generated and cached copies are identical.
pub fn build_dataset(cfg: &ExperimentConfig, id: DatasetId) -> Result<SiDataset> {
    Ok(synthesize(cfg, id)?.dataset.quantized_f32())
}

pub fn cache_stem(cfg: &ExperimentConfig, id: DatasetId) -> String {
    format!("{id}-{}", dataset_config_hash(cfg, id))
}

pub fn write_cache(cache_dir: &Path, cfg: &ExperimentConfig, id: DatasetId, ds: &SiDataset) -> Result<PathBuf> {
    let stem = cache_stem(cfg, id);
    export_dataset(cache_dir, &stem, ds)?;
    Ok(cache_dir.join(stem))
}

pub fn load_cached(cache_dir: &Path, cfg: &ExperimentConfig, id: DatasetId) -> Result<SiDataset> {
    import_dataset(cache_dir, &cache_stem(cfg, id))
}

/// Resolves the requested datasets in order. The recorded set is skipped
/// with a warning when no files are supplied.
pub fn resolve_datasets(
    cfg: &ExperimentConfig,
    ids: &[DatasetId],
    real: Option<&RealData>,
    cache_dir: Option<&Path>,
) -> Result<Vec<(DatasetId, SiDataset)>> {
    let mut out = vec![];
    for &id in ids {
        let ds = match (id, real, cache_dir) {
            (DatasetId::Recorded, Some(r), _) => r.load()?,
            (DatasetId::Recorded, None, _) => {
                log::warn!("no --real-data supplied; skipping the recorded dataset");
                continue;
            }
            (_, _, Some(dir)) => load_cached(dir, cfg, id)?,
            (_, _, None) => build_dataset(cfg, id)?,
        };
        out.push((id, ds));
    }
    Ok(out)
}

/// Named signals for spectral plots: transmit signal, each synthetic SI
/// target and its receiver noise floor.
pub fn psd_signals(cfg: &ExperimentConfig) -> Result<Vec<(String, ComplexSeq)>> {
    let mut out = vec![];
    for id in [DatasetId::Hammerstein, DatasetId::Wiener] {
        let syn = synthesize(cfg, id)?;
        if id == DatasetId::Hammerstein {
            out.push(("tx".to_string(), syn.dataset.input.clone()));
        }
        let rate = syn.dataset.target.sample_rate_hz();
        out.push((id.to_string(), syn.dataset.target.clone()));
        out.push((format!("noise_{id}"), ComplexSeq::new(syn.noise, rate)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.ofdm.n_symbols = 20;
        cfg
    }

    #[test]
    fn cache_round_trip_is_exact() {
        let cfg = small();
        let dir = tempfile::tempdir().unwrap();
        for id in [DatasetId::Hammerstein, DatasetId::Wiener, DatasetId::NearLinear] {
            let ds = build_dataset(&cfg, id).unwrap();
            write_cache(dir.path(), &cfg, id, &ds).unwrap();
            assert_eq!(load_cached(dir.path(), &cfg, id).unwrap(), ds);
        }
    }

    #[test]
    fn datasets_share_the_channel_but_not_the_signal() {
        let cfg = small();
        let h = build_dataset(&cfg, DatasetId::Hammerstein).unwrap();
        let w = build_dataset(&cfg, DatasetId::Wiener).unwrap();
        assert_ne!(h.input, w.input);
        assert_eq!(h.meta.seeds["channel"], w.meta.seeds["channel"]);
        assert_eq!(h.len(), 20 * 80);
    }

    #[test]
    fn hash_tracks_generating_parameters() {
        let a = small();
        let mut b = small();
        b.ad.c_g = 0.7;
        assert_eq!(
            dataset_config_hash(&a, DatasetId::Hammerstein),
            dataset_config_hash(&b, DatasetId::Hammerstein)
        );
        assert_ne!(
            dataset_config_hash(&a, DatasetId::Wiener),
            dataset_config_hash(&b, DatasetId::Wiener)
        );
    }

    #[test]
    fn recorded_is_skipped_without_files() {
        let cfg = small();
        let got = resolve_datasets(&cfg, &[DatasetId::Recorded, DatasetId::Wiener], None, None).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].0, DatasetId::Wiener);
    }
}
