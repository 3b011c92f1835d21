//! Checkpoints: `<stem>.json` holds the architecture, layout and seed;
//! `<stem>.f64` holds the raw little-endian parameter values.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Layout, ModelArch, ParamVector};
use crate::error::{Error, Result};
use crate::harness::write_atomic;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub arch: ModelArch,
    pub layout: Layout,
    pub seed: u64,
    pub n_params: usize,
}

/// `<stem>.json` and `<stem>.f64`; dots already in the stem are kept.
fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    let with = |ext: &str| {
        let mut s = stem.as_os_str().to_owned();
        s.push(ext);
        PathBuf::from(s)
    };
    (with(".json"), with(".f64"))
}

pub fn save_checkpoint(stem: &Path, arch: &ModelArch, params: &ParamVector, seed: u64) -> Result<()> {
    params.check_against(&Layout::for_arch(arch))?;
    let (meta_path, raw_path) = paths(stem);
    let meta = Checkpoint {
        arch: arch.clone(),
        layout: params.layout.clone(),
        seed,
        n_params: params.len(),
    };
    let json = serde_json::to_vec_pretty(&meta).map_err(|e| Error::Serde(e.to_string()))?;
    let raw: Vec<u8> = params.values.iter().flat_map(|v| v.to_le_bytes()).collect();
    write_atomic(&raw_path, &raw)?;
    write_atomic(&meta_path, &json)
}

pub fn load_checkpoint(stem: &Path) -> Result<(Checkpoint, ParamVector)> {
    let (meta_path, raw_path) = paths(stem);
    let json = fs::read(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: Checkpoint = serde_json::from_slice(&json).map_err(|e| Error::MalformedHeader {
        path: meta_path.clone(),
        reason: e.to_string(),
    })?;
    let raw = fs::read(&raw_path).map_err(|e| Error::io(&raw_path, e))?;
    if raw.len() != meta.n_params * 8 {
        return Err(Error::Truncated {
            path: raw_path,
            expected: meta.n_params as u64 * 8,
            found: raw.len() as u64,
        });
    }
    let values = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let params = ParamVector {
        values,
        layout: meta.layout.clone(),
    };
    params.check_against(&Layout::for_arch(&meta.arch))?;
    Ok((meta, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralnet::init_params;

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let arch = ModelArch::wiener_hammerstein(13);
        let p = init_params(&arch, 4).unwrap();
        let stem = dir.path().join("wh");
        save_checkpoint(&stem, &arch, &p, 4).unwrap();
        let (meta, back) = load_checkpoint(&stem).unwrap();
        assert_eq!(meta.arch, arch);
        assert_eq!(meta.seed, 4);
        assert_eq!(back, p);
    }

    #[test]
    fn rejects_mismatched_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = init_params(&ModelArch::linear(13), 1).unwrap();
        let err = save_checkpoint(&dir.path().join("x"), &ModelArch::linear(12), &p, 1);
        assert!(matches!(err, Err(Error::Structural(_))));
    }
}
