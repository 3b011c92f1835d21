//! Baseband signals: the sample container, QPSK-OFDM transmit synthesis,
//! Welch PSD estimation and the `cs16k v1` file format.

mod io;
mod ofdm;
mod psd;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) use io::decode_f32_pairs;
pub use io::{read_cs16k, write_cs16k, CS16K_MAGIC, CS16K_VERSION};
pub use ofdm::{generate_ofdm, ofdm_symbols, OfdmConfig};
pub use psd::{welch_psd, PsdBin, WelchConfig};

/// Complex baseband samples with their sample rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexSeq {
    samples: Vec<Complex64>,
    sample_rate_hz: f64,
}

impl ComplexSeq {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Argument("sequence must contain at least one sample".into()));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::Argument(format!(
                "sample rate must be positive and finite, got {sample_rate_hz}"
            )));
        }
        if let Some(i) = samples.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Argument(format!("non-finite sample at index {i}")));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Same rate, new samples. Used for outputs of length-preserving stages.
    pub fn with_samples(&self, samples: Vec<Complex64>) -> Result<Self> {
        Self::new(samples, self.sample_rate_hz)
    }

    /// Rounds every component to `f32` precision, the resolution of the
    /// on-disk format.
    pub fn quantized_f32(&self) -> Self {
        let samples = self
            .samples
            .iter()
            .map(|z| Complex64::new(z.re as f32 as f64, z.im as f32 as f64))
            .collect();
        Self {
            samples,
            sample_rate_hz: self.sample_rate_hz,
        }
    }
}

/// `(1/N) Σ |x[k]|²`; zero for an empty slice.
pub fn mean_power(x: &[Complex64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|z| z.norm_sqr()).sum::<f64>() / x.len() as f64
}
