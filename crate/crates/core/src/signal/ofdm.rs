use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{mean_power, ComplexSeq};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// QPSK-OFDM numerology. Defaults follow a 20 MHz 802.11n-style channel:
/// 64-point FFT, 52 occupied subcarriers around an unused DC bin, 16-sample
/// cyclic prefix. 250 symbols give 20,000 samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OfdmConfig {
    pub n_subcarriers_total: usize,
    pub n_subcarriers_used: usize,
    pub cp_len: usize,
    pub n_symbols: usize,
    pub target_mean_power: f64,
    pub sample_rate_hz: f64,
    pub seed: u64,
}

impl Default for OfdmConfig {
    fn default() -> Self {
        Self {
            n_subcarriers_total: 64,
            n_subcarriers_used: 52,
            cp_len: 16,
            n_symbols: 250,
            target_mean_power: 1.0,
            sample_rate_hz: 20e6,
            seed: 0,
        }
    }
}

impl OfdmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_subcarriers_total == 0 || self.n_symbols == 0 || self.n_subcarriers_used == 0 {
            return Err(Error::Config(
                "ofdm: subcarrier counts and symbol count must be positive".into(),
            ));
        }
        if self.n_subcarriers_used > self.n_subcarriers_total - 1 {
            return Err(Error::Config(format!(
                "ofdm: {} used subcarriers do not fit in FFT size {} with DC unused",
                self.n_subcarriers_used, self.n_subcarriers_total
            )));
        }
        if !(self.target_mean_power.is_finite() && self.target_mean_power > 0.0) {
            return Err(Error::Config("ofdm: target_mean_power must be positive".into()));
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(Error::Config("ofdm: sample_rate_hz must be positive".into()));
        }
        Ok(())
    }

    pub fn symbol_len(&self) -> usize {
        self.n_subcarriers_total + self.cp_len
    }

    pub fn output_len(&self) -> usize {
        self.n_symbols * self.symbol_len()
    }

    /// FFT bin indices of the occupied subcarriers: `1..=⌈u/2⌉` above DC and
    /// the `⌊u/2⌋` bins just below it (wrapped to the top of the FFT).
    pub fn used_bins(&self) -> Vec<usize> {
        let n = self.n_subcarriers_total;
        let upper = self.n_subcarriers_used.div_ceil(2);
        let lower = self.n_subcarriers_used / 2;
        (1..=upper).chain(n - lower..n).collect()
    }
}

/// The frequency-domain QPSK grid, one row of `n_subcarriers_total` bins per
/// symbol, drawn from the config seed. Unused bins are zero.
pub fn ofdm_symbols(cfg: &OfdmConfig) -> Result<Vec<Vec<Complex64>>> {
    cfg.validate()?;
    let mut rng = SplitMix64::new(cfg.seed);
    let a = std::f64::consts::FRAC_1_SQRT_2;
    let bins = cfg.used_bins();
    let grid = (0..cfg.n_symbols)
        .map(|_| {
            let mut row = vec![Complex64::new(0.0, 0.0); cfg.n_subcarriers_total];
            for &b in &bins {
                let bits = rng.next_u64();
                let re = if bits & 1 == 0 { a } else { -a };
                let im = if bits & 2 == 0 { a } else { -a };
                row[b] = Complex64::new(re, im);
            }
            row
        })
        .collect();
    Ok(grid)
}

/// Synthesizes the QPSK-OFDM transmit signal, scaled to the configured mean
/// power.
pub fn generate_ofdm(cfg: &OfdmConfig) -> Result<ComplexSeq> {
    let grid = ofdm_symbols(cfg)?;
    let n = cfg.n_subcarriers_total;
    let ifft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_inverse(n);

    let mut out = Vec::with_capacity(cfg.output_len());
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for row in grid {
        buf.copy_from_slice(&row);
        ifft.process(&mut buf);
        out.extend_from_slice(&buf[n - cfg.cp_len..]);
        out.extend_from_slice(&buf);
    }

    let p = mean_power(&out);
    if p > 0.0 {
        let g = (cfg.target_mean_power / p).sqrt();
        out.iter_mut().for_each(|z| *z *= g);
    }
    ComplexSeq::new(out, cfg.sample_rate_hz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    // Independent O(N²) forward DFT.
    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(t, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (k * t) as f64 / n as f64))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn default_length_is_twenty_thousand() {
        let s = generate_ofdm(&OfdmConfig::default()).unwrap();
        assert_eq!(s.len(), 20_000);
    }

    #[test]
    fn normalized_to_target_power() {
        for (p, seed) in [(1.0, 1u64), (0.25, 2), (3.0, 3)] {
            let cfg = OfdmConfig {
                target_mean_power: p,
                n_symbols: 20,
                seed,
                ..OfdmConfig::default()
            };
            let s = generate_ofdm(&cfg).unwrap();
            assert!((mean_power(s.samples()) - p).abs() < 1e-9);
        }
    }

    #[test]
    fn round_trip_recovers_qpsk() {
        let cfg = OfdmConfig {
            n_symbols: 12,
            seed: 41,
            ..OfdmConfig::default()
        };
        let s = generate_ofdm(&cfg).unwrap();
        let grid = ofdm_symbols(&cfg).unwrap();
        let n = cfg.n_subcarriers_total;
        let sym_len = cfg.symbol_len();

        // Undo the unknown global power scaling from the first used bin.
        let first = naive_dft(&s.samples()[cfg.cp_len..sym_len]);
        let b0 = cfg.used_bins()[0];
        let scale = first[b0] / grid[0][b0];
        assert!(scale.im.abs() < 1e-12);

        for (m, row) in grid.iter().enumerate() {
            let start = m * sym_len + cfg.cp_len;
            let spec = naive_dft(&s.samples()[start..start + n]);
            for k in 0..n {
                let rx = spec[k] / scale;
                assert!((rx - row[k]).norm() < 1e-9, "symbol {m} bin {k}");
            }
        }
    }

    #[test]
    fn cyclic_prefix_copies_symbol_tail() {
        let cfg = OfdmConfig {
            n_symbols: 3,
            ..OfdmConfig::default()
        };
        let s = generate_ofdm(&cfg).unwrap();
        let x = s.samples();
        for m in 0..3 {
            let base = m * cfg.symbol_len();
            for i in 0..cfg.cp_len {
                assert_eq!(x[base + i], x[base + cfg.n_subcarriers_total + i]);
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = OfdmConfig {
            seed: 5,
            n_symbols: 4,
            ..OfdmConfig::default()
        };
        assert_eq!(generate_ofdm(&cfg).unwrap(), generate_ofdm(&cfg).unwrap());
        let other = OfdmConfig { seed: 6, ..cfg.clone() };
        assert_ne!(generate_ofdm(&cfg).unwrap(), generate_ofdm(&other).unwrap());
    }

    #[test]
    fn dc_must_stay_unused() {
        let cfg = OfdmConfig {
            n_subcarriers_used: 64,
            ..OfdmConfig::default()
        };
        assert!(matches!(generate_ofdm(&cfg), Err(Error::Config(_))));
        let bins = OfdmConfig::default().used_bins();
        assert_eq!(bins.len(), 52);
        assert!(!bins.contains(&0));
    }
}
