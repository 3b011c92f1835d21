use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{mean_power, ComplexSeq};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WelchConfig {
    pub seg_len: usize,
    pub overlap: f64,
}

impl Default for WelchConfig {
    fn default() -> Self {
        Self {
            seg_len: 256,
            overlap: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsdBin {
    pub frequency_hz: f64,
    pub density: f64,
}

/// Two-sided Welch PSD with a periodic Hann window, bins in ascending
/// frequency from `-fs/2`.
///
/// The averaged periodogram is rescaled so that `Σ density · Δf` equals
/// `mean_power(x)` exactly; for stationary inputs that factor is close to one.
pub fn welch_psd(x: &ComplexSeq, seg_len: usize, overlap: f64) -> Result<Vec<PsdBin>> {
    if seg_len == 0 || seg_len > x.len() {
        return Err(Error::Argument(format!(
            "segment length {seg_len} must be in 1..={}",
            x.len()
        )));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::Argument(format!("overlap {overlap} not in [0, 1)")));
    }

    let fs = x.sample_rate_hz();
    let window: Vec<f64> = (0..seg_len)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / seg_len as f64).cos())
        .collect();
    let hop = ((seg_len as f64 * (1.0 - overlap)).round() as usize).max(1);
    let fft = FftPlanner::new().plan_fft_forward(seg_len);

    let mut acc = vec![0.0f64; seg_len];
    let mut buf = vec![Complex64::new(0.0, 0.0); seg_len];
    let mut n_segments = 0usize;
    let data = x.samples();
    let mut start = 0;
    while start + seg_len <= data.len() {
        for ((b, s), w) in buf.iter_mut().zip(&data[start..start + seg_len]).zip(&window) {
            *b = s * w;
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        n_segments += 1;
        start += hop;
    }

    let df = fs / seg_len as f64;
    let total: f64 = acc.iter().sum::<f64>() * df;
    let target = mean_power(data);
    let scale = if total > 0.0 { target / total } else { 0.0 };
    debug_assert!(n_segments > 0);

    let half = seg_len.div_ceil(2);
    let mut bins: Vec<PsdBin> = acc
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let f = if k < half {
                k as f64 * df
            } else {
                (k as f64 - seg_len as f64) * df
            };
            PsdBin {
                frequency_hz: f,
                density: a * scale,
            }
        })
        .collect();
    bins.sort_by(|a, b| a.frequency_hz.total_cmp(&b.frequency_hz));
    Ok(bins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn integral(bins: &[PsdBin], fs: f64, seg_len: usize) -> f64 {
        bins.iter().map(|b| b.density).sum::<f64>() * fs / seg_len as f64
    }

    #[test]
    fn tone_peaks_at_its_frequency() {
        let fs = 1000.0;
        let f0 = 125.0;
        let x: Vec<_> = (0..4096)
            .map(|n| Complex64::from_polar(1.0, 2.0 * PI * f0 * n as f64 / fs))
            .collect();
        let seq = ComplexSeq::new(x, fs).unwrap();
        let psd = welch_psd(&seq, 256, 0.5).unwrap();
        let peak = psd
            .iter()
            .max_by(|a, b| a.density.total_cmp(&b.density))
            .unwrap();
        assert!((peak.frequency_hz - f0).abs() < 1e-9);
        // Negative tone lands below DC.
        let neg: Vec<_> = (0..4096)
            .map(|n| Complex64::from_polar(1.0, -2.0 * PI * f0 * n as f64 / fs))
            .collect();
        let psd = welch_psd(&ComplexSeq::new(neg, fs).unwrap(), 256, 0.5).unwrap();
        let peak = psd
            .iter()
            .max_by(|a, b| a.density.total_cmp(&b.density))
            .unwrap();
        assert!((peak.frequency_hz + f0).abs() < 1e-9);
    }

    #[test]
    fn white_noise_is_flat_with_its_variance() {
        let var = 2.5;
        let seg = 256;
        let mut rng = SplitMix64::new(3);
        // 100 segments at 50% overlap.
        let n = seg * 101 / 2;
        let x: Vec<_> = (0..n).map(|_| rng.complex_gaussian(var)).collect();
        let fs = 20e6;
        let psd = welch_psd(&ComplexSeq::new(x, fs).unwrap(), seg, 0.5).unwrap();
        let total = integral(&psd, fs, seg);
        assert!((total - var).abs() / var < 0.05);
        let flat = var / fs;
        let mean_dev = psd
            .iter()
            .map(|b| (b.density - flat).abs() / flat)
            .sum::<f64>()
            / psd.len() as f64;
        assert!(mean_dev < 0.2, "mean relative deviation {mean_dev}");
    }

    #[test]
    fn integrates_to_mean_power() {
        let mut rng = SplitMix64::new(11);
        let x: Vec<_> = (0..1000)
            .map(|k| rng.complex_gaussian(1.0) * (1.0 + (k as f64 * 0.01).sin()))
            .collect();
        let seq = ComplexSeq::new(x, 1.0).unwrap();
        let psd = welch_psd(&seq, 128, 0.25).unwrap();
        let p = mean_power(seq.samples());
        assert!((integral(&psd, 1.0, 128) - p).abs() / p < 1e-6);
    }

    #[test]
    fn segment_longer_than_signal_is_rejected() {
        let seq = ComplexSeq::new(vec![Complex64::new(1.0, 0.0); 10], 1.0).unwrap();
        assert!(matches!(welch_psd(&seq, 11, 0.5), Err(Error::Argument(_))));
        assert!(welch_psd(&seq, 10, 0.5).is_ok());
        assert!(welch_psd(&seq, 4, 1.0).is_err());
    }
}
