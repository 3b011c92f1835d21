//! Self-interference front-ends: phase-preserving arctan PA, LNA plus
//! saturating A/D, seeded multipath channel and receiver noise, and the
//! Hammerstein/Wiener dataset generators built from them.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::signal::{self, ComplexSeq};

/// Arctan AM/AM compression `F(r) = f · atan(c_f · r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaParams {
    pub f: f64,
    pub c_f: f64,
}

impl Default for PaParams {
    fn default() -> Self {
        Self { f: 1.0, c_f: 2.0 }
    }
}

impl PaParams {
    pub fn validate(&self) -> Result<()> {
        if self.f.is_finite() && self.f > 0.0 && self.c_f.is_finite() && self.c_f > 0.0 {
            Ok(())
        } else {
            Err(Error::Config(format!("pa: f and c_f must be positive, got {self:?}")))
        }
    }
}

/// LNA gain followed by magnitude clipping at `c_g`. An infinite threshold
/// disables clipping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdParams {
    pub c_g: f64,
    pub alpha: f64,
}

impl Default for AdParams {
    fn default() -> Self {
        Self {
            c_g: 1.0,
            alpha: 1.0,
        }
    }
}

impl AdParams {
    pub fn validate(&self) -> Result<()> {
        if self.c_g > 0.0 && self.alpha.is_finite() && self.alpha > 0.0 {
            Ok(())
        } else {
            Err(Error::Config(format!("ad: c_g and alpha must be positive, got {self:?}")))
        }
    }
}

#[inline]
pub fn pa_apply(s: Complex64, p: &PaParams) -> Complex64 {
    let r = s.norm();
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    s * (p.f * (p.c_f * r).atan() / r)
}

/// Clipping only; the LNA gain is applied by the caller before this.
#[inline]
pub fn ad_apply(y: Complex64, p: &AdParams) -> Complex64 {
    let r = y.norm();
    if r < p.c_g {
        y
    } else {
        y * (p.c_g / r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelProfile {
    /// Exponential power-delay profile `P_i ∝ exp(-i·Δ/τ)` with `Δ = 1/fs`.
    Exponential {
        rms_delay_spread_s: f64,
        sample_rate_hz: f64,
    },
    /// Line-of-sight channel: a single unit tap at delay zero.
    Dirac,
}

impl Default for ChannelProfile {
    /// Indoor WLAN "Model C" approximation: 30 ns RMS delay spread at 20 MHz.
    fn default() -> Self {
        ChannelProfile::Exponential {
            rms_delay_spread_s: 30e-9,
            sample_rate_hz: 20e6,
        }
    }
}

impl ChannelProfile {
    /// Unnormalized mean power of each tap.
    pub fn tap_powers(&self, len: usize) -> Vec<f64> {
        match *self {
            ChannelProfile::Exponential {
                rms_delay_spread_s,
                sample_rate_hz,
            } => {
                let ratio = 1.0 / (sample_rate_hz * rms_delay_spread_s);
                (0..len).map(|i| (-(i as f64) * ratio).exp()).collect()
            }
            ChannelProfile::Dirac => (0..len).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect(),
        }
    }
}

/// Static (block-fading) SI channel with unit energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiChannel {
    pub taps: Vec<Complex64>,
    pub seed: u64,
    pub profile: ChannelProfile,
}

impl SiChannel {
    pub fn impulse(len: usize) -> Self {
        let mut taps = vec![Complex64::new(0.0, 0.0); len.max(1)];
        taps[0] = Complex64::new(1.0, 0.0);
        Self {
            taps,
            seed: 0,
            profile: ChannelProfile::Dirac,
        }
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t.norm_sqr()).sum()
    }
}

pub fn make_channel(profile: ChannelProfile, len: usize, seed: u64) -> Result<SiChannel> {
    if len == 0 {
        return Err(Error::Argument("channel length must be at least 1".into()));
    }
    let taps = match profile {
        ChannelProfile::Dirac => SiChannel::impulse(len).taps,
        ChannelProfile::Exponential { .. } => {
            let mut rng = SplitMix64::new(seed);
            let mut taps: Vec<Complex64> = profile
                .tap_powers(len)
                .into_iter()
                .map(|p| rng.complex_gaussian(p))
                .collect();
            let e: f64 = taps.iter().map(|t| t.norm_sqr()).sum();
            let g = 1.0 / e.sqrt();
            taps.iter_mut().for_each(|t| *t *= g);
            taps
        }
    };
    Ok(SiChannel {
        taps,
        seed,
        profile,
    })
}

/// Causal convolution truncated to `x.len()`, zero initial state.
pub fn fir_filter(x: &[Complex64], taps: &[Complex64]) -> Vec<Complex64> {
    let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
    for (k, out) in y.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, h) in taps.iter().enumerate().take(k + 1) {
            acc += h * x[k - i];
        }
        *out = acc;
    }
    y
}

pub fn fir_convolve(x: &ComplexSeq, h: &SiChannel) -> Result<ComplexSeq> {
    x.with_samples(fir_filter(x.samples(), &h.taps))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Per complex sample, split equally between I and Q.
    pub variance: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn silent() -> Self {
        Self {
            variance: 0.0,
            seed: 0,
        }
    }

    /// Noise `snr_db` below a reference signal power.
    pub fn relative_to(signal_power: f64, snr_db: f64, seed: u64) -> Self {
        Self {
            variance: signal_power / 10f64.powf(snr_db / 10.0),
            seed,
        }
    }

    pub fn draw(&self, len: usize) -> Vec<Complex64> {
        if self.variance == 0.0 {
            return vec![Complex64::new(0.0, 0.0); len];
        }
        let mut rng = SplitMix64::new(self.seed);
        (0..len).map(|_| rng.complex_gaussian(self.variance)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Hammerstein,
    Wiener,
    Recorded,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Hammerstein => "hammerstein",
            Provenance::Wiener => "wiener",
            Provenance::Recorded => "recorded",
        })
    }
}

/// Contiguous train prefix followed by a test suffix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Range<usize>,
    pub test: Range<usize>,
}

pub const DEFAULT_TEST_FRACTION: f64 = 0.1;

impl Split {
    pub fn tail_fraction(len: usize, test_fraction: f64) -> Result<Self> {
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "test fraction {test_fraction} must lie in (0, 1)"
            )));
        }
        let n_test = ((len as f64 * test_fraction).round() as usize).max(1);
        let split = Self {
            train: 0..len - n_test.min(len),
            test: len - n_test.min(len)..len,
        };
        split.validate(len)?;
        Ok(split)
    }

    pub fn validate(&self, len: usize) -> Result<()> {
        let ok = self.train.start == 0
            && self.train.end == self.test.start
            && self.test.end == len
            && !self.train.is_empty()
            && !self.test.is_empty();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "split {:?}/{:?} does not partition {len} samples into non-empty train and test",
                self.train, self.test
            )))
        }
    }
}

/// Generation metadata carried alongside a dataset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub seeds: BTreeMap<String, u64>,
    pub params: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiDataset {
    pub input: ComplexSeq,
    pub target: ComplexSeq,
    pub split: Split,
    pub provenance: Provenance,
    pub meta: DatasetMeta,
}

impl SiDataset {
    pub fn new(
        input: ComplexSeq,
        target: ComplexSeq,
        split: Split,
        provenance: Provenance,
        meta: DatasetMeta,
    ) -> Result<Self> {
        if input.len() != target.len() {
            return Err(Error::LengthMismatch {
                what: "dataset input/target",
                left: input.len(),
                right: target.len(),
            });
        }
        split.validate(input.len())?;
        Ok(Self {
            input,
            target,
            split,
            provenance,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.input.len()
    }

    pub fn is_empty(&self) -> bool {
        self.input.is_empty()
    }

    /// Same input and split, different target.
    pub fn with_target(&self, target: Vec<Complex64>) -> Result<Self> {
        let target = self.target.with_samples(target)?;
        Self::new(
            self.input.clone(),
            target,
            self.split.clone(),
            self.provenance,
            self.meta.clone(),
        )
    }

    pub fn quantized_f32(&self) -> Self {
        Self {
            input: self.input.quantized_f32(),
            target: self.target.quantized_f32(),
            ..self.clone()
        }
    }
}

/// `y_H = PA(s) * h + n`.
pub fn gen_hammerstein(
    s: &ComplexSeq,
    pa: &PaParams,
    ch: &SiChannel,
    noise: &NoiseSpec,
    split: Split,
) -> Result<SiDataset> {
    pa.validate()?;
    let driven: Vec<Complex64> = s.samples().iter().map(|&x| pa_apply(x, pa)).collect();
    let clean = fir_filter(&driven, &ch.taps);
    let target: Vec<Complex64> = clean
        .iter()
        .zip(noise.draw(clean.len()))
        .map(|(c, n)| c + n)
        .collect();
    let meta = DatasetMeta {
        seeds: BTreeMap::from([
            ("channel".to_string(), ch.seed),
            ("noise".to_string(), noise.seed),
        ]),
        params: serde_json::json!({ "pa": pa, "noise_variance": noise.variance, "channel": ch }),
    };
    SiDataset::new(
        s.clone(),
        s.with_samples(target)?,
        split,
        Provenance::Hammerstein,
        meta,
    )
}

/// `y_W = AD(α · (z * h + n))`; noise enters before gain and clipping.
pub fn gen_wiener(
    z: &ComplexSeq,
    ch: &SiChannel,
    ad: &AdParams,
    noise: &NoiseSpec,
    split: Split,
) -> Result<SiDataset> {
    ad.validate()?;
    let clean = fir_filter(z.samples(), &ch.taps);
    let target: Vec<Complex64> = clean
        .iter()
        .zip(noise.draw(clean.len()))
        .map(|(c, n)| ad_apply((c + n) * ad.alpha, ad))
        .collect();
    let meta = DatasetMeta {
        seeds: BTreeMap::from([
            ("channel".to_string(), ch.seed),
            ("noise".to_string(), noise.seed),
        ]),
        params: serde_json::json!({ "ad": ad, "noise_variance": noise.variance, "channel": ch }),
    };
    SiDataset::new(
        z.clone(),
        z.with_samples(target)?,
        split,
        Provenance::Wiener,
        meta,
    )
}

/// JSON sidecar written next to the two sample files of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSidecar {
    pub format: String,
    pub provenance: Provenance,
    pub len: usize,
    pub sample_rate_hz: f64,
    pub split: Split,
    pub seeds: BTreeMap<String, u64>,
    pub params: serde_json::Value,
}

pub fn dataset_paths(dir: &Path, stem: &str) -> (PathBuf, PathBuf, PathBuf) {
    (
        dir.join(format!("{stem}.input.cs16")),
        dir.join(format!("{stem}.target.cs16")),
        dir.join(format!("{stem}.json")),
    )
}

pub fn export_dataset(dir: &Path, stem: &str, ds: &SiDataset) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (input, target, sidecar) = dataset_paths(dir, stem);
    signal::write_cs16k(&input, &ds.input)?;
    signal::write_cs16k(&target, &ds.target)?;
    let meta = DatasetSidecar {
        format: "cs16k v1".into(),
        provenance: ds.provenance,
        len: ds.len(),
        sample_rate_hz: ds.input.sample_rate_hz(),
        split: ds.split.clone(),
        seeds: ds.meta.seeds.clone(),
        params: ds.meta.params.clone(),
    };
    let json = serde_json::to_vec_pretty(&meta).map_err(|e| Error::Serde(e.to_string()))?;
    crate::harness::write_atomic(&sidecar, &json)
}

/// Reads a dataset written by [`export_dataset`], keeping its recorded split
/// and provenance.
pub fn import_dataset(dir: &Path, stem: &str) -> Result<SiDataset> {
    let (input, target, sidecar) = dataset_paths(dir, stem);
    let raw = fs::read(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    let meta: DatasetSidecar = serde_json::from_slice(&raw).map_err(|e| Error::MalformedHeader {
        path: sidecar.clone(),
        reason: e.to_string(),
    })?;
    let input = signal::read_cs16k(&input)?;
    let target = signal::read_cs16k(&target)?;
    if input.len() != meta.len {
        return Err(Error::LengthMismatch {
            what: "sidecar length vs input file",
            left: meta.len,
            right: input.len(),
        });
    }
    SiDataset::new(
        input,
        target,
        meta.split,
        meta.provenance,
        DatasetMeta {
            seeds: meta.seeds,
            params: meta.params,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordingFormat {
    /// Two `cs16k v1` files.
    Cs16k,
    /// Headerless interleaved little-endian `f32` pairs. The sample rate is
    /// read from a `<input file>.json` sidecar `{"sample_rate_hz": ...}`.
    RawF32,
}

#[derive(Debug, Deserialize)]
struct RawSidecar {
    sample_rate_hz: f64,
}

fn read_raw_f32(path: &Path, sample_rate_hz: f64) -> Result<ComplexSeq> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected: (bytes.len() as u64 / 8 + 1) * 8,
            found: bytes.len() as u64,
        });
    }
    if bytes.is_empty() {
        return Err(Error::MalformedHeader {
            path: path.to_path_buf(),
            reason: "empty recording".into(),
        });
    }
    let samples = signal::decode_f32_pairs(&bytes, path)?;
    ComplexSeq::new(samples, sample_rate_hz)
}

/// Loads an externally recorded (transmit, received SI) pair and applies the
/// default 90/10 split.
pub fn load_recording(input: &Path, target: &Path, format: RecordingFormat) -> Result<SiDataset> {
    let (x, y) = match format {
        RecordingFormat::Cs16k => (signal::read_cs16k(input)?, signal::read_cs16k(target)?),
        RecordingFormat::RawF32 => {
            let mut sidecar = input.as_os_str().to_owned();
            sidecar.push(".json");
            let sidecar = PathBuf::from(sidecar);
            let raw = fs::read(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
            let meta: RawSidecar =
                serde_json::from_slice(&raw).map_err(|e| Error::MalformedHeader {
                    path: sidecar.clone(),
                    reason: e.to_string(),
                })?;
            (
                read_raw_f32(input, meta.sample_rate_hz)?,
                read_raw_f32(target, meta.sample_rate_hz)?,
            )
        }
    };
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            what: "recording input/target",
            left: x.len(),
            right: y.len(),
        });
    }
    let split = Split::tail_fraction(x.len(), DEFAULT_TEST_FRACTION)?;
    let meta = DatasetMeta {
        seeds: BTreeMap::new(),
        params: serde_json::json!({
            "input": input.display().to_string(),
            "target": target.display().to_string(),
        }),
    };
    SiDataset::new(x, y, split, Provenance::Recorded, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use crate::signal::mean_power;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_seq(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = SplitMix64::new(seed);
        (0..n).map(|_| rng.complex_gaussian(1.0)).collect()
    }

    // O(N·L) direct sum written without the truncation shortcut.
    fn brute_conv(x: &[Complex64], h: &[Complex64]) -> Vec<Complex64> {
        let full_len = x.len() + h.len() - 1;
        let mut full = vec![c(0.0, 0.0); full_len];
        for (i, xi) in x.iter().enumerate() {
            for (j, hj) in h.iter().enumerate() {
                full[i + j] += xi * hj;
            }
        }
        full.truncate(x.len());
        full
    }

    #[test]
    fn pa_cases() {
        let p = PaParams { f: 1.0, c_f: 1.0 };
        assert_eq!(pa_apply(c(0.0, 0.0), &p), c(0.0, 0.0));
        let y = pa_apply(c(1.0, 0.0), &p);
        assert!((y.re - FRAC_PI_4).abs() < 1e-15 && y.im == 0.0);
    }

    #[test]
    fn ad_cases() {
        let p = AdParams { c_g: 1.0, alpha: 1.0 };
        let below = Complex64::from_polar(0.5, FRAC_PI_3);
        assert_eq!(ad_apply(below, &p), below);
        let above = ad_apply(Complex64::from_polar(2.0, FRAC_PI_4), &p);
        assert!((above - Complex64::from_polar(1.0, FRAC_PI_4)).norm() < 1e-15);
    }

    #[test]
    fn channel_unit_energy_and_degenerate_length() {
        for seed in 0..50 {
            let ch = make_channel(ChannelProfile::default(), 13, seed).unwrap();
            assert!((ch.energy() - 1.0).abs() < 1e-9);
        }
        let one = make_channel(ChannelProfile::default(), 1, 9).unwrap();
        assert_eq!(one.taps.len(), 1);
        assert!((one.taps[0].norm() - 1.0).abs() < 1e-12);
        assert!(make_channel(ChannelProfile::default(), 0, 1).is_err());
    }

    #[test]
    fn channel_profile_follows_exponential_decay() {
        // Compare empirical E|h_i|² against the configured profile, both
        // normalized by the first tap. Energy normalization per draw biases
        // the ratio slightly, so the oracle uses the unnormalized draws.
        let profile = ChannelProfile::default();
        let len = 5;
        let expected = profile.tap_powers(len);
        let mut acc = vec![0.0; len];
        let draws = 1000;
        for seed in 0..draws {
            let mut rng = SplitMix64::new(seed);
            for (a, p) in acc.iter_mut().zip(&expected) {
                *a += rng.complex_gaussian(*p).norm_sqr();
            }
            // Same stream as make_channel before normalization.
            let ch = make_channel(profile, len, seed).unwrap();
            let mut rng = SplitMix64::new(seed);
            let raw: Vec<_> = expected.iter().map(|p| rng.complex_gaussian(*p)).collect();
            let g = raw[0].norm() / ch.taps[0].norm();
            for (r, t) in raw.iter().zip(&ch.taps) {
                assert!((r - t * g).norm() < 1e-12);
            }
        }
        for i in 1..3 {
            let ratio = acc[i] / acc[0];
            let want = expected[i] / expected[0];
            assert!(
                (ratio - want).abs() / want < 0.15,
                "tap {i}: ratio {ratio} vs {want}"
            );
        }
    }

    #[test]
    fn convolution_identities() {
        let x = random_seq(32, 1);
        let imp = SiChannel::impulse(4);
        assert_eq!(fir_filter(&x, &imp.taps), x);

        let h = random_seq(5, 2);
        let mut delta = vec![c(0.0, 0.0); 10];
        delta[0] = c(1.0, 0.0);
        let y = fir_filter(&delta, &h);
        assert_eq!(&y[..5], &h[..]);
        assert!(y[5..].iter().all(|v| *v == c(0.0, 0.0)));
    }

    #[test]
    fn convolution_matches_brute_force() {
        let x = random_seq(64, 3);
        let h = random_seq(5, 4);
        let fast = fir_filter(&x, &h);
        for (a, b) in fast.iter().zip(brute_conv(&x, &h)) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn small_signal_hammerstein_is_linear() {
        let s = ComplexSeq::new(random_seq(500, 5), 20e6).unwrap();
        let ch = make_channel(ChannelProfile::default(), 13, 6).unwrap();
        let pa = PaParams { f: 1e6, c_f: 1e-6 };
        let split = Split::tail_fraction(500, 0.1).unwrap();
        let ds = gen_hammerstein(&s, &pa, &ch, &NoiseSpec::silent(), split).unwrap();
        let lin = fir_filter(s.samples(), &ch.taps);
        for (a, b) in ds.target.samples().iter().zip(&lin) {
            assert!((a - b).norm() <= 1e-6 * b.norm().max(1e-3));
        }
    }

    #[test]
    fn hammerstein_collapses_with_impulse_channel() {
        let s = ComplexSeq::new(random_seq(100, 7), 20e6).unwrap();
        let pa = PaParams { f: 1.0, c_f: 1.0 };
        let split = Split::tail_fraction(100, 0.1).unwrap();
        let ds = gen_hammerstein(&s, &pa, &SiChannel::impulse(13), &NoiseSpec::silent(), split)
            .unwrap();
        for (t, x) in ds.target.samples().iter().zip(s.samples()) {
            assert_eq!(*t, pa_apply(*x, &pa));
        }
        assert_eq!(ds.provenance, Provenance::Hammerstein);
    }

    #[test]
    fn hammerstein_noise_level() {
        let s = ComplexSeq::new(random_seq(20_000, 8), 20e6).unwrap();
        let pa = PaParams::default();
        let ch = make_channel(ChannelProfile::default(), 13, 9).unwrap();
        let split = Split::tail_fraction(20_000, 0.1).unwrap();
        let silent =
            gen_hammerstein(&s, &pa, &ch, &NoiseSpec::silent(), split.clone()).unwrap();
        let p_clean = mean_power(silent.target.samples());
        let noise = NoiseSpec::relative_to(p_clean, 60.0, 10);
        let noisy = gen_hammerstein(&s, &pa, &ch, &noise, split).unwrap();
        let resid: Vec<_> = noisy
            .target
            .samples()
            .iter()
            .zip(silent.target.samples())
            .map(|(a, b)| a - b)
            .collect();
        let snr = 10.0 * (p_clean / mean_power(&resid)).log10();
        assert!((snr - 60.0).abs() < 0.5, "snr {snr}");
    }

    #[test]
    fn wiener_without_clipping_is_convolution() {
        let z = ComplexSeq::new(random_seq(300, 11), 20e6).unwrap();
        let ch = make_channel(ChannelProfile::default(), 13, 12).unwrap();
        let ad = AdParams {
            c_g: f64::INFINITY,
            alpha: 1.0,
        };
        let split = Split::tail_fraction(300, 0.1).unwrap();
        let ds = gen_wiener(&z, &ch, &ad, &NoiseSpec::silent(), split).unwrap();
        assert_eq!(ds.target, fir_convolve(&z, &ch).unwrap());
    }

    #[test]
    fn wiener_full_saturation() {
        let z = ComplexSeq::new(random_seq(300, 13), 20e6).unwrap();
        let ch = SiChannel::impulse(13);
        let ad = AdParams {
            c_g: 0.5,
            alpha: 1e9,
        };
        let split = Split::tail_fraction(300, 0.1).unwrap();
        let ds = gen_wiener(&z, &ch, &ad, &NoiseSpec::silent(), split).unwrap();
        assert!(ds.target.samples().iter().all(|t| (t.norm() - 0.5).abs() < 1e-12));
    }

    #[test]
    fn wiener_clip_fraction_matches_recount() {
        let z = ComplexSeq::new(random_seq(5000, 14), 20e6).unwrap();
        let ch = make_channel(ChannelProfile::default(), 13, 15).unwrap();
        let ad = AdParams { c_g: 1.0, alpha: 1.2 };
        let noise = NoiseSpec {
            variance: 1e-4,
            seed: 16,
        };
        let split = Split::tail_fraction(5000, 0.1).unwrap();
        let ds = gen_wiener(&z, &ch, &ad, &noise, split).unwrap();
        let at_threshold = ds
            .target
            .samples()
            .iter()
            .filter(|t| (t.norm() - ad.c_g).abs() < 1e-12)
            .count();
        // Independent recount from the pre-clipping signal.
        let n = noise.draw(5000);
        let mut expected = 0;
        for (k, nk) in n.iter().enumerate() {
            let mut acc = c(0.0, 0.0);
            for i in 0..=k.min(12) {
                acc += ch.taps[i] * z.samples()[k - i];
            }
            if ((acc + nk) * ad.alpha).norm() >= ad.c_g {
                expected += 1;
            }
        }
        assert_eq!(at_threshold, expected);
        assert!(expected > 0 && expected < 5000);
    }

    #[test]
    fn generation_is_reproducible() {
        let s = ComplexSeq::new(random_seq(200, 17), 20e6).unwrap();
        let ch = make_channel(ChannelProfile::default(), 13, 18).unwrap();
        let noise = NoiseSpec {
            variance: 1e-3,
            seed: 19,
        };
        let split = Split::tail_fraction(200, 0.1).unwrap();
        let a = gen_hammerstein(&s, &PaParams::default(), &ch, &noise, split.clone()).unwrap();
        let b = gen_hammerstein(&s, &PaParams::default(), &ch, &noise, split).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn split_defaults_to_ninety_ten() {
        let s = Split::tail_fraction(20_000, DEFAULT_TEST_FRACTION).unwrap();
        assert_eq!(s.train, 0..18_000);
        assert_eq!(s.test, 18_000..20_000);
        assert!(Split::tail_fraction(1, 0.1).is_err());
    }

    #[test]
    fn dataset_export_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = ComplexSeq::new(random_seq(100, 20), 20e6).unwrap();
        let ch = make_channel(ChannelProfile::default(), 13, 21).unwrap();
        let split = Split::tail_fraction(100, 0.1).unwrap();
        let ds = gen_hammerstein(&s, &PaParams::default(), &ch, &NoiseSpec::silent(), split)
            .unwrap()
            .quantized_f32();
        export_dataset(dir.path(), "h", &ds).unwrap();
        assert_eq!(import_dataset(dir.path(), "h").unwrap(), ds);

        let (i, t, _) = dataset_paths(dir.path(), "h");
        let rec = load_recording(&i, &t, RecordingFormat::Cs16k).unwrap();
        assert_eq!(rec.provenance, Provenance::Recorded);
        assert_eq!(rec.input, ds.input);
        assert_eq!(rec.target, ds.target);
        assert_eq!(rec.split.test.len(), 10);
    }

    #[test]
    fn recording_errors() {
        let dir = tempfile::tempdir().unwrap();
        let a = ComplexSeq::new(random_seq(100, 22), 1.0).unwrap();
        let b = ComplexSeq::new(random_seq(99, 23), 1.0).unwrap();
        let pa = dir.path().join("a.cs16");
        let pb = dir.path().join("b.cs16");
        signal::write_cs16k(&pa, &a).unwrap();
        signal::write_cs16k(&pb, &b).unwrap();
        assert!(matches!(
            load_recording(&pa, &pb, RecordingFormat::Cs16k),
            Err(Error::LengthMismatch { left: 100, right: 99, .. })
        ));

        let bytes = fs::read(&pa).unwrap();
        let pt = dir.path().join("trunc.cs16");
        fs::write(&pt, &bytes[..bytes.len() - 5]).unwrap();
        assert!(matches!(
            load_recording(&pt, &pa, RecordingFormat::Cs16k),
            Err(Error::Truncated { .. })
        ));
    }

    #[test]
    fn raw_f32_recordings() {
        let dir = tempfile::tempdir().unwrap();
        let write_raw = |name: &str, v: &[(f32, f32)]| {
            let p = dir.path().join(name);
            let bytes: Vec<u8> = v
                .iter()
                .flat_map(|(a, b)| a.to_le_bytes().into_iter().chain(b.to_le_bytes()))
                .collect();
            fs::write(&p, bytes).unwrap();
            p
        };
        let x = write_raw("x.bin", &[(1.0, 0.0), (0.0, 1.0), (0.5, 0.5)]);
        let y = write_raw("y.bin", &[(0.1, 0.0), (0.0, 0.2), (0.3, 0.3)]);
        fs::write(dir.path().join("x.bin.json"), r#"{"sample_rate_hz": 10e6}"#).unwrap();
        let ds = load_recording(&x, &y, RecordingFormat::RawF32).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.input.sample_rate_hz(), 10e6);
        assert_eq!(ds.target.samples()[1], c(0.0, 0.2f32 as f64));

        let bad = write_raw("bad.bin", &[(f32::INFINITY, 0.0), (0.0, 0.0), (0.0, 0.0)]);
        assert!(matches!(
            load_recording(&x, &bad, RecordingFormat::RawF32),
            Err(Error::NonFiniteSample { index: 0, .. })
        ));
    }

    proptest! {
        #[test]
        fn nonlinearities_preserve_phase(re in -5.0f64..5.0, im in -5.0f64..5.0) {
            prop_assume!(re.hypot(im) > 1e-9);
            let s = c(re, im);
            let pa = pa_apply(s, &PaParams { f: 1.3, c_f: 2.0 });
            let ad = ad_apply(s, &AdParams { c_g: 1.0, alpha: 1.0 });
            prop_assert!((pa.arg() - s.arg()).abs() < 1e-12);
            prop_assert!((ad.arg() - s.arg()).abs() < 1e-12);
            prop_assert!(ad.norm() <= 1.0 + 1e-15);
        }

        #[test]
        fn pa_is_monotone_in_magnitude(r1 in 0.0f64..10.0, dr in 1e-6f64..5.0) {
            let p = PaParams::default();
            let a = pa_apply(c(r1, 0.0), &p).norm();
            let b = pa_apply(c(r1 + dr, 0.0), &p).norm();
            prop_assert!(a < b);
        }

        #[test]
        fn convolution_is_linear(seed in 0u64..1000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let x = random_seq(40, seed);
            let y = random_seq(40, seed + 1);
            let h = random_seq(6, seed + 2);
            let (ca, cb) = (c(a, 0.5), c(-0.25, b));
            let mixed: Vec<_> = x.iter().zip(&y).map(|(p, q)| ca * p + cb * q).collect();
            let lhs = fir_filter(&mixed, &h);
            let fx = fir_filter(&x, &h);
            let fy = fir_filter(&y, &h);
            for k in 0..40 {
                prop_assert!((lhs[k] - (ca * fx[k] + cb * fy[k])).norm() < 1e-12);
            }
        }
    }
}
