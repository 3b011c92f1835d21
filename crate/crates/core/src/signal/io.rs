//! `cs16k v1` sequence files: a 24-byte little-endian header
//! (`b"CSEQ"`, `u32` version, `u64` sample count, `f64` sample rate) followed
//! by interleaved `f32` real/imaginary pairs.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use super::ComplexSeq;
use crate::error::{Error, Result};

pub const CS16K_MAGIC: &[u8; 4] = b"CSEQ";
pub const CS16K_VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

pub fn encode_cs16k(seq: &ComplexSeq) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + seq.len() * 8);
    buf.extend_from_slice(CS16K_MAGIC);
    buf.extend_from_slice(&CS16K_VERSION.to_le_bytes());
    buf.extend_from_slice(&(seq.len() as u64).to_le_bytes());
    buf.extend_from_slice(&seq.sample_rate_hz().to_le_bytes());
    for z in seq.samples() {
        buf.extend_from_slice(&(z.re as f32).to_le_bytes());
        buf.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
    buf
}

pub fn decode_cs16k(bytes: &[u8], path: &Path) -> Result<ComplexSeq> {
    let malformed = |reason: &str| Error::MalformedHeader {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if bytes.len() < HEADER_LEN {
        return Err(malformed("file shorter than header"));
    }
    if &bytes[0..4] != CS16K_MAGIC {
        return Err(malformed("bad magic"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != CS16K_VERSION {
        return Err(malformed(&format!("unsupported version {version}")));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let rate = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    if len == 0 {
        return Err(malformed("zero sample count"));
    }
    if !(rate.is_finite() && rate > 0.0) {
        return Err(malformed(&format!("invalid sample rate {rate}")));
    }
    let body = &bytes[HEADER_LEN..];
    let expected = len.checked_mul(8).ok_or_else(|| malformed("length overflow"))?;
    if body.len() as u64 != expected {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected,
            found: body.len() as u64,
        });
    }
    let samples = decode_f32_pairs(body, path)?;
    ComplexSeq::new(samples, rate)
}

/// Interleaved little-endian `f32` pairs, rejecting non-finite values.
pub(crate) fn decode_f32_pairs(body: &[u8], path: &Path) -> Result<Vec<Complex64>> {
    body.chunks_exact(8)
        .enumerate()
        .map(|(i, c)| {
            let re = f32::from_le_bytes(c[0..4].try_into().unwrap());
            let im = f32::from_le_bytes(c[4..8].try_into().unwrap());
            if re.is_finite() && im.is_finite() {
                Ok(Complex64::new(re as f64, im as f64))
            } else {
                Err(Error::NonFiniteSample {
                    path: path.to_path_buf(),
                    index: i,
                })
            }
        })
        .collect()
}

pub fn write_cs16k(path: &Path, seq: &ComplexSeq) -> Result<()> {
    crate::harness::write_atomic(path, &encode_cs16k(seq))
}

pub fn read_cs16k(path: &Path) -> Result<ComplexSeq> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_cs16k(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(v: &[(f64, f64)]) -> ComplexSeq {
        ComplexSeq::new(v.iter().map(|&(a, b)| Complex64::new(a, b)).collect(), 20e6).unwrap()
    }

    #[test]
    fn header_layout() {
        let bytes = encode_cs16k(&seq(&[(1.0, -2.0)]));
        assert_eq!(&bytes[0..4], b"CSEQ");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 1);
        assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), 20e6);
        assert_eq!(f32::from_le_bytes(bytes[24..28].try_into().unwrap()), 1.0);
        assert_eq!(f32::from_le_bytes(bytes[28..32].try_into().unwrap()), -2.0);
        assert_eq!(bytes.len(), 32);
    }

    #[test]
    fn truncated_and_corrupt_inputs() {
        let p = Path::new("mem");
        let bytes = encode_cs16k(&seq(&[(1.0, 0.0), (0.5, 0.5)]));
        assert!(matches!(
            decode_cs16k(&bytes[..bytes.len() - 3], p),
            Err(Error::Truncated { .. })
        ));
        assert!(matches!(decode_cs16k(&bytes[..10], p), Err(Error::MalformedHeader { .. })));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_cs16k(&bad, p), Err(Error::MalformedHeader { .. })));
        let mut nan = bytes.clone();
        nan[24..28].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(decode_cs16k(&nan, p), Err(Error::NonFiniteSample { index: 0, .. })));
    }

    proptest! {
        #[test]
        fn round_trip_matches_f32_quantization(
            v in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..200)
        ) {
            let s = seq(&v);
            let back = decode_cs16k(&encode_cs16k(&s), Path::new("mem")).unwrap();
            prop_assert_eq!(&back, &s.quantized_f32());
            let again = decode_cs16k(&encode_cs16k(&back), Path::new("mem")).unwrap();
            prop_assert_eq!(again, back);
        }
    }
}
