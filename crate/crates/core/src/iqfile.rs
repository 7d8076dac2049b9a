//! Raw IQ capture files: little-endian `f32` pairs (I then Q) plus a JSON
//! sidecar at `<path>.json` describing the frame layout.

use crate::baseband::{BitStream, Complex, IqVector, ModulationScheme};
use crate::error::{param, Result};
use crate::transmitter::Waveform;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqMeta {
    /// FFT size.
    pub n: usize,
    pub cp: usize,
    pub scheme: ModulationScheme,
    pub mode: Waveform,
    pub n_symbols: usize,
    pub sample_rate: f64,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn encode_iq(samples: &[Complex]) -> Vec<u8> {
    let mut out = Vec::with_capacity(samples.len() * 8);
    for s in samples {
        out.extend_from_slice(&(s.re as f32).to_le_bytes());
        out.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    out
}

pub fn decode_iq(bytes: &[u8]) -> Result<IqVector> {
    if !bytes.len().is_multiple_of(8) {
        return param(format!("IQ data length {} is not a multiple of 8 bytes", bytes.len()));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex::new(re as f64, im as f64)
        })
        .collect())
}

/// Writes the samples and the sidecar.
pub fn write_iq(path: &Path, samples: &[Complex], meta: &IqMeta) -> Result<()> {
    fs::write(path, encode_iq(samples))?;
    fs::write(sidecar_path(path), serde_json::to_string_pretty(meta)?)?;
    Ok(())
}

/// Reads the samples and the sidecar.
pub fn read_iq(path: &Path) -> Result<(IqVector, IqMeta)> {
    let samples = decode_iq(&fs::read(path)?)?;
    let meta = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    Ok((samples, meta))
}

/// Packs bits MSB-first into lowercase hex; a partial last byte is zero-padded.
pub fn bits_to_hex(bits: &[u8]) -> String {
    bits.chunks(8)
        .map(|c| {
            let byte = c
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | ((b & 1) << (7 - i)));
            format!("{byte:02x}")
        })
        .collect()
}

/// Unpacks hex into `len` bits (MSB-first); `None` keeps every bit.
pub fn hex_to_bits(hex: &str, len: Option<usize>) -> Result<BitStream> {
    let hex: String = hex.chars().filter(|c| !c.is_whitespace()).collect();
    if !hex.len().is_multiple_of(2) {
        return param("hex string has an odd number of digits");
    }
    let mut bits = Vec::with_capacity(hex.len() * 4);
    for i in (0..hex.len()).step_by(2) {
        let byte = u8::from_str_radix(&hex[i..i + 2], 16)
            .map_err(|e| crate::Error::Parameter(format!("bad hex '{}': {e}", &hex[i..i + 2])))?;
        bits.extend((0..8).rev().map(|s| (byte >> s) & 1));
    }
    match len {
        Some(n) if n > bits.len() => param(format!("hex holds {} bits, {n} requested", bits.len())),
        Some(n) => {
            bits.truncate(n);
            Ok(bits)
        }
        None => Ok(bits),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iq_round_trip_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frame.iq");
        let x: IqVector = (0..100)
            .map(|i| Complex::new(i as f64 * 0.25, -(i as f64) * 0.5))
            .collect();
        let meta = IqMeta {
            n: 64,
            cp: 16,
            scheme: ModulationScheme::Qam16,
            mode: Waveform::RandOfdm,
            n_symbols: 3,
            sample_rate: 20e6,
        };
        write_iq(&path, &x, &meta).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 800);
        let (y, m) = read_iq(&path).unwrap();
        assert_eq!(m, meta);
        assert_eq!(y, x);
        let json = std::fs::read_to_string(sidecar_path(&path)).unwrap();
        assert!(json.contains("\"mode\": \"rand_ofdm\""));
    }

    #[test]
    fn byte_layout_is_interleaved_le_f32() {
        let b = encode_iq(&[Complex::new(1.0, -2.0)]);
        assert_eq!(&b[..4], &1.0f32.to_le_bytes());
        assert_eq!(&b[4..], &(-2.0f32).to_le_bytes());
        assert!(decode_iq(&b[..7]).is_err());
    }

    #[test]
    fn hex_round_trip() {
        let bits = vec![1, 0, 1, 0, 0, 0, 0, 1, 1, 1, 1];
        let h = bits_to_hex(&bits);
        assert_eq!(h, "a1e0");
        assert_eq!(hex_to_bits(&h, Some(11)).unwrap(), bits);
        assert_eq!(hex_to_bits("ff", None).unwrap(), vec![1; 8]);
        assert!(hex_to_bits("f", None).is_err());
        assert!(hex_to_bits("zz", None).is_err());
        assert!(hex_to_bits("ff", Some(9)).is_err());
    }
}
