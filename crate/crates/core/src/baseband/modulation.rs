use super::{BitStream, Complex, IqVector};
use crate::error::{param, Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Gray-coded square constellations with the 802.11a bit ordering.
///
/// Bits of a word are taken first-bit-first: the leading half selects the
/// in-phase level, the trailing half the quadrature level (BPSK uses the
/// in-phase axis only). Per axis, level `i` of `L` has amplitude
/// `2i - (L - 1)` and carries the Gray code `i ^ (i >> 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModulationScheme {
    Bpsk,
    Qpsk,
    Qam16,
    Qam64,
}

impl ModulationScheme {
    pub const ALL: [ModulationScheme; 4] = [Self::Bpsk, Self::Qpsk, Self::Qam16, Self::Qam64];

    pub fn bits_per_symbol(self) -> usize {
        match self {
            Self::Bpsk => 1,
            Self::Qpsk => 2,
            Self::Qam16 => 4,
            Self::Qam64 => 6,
        }
    }

    /// Alphabet size.
    pub fn order(self) -> usize {
        1 << self.bits_per_symbol()
    }

    /// Scale applied to the integer grid to reach unit mean energy.
    pub fn normalization(self) -> f64 {
        match self {
            Self::Bpsk => 1.0,
            Self::Qpsk => 1.0 / 2f64.sqrt(),
            Self::Qam16 => 1.0 / 10f64.sqrt(),
            Self::Qam64 => 1.0 / 42f64.sqrt(),
        }
    }

    fn bits_per_axis(self) -> usize {
        match self {
            Self::Bpsk => 1,
            other => other.bits_per_symbol() / 2,
        }
    }

    fn is_real(self) -> bool {
        self == Self::Bpsk
    }

    /// Alphabet indexed by word value, first bit as most significant.
    pub fn constellation(self) -> IqVector {
        (0..self.order())
            .map(|w| {
                let bits: Vec<u8> = (0..self.bits_per_symbol())
                    .rev()
                    .map(|s| ((w >> s) & 1) as u8)
                    .collect();
                self.map_word(&bits)
            })
            .collect()
    }

    fn map_word(self, bits: &[u8]) -> Complex {
        let m = self.bits_per_axis();
        let scale = self.normalization();
        if self.is_real() {
            return Complex::new(axis_level(&bits[..1]) * scale, 0.0);
        }
        Complex::new(axis_level(&bits[..m]) * scale, axis_level(&bits[m..]) * scale)
    }
}

impl fmt::Display for ModulationScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Bpsk => "bpsk",
            Self::Qpsk => "qpsk",
            Self::Qam16 => "qam16",
            Self::Qam64 => "qam64",
        };
        f.write_str(s)
    }
}

impl FromStr for ModulationScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Self::Bpsk),
            "qpsk" => Ok(Self::Qpsk),
            "qam16" | "16qam" => Ok(Self::Qam16),
            "qam64" | "64qam" => Ok(Self::Qam64),
            other => param(format!("unknown modulation '{other}'")),
        }
    }
}

fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

fn gray_inverse(mut g: usize) -> usize {
    let mut i = g;
    while g > 1 {
        g >>= 1;
        i ^= g;
    }
    i
}

// Integer amplitude of the Gray-coded axis bits.
fn axis_level(bits: &[u8]) -> f64 {
    let levels = 1usize << bits.len();
    let code = bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
    let i = gray_inverse(code);
    (2 * i) as f64 - (levels - 1) as f64
}

fn slice_axis(v: f64, bits: usize, out: &mut BitStream) {
    let levels = 1usize << bits;
    let idx = ((v + (levels - 1) as f64) / 2.0).round();
    let idx = idx.clamp(0.0, (levels - 1) as f64) as usize;
    let code = gray(idx);
    for s in (0..bits).rev() {
        out.push(((code >> s) & 1) as u8);
    }
}

/// Maps groups of `bits_per_symbol` bits onto normalized constellation points.
pub fn modulate_bits(bits: &[u8], scheme: ModulationScheme) -> Result<IqVector> {
    let bps = scheme.bits_per_symbol();
    if !bits.len().is_multiple_of(bps) {
        return param(format!("{} bits not divisible by {} bits/symbol", bits.len(), bps));
    }
    if let Some(b) = bits.iter().find(|&&b| b > 1) {
        return Err(Error::Parameter(format!("bit value {b} is not 0 or 1")));
    }
    Ok(bits.chunks(bps).map(|w| scheme.map_word(w)).collect())
}

/// Hard-decision slicer: each symbol becomes the bits of the nearest alphabet point.
///
/// The square grids are separable, so per-axis nearest-level decisions are
/// the minimum Euclidean distance decision.
pub fn demodulate_symbols(sym: &[Complex], scheme: ModulationScheme) -> BitStream {
    let scale = scheme.normalization();
    let m = scheme.bits_per_axis();
    let mut out = Vec::with_capacity(sym.len() * scheme.bits_per_symbol());
    for s in sym {
        slice_axis(s.re / scale, m, &mut out);
        if !scheme.is_real() {
            slice_axis(s.im / scale, m, &mut out);
        }
    }
    out
}
