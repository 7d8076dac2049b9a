//! Complex-vector DSP primitives shared by the transmitter, receiver and
//! analysis code: DFT/IDFT, constellation mapping, cyclic prefix handling
//! and the 802.11a/g subcarrier layout.

mod dft;
mod modulation;

pub use dft::{forward_dft, inverse_dft, Dft};
pub use modulation::{demodulate_symbols, modulate_bits, ModulationScheme};

use crate::error::{param, Result};
use serde::{Deserialize, Serialize};

pub type Complex = num_complex::Complex64;

/// Complex baseband samples, time or frequency domain.
pub type IqVector = Vec<Complex>;

/// One bit per element, each 0 or 1.
pub type BitStream = Vec<u8>;

/// Legacy pilot values, in the order of [`OfdmParams::pilot_bins`].
///
/// Bins 7, 21, 43 (-21) and 57 (-7) carry +1, -1, +1, +1, matching the
/// 802.11a base pilot pattern {1, 1, 1, -1} on logical bins -21, -7, 7, 21.
pub const LEGACY_PILOTS: [f64; 4] = [1.0, -1.0, 1.0, 1.0];

/// OFDM numerology: FFT size, cyclic prefix and subcarrier allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfdmParams {
    pub fft_size: usize,
    pub cp_len: usize,
    /// Occupied bins (data and pilots), ascending, wrapped to `0..fft_size`.
    pub used_subcarriers: Vec<usize>,
    /// Pilot bins, ascending; a subset of `used_subcarriers`.
    pub pilot_bins: Vec<usize>,
    pub sample_rate: f64,
}

impl Default for OfdmParams {
    fn default() -> Self {
        Self::wifi()
    }
}

impl OfdmParams {
    /// 802.11a/g layout: N=64, CP=16, bins ±1..±26 used, pilots at ±7/±21, 20 MHz.
    pub fn wifi() -> Self {
        let used_subcarriers: Vec<usize> = (1..=26).chain(38..64).collect();
        Self {
            fft_size: 64,
            cp_len: 16,
            used_subcarriers,
            pilot_bins: vec![7, 21, 43, 57],
            sample_rate: 20e6,
        }
    }

    /// Custom numerology. The layout must satisfy the same structural
    /// invariants as the 802.11 one, except for the 52-bin count.
    pub fn custom(
        fft_size: usize,
        cp_len: usize,
        used_subcarriers: Vec<usize>,
        pilot_bins: Vec<usize>,
        sample_rate: f64,
    ) -> Result<Self> {
        let p = Self {
            fft_size,
            cp_len,
            used_subcarriers,
            pilot_bins,
            sample_rate,
        };
        p.check_structure()?;
        Ok(p)
    }

    fn check_structure(&self) -> Result<()> {
        if self.fft_size < 2 {
            return param(format!("fft_size {} < 2", self.fft_size));
        }
        if self.cp_len == 0 || self.cp_len >= self.fft_size {
            return param(format!("cp_len {} must be in 1..{}", self.cp_len, self.fft_size));
        }
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return param("sample_rate must be positive");
        }
        let sorted_unique = |v: &[usize]| v.windows(2).all(|w| w[0] < w[1]);
        if !sorted_unique(&self.used_subcarriers) || !sorted_unique(&self.pilot_bins) {
            return param("subcarrier lists must be strictly ascending");
        }
        if self.used_subcarriers.contains(&0) {
            return param("DC bin cannot be a used subcarrier");
        }
        if self.used_subcarriers.iter().any(|&b| b >= self.fft_size) {
            return param("used subcarrier outside 0..fft_size");
        }
        if !self.pilot_bins.iter().all(|b| self.used_subcarriers.contains(b)) {
            return param("pilot bins must be used subcarriers");
        }
        if self.pilot_bins.len() != LEGACY_PILOTS.len() {
            return param("exactly 4 pilot bins are required");
        }
        Ok(())
    }

    /// Full invariant check, including the 52-bin 802.11 count.
    pub fn validate(&self) -> Result<()> {
        self.check_structure()?;
        if self.used_subcarriers.len() != 52 {
            return param(format!(
                "expected 52 used subcarriers, found {}",
                self.used_subcarriers.len()
            ));
        }
        Ok(())
    }

    /// Data bins: used bins that are not pilots, ascending.
    pub fn data_bins(&self) -> Vec<usize> {
        self.used_subcarriers
            .iter()
            .copied()
            .filter(|b| !self.pilot_bins.contains(b))
            .collect()
    }

    pub fn n_data_subcarriers(&self) -> usize {
        self.used_subcarriers.len() - self.pilot_bins.len()
    }

    /// Samples per OFDM symbol including the cyclic prefix.
    pub fn symbol_len(&self) -> usize {
        self.fft_size + self.cp_len
    }

    pub fn subcarrier_spacing(&self) -> f64 {
        self.sample_rate / self.fft_size as f64
    }

    pub fn is_wifi_layout(&self) -> bool {
        *self == Self::wifi()
    }
}

/// Prepends the last `v` samples of `x`.
pub fn add_cyclic_prefix(x: &[Complex], v: usize) -> Result<IqVector> {
    if v == 0 || v >= x.len() {
        return param(format!("cyclic prefix {} out of range 1..{}", v, x.len()));
    }
    let mut out = Vec::with_capacity(x.len() + v);
    out.extend_from_slice(&x[x.len() - v..]);
    out.extend_from_slice(x);
    Ok(out)
}

/// Drops the leading `v` samples of an `n + v` sample symbol.
pub fn remove_cyclic_prefix(x: &[Complex], n: usize, v: usize) -> Result<IqVector> {
    if x.len() != n + v {
        return param(format!("symbol length {} != fft size {} + prefix {}", x.len(), n, v));
    }
    Ok(x[v..].to_vec())
}

/// Places data and pilot points on an N-bin spectrum; DC and guard bins are zero.
pub fn map_subcarriers(data: &[Complex], pilots: &[Complex], p: &OfdmParams) -> Result<IqVector> {
    let data_bins = p.data_bins();
    if data.len() != data_bins.len() {
        return param(format!("expected {} data points, got {}", data_bins.len(), data.len()));
    }
    if pilots.len() != p.pilot_bins.len() {
        return param(format!("expected {} pilots, got {}", p.pilot_bins.len(), pilots.len()));
    }
    let mut spectrum = vec![Complex::new(0.0, 0.0); p.fft_size];
    for (&bin, &d) in data_bins.iter().zip(data) {
        spectrum[bin] = d;
    }
    for (&bin, &pv) in p.pilot_bins.iter().zip(pilots) {
        spectrum[bin] = pv;
    }
    Ok(spectrum)
}

/// Inverse of [`map_subcarriers`]: returns `(data, pilots)`.
pub fn unmap_subcarriers(spectrum: &[Complex], p: &OfdmParams) -> Result<(IqVector, IqVector)> {
    if spectrum.len() != p.fft_size {
        return param(format!("spectrum length {} != fft size {}", spectrum.len(), p.fft_size));
    }
    let data = p.data_bins().iter().map(|&b| spectrum[b]).collect();
    let pilots = p.pilot_bins.iter().map(|&b| spectrum[b]).collect();
    Ok((data, pilots))
}

pub fn legacy_pilots() -> IqVector {
    LEGACY_PILOTS.iter().map(|&v| Complex::new(v, 0.0)).collect()
}

pub fn energy(x: &[Complex]) -> f64 {
    x.iter().map(|c| c.norm_sqr()).sum()
}

pub fn mean_power(x: &[Complex]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        energy(x) / x.len() as f64
    }
}

pub fn all_finite(x: &[Complex]) -> bool {
    x.iter().all(|c| c.re.is_finite() && c.im.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex {
        Complex::new(re, 0.0)
    }

    #[test]
    fn wifi_layout_invariants() {
        let p = OfdmParams::wifi();
        p.validate().unwrap();
        assert_eq!(p.used_subcarriers.len(), 52);
        assert_eq!(p.data_bins().len(), 48);
        assert!(!p.used_subcarriers.contains(&0));
        // 11 guard bins + DC
        let unused = (0..64).filter(|b| !p.used_subcarriers.contains(b)).count();
        assert_eq!(unused, 12);
    }

    #[test]
    fn custom_layout_rejects_dc_and_long_prefix() {
        let used: Vec<usize> = (0..8).collect();
        assert!(OfdmParams::custom(16, 4, used, vec![1, 2, 3, 4], 1e6).is_err());
        let used: Vec<usize> = (1..9).collect();
        assert!(OfdmParams::custom(16, 16, used.clone(), vec![1, 2, 3, 4], 1e6).is_err());
        assert!(OfdmParams::custom(16, 4, used, vec![1, 2, 3, 4], 1e6).is_ok());
    }

    #[test]
    fn cyclic_prefix_definition() {
        let x = vec![c(1.0), c(2.0), c(3.0), c(4.0)];
        let y = add_cyclic_prefix(&x, 2).unwrap();
        assert_eq!(y, vec![c(3.0), c(4.0), c(1.0), c(2.0), c(3.0), c(4.0)]);
        let y = add_cyclic_prefix(&x, 3).unwrap();
        assert_eq!(y.len(), 7);
        assert_eq!(&y[..3], &[c(2.0), c(3.0), c(4.0)]);
        assert_eq!(remove_cyclic_prefix(&y, 4, 3).unwrap(), x);
    }

    #[test]
    fn cyclic_prefix_range_errors() {
        let x = vec![c(1.0); 4];
        assert!(add_cyclic_prefix(&x, 0).is_err());
        assert!(add_cyclic_prefix(&x, 4).is_err());
        assert!(remove_cyclic_prefix(&x, 4, 1).is_err());
    }

    #[test]
    fn map_zero_inputs_gives_zero_spectrum() {
        let p = OfdmParams::wifi();
        let s = map_subcarriers(&[c(0.0); 48], &[c(0.0); 4], &p).unwrap();
        assert_eq!(s.len(), 64);
        assert!(s.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn map_ones_leaves_twelve_zero_bins() {
        let p = OfdmParams::wifi();
        let s = map_subcarriers(&[c(1.0); 48], &[c(1.0); 4], &p).unwrap();
        let zeros: Vec<usize> = (0..64).filter(|&k| s[k].norm() == 0.0).collect();
        assert_eq!(zeros.len(), 12);
        // DC plus guards 27..=37
        let mut expected = vec![0];
        expected.extend(27..=37);
        assert_eq!(zeros, expected);
    }

    #[test]
    fn map_unmap_round_trip() {
        let p = OfdmParams::wifi();
        let data: Vec<Complex> = (0..48).map(|i| Complex::new(i as f64, -(i as f64))).collect();
        let pilots = legacy_pilots();
        let s = map_subcarriers(&data, &pilots, &p).unwrap();
        let (d2, p2) = unmap_subcarriers(&s, &p).unwrap();
        assert_eq!(d2, data);
        assert_eq!(p2, pilots);
    }

    #[test]
    fn map_wrong_counts() {
        let p = OfdmParams::wifi();
        assert!(map_subcarriers(&[c(1.0); 47], &[c(1.0); 4], &p).is_err());
        assert!(map_subcarriers(&[c(1.0); 48], &[c(1.0); 3], &p).is_err());
        assert!(unmap_subcarriers(&[c(1.0); 63], &p).is_err());
    }
}
