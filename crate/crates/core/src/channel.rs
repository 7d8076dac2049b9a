//! Channel emulator: AWGN, flat and tapped-delay-line Rayleigh fading,
//! carrier frequency offset and static phase impairments.
//!
//! Fading is quasi-static: one independent realization per packet. At the
//! 3 Hz Doppler of the indoor profile the coherence time is hundreds of
//! milliseconds, far longer than any frame built here.

use crate::baseband::{Complex, Dft, IqVector, OfdmParams};
use crate::error::{param, Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Awgn,
    FlatRayleigh,
    TdlRayleigh,
}

/// Power-delay profile of a channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub kind: ChannelKind,
    pub path_delays_ns: Vec<f64>,
    pub path_gains_db: Vec<f64>,
    pub doppler_hz: f64,
}

impl ChannelModel {
    pub fn awgn() -> Self {
        Self {
            kind: ChannelKind::Awgn,
            path_delays_ns: vec![],
            path_gains_db: vec![],
            doppler_hz: 0.0,
        }
    }

    /// Single-tap Rayleigh.
    pub fn flat() -> Self {
        Self {
            kind: ChannelKind::FlatRayleigh,
            path_delays_ns: vec![0.0],
            path_gains_db: vec![0.0],
            doppler_hz: 0.0,
        }
    }

    /// Six-path frequency-selective indoor profile.
    pub fn indoor6() -> Self {
        Self {
            kind: ChannelKind::TdlRayleigh,
            path_delays_ns: vec![0.0, 100.0, 200.0, 300.0, 500.0, 700.0],
            path_gains_db: vec![0.0, -3.6, -7.2, -10.8, -18.0, -25.2],
            doppler_hz: 3.0,
        }
    }

    /// Preset name as accepted by [`ChannelModel::from_str`].
    pub fn preset_name(&self) -> &'static str {
        match self.kind {
            ChannelKind::Awgn => "awgn",
            ChannelKind::FlatRayleigh => "flat",
            ChannelKind::TdlRayleigh => "indoor6",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.path_delays_ns.len() != self.path_gains_db.len() {
            return Err(Error::Model(format!(
                "{} delays vs {} gains",
                self.path_delays_ns.len(),
                self.path_gains_db.len()
            )));
        }
        match self.kind {
            ChannelKind::Awgn if !self.path_delays_ns.is_empty() => {
                Err(Error::Model("awgn model must not list taps".into()))
            }
            ChannelKind::FlatRayleigh if self.path_delays_ns.len() != 1 => {
                Err(Error::Model("flat model has exactly one tap".into()))
            }
            ChannelKind::TdlRayleigh if self.path_delays_ns.is_empty() => {
                Err(Error::Model("tapped delay line needs at least one path".into()))
            }
            _ => Ok(()),
        }
    }

    /// Sum of linear path gains, the expected total tap power.
    pub fn total_linear_gain(&self) -> f64 {
        match self.kind {
            ChannelKind::Awgn => 1.0,
            _ => self.path_gains_db.iter().map(|g| db_to_linear(*g)).sum(),
        }
    }
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.preset_name())
    }
}

impl FromStr for ChannelModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "awgn" => Ok(Self::awgn()),
            "flat" => Ok(Self::flat()),
            "indoor6" => Ok(Self::indoor6()),
            other => param(format!("unknown channel preset '{other}'")),
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// One draw of a channel: sample-spaced taps and their N-bin response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub taps: IqVector,
    pub freq_response: IqVector,
    pub seed: u64,
}

impl ChannelRealization {
    /// Builds a realization from explicit taps.
    pub fn from_taps(taps: IqVector, p: &OfdmParams, seed: u64) -> Result<Self> {
        if taps.is_empty() || taps.len() > p.cp_len {
            return Err(Error::Model(format!(
                "{} taps do not fit in a {}-sample cyclic prefix",
                taps.len(),
                p.cp_len
            )));
        }
        let mut padded = taps.clone();
        padded.resize(p.fft_size, Complex::new(0.0, 0.0));
        let freq_response = Dft::new(p.fft_size)?.forward(&padded)?;
        Ok(Self {
            taps,
            freq_response,
            seed,
        })
    }

    pub fn identity(p: &OfdmParams) -> Self {
        Self::from_taps(vec![Complex::new(1.0, 0.0)], p, 0).expect("single tap always fits")
    }
}

/// Circularly-symmetric complex Gaussian with `E|z|^2 = variance`.
pub(crate) fn complex_gaussian<R: rand::Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex::new(re * s, im * s)
}

/// Draws taps at `round(delay * fs)` with Rayleigh amplitudes of the
/// profile's linear powers. Deterministic per seed.
pub fn realize_channel(model: &ChannelModel, p: &OfdmParams, seed: u64) -> Result<ChannelRealization> {
    model.validate()?;
    if model.kind == ChannelKind::Awgn {
        return ChannelRealization::from_taps(vec![Complex::new(1.0, 0.0)], p, seed);
    }
    let offsets: Vec<usize> = model
        .path_delays_ns
        .iter()
        .map(|d| {
            if !(d.is_finite() && *d >= 0.0) {
                return Err(Error::Model(format!("invalid path delay {d} ns")));
            }
            Ok((d * 1e-9 * p.sample_rate).round() as usize)
        })
        .collect::<Result<_>>()?;
    let max = offsets.iter().copied().max().unwrap_or(0);
    if max >= p.cp_len {
        return Err(Error::Model(format!(
            "path at {max} samples exceeds the {}-sample cyclic prefix",
            p.cp_len
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut taps = vec![Complex::new(0.0, 0.0); max + 1];
    for (&off, &g) in offsets.iter().zip(&model.path_gains_db) {
        taps[off] += complex_gaussian(&mut rng, db_to_linear(g));
    }
    ChannelRealization::from_taps(taps, p, seed)
}

/// Linear convolution with the taps, truncated to the input length.
pub fn apply_channel(x: &[Complex], ch: &ChannelRealization) -> IqVector {
    let mut out = vec![Complex::new(0.0, 0.0); x.len()];
    for (n, o) in out.iter_mut().enumerate() {
        let mut acc = Complex::new(0.0, 0.0);
        for (l, h) in ch.taps.iter().enumerate().take(n + 1) {
            acc += h * x[n - l];
        }
        *o = acc;
    }
    out
}

/// Adds complex white Gaussian noise with total variance
/// `signal_power / 10^(snr_db/10)` per sample. `snr_db = +inf` disables noise.
pub fn add_awgn(x: &[Complex], snr_db: f64, signal_power: f64, seed: u64) -> Result<IqVector> {
    if !(signal_power > 0.0 && signal_power.is_finite()) {
        return param(format!("signal power {signal_power} must be positive"));
    }
    if snr_db.is_nan() {
        return param("snr_db is NaN");
    }
    if snr_db == f64::INFINITY {
        return Ok(x.to_vec());
    }
    let variance = noise_variance(snr_db, signal_power);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(x.iter().map(|v| v + complex_gaussian(&mut rng, variance)).collect())
}

pub fn noise_variance(snr_db: f64, signal_power: f64) -> f64 {
    signal_power / db_to_linear(snr_db)
}

/// `out[n] = x[n] e^{j(2 pi cfo n / fs + phase0)}`.
pub fn apply_cfo(x: &[Complex], cfo_hz: f64, fs: f64, phase0: f64) -> IqVector {
    let step = TAU * cfo_hz / fs;
    x.iter()
        .enumerate()
        .map(|(n, v)| v * Complex::from_polar(1.0, step * n as f64 + phase0))
        .collect()
}

/// Hardware impairments injected on top of the channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpairmentConfig {
    pub cfo_hz: f64,
    pub static_phase_rad: f64,
    pub snr_db: f64,
}

impl Default for ImpairmentConfig {
    fn default() -> Self {
        Self {
            cfo_hz: 0.0,
            static_phase_rad: 0.0,
            snr_db: f64::INFINITY,
        }
    }
}

impl ImpairmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.cfo_hz.is_finite() || !self.static_phase_rad.is_finite() || self.snr_db.is_nan() {
            return param("impairments must be finite (snr may be +inf)");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseband::{add_cyclic_prefix, remove_cyclic_prefix};
    use rand::Rng;

    fn random_vec(n: usize, seed: u64) -> IqVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn awgn_model_is_identity_tap() {
        let p = OfdmParams::wifi();
        let ch = realize_channel(&ChannelModel::awgn(), &p, 1).unwrap();
        assert_eq!(ch.taps, vec![Complex::new(1.0, 0.0)]);
        assert!(ch
            .freq_response
            .iter()
            .all(|h| (h - Complex::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn flat_model_has_flat_magnitude() {
        let p = OfdmParams::wifi();
        let ch = realize_channel(&ChannelModel::flat(), &p, 2).unwrap();
        assert_eq!(ch.taps.len(), 1);
        let m0 = ch.freq_response[0].norm();
        assert!(ch.freq_response.iter().all(|h| (h.norm() - m0).abs() < 1e-12));
    }

    #[test]
    fn indoor6_tap_positions() {
        let p = OfdmParams::wifi();
        let ch = realize_channel(&ChannelModel::indoor6(), &p, 3).unwrap();
        assert_eq!(ch.taps.len(), 15);
        let nonzero: Vec<usize> = (0..15).filter(|&i| ch.taps[i].norm() > 0.0).collect();
        assert_eq!(nonzero, vec![0, 2, 4, 6, 10, 14]);
    }

    #[test]
    fn indoor6_mean_power_matches_profile() {
        let p = OfdmParams::wifi();
        let model = ChannelModel::indoor6();
        let expected: f64 = [0.0, -3.6, -7.2, -10.8, -18.0, -25.2]
            .iter()
            .map(|g: &f64| 10f64.powf(g / 10.0))
            .sum();
        let draws = 10_000;
        let mean: f64 = (0..draws)
            .map(|s| {
                let ch = realize_channel(&model, &p, s).unwrap();
                ch.taps.iter().map(|t| t.norm_sqr()).sum::<f64>()
            })
            .sum::<f64>()
            / draws as f64;
        assert!((mean - expected).abs() / expected < 0.05, "{mean} vs {expected}");
    }

    #[test]
    fn realization_is_deterministic_per_seed() {
        let p = OfdmParams::wifi();
        let a = realize_channel(&ChannelModel::indoor6(), &p, 9).unwrap();
        let b = realize_channel(&ChannelModel::indoor6(), &p, 9).unwrap();
        let c = realize_channel(&ChannelModel::indoor6(), &p, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn delay_beyond_prefix_is_model_error() {
        let p = OfdmParams::wifi();
        let mut m = ChannelModel::indoor6();
        m.path_delays_ns[5] = 900.0;
        assert!(matches!(realize_channel(&m, &p, 0), Err(Error::Model(_))));
        let mut m = ChannelModel::indoor6();
        m.path_gains_db.pop();
        assert!(realize_channel(&m, &p, 0).is_err());
    }

    #[test]
    fn identity_and_delay_taps() {
        let p = OfdmParams::wifi();
        let x = random_vec(10, 1);
        let id = ChannelRealization::identity(&p);
        assert_eq!(apply_channel(&x, &id), x);
        let delay = ChannelRealization::from_taps(vec![Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)], &p, 0).unwrap();
        let y = apply_channel(&x, &delay);
        assert_eq!(y[0], Complex::new(0.0, 0.0));
        assert_eq!(&y[1..], &x[..9]);
    }

    #[test]
    fn cyclic_prefix_turns_convolution_circular() {
        let p = OfdmParams::wifi();
        let dft = Dft::new(64).unwrap();
        let taps = vec![
            Complex::new(0.9, 0.1),
            Complex::new(-0.3, 0.2),
            Complex::new(0.05, -0.4),
        ];
        let ch = ChannelRealization::from_taps(taps, &p, 0).unwrap();
        let spectrum = random_vec(64, 7);
        let sym = add_cyclic_prefix(&dft.inverse(&spectrum).unwrap(), 16).unwrap();
        let rx = apply_channel(&sym, &ch);
        let y = dft.forward(&remove_cyclic_prefix(&rx, 64, 16).unwrap()).unwrap();
        for k in 0..64 {
            assert!((y[k] - ch.freq_response[k] * spectrum[k]).norm() < 1e-9);
        }
    }

    #[test]
    fn infinite_snr_is_noise_free() {
        let x = random_vec(32, 2);
        assert_eq!(add_awgn(&x, f64::INFINITY, 1.0, 0).unwrap(), x);
    }

    #[test]
    fn awgn_statistics() {
        let n = 1_000_000;
        let zeros = vec![Complex::new(0.0, 0.0); n];
        let noise = add_awgn(&zeros, 10.0, 1.0, 42).unwrap();
        let var: f64 = noise.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
        let measured_snr = 10.0 * (1.0 / var).log10();
        assert!((measured_snr - 10.0).abs() < 0.1, "{measured_snr}");
        let mean: Complex = noise.iter().sum::<Complex>() / n as f64;
        assert!(mean.norm() < 0.01 * var.sqrt());
    }

    #[test]
    fn awgn_rejects_bad_power() {
        assert!(add_awgn(&[Complex::new(1.0, 0.0)], 10.0, 0.0, 0).is_err());
        assert!(add_awgn(&[Complex::new(1.0, 0.0)], 10.0, -1.0, 0).is_err());
    }

    #[test]
    fn cfo_zero_and_static_phase() {
        let x = random_vec(16, 3);
        assert_eq!(apply_cfo(&x, 0.0, 20e6, 0.0), x);
        let theta = 0.3;
        let y = apply_cfo(&x, 0.0, 20e6, theta);
        for (a, b) in x.iter().zip(&y) {
            assert!((a * Complex::from_polar(1.0, theta) - b).norm() < 1e-15);
        }
    }

    #[test]
    fn cfo_of_one_subcarrier_shifts_one_bin() {
        let dft = Dft::new(64).unwrap();
        let mut spectrum = vec![Complex::new(0.0, 0.0); 64];
        spectrum[5] = Complex::new(1.0, 0.0);
        let x = dft.inverse(&spectrum).unwrap();
        let y = dft.forward(&apply_cfo(&x, 20e6 / 64.0, 20e6, 0.0)).unwrap();
        for (k, v) in y.iter().enumerate() {
            let expected = if k == 6 { 1.0 } else { 0.0 };
            assert!((v.norm() - expected).abs() < 1e-12, "bin {k}");
        }
    }

    #[test]
    fn cfo_preserves_norm() {
        let x = random_vec(256, 4);
        let y = apply_cfo(&x, 12_345.0, 20e6, 1.0);
        let ex: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        let ey: f64 = y.iter().map(|v| v.norm_sqr()).sum();
        assert!((ex - ey).abs() < 1e-12 * ex);
    }

    #[test]
    fn presets_parse() {
        for name in ["awgn", "flat", "indoor6"] {
            let m: ChannelModel = name.parse().unwrap();
            assert_eq!(m.preset_name(), name);
            m.validate().unwrap();
        }
        assert!("rician".parse::<ChannelModel>().is_err());
    }
}
