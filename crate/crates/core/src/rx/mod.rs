//! Receiver chain: detection, CFO removal, channel estimation, zero-forcing
//! equalization, decryption, residual phase correction and slicing.
//!
//! Eavesdroppers are the same chain with a different [`KeySource`].

pub mod equalize;
pub mod kmedoids;
pub mod phase;
pub mod sync;

pub use equalize::{decrypt_symbol, estimate_channel_ltf, estimate_channel_training, DecryptedSymbol};
pub use kmedoids::{k_medoids, ClusterSet};
pub use phase::{correct_phase, estimate_residual_phase, PhaseEstimate};
pub use sync::{correct_cfo, detect_packet, estimate_cfo, SyncResult};

use crate::baseband::{
    demodulate_symbols, legacy_pilots, BitStream, Complex, Dft, IqVector, ModulationScheme, OfdmParams,
};
use crate::channel::ChannelRealization;
use crate::error::{param, Result};
use crate::keys::{KeySchedule, PermutationKey};
use crate::transmitter::{build_training_symbol, long_training_symbol, FrameConfig, Waveform, PREAMBLE_LEN, STF_LEN};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Where the equalizer's channel response comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsiMode {
    /// Ground truth handed over by the channel emulator.
    Oracle,
    /// Estimated from the keyed training symbol (legacy frames: from the LTF).
    Training,
}

/// Which permutation the receiver inverts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeySource {
    /// The transmitter's schedule.
    SharedKey,
    /// No permutation at all.
    IdentityKey,
    /// A uniformly drawn key, seeded by [`RxConfig::seed`].
    RandomGuess,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseTracking {
    Off,
    /// One estimate from all data symbols of the packet.
    PerPacket,
    /// A fresh estimate for every OFDM symbol.
    PerSymbol,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RxConfig {
    pub params: OfdmParams,
    pub scheme: ModulationScheme,
    pub waveform: Waveform,
    pub n_data_symbols: usize,
    pub csi_mode: CsiMode,
    pub key_source: KeySource,
    pub schedule: KeySchedule,
    pub training_secret: Vec<u8>,
    pub cfo_correction: bool,
    pub phase_tracking: PhaseTracking,
    /// Cap on points handed to the clustering step.
    pub max_cluster_points: usize,
    /// Samples to start early when timing comes from the plain preamble.
    pub timing_backoff: usize,
    /// Seed for clustering and for the guessed key.
    pub seed: u64,
}

impl RxConfig {
    /// Shared-key, training-CSI receiver for frames built with `tx`.
    pub fn for_frame(tx: &FrameConfig) -> Self {
        Self {
            params: tx.params.clone(),
            scheme: tx.scheme,
            waveform: tx.mode,
            n_data_symbols: tx.n_data_symbols,
            csi_mode: CsiMode::Training,
            key_source: KeySource::SharedKey,
            schedule: tx.schedule.clone(),
            training_secret: tx.training_secret.clone(),
            cfo_correction: false,
            phase_tracking: PhaseTracking::PerPacket,
            max_cluster_points: 1024,
            timing_backoff: 2,
            seed: 0,
        }
    }

    fn has_training(&self) -> bool {
        self.waveform == Waveform::RandOfdm
    }

    /// Samples from frame start to the end of the last data symbol.
    pub fn frame_len(&self) -> usize {
        let sym = self.params.symbol_len();
        PREAMBLE_LEN + if self.has_training() { sym } else { 0 } + sym * self.n_data_symbols
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.n_data_symbols == 0 {
            return param("n_data_symbols must be at least 1");
        }
        if self.schedule.fft_size() != self.params.fft_size {
            return param("key size does not match fft size");
        }
        if self.timing_backoff > self.params.cp_len {
            return param("timing backoff exceeds the cyclic prefix");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RxReport {
    pub frame_start: usize,
    pub cfo_hz: f64,
    /// Phase correction applied to the data symbols (mean over symbols in
    /// per-symbol mode).
    pub theta_rad: f64,
    pub detection_metric: f64,
    /// Equalizer bins zeroed for deep fades, summed over symbols.
    pub faded_bins: usize,
    /// Phase estimation failed and no correction was applied.
    pub phase_fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RxOutput {
    pub bits: BitStream,
    /// Equalized, phase-corrected data symbols, one vector per OFDM symbol.
    pub symbols: Vec<IqVector>,
    pub channel_estimate: IqVector,
    pub report: RxReport,
}

/// Receiver with the transform, references and decoding keys prepared once.
#[derive(Debug, Clone)]
pub struct Receiver {
    cfg: RxConfig,
    dft: Dft,
    lts: IqVector,
    keys: Vec<PermutationKey>,
    training_reference: Option<IqVector>,
}

impl Receiver {
    pub fn new(cfg: RxConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.params.fft_size;
        let dft = Dft::new(n)?;
        let lts = long_training_symbol(&cfg.params)?;
        let keys = match cfg.key_source {
            KeySource::SharedKey => (0..cfg.n_data_symbols)
                .map(|i| cfg.schedule.key_for_symbol(i).clone())
                .collect(),
            KeySource::IdentityKey => vec![PermutationKey::identity(n); cfg.n_data_symbols],
            KeySource::RandomGuess => {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6775_6573_735f_6b65);
                vec![PermutationKey::random(n, &mut rng, "guess"); cfg.n_data_symbols]
            }
        };
        let training_reference = if cfg.has_training() {
            Some(build_training_symbol(&cfg.training_secret, &keys[0], &cfg.params, &dft)?.reference_spectrum)
        } else {
            None
        };
        Ok(Self {
            cfg,
            dft,
            lts,
            keys,
            training_reference,
        })
    }

    pub fn config(&self) -> &RxConfig {
        &self.cfg
    }

    /// Decodes the first frame found in `rx`. `oracle` is required in
    /// oracle-CSI mode and ignored otherwise.
    pub fn receive(&self, rx: &[Complex], oracle: Option<&ChannelRealization>) -> Result<RxOutput> {
        let cfg = &self.cfg;
        let p = &cfg.params;
        let sym_len = p.symbol_len();

        let sync = match (cfg.csi_mode, oracle) {
            (CsiMode::Oracle, None) => return param("oracle CSI mode needs the channel realization"),
            (CsiMode::Oracle, Some(ch)) => sync::detect_matched(rx, &self.matched_reference(ch))?,
            (CsiMode::Training, _) => {
                let mut s = detect_packet(rx, &self.lts)?;
                s.frame_start = s.frame_start.saturating_sub(cfg.timing_backoff);
                s
            }
        };
        let start = sync.frame_start;
        if rx.len() < start + cfg.frame_len() {
            return param(format!(
                "buffer of {} samples ends inside the frame starting at {start}",
                rx.len()
            ));
        }

        let corrected;
        let (rx, sync) = if cfg.cfo_correction {
            let sync = estimate_cfo(rx, &sync, p)?;
            corrected = correct_cfo(rx, &sync, p.sample_rate);
            (&corrected[..], sync)
        } else {
            (rx, sync)
        };

        let h = match (cfg.csi_mode, oracle) {
            (CsiMode::Oracle, Some(ch)) => ch.freq_response.clone(),
            _ => match &self.training_reference {
                Some(reference) => estimate_channel_training(
                    &rx[start + PREAMBLE_LEN..start + PREAMBLE_LEN + sym_len],
                    reference,
                    p,
                    &self.dft,
                )?,
                None => estimate_channel_ltf(&rx[start + STF_LEN..start + PREAMBLE_LEN], p, &self.dft)?,
            },
        };

        let data_start = start + PREAMBLE_LEN + if cfg.has_training() { sym_len } else { 0 };
        let mut faded_bins = 0;
        let mut decoded = Vec::with_capacity(cfg.n_data_symbols);
        for i in 0..cfg.n_data_symbols {
            let s = data_start + i * sym_len;
            let key = match cfg.waveform {
                Waveform::Legacy => None,
                Waveform::RandOfdm => Some(&self.keys[i]),
            };
            let d = decrypt_symbol(&rx[s..s + sym_len], &h, key, p, &self.dft)?;
            faded_bins += d.faded_bins;
            decoded.push(d);
        }

        let (symbols, theta, fallback) = self.phase_correct(&decoded);
        let bits = symbols.iter().flat_map(|s| demodulate_symbols(s, cfg.scheme)).collect();
        Ok(RxOutput {
            bits,
            symbols,
            channel_estimate: h,
            report: RxReport {
                frame_start: start,
                cfo_hz: sync.cfo_hz(),
                theta_rad: theta,
                detection_metric: sync.detection_metric,
                faded_bins,
                phase_fallback: fallback,
            },
        })
    }

    // The long training symbol as seen through `ch`: the LTF repeats it, so
    // the channel acts on it circularly.
    fn matched_reference(&self, ch: &ChannelRealization) -> IqVector {
        let n = self.lts.len();
        (0..n)
            .map(|i| {
                ch.taps
                    .iter()
                    .enumerate()
                    .map(|(l, t)| t * self.lts[(i + n - l) % n])
                    .sum()
            })
            .collect()
    }

    fn phase_correct(&self, decoded: &[DecryptedSymbol]) -> (Vec<IqVector>, f64, bool) {
        let cfg = &self.cfg;
        let raw: Vec<IqVector> = decoded.iter().map(|d| d.data.clone()).collect();
        match (cfg.phase_tracking, cfg.waveform) {
            (PhaseTracking::Off, _) => (raw, 0.0, false),
            (PhaseTracking::PerPacket, Waveform::Legacy) => {
                let theta = -pilot_phase(decoded.iter());
                (raw.iter().map(|s| correct_phase(s, theta)).collect(), theta, false)
            }
            (PhaseTracking::PerSymbol, Waveform::Legacy) => {
                let thetas: Vec<f64> = decoded.iter().map(|d| -pilot_phase(std::iter::once(d))).collect();
                let out = raw.iter().zip(&thetas).map(|(s, t)| correct_phase(s, *t)).collect();
                (out, mean(&thetas), false)
            }
            (PhaseTracking::PerPacket, Waveform::RandOfdm) => {
                let pooled: IqVector = raw.iter().flatten().copied().collect();
                let pts = phase::subsample(&pooled, cfg.max_cluster_points);
                match estimate_residual_phase(&pts, cfg.scheme, cfg.seed) {
                    Ok(e) => {
                        let theta = -e.offset_rad;
                        (raw.iter().map(|s| correct_phase(s, theta)).collect(), theta, false)
                    }
                    Err(_) => (raw, 0.0, true),
                }
            }
            (PhaseTracking::PerSymbol, Waveform::RandOfdm) => {
                let mut fallback = false;
                let mut thetas = Vec::with_capacity(raw.len());
                let out = raw
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        let theta = match estimate_residual_phase(s, cfg.scheme, cfg.seed.wrapping_add(i as u64)) {
                            Ok(e) => -e.offset_rad,
                            Err(_) => {
                                fallback = true;
                                0.0
                            }
                        };
                        thetas.push(theta);
                        correct_phase(s, theta)
                    })
                    .collect();
                (out, mean(&thetas), fallback)
            }
        }
    }
}

fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().sum::<f64>() / x.len() as f64
    }
}

// Common rotation of the pilots against their known values.
fn pilot_phase<'a>(symbols: impl Iterator<Item = &'a DecryptedSymbol>) -> f64 {
    let reference = legacy_pilots();
    symbols
        .flat_map(|d| d.pilots.iter().zip(&reference).map(|(p, r)| p * r.conj()))
        .sum::<Complex>()
        .arg()
}

/// One-shot form of [`Receiver::receive`].
pub fn receive_frame(rx: &[Complex], cfg: &RxConfig, oracle: Option<&ChannelRealization>) -> Result<RxOutput> {
    Receiver::new(cfg.clone())?.receive(rx, oracle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{add_awgn, apply_channel, realize_channel, ChannelModel};
    use crate::keys::KeyPolicy;
    use crate::transmitter::Transmitter;
    use rand::Rng;

    fn frame_cfg(scheme: ModulationScheme, mode: Waveform, symbols: usize) -> FrameConfig {
        let p = OfdmParams::wifi();
        FrameConfig {
            schedule: KeySchedule::derive(b"unit", p.fft_size, 1, KeyPolicy::Fixed).unwrap(),
            params: p,
            scheme,
            n_data_symbols: symbols,
            training_secret: b"train".to_vec(),
            mode,
        }
    }

    fn payload(len: usize, seed: u64) -> BitStream {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.random_range(0..2u8)).collect()
    }

    // Noise power reference: per-used-subcarrier symbol energy of the frame.
    fn es(frame: &[Complex]) -> f64 {
        crate::baseband::mean_power(frame) * 64.0 / 52.0
    }

    fn padded(frame: &[Complex], lead: usize) -> IqVector {
        let mut buf = vec![Complex::new(0.0, 0.0); lead];
        buf.extend_from_slice(frame);
        buf.extend(vec![Complex::new(0.0, 0.0); 40]);
        buf
    }

    #[test]
    fn loopback_every_scheme_and_waveform() {
        for scheme in ModulationScheme::ALL {
            for mode in [Waveform::Legacy, Waveform::RandOfdm] {
                let cfg = frame_cfg(scheme, mode, 6);
                let bits = payload(cfg.payload_len(), 1);
                let frame = Transmitter::new(cfg.clone()).unwrap().build_frame(&bits).unwrap();
                let rx = padded(&frame.samples(), 123);
                let out = receive_frame(&rx, &RxConfig::for_frame(&cfg), None).unwrap();
                assert_eq!(out.bits, bits, "{scheme} {mode}");
                assert_eq!(out.report.frame_start, 123 - 2);
            }
        }
    }

    #[test]
    fn oracle_mode_is_exact_on_indoor6() {
        let cfg = frame_cfg(ModulationScheme::Qam64, Waveform::RandOfdm, 8);
        let p = &cfg.params;
        let bits = payload(cfg.payload_len(), 2);
        let frame = Transmitter::new(cfg.clone()).unwrap().build_frame(&bits).unwrap();
        let mut rc = RxConfig::for_frame(&cfg);
        rc.csi_mode = CsiMode::Oracle;
        for seed in 0..10 {
            let ch = realize_channel(&ChannelModel::indoor6(), p, seed).unwrap();
            let rx = apply_channel(&padded(&frame.samples(), 77), &ch);
            let out = receive_frame(&rx, &rc, Some(&ch)).unwrap();
            assert_eq!(out.report.frame_start, 77);
            assert!(out.bits == bits);
            let out = receive_frame(&rx, &RxConfig::for_frame(&cfg), None).unwrap();
            let errors = out.bits.iter().zip(&bits).filter(|(a, b)| a != b).count();
            assert_eq!(errors, 0, "seed {seed}: {:?}", out.report);
        }
    }

    #[test]
    fn oracle_mode_without_realization_is_rejected() {
        let cfg = frame_cfg(ModulationScheme::Bpsk, Waveform::RandOfdm, 1);
        let mut rc = RxConfig::for_frame(&cfg);
        rc.csi_mode = CsiMode::Oracle;
        let frame = build_frame_samples(&cfg, 0);
        assert!(matches!(
            receive_frame(&frame, &rc, None),
            Err(crate::Error::Parameter(_))
        ));
    }

    fn build_frame_samples(cfg: &FrameConfig, seed: u64) -> IqVector {
        let bits = payload(cfg.payload_len(), seed);
        padded(
            &Transmitter::new(cfg.clone())
                .unwrap()
                .build_frame(&bits)
                .unwrap()
                .samples(),
            200,
        )
    }

    #[test]
    fn bpsk_awgn_40db_is_error_free() {
        let cfg = frame_cfg(ModulationScheme::Bpsk, Waveform::RandOfdm, 100);
        let mut errors = 0;
        let mut sent = 0;
        for seed in 0..21 {
            let bits = payload(cfg.payload_len(), seed);
            let frame = Transmitter::new(cfg.clone()).unwrap().build_frame(&bits).unwrap();
            let samples = frame.samples();
            let rx = add_awgn(&padded(&samples, 150), 40.0, es(&samples), seed).unwrap();
            let out = receive_frame(&rx, &RxConfig::for_frame(&cfg), None).unwrap();
            errors += out.bits.iter().zip(&bits).filter(|(a, b)| a != b).count();
            sent += bits.len();
        }
        assert!(sent >= 100_000);
        assert_eq!(errors, 0);
    }

    #[test]
    fn eavesdroppers_stay_at_half() {
        let cfg = frame_cfg(ModulationScheme::Bpsk, Waveform::RandOfdm, 100);
        for (source, csi) in [
            (KeySource::IdentityKey, CsiMode::Training),
            (KeySource::RandomGuess, CsiMode::Training),
            (KeySource::IdentityKey, CsiMode::Oracle),
        ] {
            let mut errors = 0;
            let mut sent = 0;
            for seed in 0..21 {
                let bits = payload(cfg.payload_len(), seed);
                let frame = Transmitter::new(cfg.clone()).unwrap().build_frame(&bits).unwrap();
                let ch = realize_channel(&ChannelModel::awgn(), &cfg.params, seed).unwrap();
                let samples = frame.samples();
                let rx = add_awgn(&padded(&samples, 150), 40.0, es(&samples), seed).unwrap();
                let mut rc = RxConfig::for_frame(&cfg);
                rc.key_source = source;
                rc.csi_mode = csi;
                rc.seed = seed;
                let out = receive_frame(&rx, &rc, Some(&ch)).unwrap();
                errors += out.bits.iter().zip(&bits).filter(|(a, b)| a != b).count();
                sent += bits.len();
            }
            let ber = errors as f64 / sent as f64;
            assert!((ber - 0.5).abs() <= 0.03, "{source:?} {csi:?}: {ber}");
        }
    }

    #[test]
    fn static_phase_is_removed_in_oracle_mode() {
        let cfg = frame_cfg(ModulationScheme::Qam16, Waveform::RandOfdm, 20);
        let bits = payload(cfg.payload_len(), 3);
        let frame = Transmitter::new(cfg.clone()).unwrap().build_frame(&bits).unwrap();
        let rot = Complex::from_polar(1.0, 0.1);
        let rx: IqVector = padded(&frame.samples(), 90).iter().map(|s| s * rot).collect();
        let mut rc = RxConfig::for_frame(&cfg);
        rc.csi_mode = CsiMode::Oracle;
        let ch = ChannelRealization::identity(&cfg.params);
        let out = receive_frame(&rx, &rc, Some(&ch)).unwrap();
        assert!((out.report.theta_rad + 0.1).abs() < 1e-6, "{}", out.report.theta_rad);
        assert_eq!(out.bits, bits);
    }

    #[test]
    fn truncated_buffer_is_an_error() {
        let cfg = frame_cfg(ModulationScheme::Qpsk, Waveform::RandOfdm, 4);
        let rx = build_frame_samples(&cfg, 4);
        assert!(receive_frame(&rx[..rx.len() - 100], &RxConfig::for_frame(&cfg), None).is_err());
    }
}
