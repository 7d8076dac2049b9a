//! Monte-Carlo BER engine: transmit, propagate, receive and count bit
//! errors over a grid of SNRs, modulations and receiver modes.

use crate::baseband::{mean_power, BitStream, Complex, ModulationScheme, OfdmParams};
use crate::channel::{add_awgn, apply_cfo, apply_channel, realize_channel, ChannelModel};
use crate::error::{param, Error, Result};
use crate::keys::{KeyPolicy, KeySchedule};
use crate::rx::{CsiMode, KeySource, PhaseTracking, Receiver, RxConfig};
use crate::transmitter::{FrameConfig, Transmitter, Waveform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Receiver setups compared in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RxMode {
    /// Legacy OFDM with ground-truth CSI.
    Legacy,
    /// Randomized OFDM, shared key, ground-truth CSI.
    Oracle,
    /// Randomized OFDM, shared key, CSI from the keyed training symbol.
    Training,
    /// Eavesdropper inverting no permutation, training CSI.
    EveIdentity,
    /// Eavesdropper with a guessed key, training CSI.
    EveRandom,
    /// Eavesdropper with a guessed key and ground-truth CSI.
    EveOracleCsi,
}

impl RxMode {
    pub const ALL: [RxMode; 6] = [
        Self::Legacy,
        Self::Oracle,
        Self::Training,
        Self::EveIdentity,
        Self::EveRandom,
        Self::EveOracleCsi,
    ];

    pub fn waveform(self) -> Waveform {
        match self {
            Self::Legacy => Waveform::Legacy,
            _ => Waveform::RandOfdm,
        }
    }

    pub fn csi_mode(self) -> CsiMode {
        match self {
            Self::Legacy | Self::Oracle | Self::EveOracleCsi => CsiMode::Oracle,
            _ => CsiMode::Training,
        }
    }

    pub fn key_source(self) -> KeySource {
        match self {
            Self::EveIdentity => KeySource::IdentityKey,
            Self::EveRandom | Self::EveOracleCsi => KeySource::RandomGuess,
            _ => KeySource::SharedKey,
        }
    }

    pub fn is_eavesdropper(self) -> bool {
        matches!(self, Self::EveIdentity | Self::EveRandom | Self::EveOracleCsi)
    }
}

impl fmt::Display for RxMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Legacy => "legacy",
            Self::Oracle => "oracle",
            Self::Training => "training",
            Self::EveIdentity => "eve-identity",
            Self::EveRandom => "eve-random",
            Self::EveOracleCsi => "eve-oracle-csi",
        })
    }
}

impl FromStr for RxMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.to_string() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown receiver mode '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub snr_db: Vec<f64>,
    pub schemes: Vec<ModulationScheme>,
    pub channel: ChannelModel,
    pub modes: Vec<RxMode>,
    pub n_packets: usize,
    pub n_data_symbols: usize,
    pub seed: u64,
    pub cfo_hz: f64,
    pub static_phase_rad: f64,
    /// `None` corrects CFO only when an offset is injected.
    pub cfo_correction: Option<bool>,
    pub phase_tracking: PhaseTracking,
    pub key_secret: Vec<u8>,
    pub training_secret: Vec<u8>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            schemes: vec![ModulationScheme::Bpsk],
            channel: ChannelModel::awgn(),
            modes: vec![RxMode::Legacy, RxMode::Oracle],
            n_packets: 100,
            n_data_symbols: 100,
            seed: 1,
            cfo_hz: 0.0,
            static_phase_rad: 0.0,
            cfo_correction: None,
            phase_tracking: PhaseTracking::PerPacket,
            key_secret: b"shared key".to_vec(),
            training_secret: b"training".to_vec(),
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_empty() || self.schemes.is_empty() || self.modes.is_empty() {
            return param("sweep needs at least one SNR, scheme and mode");
        }
        if self.snr_db.iter().any(|s| s.is_nan()) {
            return param("SNR values must not be NaN");
        }
        if self.n_packets == 0 || self.n_data_symbols == 0 {
            return param("packets and symbols per packet must be positive");
        }
        if !self.cfo_hz.is_finite() || !self.static_phase_rad.is_finite() {
            return param("impairments must be finite");
        }
        self.channel.validate()
    }

    /// Whether every point sends at least `10 / target_ber` bits.
    pub fn resolves(&self, target_ber: f64) -> bool {
        let p = OfdmParams::wifi();
        self.schemes.iter().all(|s| {
            (self.n_packets * self.n_data_symbols * p.n_data_subcarriers() * s.bits_per_symbol()) as f64
                >= 10.0 / target_ber
        })
    }

    /// Sweep points in output order: scheme, then mode, then SNR.
    pub fn points(&self) -> Vec<SweepPoint> {
        let mut out = Vec::new();
        for &scheme in &self.schemes {
            for &mode in &self.modes {
                for &snr_db in &self.snr_db {
                    out.push(SweepPoint {
                        snr_db,
                        scheme,
                        mode,
                        spec: self.clone(),
                    });
                }
            }
        }
        out
    }

    fn cfo_correction_enabled(&self) -> bool {
        self.cfo_correction.unwrap_or(self.cfo_hz != 0.0)
    }
}

/// One cell of the sweep grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub scheme: ModulationScheme,
    pub mode: RxMode,
    pub spec: SweepSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub snr_db: f64,
    pub scheme: ModulationScheme,
    pub channel: String,
    pub mode: RxMode,
    pub bits_sent: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub packets: u64,
    /// Undetected or undecodable packets, each counted as half its bits wrong.
    pub packets_lost: u64,
}

/// CSV header, in column order.
pub const CSV_HEADER: &str = "snr_db,scheme,channel,mode,bits_sent,bit_errors,ber,ci_low,ci_high,packets,packets_lost";

impl BerRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.snr_db,
            self.scheme,
            self.channel,
            self.mode,
            self.bits_sent,
            self.bit_errors,
            self.ber,
            self.ci_low,
            self.ci_high,
            self.packets,
            self.packets_lost
        )
    }
}

/// 95% Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n = n as f64;
    let p = k as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k as f64 == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Independent stream for `(seed, snr, packet)`. Modes and schemes at the
/// same SNR share channel and noise draws, which pairs their comparisons.
pub fn packet_seed(seed: u64, snr_db: f64, packet: usize) -> u64 {
    // SplitMix64 finalizer over the combined words.
    let mut z = seed ^ snr_db.to_bits().rotate_left(17) ^ (packet as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Number of positions where `a` and `b` differ.
pub fn count_bit_errors(a: &[u8], b: &[u8]) -> u64 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u64 + a.len().abs_diff(b.len()) as u64
}

/// Leading silence before each frame: a fixed part plus a random offset.
const GAP_MIN: usize = 100;
const GAP_JITTER: usize = 64;
const TAIL: usize = 80;

pub fn run_point(point: &SweepPoint) -> Result<BerRecord> {
    let spec = &point.spec;
    spec.validate()?;
    let params = OfdmParams::wifi();
    let schedule = KeySchedule::derive(&spec.key_secret, params.fft_size, 1, KeyPolicy::Fixed)?;
    let frame_cfg = FrameConfig {
        params: params.clone(),
        scheme: point.scheme,
        n_data_symbols: spec.n_data_symbols,
        schedule,
        training_secret: spec.training_secret.clone(),
        mode: point.mode.waveform(),
    };
    let tx = Transmitter::new(frame_cfg.clone())?;
    let mut rx_cfg = RxConfig::for_frame(&frame_cfg);
    rx_cfg.csi_mode = point.mode.csi_mode();
    rx_cfg.key_source = point.mode.key_source();
    rx_cfg.cfo_correction = spec.cfo_correction_enabled();
    rx_cfg.phase_tracking = spec.phase_tracking;
    rx_cfg.seed = packet_seed(spec.seed, point.snr_db, usize::MAX);
    let receiver = Receiver::new(rx_cfg)?;
    let bits_per_packet = frame_cfg.payload_len();
    let data_offset = tx.config().frame_len() - spec.n_data_symbols * params.symbol_len();
    let gain = spec.channel.total_linear_gain();
    let used_ratio = params.fft_size as f64 / params.used_subcarriers.len() as f64;

    let outcomes: Vec<(u64, bool)> = (0..spec.n_packets)
        .into_par_iter()
        .map(|k| -> Result<(u64, bool)> {
            let mut rng = ChaCha8Rng::seed_from_u64(packet_seed(spec.seed, point.snr_db, k));
            let payload: BitStream = (0..bits_per_packet).map(|_| rng.random_range(0..2u8)).collect();
            let frame = tx.build_frame(&payload)?.samples();
            let gap = GAP_MIN + rng.random_range(0..GAP_JITTER);
            let mut buf = vec![Complex::new(0.0, 0.0); gap];
            buf.extend_from_slice(&frame);
            buf.resize(buf.len() + TAIL, Complex::new(0.0, 0.0));

            let ch = realize_channel(&spec.channel, &params, rng.random())?;
            let mut y = apply_channel(&buf, &ch);
            if spec.cfo_hz != 0.0 || spec.static_phase_rad != 0.0 {
                y = apply_cfo(&y, spec.cfo_hz, params.sample_rate, spec.static_phase_rad);
            }
            // Average received symbol energy per used subcarrier.
            let es = mean_power(&frame[data_offset..]) * gain * used_ratio;
            let y = add_awgn(&y, point.snr_db, es, rng.random())?;
            Ok(match receiver.receive(&y, Some(&ch)) {
                Ok(out) => (count_bit_errors(&out.bits, &payload), false),
                Err(_) => (bits_per_packet as u64 / 2, true),
            })
        })
        .collect::<Result<_>>()?;

    let bit_errors: u64 = outcomes.iter().map(|o| o.0).sum();
    let packets_lost = outcomes.iter().filter(|o| o.1).count() as u64;
    let bits_sent = (bits_per_packet * spec.n_packets) as u64;
    let (ci_low, ci_high) = wilson_interval(bit_errors, bits_sent);
    Ok(BerRecord {
        snr_db: point.snr_db,
        scheme: point.scheme,
        channel: spec.channel.preset_name().to_string(),
        mode: point.mode,
        bits_sent,
        bit_errors,
        ber: bit_errors as f64 / bits_sent as f64,
        ci_low,
        ci_high,
        packets: spec.n_packets as u64,
        packets_lost,
    })
}

/// Every point of the grid, in [`SweepSpec::points`] order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<BerRecord>> {
    spec.validate()?;
    spec.points().iter().map(run_point).collect()
}

pub fn to_csv(records: &[BerRecord]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

pub fn to_json(records: &[BerRecord]) -> Result<String> {
    Ok(serde_json::to_string_pretty(records)?)
}

/// SNR at which a BER curve crosses `target`, by linear interpolation of
/// log10(BER) between the first bracketing pair of points.
pub fn snr_at_ber(curve: &[(f64, f64)], target: f64) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = curve.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lt = target.log10();
    for w in pts.windows(2) {
        let ((s0, b0), (s1, b1)) = (w[0], w[1]);
        if b0 >= target && b1 <= target {
            if b1 <= 0.0 || b0 == b1 {
                return Some(s1);
            }
            let (l0, l1) = (b0.log10(), b1.log10());
            return Some(s0 + (lt - l0) / (l1 - l0) * (s1 - s0));
        }
    }
    None
}

/// `(snr, ber)` pairs of one scheme/mode curve, in record order.
pub fn curve(records: &[BerRecord], scheme: ModulationScheme, mode: RxMode) -> Vec<(f64, f64)> {
    records
        .iter()
        .filter(|r| r.scheme == scheme && r.mode == mode)
        .map(|r| (r.snr_db, r.ber))
        .collect()
}

/// Closed-form BPSK bit error probability at per-subcarrier `Es/N0` (dB).
pub fn bpsk_awgn_ber(snr_db: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(10f64.powf(snr_db / 10.0).sqrt())
}
