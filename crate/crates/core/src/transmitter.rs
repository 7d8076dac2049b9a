//! Packet assembly: legacy short/long preambles, the keyed training symbol
//! and randomized data symbols.

use crate::baseband::{
    add_cyclic_prefix, legacy_pilots, map_subcarriers, modulate_bits, BitStream, Complex, Dft, IqVector,
    ModulationScheme, OfdmParams,
};
use crate::error::{param, Error, Result};
use crate::keys::{randomize, spectral_transform, KeySchedule, PermutationKey};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::str::FromStr;

pub const STF_LEN: usize = 160;
pub const LTF_LEN: usize = 160;
/// Offset of the first 64-sample long training symbol from the frame start.
pub const LTS_OFFSET: usize = STF_LEN + 32;
pub const PREAMBLE_LEN: usize = STF_LEN + LTF_LEN;

// Nonzero STF bins (logical index, sign of 1+j); scaled by sqrt(13/6).
const STF_BINS: [(i32, f64); 12] = [
    (-24, 1.0),
    (-20, -1.0),
    (-16, 1.0),
    (-12, -1.0),
    (-8, -1.0),
    (-4, 1.0),
    (4, -1.0),
    (8, -1.0),
    (12, 1.0),
    (16, 1.0),
    (20, 1.0),
    (24, 1.0),
];

// LTF values for logical bins -26..=26.
const LTF_VALUES: [i8; 53] = [
    1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 0, 1, -1, -1, 1, 1, -1, 1,
    -1, 1, -1, -1, -1, -1, -1, 1, 1, -1, -1, 1, -1, 1, -1, 1, 1, 1, 1,
];

fn wrap(bin: i32, n: usize) -> usize {
    bin.rem_euclid(n as i32) as usize
}

fn require_wifi(p: &OfdmParams) -> Result<()> {
    if p.fft_size != 64 || p.cp_len != 16 {
        return param(format!(
            "legacy preambles are defined for N=64/CP=16 only (got N={}, CP={})",
            p.fft_size, p.cp_len
        ));
    }
    Ok(())
}

/// 64-bin LTF spectrum.
pub fn ltf_spectrum() -> IqVector {
    let mut s = vec![Complex::new(0.0, 0.0); 64];
    for (i, &v) in LTF_VALUES.iter().enumerate() {
        s[wrap(i as i32 - 26, 64)] = Complex::new(v as f64, 0.0);
    }
    s
}

/// The 64-sample long training symbol (one period of the LTF).
pub fn long_training_symbol(p: &OfdmParams) -> Result<IqVector> {
    require_wifi(p)?;
    Dft::new(64)?.inverse(&ltf_spectrum())
}

/// 802.11a short (10 x 16 samples) and long (32-sample CP + 2 x 64) preambles.
pub fn build_preambles(p: &OfdmParams) -> Result<(IqVector, IqVector)> {
    require_wifi(p)?;
    let dft = Dft::new(64)?;
    let scale = (13.0f64 / 6.0).sqrt();
    let mut stf_spec = vec![Complex::new(0.0, 0.0); 64];
    for (bin, sign) in STF_BINS {
        stf_spec[wrap(bin, 64)] = Complex::new(sign, sign) * scale;
    }
    let stf_period = dft.inverse(&stf_spec)?;
    let stf = (0..STF_LEN).map(|i| stf_period[i % 64]).collect();

    let lts = dft.inverse(&ltf_spectrum())?;
    let mut ltf = Vec::with_capacity(LTF_LEN);
    ltf.extend_from_slice(&lts[32..]);
    ltf.extend_from_slice(&lts);
    ltf.extend_from_slice(&lts);
    Ok((stf, ltf))
}

/// Keyed full-band training symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSymbol {
    /// BPSK +/-1 on every bin, derived from the training secret.
    pub spectrum: IqVector,
    /// Transmitted samples, `add_cp(randomize(idft(spectrum)))`.
    pub time: IqVector,
    /// What a key holder expects after CP removal and DFT: `F R F^-1 spectrum`.
    pub reference_spectrum: IqVector,
}

/// BPSK values for every bin, from a ChaCha20 stream keyed by SHA-256 of `secret`.
pub fn training_spectrum(secret: &[u8], n: usize) -> IqVector {
    let digest = Sha256::new()
        .chain_update(b"randofdm/training/v1")
        .chain_update(secret)
        .finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    let mut rng = ChaCha20Rng::from_seed(seed);
    (0..n)
        .map(|_| {
            if rng.random::<bool>() {
                Complex::new(1.0, 0.0)
            } else {
                Complex::new(-1.0, 0.0)
            }
        })
        .collect()
}

pub fn build_training_symbol(secret: &[u8], k: &PermutationKey, p: &OfdmParams, dft: &Dft) -> Result<TrainingSymbol> {
    if k.len() != p.fft_size || dft.len() != p.fft_size {
        return param(format!(
            "training key/dft size {}/{} != fft size {}",
            k.len(),
            dft.len(),
            p.fft_size
        ));
    }
    let spectrum = training_spectrum(secret, p.fft_size);
    let time = add_cyclic_prefix(&randomize(&dft.inverse(&spectrum)?, k)?, p.cp_len)?;
    let reference_spectrum = spectral_transform(k, &spectrum, dft)?;
    Ok(TrainingSymbol {
        spectrum,
        time,
        reference_spectrum,
    })
}

/// Waveform family of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Waveform {
    Legacy,
    RandOfdm,
}

impl fmt::Display for Waveform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Legacy => "legacy",
            Self::RandOfdm => "rand_ofdm",
        })
    }
}

impl FromStr for Waveform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "legacy" => Ok(Self::Legacy),
            "rand_ofdm" | "rand-ofdm" | "randofdm" => Ok(Self::RandOfdm),
            other => param(format!("unknown waveform '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameConfig {
    pub params: OfdmParams,
    pub scheme: ModulationScheme,
    pub n_data_symbols: usize,
    pub schedule: KeySchedule,
    pub training_secret: Vec<u8>,
    pub mode: Waveform,
}

impl FrameConfig {
    pub fn bits_per_ofdm_symbol(&self) -> usize {
        self.params.n_data_subcarriers() * self.scheme.bits_per_symbol()
    }

    pub fn payload_len(&self) -> usize {
        self.n_data_symbols * self.bits_per_ofdm_symbol()
    }

    pub fn has_training(&self) -> bool {
        self.mode == Waveform::RandOfdm
    }

    /// Total samples of a frame built with this configuration.
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
        Ok(())
    }
}

/// One assembled packet.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub stf: IqVector,
    pub ltf: IqVector,
    pub training: Option<IqVector>,
    pub data: Vec<IqVector>,
    /// Ground-truth payload.
    pub payload_bits: BitStream,
}

impl Frame {
    pub fn len(&self) -> usize {
        self.stf.len()
            + self.ltf.len()
            + self.training.as_ref().map_or(0, Vec::len)
            + self.data.iter().map(Vec::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sample index where the first data symbol begins.
    pub fn data_offset(&self) -> usize {
        self.stf.len() + self.ltf.len() + self.training.as_ref().map_or(0, Vec::len)
    }

    /// Contiguous sample stream in transmission order.
    pub fn samples(&self) -> IqVector {
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(&self.stf);
        out.extend_from_slice(&self.ltf);
        if let Some(t) = &self.training {
            out.extend_from_slice(t);
        }
        for s in &self.data {
            out.extend_from_slice(s);
        }
        out
    }
}

/// Frame builder holding the planned transform and the fixed preamble parts.
#[derive(Debug, Clone)]
pub struct Transmitter {
    cfg: FrameConfig,
    dft: Dft,
    stf: IqVector,
    ltf: IqVector,
    training: Option<TrainingSymbol>,
}

impl Transmitter {
    pub fn new(cfg: FrameConfig) -> Result<Self> {
        cfg.validate()?;
        let dft = Dft::new(cfg.params.fft_size)?;
        let (stf, ltf) = build_preambles(&cfg.params)?;
        let training = if cfg.has_training() {
            Some(build_training_symbol(
                &cfg.training_secret,
                cfg.schedule.key_for_symbol(0),
                &cfg.params,
                &dft,
            )?)
        } else {
            None
        };
        Ok(Self {
            cfg,
            dft,
            stf,
            ltf,
            training,
        })
    }

    pub fn config(&self) -> &FrameConfig {
        &self.cfg
    }

    pub fn training(&self) -> Option<&TrainingSymbol> {
        self.training.as_ref()
    }

    /// Frequency-domain symbol before the IDFT: data plus legacy pilots.
    pub fn symbol_spectrum(&self, bits: &[u8]) -> Result<IqVector> {
        if bits.len() != self.cfg.bits_per_ofdm_symbol() {
            return param(format!(
                "expected {} bits per OFDM symbol, got {}",
                self.cfg.bits_per_ofdm_symbol(),
                bits.len()
            ));
        }
        let data = modulate_bits(bits, self.cfg.scheme)?;
        map_subcarriers(&data, &legacy_pilots(), &self.cfg.params)
    }

    /// `P_CP R F^-1 X` for one symbol; legacy frames skip `R`.
    pub fn encrypt_data_symbol(&self, bits: &[u8], k: &PermutationKey) -> Result<IqVector> {
        let time = self.dft.inverse(&self.symbol_spectrum(bits)?)?;
        let time = match self.cfg.mode {
            Waveform::Legacy => time,
            Waveform::RandOfdm => randomize(&time, k)?,
        };
        add_cyclic_prefix(&time, self.cfg.params.cp_len)
    }

    pub fn build_frame(&self, payload: &[u8]) -> Result<Frame> {
        if payload.len() != self.cfg.payload_len() {
            return param(format!(
                "payload of {} bits does not fill {} symbols ({} bits)",
                payload.len(),
                self.cfg.n_data_symbols,
                self.cfg.payload_len()
            ));
        }
        let data = payload
            .chunks(self.cfg.bits_per_ofdm_symbol())
            .enumerate()
            .map(|(i, bits)| self.encrypt_data_symbol(bits, self.cfg.schedule.key_for_symbol(i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Frame {
            stf: self.stf.clone(),
            ltf: self.ltf.clone(),
            training: self.training.as_ref().map(|t| t.time.clone()),
            data,
            payload_bits: payload.to_vec(),
        })
    }
}

/// Convenience wrapper around [`Transmitter::build_frame`].
pub fn build_frame(cfg: &FrameConfig, payload: &[u8]) -> Result<Frame> {
    Transmitter::new(cfg.clone())?.build_frame(payload)
}

/// Free-function form of [`Transmitter::encrypt_data_symbol`].
pub fn encrypt_data_symbol(bits: &[u8], k: &PermutationKey, cfg: &FrameConfig) -> Result<IqVector> {
    Transmitter::new(cfg.clone())?.encrypt_data_symbol(bits, k)
}
