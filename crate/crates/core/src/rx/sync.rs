//! Preamble-based packet detection and carrier frequency offset estimation.

use crate::baseband::{Complex, IqVector, OfdmParams};
use crate::channel::apply_cfo;
use crate::error::{Error, Result};
use crate::transmitter::{LTS_OFFSET, STF_LEN};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Minimum normalized correlation for a detection.
pub const DETECTION_THRESHOLD: f64 = 0.6;

/// Spacing of the two long training symbols.
const LTS_SPACING: usize = 64;

/// A path counts as the first arrival when its correlation power is within
/// this fraction of the peak. LTS sidelobes sit near -14 dB.
const FIRST_PATH_FRACTION: f64 = 0.2;

/// How far before the peak the first-arrival search looks.
const FIRST_PATH_SPAN: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncResult {
    pub frame_start: usize,
    pub coarse_cfo_hz: f64,
    pub fine_cfo_hz: f64,
    /// Normalized peak-pair correlation in `[0, 1]`.
    pub detection_metric: f64,
}

impl SyncResult {
    pub fn cfo_hz(&self) -> f64 {
        self.coarse_cfo_hz + self.fine_cfo_hz
    }
}

/// Locates the frame by correlating against the known long training symbol.
///
/// The timing metric at lag `i` is the sum of correlation magnitudes at `i`
/// and `i + 64`, normalized by the reference and local window energies, so a
/// clean match scores 1. Under multipath the peak marks the strongest path,
/// so the start is moved back to the earliest lag within the delay span
/// whose correlation power is at least a fifth of the peak's. The frame
/// starts `LTS_OFFSET` samples before that lag.
///
/// Multipath smears the cross-correlation, so the detection metric is the
/// larger of that peak and the correlation coefficient between the two
/// received LTS periods, which a channel shorter than the prefix leaves intact.
pub fn detect_packet(rx: &[Complex], ltf_ref: &[Complex]) -> Result<SyncResult> {
    detect(rx, ltf_ref, true)
}

/// Detection against a reference that already includes the channel, whose
/// peak is the frame timing itself.
pub(crate) fn detect_matched(rx: &[Complex], matched_ref: &[Complex]) -> Result<SyncResult> {
    detect(rx, matched_ref, false)
}

fn detect(rx: &[Complex], ltf_ref: &[Complex], first_path: bool) -> Result<SyncResult> {
    let l = ltf_ref.len();
    if l != LTS_SPACING || rx.len() < l + 2 * LTS_SPACING {
        return Err(Error::Parameter(format!(
            "receive buffer of {} samples is shorter than the correlation span",
            rx.len()
        )));
    }
    let ref_energy: f64 = ltf_ref.iter().map(|v| v.norm_sqr()).sum();
    let lags = rx.len() - l + 1;

    let mut corr = Vec::with_capacity(lags);
    let mut win = Vec::with_capacity(lags);
    let mut e: f64 = rx[..l].iter().map(|v| v.norm_sqr()).sum();
    for i in 0..lags {
        if i > 0 {
            e += rx[i + l - 1].norm_sqr() - rx[i - 1].norm_sqr();
        }
        let c: Complex = rx[i..i + l].iter().zip(ltf_ref).map(|(a, b)| a * b.conj()).sum();
        corr.push(c.norm());
        win.push(e.max(0.0).sqrt());
    }

    let floor = 1e-12 * ref_energy.sqrt();
    let mut best = (0usize, 0.0f64);
    for i in 0..lags - LTS_SPACING {
        let denom = ref_energy.sqrt() * (win[i] + win[i + LTS_SPACING]);
        if denom <= floor {
            continue;
        }
        let m = (corr[i] + corr[i + LTS_SPACING]) / denom;
        if m > best.1 {
            best = (i, m);
        }
    }
    let (mut lag, peak) = best;
    if first_path {
        let power = |i: usize| corr[i].powi(2) + corr[i + LTS_SPACING].powi(2);
        let p_peak = power(lag);
        if let Some(i) = (lag.saturating_sub(FIRST_PATH_SPAN)..lag).find(|&i| power(i) >= FIRST_PATH_FRACTION * p_peak)
        {
            lag = i;
        }
    }
    let a = &rx[lag..lag + LTS_SPACING];
    let b = &rx[lag + LTS_SPACING..lag + 2 * LTS_SPACING];
    let cross: Complex = a.iter().zip(b).map(|(x, y)| x * y.conj()).sum();
    let ea: f64 = a.iter().map(|v| v.norm_sqr()).sum();
    let eb: f64 = b.iter().map(|v| v.norm_sqr()).sum();
    let coherence = if ea * eb > 0.0 {
        cross.norm() / (ea * eb).sqrt()
    } else {
        0.0
    };
    let metric = peak.max(coherence);
    if metric < DETECTION_THRESHOLD || lag < LTS_OFFSET {
        return Err(Error::NotDetected {
            metric,
            threshold: DETECTION_THRESHOLD,
        });
    }
    Ok(SyncResult {
        frame_start: lag - LTS_OFFSET,
        coarse_cfo_hz: 0.0,
        fine_cfo_hz: 0.0,
        detection_metric: metric.min(1.0),
    })
}

fn lag_correlation(x: &[Complex], range: std::ops::Range<usize>, lag: usize) -> Complex {
    range.map(|n| x[n + lag] * x[n].conj()).sum()
}

/// Coarse CFO from the lag-16 STF autocorrelation, then fine CFO from the
/// lag-64 LTF autocorrelation after coarse removal.
pub fn estimate_cfo(rx: &[Complex], sync: &SyncResult, p: &OfdmParams) -> Result<SyncResult> {
    let s = sync.frame_start;
    let end = s + STF_LEN + 32 + 2 * LTS_SPACING;
    if rx.len() < end {
        return Err(Error::Parameter("buffer ends inside the preamble".into()));
    }
    let fs = p.sample_rate;
    // Skip the first period of each field: it carries the channel transient.
    let z = lag_correlation(rx, s + 16..s + STF_LEN - 16, 16);
    let coarse = z.arg() * fs / (TAU * 16.0);

    let ltf = apply_cfo(&rx[s + STF_LEN..end], -coarse, fs, 0.0);
    let z = lag_correlation(&ltf, 16..32 + LTS_SPACING, LTS_SPACING);
    let fine = z.arg() * fs / (TAU * LTS_SPACING as f64);
    Ok(SyncResult {
        coarse_cfo_hz: coarse,
        fine_cfo_hz: fine,
        ..*sync
    })
}

/// Removes the estimated offset: `rx[n] e^{-j 2 pi f n / fs}`.
pub fn correct_cfo(rx: &[Complex], sync: &SyncResult, fs: f64) -> IqVector {
    apply_cfo(rx, -sync.cfo_hz(), fs, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::add_awgn;
    use crate::transmitter::{build_preambles, long_training_symbol};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn buffer_with_preamble(offset: usize, tail: usize, seed: u64) -> IqVector {
        let p = OfdmParams::wifi();
        let (stf, ltf) = build_preambles(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut buf = vec![Complex::new(0.0, 0.0); offset];
        buf.extend(stf);
        buf.extend(ltf);
        // Random payload-like samples after the preamble.
        buf.extend((0..tail).map(|_| Complex::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1))));
        buf
    }

    #[test]
    fn clean_frame_exact_start() {
        let p = OfdmParams::wifi();
        let rx = buffer_with_preamble(1000, 400, 1);
        let s = detect_packet(&rx, &long_training_symbol(&p).unwrap()).unwrap();
        assert_eq!(s.frame_start, 1000);
        assert!(s.detection_metric > 0.999);
    }

    #[test]
    fn pure_noise_is_rejected() {
        let p = OfdmParams::wifi();
        let lts = long_training_symbol(&p).unwrap();
        let zeros = vec![Complex::new(0.0, 0.0); 2000];
        let mut misses = 0;
        for seed in 0..1000 {
            let noise = add_awgn(&zeros, 0.0, 1.0, seed).unwrap();
            if matches!(detect_packet(&noise, &lts), Err(Error::NotDetected { .. })) {
                misses += 1;
            }
        }
        assert!(misses >= 990, "{misses}");
    }

    #[test]
    fn short_buffer_is_parameter_error() {
        let p = OfdmParams::wifi();
        let lts = long_training_symbol(&p).unwrap();
        assert!(matches!(
            detect_packet(&[Complex::new(1.0, 0.0); 100], &lts),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn noiseless_cfo_is_exact() {
        let p = OfdmParams::wifi();
        let lts = long_training_symbol(&p).unwrap();
        let rx = apply_cfo(&buffer_with_preamble(300, 200, 2), 50e3, p.sample_rate, 0.4);
        let s = detect_packet(&rx, &lts).unwrap();
        assert_eq!(s.frame_start, 300);
        let s = estimate_cfo(&rx, &s, &p).unwrap();
        assert!((s.cfo_hz() - 50e3).abs() < 1.0, "{}", s.cfo_hz());

        let rx = buffer_with_preamble(300, 200, 3);
        let s = estimate_cfo(&rx, &detect_packet(&rx, &lts).unwrap(), &p).unwrap();
        assert!(s.cfo_hz().abs() < 1e-6);
    }

    #[test]
    fn correction_removes_offset() {
        let p = OfdmParams::wifi();
        let lts = long_training_symbol(&p).unwrap();
        let clean = buffer_with_preamble(100, 100, 4);
        let rx = apply_cfo(&clean, -120e3, p.sample_rate, 0.0);
        let s = estimate_cfo(&rx, &detect_packet(&rx, &lts).unwrap(), &p).unwrap();
        let fixed = correct_cfo(&rx, &s, p.sample_rate);
        for (a, b) in clean.iter().zip(&fixed) {
            assert!((a - b).norm() < 1e-9);
        }
    }
}
