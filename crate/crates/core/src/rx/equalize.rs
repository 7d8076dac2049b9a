//! Channel estimation, zero-forcing equalization and the decryption chain.

use crate::baseband::{remove_cyclic_prefix, unmap_subcarriers, Complex, Dft, IqVector, OfdmParams};
use crate::error::{param, Error, Result};
use crate::keys::{derandomize, PermutationKey};
use crate::transmitter::ltf_spectrum;

/// Reference bins below this magnitude make the training estimate undefined.
pub const MIN_REFERENCE_MAGNITUDE: f64 = 1e-9;

/// Channel bins below this magnitude are zeroed instead of inverted.
pub const DEEP_FADE: f64 = 1e-6;

/// Full-band estimate from the keyed training symbol:
/// `H[k] = DFT(remove_cp(y))[k] / reference[k]`, where `reference` is the
/// randomized training spectrum `F R F^-1 X_tr`.
pub fn estimate_channel_training(
    y_tr: &[Complex],
    reference_spectrum: &[Complex],
    p: &OfdmParams,
    dft: &Dft,
) -> Result<IqVector> {
    if reference_spectrum.len() != p.fft_size {
        return param("reference spectrum length != fft size");
    }
    let y = dft.forward(&remove_cyclic_prefix(y_tr, p.fft_size, p.cp_len)?)?;
    y.iter()
        .zip(reference_spectrum)
        .enumerate()
        .map(|(k, (yk, rk))| {
            if rk.norm() < MIN_REFERENCE_MAGNITUDE {
                Err(Error::Estimation(format!(
                    "training reference bin {k} has magnitude {:.3e}",
                    rk.norm()
                )))
            } else {
                Ok(yk / rk)
            }
        })
        .collect()
}

/// Legacy estimate from the two long training symbols (160-sample LTF),
/// defined on the LTF's occupied bins only; the rest are zero.
pub fn estimate_channel_ltf(ltf_rx: &[Complex], p: &OfdmParams, dft: &Dft) -> Result<IqVector> {
    if ltf_rx.len() != 160 || p.fft_size != 64 {
        return param("legacy LTF estimate needs a 160-sample LTF and N=64");
    }
    let a = dft.forward(&ltf_rx[32..96])?;
    let b = dft.forward(&ltf_rx[96..160])?;
    let reference = ltf_spectrum();
    Ok((0..64)
        .map(|k| {
            if reference[k].norm() == 0.0 {
                Complex::new(0.0, 0.0)
            } else {
                (a[k] + b[k]) / (2.0 * reference[k])
            }
        })
        .collect())
}

/// One decoded OFDM symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct DecryptedSymbol {
    pub data: IqVector,
    pub pilots: IqVector,
    /// Bins whose channel magnitude fell below [`DEEP_FADE`] and were zeroed.
    pub faded_bins: usize,
}

/// CP removal, DFT, per-bin zero forcing, then (with a key) IDFT,
/// derandomization and a final DFT before subcarrier demapping.
///
/// `key = None` is the legacy path: the equalized spectrum is demapped directly.
pub fn decrypt_symbol(
    sym: &[Complex],
    h: &[Complex],
    key: Option<&PermutationKey>,
    p: &OfdmParams,
    dft: &Dft,
) -> Result<DecryptedSymbol> {
    if h.len() != p.fft_size {
        return param(format!("channel response length {} != {}", h.len(), p.fft_size));
    }
    let y = dft.forward(&remove_cyclic_prefix(sym, p.fft_size, p.cp_len)?)?;
    let mut faded_bins = 0;
    let equalized: IqVector = y
        .iter()
        .zip(h)
        .enumerate()
        .map(|(k, (yk, hk))| {
            if hk.norm() < DEEP_FADE {
                // Unused bins carry nothing on the legacy path; only count bins that matter.
                if key.is_some() || p.used_subcarriers.contains(&k) {
                    faded_bins += 1;
                }
                Complex::new(0.0, 0.0)
            } else {
                yk / hk
            }
        })
        .collect();
    let spectrum = match key {
        Some(k) => dft.forward(&derandomize(&dft.inverse(&equalized)?, k)?)?,
        None => equalized,
    };
    let (data, pilots) = unmap_subcarriers(&spectrum, p)?;
    Ok(DecryptedSymbol {
        data,
        pilots,
        faded_bins,
    })
}
