//! Shows how the time-domain permutation spreads a legacy spectrum over the
//! guard bands while leaving PAPR and total power untouched.
//!
//! cargo run --example spectral_spreading

use randofdm::baseband::{energy, map_subcarriers, modulate_bits, Dft, ModulationScheme, OfdmParams};
use randofdm::cryptanalysis::papr;
use randofdm::keys::{randomize, spectral_transform, PermutationKey};

fn main() -> randofdm::Result<()> {
    let p = OfdmParams::wifi();
    let dft = Dft::new(p.fft_size)?;
    let bits: Vec<u8> = (0..p.n_data_subcarriers() * 2)
        .map(|i| ((i * 5 + 1) % 3 % 2) as u8)
        .collect();
    let data = modulate_bits(&bits, ModulationScheme::Qpsk)?;
    let pilots = randofdm::baseband::legacy_pilots();
    let spectrum = map_subcarriers(&data, &pilots, &p)?;
    let key = PermutationKey::derive(b"demo", p.fft_size)?;
    let spread = spectral_transform(&key, &spectrum, &dft)?;

    let occupied = |x: &[randofdm::baseband::Complex]| x.iter().filter(|v| v.norm() > 1e-9).count();
    println!(
        "bins carrying energy: legacy {} / keyed {}",
        occupied(&spectrum),
        occupied(&spread)
    );
    println!("energy: legacy {:.6} keyed {:.6}", energy(&spectrum), energy(&spread));
    let time = dft.inverse(&spectrum)?;
    println!(
        "PAPR: legacy {:.6} dB keyed {:.6} dB",
        papr(&time)?,
        papr(&randomize(&time, &key)?)?
    );
    println!("bin  |legacy|  |keyed|");
    for k in 0..p.fft_size {
        println!("{k:3}  {:7.3}  {:7.3}", spectrum[k].norm(), spread[k].norm());
    }
    Ok(())
}
