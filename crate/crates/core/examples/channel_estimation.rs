//! Keyed training symbol: the key holder recovers the full 64-bin channel,
//! a receiver with the wrong key does not.
//!
//! cargo run --example channel_estimation

use randofdm::baseband::{Complex, Dft, OfdmParams};
use randofdm::channel::{apply_channel, realize_channel, ChannelModel};
use randofdm::keys::PermutationKey;
use randofdm::rx::estimate_channel_training;
use randofdm::transmitter::build_training_symbol;

fn main() -> randofdm::Result<()> {
    let p = OfdmParams::wifi();
    let dft = Dft::new(p.fft_size)?;
    let key = PermutationKey::derive(b"shared", p.fft_size)?;
    let wrong = PermutationKey::derive(b"guess", p.fft_size)?;
    let training = build_training_symbol(b"training", &key, &p, &dft)?;
    let ch = realize_channel(&ChannelModel::indoor6(), &p, 5)?;

    let mut stream = vec![Complex::new(0.0, 0.0); p.symbol_len()];
    stream.extend(&training.time);
    let y = apply_channel(&stream, &ch);
    let y_tr = &y[p.symbol_len()..];

    let good = estimate_channel_training(y_tr, &training.reference_spectrum, &p, &dft)?;
    let eve_ref = build_training_symbol(b"training", &wrong, &p, &dft)?.reference_spectrum;
    let bad = estimate_channel_training(y_tr, &eve_ref, &p, &dft)?;
    println!("bin   |H|     |H_bob|  |H_eve|");
    for k in 0..p.fft_size {
        println!(
            "{k:3}  {:6.3}  {:6.3}  {:7.3}",
            ch.freq_response[k].norm(),
            good[k].norm(),
            bad[k].norm()
        );
    }
    let err = |h: &[Complex]| {
        h.iter()
            .zip(&ch.freq_response)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    };
    println!("max error: key holder {:.2e}, wrong key {:.2}", err(&good), err(&bad));
    Ok(())
}
