//! Writes a frame to an IQ file with its sidecar, reads it back and decodes.
//!
//! cargo run --example iq_file

use randofdm::baseband::{Complex, ModulationScheme, OfdmParams};
use randofdm::iqfile::{bits_to_hex, read_iq, write_iq, IqMeta};
use randofdm::keys::KeySchedule;
use randofdm::rx::{Receiver, RxConfig};
use randofdm::transmitter::{FrameConfig, Transmitter, Waveform};

fn main() -> randofdm::Result<()> {
    let params = OfdmParams::wifi();
    let cfg = FrameConfig {
        schedule: KeySchedule::derive(b"k", params.fft_size, 1, Default::default())?,
        params: params.clone(),
        scheme: ModulationScheme::Qpsk,
        n_data_symbols: 2,
        training_secret: b"t".to_vec(),
        mode: Waveform::RandOfdm,
    };
    let payload: Vec<u8> = (0..cfg.payload_len()).map(|i| (i % 5 == 0) as u8).collect();
    let mut samples = vec![Complex::new(0.0, 0.0); 64];
    samples.extend(Transmitter::new(cfg.clone())?.build_frame(&payload)?.samples());

    let path = std::env::temp_dir().join("randofdm_example.iq");
    let meta = IqMeta {
        n: params.fft_size,
        cp: params.cp_len,
        scheme: cfg.scheme,
        mode: cfg.mode,
        n_symbols: cfg.n_data_symbols,
        sample_rate: params.sample_rate,
    };
    write_iq(&path, &samples, &meta)?;
    let (back, meta) = read_iq(&path)?;
    println!("{} samples, sidecar {}", back.len(), serde_json::to_string(&meta)?);
    let out = Receiver::new(RxConfig::for_frame(&cfg))?.receive(&back, None)?;
    println!("sent {}\ngot  {}", bits_to_hex(&payload), bits_to_hex(&out.bits));
    Ok(())
}
