//! Clustering-based residual phase estimation on a rotated, noisy 16QAM
//! constellation.
//!
//! cargo run --example phase_correction

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use randofdm::baseband::{demodulate_symbols, modulate_bits, Complex, ModulationScheme};
use randofdm::rx::{correct_phase, estimate_residual_phase};

fn main() -> randofdm::Result<()> {
    let scheme = ModulationScheme::Qam16;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let bits: Vec<u8> = (0..500 * scheme.bits_per_symbol())
        .map(|_| rng.random_range(0..2))
        .collect();
    let sigma = (10f64.powf(-1.8) / 2.0).sqrt();
    for offset in [0.05, 0.08, 0.12] {
        let rx: Vec<Complex> = correct_phase(&modulate_bits(&bits, scheme)?, offset)
            .into_iter()
            .map(|s| {
                let (a, b): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
                s + Complex::new(a * sigma, b * sigma)
            })
            .collect();
        let est = estimate_residual_phase(&rx, scheme, 3)?;
        let errors = |x: &[Complex]| {
            demodulate_symbols(x, scheme)
                .iter()
                .zip(&bits)
                .filter(|(a, b)| a != b)
                .count()
        };
        let fixed = correct_phase(&rx, -est.offset_rad);
        println!(
            "offset {offset:.2} rad: estimate {:.4} (per quadrant {:?}), bit errors {} -> {}",
            est.offset_rad,
            est.per_region.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>(),
            errors(&rx),
            errors(&fixed)
        );
    }
    Ok(())
}
