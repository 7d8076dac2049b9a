mod common;

use common::{complex_vec, permutation, CRITERION_NINE};
use proptest::prelude::*;
use randofdm::baseband::{demodulate_symbols, energy, modulate_bits, Dft, ModulationScheme};
use randofdm::cryptanalysis::papr;
use randofdm::iqfile::{bits_to_hex, decode_iq, encode_iq, hex_to_bits};
use randofdm::keys::{randomize, spectral_transform, PermutationKey};
use randofdm::sim::wilson_interval;

#[test]
fn parseval() {
    (CRITERION_NINE[0].1)(256).unwrap();
}

#[test]
fn dft_round_trip() {
    (CRITERION_NINE[1].1)(256).unwrap();
}

#[test]
fn permutation_round_trip() {
    (CRITERION_NINE[2].1)(256).unwrap();
}

#[test]
fn cp_round_trip() {
    (CRITERION_NINE[3].1)(256).unwrap();
}

#[test]
fn circular_convolution() {
    (CRITERION_NINE[4].1)(256).unwrap();
}

#[test]
fn kmedoids_cost_monotone() {
    (CRITERION_NINE[5].1)(128).unwrap();
}

fn scheme() -> impl Strategy<Value = ModulationScheme> {
    prop::sample::select(ModulationScheme::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn modulation_round_trip(s in scheme(), seed in prop::collection::vec(0u8..2, 1..40)) {
        let bps = s.bits_per_symbol();
        let bits: Vec<u8> = seed.iter().cycle().take(seed.len() * bps).copied().collect();
        let syms = modulate_bits(&bits, s).unwrap();
        prop_assert_eq!(syms.len(), seed.len());
        prop_assert_eq!(demodulate_symbols(&syms, s), bits);
    }

    #[test]
    fn key_file_round_trip(perm in (1usize..=64).prop_flat_map(permutation)) {
        let k = PermutationKey::new(perm, "k").unwrap();
        let back = PermutationKey::from_key_file(&k.to_key_file()).unwrap();
        prop_assert_eq!(back.perm(), k.perm());
    }

    #[test]
    fn frequency_image_is_unitary(
        (x, perm) in (complex_vec(64, 2.0), permutation(64))
    ) {
        let k = PermutationKey::new(perm, "k").unwrap();
        let y = spectral_transform(&k, &x, &Dft::new(64).unwrap()).unwrap();
        prop_assert!((energy(&y) - energy(&x)).abs() <= 1e-9 * (1.0 + energy(&x)));
    }

    #[test]
    fn papr_survives_permutation(
        (x, perm) in (8usize..=128).prop_flat_map(|n| (complex_vec(n, 2.0), permutation(n)))
    ) {
        prop_assume!(energy(&x) > 1e-6);
        let k = PermutationKey::new(perm, "k").unwrap();
        let y = randomize(&x, &k).unwrap();
        prop_assert!((papr(&y).unwrap() - papr(&x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn wilson_interval_brackets_estimate(n in 1u64..1_000_000, frac in 0.0f64..=1.0) {
        let k = ((n as f64) * frac).floor() as u64;
        let (lo, hi) = wilson_interval(k, n);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p + 1e-12 && p <= hi + 1e-12 && hi <= 1.0, "{} {} {}", lo, p, hi);
    }

    #[test]
    fn iq_bytes_round_trip(x in complex_vec(0..200, 100.0)) {
        let y = decode_iq(&encode_iq(&x)).unwrap();
        for (a, b) in x.iter().zip(&y) {
            prop_assert_eq!(b.re, a.re as f32 as f64);
            prop_assert_eq!(b.im, a.im as f32 as f64);
        }
    }

    #[test]
    fn hex_bits_round_trip(bits in prop::collection::vec(0u8..2, 0..300)) {
        prop_assert_eq!(hex_to_bits(&bits_to_hex(&bits), Some(bits.len())).unwrap(), bits);
    }
}
