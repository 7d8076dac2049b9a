//! Key-space size and exhaustive search against small permutations, plus
//! the PAPR and mutual-information checks.
//!
//! cargo run --release --example brute_force

use randofdm::cryptanalysis::{
    key_space_size, mutual_information_experiment, papr_invariance, planted_brute_force, success_probability_log10,
};

fn main() -> randofdm::Result<()> {
    for n in [4, 8, 16, 64] {
        println!(
            "N={n:2}: {} keys, blind guess succeeds with probability 10^{:.1}",
            key_space_size(n)?,
            success_probability_log10(n)?
        );
    }
    for n in 3..=9 {
        let (planted, r) = planted_brute_force(n, n as u64)?;
        println!(
            "N={n}: recovered {} after {} keys in {:.3}s (planted {planted})",
            r.success, r.tried_keys, r.wall_time_s
        );
    }
    let p = papr_invariance(64, 1000, 1)?;
    println!(
        "PAPR change over {} keyed vectors: {:.1e} dB",
        p.trials, p.max_papr_diff_db
    );
    let mi = mutual_information_experiment(64, 2000, 32, 2)?;
    println!("{}", serde_json::to_string_pretty(&mi)?);
    Ok(())
}
