//! Key-space arithmetic, exhaustive key search, PAPR invariance and a
//! histogram estimate of plaintext/ciphertext mutual information.

use crate::baseband::{Complex, Dft, IqVector};
use crate::channel::complex_gaussian;
use crate::error::{param, Result};
use crate::keys::{derandomize, randomize, PermutationKey};
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::time::Instant;

/// Largest N for which [`brute_force_attack`] enumerates keys.
pub const MAX_BRUTE_FORCE_N: usize = 10;

/// Per-sample tolerance for accepting a candidate decryption.
pub const MATCH_TOLERANCE: f64 = 1e-6;

/// `N!`, the number of distinct permutation keys.
pub fn key_space_size(n: usize) -> Result<BigUint> {
    if n == 0 {
        return param("key length must be at least 1");
    }
    Ok((1..=n as u64).map(BigUint::from).product())
}

/// Probability that one uniformly guessed key is right: exactly `1/N!`.
pub fn success_probability(n: usize) -> Result<BigRational> {
    let l = key_space_size(n)?;
    Ok(BigRational::new(One::one(), l.into()))
}

/// `log10(1/N!)` via the log-gamma function.
pub fn success_probability_log10(n: usize) -> Result<f64> {
    if n == 0 {
        return param("key length must be at least 1");
    }
    Ok(-ln_gamma(n as f64 + 1.0) / std::f64::consts::LN_10)
}

/// Peak-to-average power ratio in dB.
pub fn papr(x: &[Complex]) -> Result<f64> {
    if x.is_empty() {
        return param("papr of an empty vector");
    }
    let powers = x.iter().map(|v| v.norm_sqr());
    let peak = powers.clone().fold(0.0, f64::max);
    let mean = powers.sum::<f64>() / x.len() as f64;
    if mean == 0.0 {
        return param("papr of a zero vector");
    }
    Ok(10.0 * (peak / mean).log10())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    /// Keys a sequential lexicographic search tries up to and including the
    /// first match (all `N!` when nothing matches).
    pub tried_keys: u64,
    pub recovered_key: Option<PermutationKey>,
    pub success: bool,
    /// Number of keys consistent with the probe, found by a full scan.
    pub matching_keys: u64,
    /// More than one key explains the probe, so the recovered key may be wrong.
    pub non_unique: bool,
    /// The search was not run because N exceeds [`MAX_BRUTE_FORCE_N`].
    pub refused: bool,
    /// `N!` in decimal.
    pub key_space: String,
    pub key_space_log10: f64,
    pub wall_time_s: f64,
}

/// 0-based position of `perm` in lexicographic order.
pub fn lexicographic_rank(perm: &[usize]) -> BigUint {
    let n = perm.len();
    let mut used = vec![false; n];
    let mut rank = BigUint::from(0u8);
    for (i, &p) in perm.iter().enumerate() {
        let smaller = (0..p).filter(|&j| !used[j]).count();
        rank += BigUint::from(smaller) * key_space_size(n - 1 - i).unwrap_or_else(|_| BigUint::one());
        used[p] = true;
    }
    rank
}

// Depth-first walk in lexicographic order, cutting every branch whose
// prefix already contradicts the probe.
fn search(
    y: &[Complex],
    p: &[Complex],
    prefix: &mut Vec<usize>,
    used: &mut [bool],
    first: &mut Option<Vec<usize>>,
    count: &mut u64,
) {
    let i = prefix.len();
    if i == y.len() {
        *count += 1;
        if first.is_none() {
            *first = Some(prefix.clone());
        }
        return;
    }
    for j in 0..p.len() {
        if !used[j] && (p[j] - y[i]).norm() <= MATCH_TOLERANCE {
            used[j] = true;
            prefix.push(j);
            search(y, p, prefix, used, first, count);
            prefix.pop();
            used[j] = false;
        }
    }
}

/// Exhaustive search for the key that maps the known plaintext onto the
/// ciphertext, in the chosen-plaintext setting.
///
/// `ciphertext` is one randomized symbol without prefix, `R F^-1 X`;
/// `known_plaintext_spectrum` is `X`. Branches are split by the first key
/// element and searched in parallel.
pub fn brute_force_attack(
    ciphertext: &[Complex],
    known_plaintext_spectrum: &[Complex],
    n: usize,
) -> Result<AttackReport> {
    let started = Instant::now();
    let space = key_space_size(n)?;
    let key_space_log10 = -success_probability_log10(n)?;
    if n > MAX_BRUTE_FORCE_N {
        return Ok(AttackReport {
            tried_keys: 0,
            recovered_key: None,
            success: false,
            matching_keys: 0,
            non_unique: false,
            refused: true,
            key_space: space.to_string(),
            key_space_log10,
            wall_time_s: started.elapsed().as_secs_f64(),
        });
    }
    if ciphertext.len() != n || known_plaintext_spectrum.len() != n {
        return param(format!(
            "ciphertext/plaintext lengths {}/{} != N = {n}",
            ciphertext.len(),
            known_plaintext_spectrum.len()
        ));
    }
    let plain = Dft::new(n)?.inverse(known_plaintext_spectrum)?;

    let branches: Vec<(Option<Vec<usize>>, u64)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut first = None;
            let mut count = 0;
            if (plain[j] - ciphertext[0]).norm() <= MATCH_TOLERANCE {
                let mut used = vec![false; n];
                used[j] = true;
                let mut prefix = vec![j];
                search(ciphertext, &plain, &mut prefix, &mut used, &mut first, &mut count);
            }
            (first, count)
        })
        .collect();

    let matching_keys: u64 = branches.iter().map(|b| b.1).sum();
    let first = branches.into_iter().find_map(|b| b.0);
    let total = space.to_u64().expect("N <= 10 fits in u64");
    let (recovered_key, tried_keys, success) = match first {
        Some(perm) => {
            let rank = lexicographic_rank(&perm).to_u64().expect("rank below N!");
            let key = PermutationKey::new(perm, "recovered")?;
            let check = derandomize(ciphertext, &key)?;
            let ok = check.iter().zip(&plain).all(|(a, b)| (a - b).norm() <= MATCH_TOLERANCE);
            (Some(key), rank + 1, ok)
        }
        None => (None, total, false),
    };
    Ok(AttackReport {
        tried_keys,
        recovered_key,
        success,
        matching_keys,
        non_unique: matching_keys > 1,
        refused: false,
        key_space: space.to_string(),
        key_space_log10,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// Plants a random key, encrypts a random plaintext and attacks it.
pub fn planted_brute_force(n: usize, seed: u64) -> Result<(PermutationKey, AttackReport)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let key = PermutationKey::random(n, &mut rng, "planted");
    let spectrum: IqVector = (0..n).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
    let cipher = randomize(&Dft::new(n)?.inverse(&spectrum)?, &key)?;
    let report = brute_force_attack(&cipher, &spectrum, n)?;
    Ok((key, report))
}

/// Plug-in mutual information, in bits, between paired plaintext and
/// ciphertext samples.
///
/// Each sample index of each vector pair contributes two observations:
/// (Re plain, Re cipher) and (Im plain, Im cipher). Both variables share one
/// equal-width binning over the pooled range, so swapping the arguments
/// transposes the joint histogram and leaves the estimate unchanged.
pub fn empirical_mutual_information(plain: &[IqVector], cipher: &[IqVector], bins: usize) -> Result<f64> {
    if plain.len() != cipher.len() {
        return param("plaintext and ciphertext lists differ in length");
    }
    if plain.len() < 1000 {
        return param(format!("need at least 1000 vector pairs, got {}", plain.len()));
    }
    if bins < 2 {
        return param("need at least two bins");
    }
    let mut pairs = Vec::new();
    for (p, c) in plain.iter().zip(cipher) {
        if p.len() != c.len() {
            return param("paired vectors differ in length");
        }
        for (a, b) in p.iter().zip(c) {
            pairs.push((a.re, b.re));
            pairs.push((a.im, b.im));
        }
    }
    let (lo, hi) = pairs
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !(lo.is_finite() && hi.is_finite()) {
        return param("non-finite samples");
    }
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let bin = |v: f64| (((v - lo) / width) as usize).min(bins - 1);

    let mut joint = vec![0u64; bins * bins];
    let mut px = vec![0u64; bins];
    let mut py = vec![0u64; bins];
    for &(a, b) in &pairs {
        let (i, j) = (bin(a), bin(b));
        joint[i * bins + j] += 1;
        px[i] += 1;
        py[j] += 1;
    }
    let n = pairs.len() as f64;
    let mut mi = 0.0;
    for i in 0..bins {
        for j in 0..bins {
            let c = joint[i * bins + j];
            if c > 0 {
                let pxy = c as f64 / n;
                mi += pxy * (pxy * n * n / (px[i] as f64 * py[j] as f64)).log2();
            }
        }
    }
    Ok(mi.max(0.0))
}

/// Plug-in entropy, in bits, of the pooled real and imaginary parts under
/// the same binning rule as [`empirical_mutual_information`] applied to
/// `(x, x)`.
pub fn histogram_entropy(x: &[IqVector], bins: usize) -> Result<f64> {
    empirical_mutual_information(x, x, bins)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaprReport {
    pub trials: usize,
    pub n: usize,
    /// Largest |PAPR(randomized) - PAPR(original)|, dB.
    pub max_papr_diff_db: f64,
    /// Largest relative change of total power.
    pub max_power_rel_diff: f64,
}

/// PAPR and power before and after randomization over random `(x, k)` pairs.
pub fn papr_invariance(n: usize, trials: usize, seed: u64) -> Result<PaprReport> {
    if n == 0 {
        return param("vector length must be at least 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_papr_diff_db: f64 = 0.0;
    let mut max_power_rel_diff: f64 = 0.0;
    for _ in 0..trials {
        let x: IqVector = (0..n).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let k = PermutationKey::random(n, &mut rng, "trial");
        let y = randomize(&x, &k)?;
        max_papr_diff_db = max_papr_diff_db.max((papr(&y)? - papr(&x)?).abs());
        let (px, py) = (crate::baseband::energy(&x), crate::baseband::energy(&y));
        max_power_rel_diff = max_power_rel_diff.max((py - px).abs() / px);
    }
    Ok(PaprReport {
        trials,
        n,
        max_papr_diff_db,
        max_power_rel_diff,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiReport {
    pub vectors: usize,
    pub n: usize,
    pub bins: usize,
    /// Entropy of the plaintext histogram, the ceiling for every estimate.
    pub plain_entropy_bits: f64,
    /// Identity key: ciphertext equals plaintext.
    pub identity_key_bits: f64,
    /// One random key for every vector.
    pub single_key_bits: f64,
    /// A different key for every vector.
    pub rotating_keys_bits: f64,
    /// Ciphertext drawn independently of the plaintext.
    pub independent_bits: f64,
}

/// Mutual information between OFDM-like plaintext symbols and their
/// randomized versions under several key-use patterns.
pub fn mutual_information_experiment(n: usize, vectors: usize, bins: usize, seed: u64) -> Result<MiReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> IqVector { (0..n).map(|_| complex_gaussian(rng, 1.0)).collect() };
    let plain: Vec<IqVector> = (0..vectors).map(|_| draw(&mut rng)).collect();
    let fixed = PermutationKey::random(n, &mut rng, "fixed");
    let single = plain.iter().map(|p| randomize(p, &fixed)).collect::<Result<Vec<_>>>()?;
    let rotating = plain
        .iter()
        .map(|p| randomize(p, &PermutationKey::random(n, &mut rng, "rot")))
        .collect::<Result<Vec<_>>>()?;
    let independent: Vec<IqVector> = (0..vectors).map(|_| draw(&mut rng)).collect();
    Ok(MiReport {
        vectors,
        n,
        bins,
        plain_entropy_bits: histogram_entropy(&plain, bins)?,
        identity_key_bits: empirical_mutual_information(&plain, &plain, bins)?,
        single_key_bits: empirical_mutual_information(&plain, &single, bins)?,
        rotating_keys_bits: empirical_mutual_information(&plain, &rotating, bins)?,
        independent_bits: empirical_mutual_information(&plain, &independent, bins)?,
    })
}
