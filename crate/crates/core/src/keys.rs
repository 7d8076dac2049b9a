//! Shared-secret sample permutation: key derivation, time-domain
//! randomization and derandomization, and the induced spectral map
//! `F R F^-1`.

use crate::baseband::{Complex, Dft, IqVector};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::str::FromStr;

/// A bijection of `0..N`, applied as `out[i] = in[perm[i]]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PermutationKey {
    perm: Vec<usize>,
    key_id: String,
}

impl PermutationKey {
    /// Validates that `perm` is a bijection of `0..perm.len()`.
    pub fn new(perm: Vec<usize>, key_id: impl Into<String>) -> Result<Self> {
        if perm.is_empty() {
            return Err(Error::Key("empty permutation".into()));
        }
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || seen[p] {
                return Err(Error::Key(format!(
                    "not a permutation of 0..{}: offending index {p}",
                    perm.len()
                )));
            }
            seen[p] = true;
        }
        Ok(Self {
            perm,
            key_id: key_id.into(),
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            perm: (0..n).collect(),
            key_id: "identity".into(),
        }
    }

    /// Uniformly random key drawn from `rng`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R, key_id: impl Into<String>) -> Self {
        let mut perm: Vec<usize> = (0..n).collect();
        fisher_yates(&mut perm, rng);
        Self {
            perm,
            key_id: key_id.into(),
        }
    }

    /// Deterministic key from a secret: Fisher-Yates shuffle of `0..n`
    /// driven by ChaCha20 seeded with SHA-256 of the secret.
    pub fn derive(secret: &[u8], n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter(format!("key size {n} < 2")));
        }
        if secret.is_empty() {
            return Err(Error::Parameter("empty key secret".into()));
        }
        let digest = Sha256::new()
            .chain_update(b"randofdm/permutation-key/v1")
            .chain_update((n as u64).to_le_bytes())
            .chain_update(secret)
            .finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        let key_id: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
        let mut rng = ChaCha20Rng::from_seed(seed);
        Ok(Self::random(n, &mut rng, key_id))
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn key_id(&self) -> &str {
        &self.key_id
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.perm.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            inv[p] = i;
        }
        Self {
            perm: inv,
            key_id: format!("{}^-1", self.key_id),
        }
    }

    /// Key file body: one line of comma-separated indices.
    pub fn to_key_file(&self) -> String {
        let mut s = self.perm.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",");
        s.push('\n');
        s
    }

    pub fn from_key_file(text: &str) -> Result<Self> {
        text.parse()
    }
}

impl fmt::Display for PermutationKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.to_key_file().trim_end())
    }
}

impl FromStr for PermutationKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let line = s.trim();
        if line.is_empty() || line.lines().count() != 1 {
            return Err(Error::Key("key file must contain exactly one line".into()));
        }
        let perm = line
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Key(format!("bad index '{}': {e}", t.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(perm, "file")
    }
}

fn fisher_yates<R: Rng + ?Sized>(v: &mut [usize], rng: &mut R) {
    for i in (1..v.len()).rev() {
        let j = rng.random_range(0..=i);
        v.swap(i, j);
    }
}

fn check_len(x: &[Complex], k: &PermutationKey) -> Result<()> {
    if x.len() != k.len() {
        return Err(Error::Parameter(format!(
            "vector length {} != key length {}",
            x.len(),
            k.len()
        )));
    }
    Ok(())
}

/// `out[i] = x[perm[i]]`.
pub fn randomize(x: &[Complex], k: &PermutationKey) -> Result<IqVector> {
    check_len(x, k)?;
    Ok(k.perm.iter().map(|&p| x[p]).collect())
}

/// `out[perm[i]] = x[i]`, the inverse of [`randomize`].
pub fn derandomize(x: &[Complex], k: &PermutationKey) -> Result<IqVector> {
    check_len(x, k)?;
    let mut out = vec![Complex::new(0.0, 0.0); x.len()];
    for (&p, &v) in k.perm.iter().zip(x) {
        out[p] = v;
    }
    Ok(out)
}

/// Frequency-domain image of the permutation: `F R F^-1 X`.
pub fn spectral_transform(k: &PermutationKey, spectrum: &[Complex], dft: &Dft) -> Result<IqVector> {
    check_len(spectrum, k)?;
    let time = dft.inverse(spectrum)?;
    dft.forward(&randomize(&time, k)?)
}

/// How a schedule assigns keys to successive data symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyPolicy {
    /// Every symbol uses the first key.
    #[default]
    Fixed,
    /// Symbol `i` uses key `i mod V`.
    RoundRobin,
}

/// Ordered set of keys plus the per-symbol selection policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeySchedule {
    keys: Vec<PermutationKey>,
    policy: KeyPolicy,
}

impl KeySchedule {
    pub fn new(keys: Vec<PermutationKey>, policy: KeyPolicy) -> Result<Self> {
        let Some(first) = keys.first() else {
            return Err(Error::Parameter("key schedule needs at least one key".into()));
        };
        if keys.iter().any(|k| k.len() != first.len()) {
            return Err(Error::Parameter("all scheduled keys must share N".into()));
        }
        Ok(Self { keys, policy })
    }

    pub fn single(key: PermutationKey) -> Self {
        Self {
            keys: vec![key],
            policy: KeyPolicy::Fixed,
        }
    }

    /// `count` keys derived from `secret` with a per-key counter suffix.
    pub fn derive(secret: &[u8], n: usize, count: usize, policy: KeyPolicy) -> Result<Self> {
        let keys = (0..count.max(1))
            .map(|i| {
                let mut s = secret.to_vec();
                if i > 0 {
                    s.extend_from_slice(format!("#{i}").as_bytes());
                }
                PermutationKey::derive(&s, n)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(keys, policy)
    }

    pub fn keys(&self) -> &[PermutationKey] {
        &self.keys
    }

    pub fn policy(&self) -> KeyPolicy {
        self.policy
    }

    pub fn fft_size(&self) -> usize {
        self.keys[0].len()
    }

    pub fn key_for_symbol(&self, index: usize) -> &PermutationKey {
        match self.policy {
            KeyPolicy::Fixed => &self.keys[0],
            KeyPolicy::RoundRobin => &self.keys[index % self.keys.len()],
        }
    }
}
