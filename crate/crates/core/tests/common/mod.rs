//! Property checks shared by the `properties` test target and the
//! acceptance runner. Each check drives a deterministic proptest runner.

#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use randofdm::baseband::{add_cyclic_prefix, energy, remove_cyclic_prefix, Complex, Dft, IqVector, OfdmParams};
use randofdm::channel::{apply_channel, ChannelRealization};
use randofdm::keys::{derandomize, randomize, PermutationKey};
use randofdm::rx::k_medoids;

pub type Check = fn(u32) -> Result<(), String>;

pub const CRITERION_NINE: [(&str, Check); 6] = [
    ("parseval", parseval),
    ("dft_round_trip", dft_round_trip),
    ("permutation_round_trip", permutation_round_trip),
    ("cp_round_trip", cp_round_trip),
    ("circular_convolution", circular_convolution),
    ("kmedoids_cost_monotone", kmedoids_cost_monotone),
];

pub fn runner(cases: u32) -> TestRunner {
    let cfg = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(cfg, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

pub fn complex_vec(len: impl Into<prop::collection::SizeRange>, scale: f64) -> impl Strategy<Value = IqVector> {
    prop::collection::vec((-scale..scale, -scale..scale), len)
        .prop_map(|v| v.into_iter().map(|(re, im)| Complex::new(re, im)).collect())
}

pub fn permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

fn close(a: &[Complex], b: &[Complex], tol: f64) -> Result<(), TestCaseError> {
    prop_assert_eq!(a.len(), b.len());
    let scale = 1.0 + a.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        prop_assert!((x - y).norm() <= tol * scale, "element {}: {} vs {}", i, x, y);
    }
    Ok(())
}

fn finish(r: Result<(), proptest::test_runner::TestError<impl std::fmt::Debug>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

/// Unnormalized forward transform: `sum |X|^2 = N sum |x|^2`.
pub fn parseval(cases: u32) -> Result<(), String> {
    finish(runner(cases).run(&complex_vec(1..=256, 10.0), |x| {
        let n = x.len();
        let big = Dft::new(n).unwrap().forward(&x).unwrap();
        let (lhs, rhs) = (energy(&big), n as f64 * energy(&x));
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs), "{} vs {}", lhs, rhs);
        Ok(())
    }))
}

pub fn dft_round_trip(cases: u32) -> Result<(), String> {
    finish(runner(cases).run(&complex_vec(1..=256, 10.0), |x| {
        let d = Dft::new(x.len()).unwrap();
        close(&d.inverse(&d.forward(&x).unwrap()).unwrap(), &x, 1e-12)?;
        close(&d.forward(&d.inverse(&x).unwrap()).unwrap(), &x, 1e-12)
    }))
}

pub fn permutation_round_trip(cases: u32) -> Result<(), String> {
    let s = (1usize..=128).prop_flat_map(|n| (complex_vec(n, 5.0), permutation(n)));
    finish(runner(cases).run(&s, |(x, perm)| {
        let k = PermutationKey::new(perm, "p").unwrap();
        let y = randomize(&x, &k).unwrap();
        prop_assert_eq!(&derandomize(&y, &k).unwrap(), &x);
        prop_assert_eq!(&randomize(&y, &k.inverse()).unwrap(), &x);
        for (i, &p) in k.perm().iter().enumerate() {
            prop_assert_eq!(y[i], x[p]);
        }
        Ok(())
    }))
}

pub fn cp_round_trip(cases: u32) -> Result<(), String> {
    let s = (2usize..=128).prop_flat_map(|n| (complex_vec(n, 5.0), 1..n));
    finish(runner(cases).run(&s, |(x, v)| {
        let n = x.len();
        let y = add_cyclic_prefix(&x, v).unwrap();
        prop_assert_eq!(y.len(), n + v);
        prop_assert_eq!(&y[..v], &x[n - v..]);
        prop_assert_eq!(&remove_cyclic_prefix(&y, n, v).unwrap(), &x);
        Ok(())
    }))
}

/// A channel no longer than the prefix acts on the symbol as circular
/// convolution, i.e. a per-bin product in the frequency domain.
pub fn circular_convolution(cases: u32) -> Result<(), String> {
    let p = OfdmParams::wifi();
    let (n, cp) = (p.fft_size, p.cp_len);
    let s = (complex_vec(n, 1.0), complex_vec(1..=cp, 1.0), complex_vec(n + cp, 1.0));
    finish(runner(cases).run(&s, |(x, taps, prev)| {
        let ch = ChannelRealization::from_taps(taps, &p, 0).unwrap();
        let d = Dft::new(n).unwrap();
        // A previous symbol in front must not leak past the prefix.
        let mut stream = prev;
        stream.extend(add_cyclic_prefix(&x, cp).unwrap());
        let y = apply_channel(&stream, &ch);
        let body = remove_cyclic_prefix(&y[n + cp..], n, cp).unwrap();
        let xf = d.forward(&x).unwrap();
        let expect: IqVector = xf.iter().zip(&ch.freq_response).map(|(a, h)| a * h).collect();
        close(&d.forward(&body).unwrap(), &expect, 1e-10)
    }))
}

pub fn kmedoids_cost_monotone(cases: u32) -> Result<(), String> {
    let s = (complex_vec(2..=80, 3.0), 1usize..=8, any::<u64>());
    finish(runner(cases).run(&s, |(pts, k, seed)| {
        let k = k.min(pts.len());
        let c = k_medoids(&pts, k, 50, seed).unwrap();
        prop_assert_eq!(c.centers.len(), k);
        for w in c.cost_history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9, "cost rose: {:?}", c.cost_history);
        }
        for (&m, &i) in c.centers.iter().zip(&c.medoid_indices) {
            prop_assert_eq!(pts[i], m);
        }
        prop_assert_eq!(c.assignments.len(), pts.len());
        Ok(())
    }))
}
