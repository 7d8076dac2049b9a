//! Residual common phase estimation from constellation clusters.
//!
//! Cluster the equalized symbols with K-medoids (K = alphabet size), take
//! the largest-magnitude medoid in each quadrant (half-plane for BPSK), and
//! compare its angle with the outermost ideal alphabet point of that region.

use super::kmedoids::{k_medoids, ClusterSet};
use crate::baseband::{Complex, IqVector, ModulationScheme};
use crate::error::{param, Error, Result};

/// Iteration cap for the clustering step.
pub const PHASE_MAX_ITER: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseEstimate {
    /// Estimated rotation of the received constellation, radians.
    /// Undo it with `correct_phase(x, -offset_rad)`.
    pub offset_rad: f64,
    /// Per-region angles, in region order.
    pub per_region: Vec<f64>,
    /// Number of regions averaged: 2 for BPSK, 4 otherwise.
    pub regions: usize,
    pub clusters: ClusterSet,
}

/// Region count used by the estimator.
pub fn region_count(scheme: ModulationScheme) -> usize {
    if scheme == ModulationScheme::Bpsk {
        2
    } else {
        4
    }
}

fn region_of(z: Complex, scheme: ModulationScheme) -> usize {
    if scheme == ModulationScheme::Bpsk {
        return usize::from(z.re < 0.0);
    }
    match (z.re >= 0.0, z.im >= 0.0) {
        (true, true) => 0,
        (false, true) => 1,
        (false, false) => 2,
        (true, false) => 3,
    }
}

/// Outermost alphabet point of each region; ties go to the larger real part.
fn reference_points(scheme: ModulationScheme) -> Vec<Complex> {
    let m = region_count(scheme);
    let mut best: Vec<Option<Complex>> = vec![None; m];
    for x in scheme.constellation() {
        let r = region_of(x, scheme);
        best[r] = match best[r] {
            Some(b) if b.norm() > x.norm() + 1e-12 => Some(b),
            Some(b) if (b.norm() - x.norm()).abs() <= 1e-12 && b.re >= x.re => Some(b),
            _ => Some(x),
        };
    }
    best.into_iter()
        .map(|b| b.expect("every region holds alphabet points"))
        .collect()
}

/// Rotation of `symbols` relative to the ideal alphabet.
///
/// Only resolvable modulo the alphabet's rotational symmetry (pi/2 for
/// QPSK/QAM, pi for BPSK), so offsets must stay well inside that range.
pub fn estimate_residual_phase(symbols: &[Complex], scheme: ModulationScheme, seed: u64) -> Result<PhaseEstimate> {
    if symbols.is_empty() {
        return param("no symbols to estimate phase from");
    }
    let clusters = k_medoids(symbols, scheme.order(), PHASE_MAX_ITER, seed)?;
    let m = region_count(scheme);
    let mut strongest: Vec<Option<Complex>> = vec![None; m];
    for &c in &clusters.centers {
        let r = region_of(c, scheme);
        if strongest[r].is_none_or(|s| c.norm() > s.norm()) {
            strongest[r] = Some(c);
        }
    }
    let refs = reference_points(scheme);
    let mut per_region = Vec::with_capacity(m);
    for (i, (c, x)) in strongest.iter().zip(&refs).enumerate() {
        let c = c.ok_or_else(|| Error::Estimation(format!("no cluster medoid in region {i}")))?;
        per_region.push((c / x).arg());
    }
    let offset_rad = per_region.iter().sum::<f64>() / m as f64;
    Ok(PhaseEstimate {
        offset_rad,
        per_region,
        regions: m,
        clusters,
    })
}

/// Multiplies every symbol by `e^{j theta}`.
pub fn correct_phase(symbols: &[Complex], theta: f64) -> IqVector {
    let r = Complex::from_polar(1.0, theta);
    symbols.iter().map(|s| s * r).collect()
}

/// Evenly strided subsample holding at most `cap` points.
pub(crate) fn subsample(points: &[Complex], cap: usize) -> IqVector {
    if cap == 0 || points.len() <= cap {
        return points.to_vec();
    }
    let stride = points.len().div_ceil(cap);
    points.iter().step_by(stride).copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseband::{demodulate_symbols, modulate_bits};
    use crate::channel::complex_gaussian;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(scheme: ModulationScheme, reps: usize) -> IqVector {
        let c = scheme.constellation();
        (0..reps).flat_map(|_| c.iter().copied()).collect()
    }

    #[test]
    fn reference_points_are_corners() {
        let s = 1.0 / 10f64.sqrt();
        assert_eq!(
            reference_points(ModulationScheme::Qam16),
            vec![
                Complex::new(3.0 * s, 3.0 * s),
                Complex::new(-3.0 * s, 3.0 * s),
                Complex::new(-3.0 * s, -3.0 * s),
                Complex::new(3.0 * s, -3.0 * s),
            ]
        );
        assert_eq!(
            reference_points(ModulationScheme::Bpsk),
            vec![Complex::new(1.0, 0.0), Complex::new(-1.0, 0.0)]
        );
    }

    #[test]
    fn rotated_qam16_grid() {
        let x = correct_phase(&grid(ModulationScheme::Qam16, 10), 0.05);
        let e = estimate_residual_phase(&x, ModulationScheme::Qam16, 1).unwrap();
        assert!((e.offset_rad - 0.05).abs() < 1e-6, "{}", e.offset_rad);
        assert_eq!(e.regions, 4);
    }

    #[test]
    fn unrotated_grids_give_zero() {
        for scheme in ModulationScheme::ALL {
            let e = estimate_residual_phase(&grid(scheme, 4), scheme, 2).unwrap();
            assert!(e.offset_rad.abs() < 1e-6, "{scheme}: {}", e.offset_rad);
        }
    }

    #[test]
    fn equivariant_on_noiseless_grids() {
        for scheme in ModulationScheme::ALL {
            let limit = if scheme == ModulationScheme::Bpsk { 1.2 } else { 0.6 };
            for phi in [-limit, -0.3, 0.01, 0.2, limit] {
                let x = correct_phase(&grid(scheme, 3), phi);
                let e = estimate_residual_phase(&x, scheme, 9).unwrap();
                assert!((e.offset_rad - phi).abs() < 1e-9, "{scheme} {phi}: {}", e.offset_rad);
            }
        }
    }

    #[test]
    fn bpsk_noisy_within_tolerance() {
        let mut hits = 0;
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n0 = 10f64.powf(-1.5);
            let bits: Vec<u8> = (0..500).map(|i| ((i * 7 + seed as usize) % 3 % 2) as u8).collect();
            let x: IqVector = modulate_bits(&bits, ModulationScheme::Bpsk)
                .unwrap()
                .into_iter()
                .map(|s| s * Complex::from_polar(1.0, 0.1) + complex_gaussian(&mut rng, n0))
                .collect();
            let e = estimate_residual_phase(&x, ModulationScheme::Bpsk, seed).unwrap();
            if (e.offset_rad - 0.1).abs() <= 0.02 {
                hits += 1;
            }
        }
        assert!(hits >= 90, "{hits}");
    }

    #[test]
    fn corrected_grid_slices_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bits: Vec<u8> = (0..4 * 500).map(|_| rng.random_range(0..2u8)).collect();
        let x = modulate_bits(&bits, ModulationScheme::Qam16).unwrap();
        let rotated = correct_phase(&x, 0.1);
        let e = estimate_residual_phase(&rotated, ModulationScheme::Qam16, 0).unwrap();
        let back = correct_phase(&rotated, -e.offset_rad);
        assert_eq!(demodulate_symbols(&back, ModulationScheme::Qam16), bits);
    }

    #[test]
    fn correct_phase_identities() {
        let x = grid(ModulationScheme::Qam64, 1);
        assert_eq!(correct_phase(&x, 0.0), x);
        let y = correct_phase(&correct_phase(&x, 0.7), -0.7);
        assert!(x.iter().zip(&y).all(|(a, b)| (a - b).norm() < 1e-12));
    }

    #[test]
    fn empty_region_is_estimation_error() {
        let x = vec![Complex::new(1.0, 0.1); 20];
        let mut pts = x.clone();
        pts.extend(vec![Complex::new(0.9, 0.2); 20]);
        assert!(matches!(
            estimate_residual_phase(&pts, ModulationScheme::Bpsk, 0),
            Err(Error::Estimation(_))
        ));
    }

    #[test]
    fn subsample_caps_length() {
        let x = grid(ModulationScheme::Qpsk, 1000);
        assert_eq!(subsample(&x, 0).len(), 4000);
        assert!(subsample(&x, 2048).len() <= 2048);
        assert_eq!(subsample(&x[..10], 2048).len(), 10);
    }
}
