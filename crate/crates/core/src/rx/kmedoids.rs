//! K-medoids clustering of constellation points on the complex plane.
//!
//! Alternating (Voronoi iteration) PAM variant: assign every point to its
//! nearest medoid, then move each medoid to the cluster member with the
//! smallest summed distance to the rest of its cluster. The alternating
//! phase stalls in local optima easily, so it is followed by PAM swap
//! passes (eager swapping with nearest/second-nearest caches, O(n^2) per
//! pass). Every accepted step lowers the total cost, so the cost sequence
//! is non-increasing.

use crate::baseband::{Complex, IqVector};
use crate::error::{param, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSet {
    /// Medoid values; each is one of the input points.
    pub centers: IqVector,
    /// Index into the input of each medoid.
    pub medoid_indices: Vec<usize>,
    /// Cluster index of every input point.
    pub assignments: Vec<usize>,
    /// Sum of point-to-medoid distances.
    pub cost: f64,
    /// Cost after initialization and after every completed iteration.
    pub cost_history: Vec<f64>,
    pub iterations: usize,
}

fn assign(points: &[Complex], medoids: &[usize], out: &mut [usize]) -> f64 {
    let mut cost = 0.0;
    for (i, p) in points.iter().enumerate() {
        let mut best = (0, f64::INFINITY);
        for (c, &m) in medoids.iter().enumerate() {
            let d = (p - points[m]).norm();
            if d < best.1 {
                best = (c, d);
            }
        }
        out[i] = best.0;
        cost += best.1;
    }
    cost
}

// k-means++ seeding: one uniformly drawn medoid, then each next one drawn
// with probability proportional to its squared distance from the chosen set.
fn init_medoids(points: &[Complex], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = points.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut nearest: Vec<f64> = points.iter().map(|p| (p - points[chosen[0]]).norm_sqr()).collect();
    while chosen.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random_range(0.0..total);
            let mut pick = n - 1;
            for (i, &d) in nearest.iter().enumerate() {
                if u < d {
                    pick = i;
                    break;
                }
                u -= d;
            }
            // Rounding can land on an already chosen (zero-weight) point.
            if chosen.contains(&pick) {
                nearest
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !chosen.contains(i))
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(i, _)| i)
                    .unwrap()
            } else {
                pick
            }
        } else {
            (0..n).find(|i| !chosen.contains(i)).unwrap()
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            nearest[i] = nearest[i].min((p - points[next]).norm_sqr());
        }
    }
    chosen
}

struct Nearest {
    first: Vec<usize>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

fn nearest_two(points: &[Complex], medoids: &[usize]) -> Nearest {
    let n = points.len();
    let mut nr = Nearest {
        first: vec![0; n],
        d1: vec![f64::INFINITY; n],
        d2: vec![f64::INFINITY; n],
    };
    for (i, p) in points.iter().enumerate() {
        for (c, &m) in medoids.iter().enumerate() {
            let d = (p - points[m]).norm();
            if d < nr.d1[i] {
                nr.d2[i] = nr.d1[i];
                nr.d1[i] = d;
                nr.first[i] = c;
            } else if d < nr.d2[i] {
                nr.d2[i] = d;
            }
        }
    }
    nr
}

// One eager swap pass over every non-medoid. Returns the new cost if any
// swap was made.
fn swap_pass(points: &[Complex], medoids: &mut [usize], mut cost: f64) -> Option<f64> {
    let k = medoids.len();
    if k == points.len() {
        return None;
    }
    let mut nr = nearest_two(points, medoids);
    let mut removal = vec![0.0; k];
    let refresh_removal = |nr: &Nearest, removal: &mut [f64]| {
        removal.iter_mut().for_each(|r| *r = 0.0);
        for i in 0..points.len() {
            // With k = 1 there is no second medoid; removal is never chosen alone.
            if nr.d2[i].is_finite() {
                removal[nr.first[i]] += nr.d2[i] - nr.d1[i];
            }
        }
    };
    refresh_removal(&nr, &mut removal);
    let mut swapped = false;
    let tol = 1e-12 * (1.0 + cost);
    for x in 0..points.len() {
        if medoids.contains(&x) {
            continue;
        }
        let mut delta = removal.clone();
        let mut gain = 0.0;
        for (o, p) in points.iter().enumerate() {
            let d = (p - points[x]).norm();
            let c = nr.first[o];
            if d < nr.d1[o] {
                gain += d - nr.d1[o];
                delta[c] += nr.d1[o] - if nr.d2[o].is_finite() { nr.d2[o] } else { nr.d1[o] };
            } else if d < nr.d2[o] {
                delta[c] += d - nr.d2[o];
            }
        }
        if k == 1 {
            // Replacing the only medoid: recompute directly.
            let total: f64 = points.iter().map(|p| (p - points[x]).norm()).sum();
            if total < cost - tol {
                medoids[0] = x;
                cost = total;
                swapped = true;
                nr = nearest_two(points, medoids);
            }
            continue;
        }
        let (m, best) = delta
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(m, &v)| (m, v))
            .expect("k >= 1");
        if best + gain < -tol {
            medoids[m] = x;
            nr = nearest_two(points, medoids);
            refresh_removal(&nr, &mut removal);
            cost = nr.d1.iter().sum();
            swapped = true;
        }
    }
    swapped.then_some(cost)
}

pub fn k_medoids(points: &[Complex], k: usize, max_iter: usize, seed: u64) -> Result<ClusterSet> {
    if k == 0 || k > points.len() {
        return param(format!("k = {k} must be in 1..={}", points.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut medoids = init_medoids(points, k, &mut rng);
    let mut assignments = vec![0; points.len()];
    let mut cost = assign(points, &medoids, &mut assignments);
    let mut history = vec![cost];
    let mut iterations = 0;

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    while iterations < max_iter {
        members.iter_mut().for_each(Vec::clear);
        for (i, &c) in assignments.iter().enumerate() {
            members[c].push(i);
        }
        let mut candidate = medoids.clone();
        for (c, group) in members.iter().enumerate() {
            if group.is_empty() {
                continue;
            }
            let mut best = (medoids[c], f64::INFINITY);
            for &i in group {
                let s: f64 = group.iter().map(|&j| (points[i] - points[j]).norm()).sum();
                if s < best.1 {
                    best = (i, s);
                }
            }
            candidate[c] = best.0;
        }
        if candidate == medoids {
            break;
        }
        let mut next_assign = vec![0; points.len()];
        let next_cost = assign(points, &candidate, &mut next_assign);
        if next_cost >= cost {
            break;
        }
        medoids = candidate;
        assignments = next_assign;
        cost = next_cost;
        history.push(cost);
        iterations += 1;
    }

    while iterations < max_iter {
        match swap_pass(points, &mut medoids, cost) {
            Some(c) => {
                cost = c;
                history.push(cost);
                iterations += 1;
            }
            None => break,
        }
    }
    assign(points, &medoids, &mut assignments);

    Ok(ClusterSet {
        centers: medoids.iter().map(|&m| points[m]).collect(),
        medoid_indices: medoids,
        assignments,
        cost,
        cost_history: history,
        iterations,
    })
}
