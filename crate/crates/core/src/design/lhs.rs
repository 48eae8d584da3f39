//! Latin hypercube designs on `[-1, 1]^d`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Number of random hypercubes compared by the maximin search.
pub const MAXIMIN_CANDIDATES: usize = 100;

/// A random Latin hypercube: each column holds one point per `1/n` stratum.
pub fn latin_hypercube<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![0.0; d]; n];
    let mut perm: Vec<usize> = (0..n).collect();
    for j in 0..d {
        perm.shuffle(rng);
        for (i, p) in pts.iter_mut().enumerate() {
            let u: f64 = rng.random();
            p[j] = -1.0 + 2.0 * (perm[i] as f64 + u) / n as f64;
        }
    }
    pts
}

/// Smallest Euclidean distance between any two points.
pub fn min_pairwise_distance(pts: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..pts.len() {
        for j in 0..i {
            let d2: f64 = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 < best {
                best = d2;
            }
        }
    }
    best.sqrt()
}

fn candidate_rng(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64 + 1);
    rng
}

/// Best of `k` random hypercubes by minimum pairwise distance.
pub fn maximin_lhs_with(n: usize, d: usize, seed: u64, k: usize) -> Vec<Vec<f64>> {
    let k = k.max(1);
    if n < 2 {
        return latin_hypercube(n, d, &mut candidate_rng(seed, 0));
    }
    let best = (0..k)
        .into_par_iter()
        .map(|c| (min_pairwise_distance(&latin_hypercube(n, d, &mut candidate_rng(seed, c))), c))
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );
    latin_hypercube(n, d, &mut candidate_rng(seed, best.1))
}

/// Maximin Latin hypercube with the default number of candidates.
pub fn maximin_lhs(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    maximin_lhs_with(n, d, seed, MAXIMIN_CANDIDATES)
}

/// `n` equally spaced points on `[-1, 1]`, endpoints included.
pub fn grid_1d(n: usize) -> Vec<Vec<f64>> {
    match n {
        0 => vec![],
        1 => vec![vec![0.0]],
        _ => (0..n).map(|i| vec![-1.0 + 2.0 * i as f64 / (n - 1) as f64]).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_latin(pts: &[Vec<f64>]) -> bool {
        let n = pts.len();
        let d = pts.first().map_or(0, Vec::len);
        (0..d).all(|j| {
            let mut seen = vec![false; n];
            pts.iter().all(|p| {
                let b = (((p[j] + 1.0) / 2.0 * n as f64).floor() as usize).min(n - 1);
                !std::mem::replace(&mut seen[b], true)
            })
        })
    }

    #[test]
    fn two_points_one_dimension() {
        let p = maximin_lhs(2, 1, 7);
        let mut v = [p[0][0], p[1][0]];
        v.sort_by(f64::total_cmp);
        assert!((-1.0..0.0).contains(&v[0]) && (0.0..=1.0).contains(&v[1]));
    }

    #[test]
    fn latin_property_and_determinism() {
        let a = maximin_lhs(50, 5, 11);
        assert!(is_latin(&a));
        assert_eq!(a, maximin_lhs(50, 5, 11));
        assert_ne!(a, maximin_lhs(50, 5, 12));
    }

    #[test]
    fn grid_spacing() {
        let g = grid_1d(8);
        assert_eq!(g.len(), 8);
        assert_eq!(g[0][0], -1.0);
        assert_eq!(g[7][0], 1.0);
    }
}
