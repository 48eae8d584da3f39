//! Space-filling designs inside a region by rejection of Latin hypercubes.

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::derive_seed;
use super::lhs::{maximin_lhs_with, MAXIMIN_CANDIDATES};
use super::region::Region;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RejectionOptions {
    pub maximin_candidates: usize,
    /// Members gathered per requested point before a maximin subset is
    /// chosen; 1 keeps members in the order they were found.
    pub oversample: usize,
    /// Give up (and suggest MCMC) below this acceptance rate.
    pub min_acceptance: f64,
    /// Candidates examined before the acceptance rate is judged.
    pub min_candidates: usize,
    pub max_candidates: usize,
}

impl Default for RejectionOptions {
    fn default() -> Self {
        Self {
            maximin_candidates: MAXIMIN_CANDIDATES,
            oversample: 1,
            min_acceptance: 0.01,
            min_candidates: 5_000,
            max_candidates: 500_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RejectionOutcome {
    pub points: Vec<Vec<f64>>,
    pub candidates: usize,
    pub acceptance: f64,
}

fn members(region: &Region, pts: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let keep: Vec<bool> = pts.par_iter().map(|p| region.contains(p)).collect();
    pts.into_iter().zip(keep).filter_map(|(p, k)| k.then_some(p)).collect()
}

/// Draws maximin hypercubes over the region's box and keeps the members
/// until enough are collected. For the full box the first hypercube is
/// returned as is. With `oversample > 1` a pool of `oversample * n` members
/// is gathered and `n` of them are picked greedily to be far apart.
pub fn rejection_design(region: &Region, n: usize, seed: u64, opts: &RejectionOptions) -> Result<RejectionOutcome> {
    rejection_design_with(region, n, seed, opts, &[])
}

/// As [`rejection_design`], but the subset choice also keeps away from
/// `existing` runs (used when earlier runs are reused for training).
pub fn rejection_design_with(
    region: &Region,
    n: usize,
    seed: u64,
    opts: &RejectionOptions,
    existing: &[Vec<f64>],
) -> Result<RejectionOutcome> {
    let d = region.dims();
    let full = region.is_full_box();
    let pool_size = if full { n } else { n * opts.oversample.max(1) };
    let mut pool = Vec::with_capacity(pool_size);
    let mut candidates = 0usize;
    let mut batch = 0u64;
    while pool.len() < pool_size {
        let cube = maximin_lhs_with(pool_size, d, derive_seed(seed, &[batch]), opts.maximin_candidates);
        let cube: Vec<Vec<f64>> = cube.iter().map(|u| region.bbox.from_unit(u)).collect();
        candidates += cube.len();
        batch += 1;
        for p in members(region, cube) {
            if pool.len() < pool_size {
                pool.push(p);
            }
        }
        let rate = pool.len() as f64 / candidates as f64;
        if pool.len() < pool_size
            && ((candidates >= opts.min_candidates && rate < opts.min_acceptance) || candidates >= opts.max_candidates)
        {
            return Err(Error::AcceptanceTooLow {
                rate,
                threshold: opts.min_acceptance,
                candidates,
            });
        }
    }
    let acceptance = if candidates == 0 { 1.0 } else { pool.len() as f64 / candidates as f64 };
    let points = if pool.len() > n {
        let units: Vec<Vec<f64>> = pool.iter().map(|p| region.bbox.to_unit(p)).collect();
        let fixed: Vec<Vec<f64>> = existing.iter().map(|p| region.bbox.to_unit(p)).collect();
        greedy_maximin(&units, n, &fixed).into_iter().map(|i| pool[i].clone()).collect()
    } else {
        pool
    };
    debug!("rejection design: {n} points from {candidates} candidates");
    Ok(RejectionOutcome {
        points,
        candidates,
        acceptance,
    })
}

/// Picks `n` indices, each time adding the pool point farthest from
/// everything chosen so far and from `fixed`. Without fixed points the
/// first pick is the one nearest the pool centroid.
pub fn greedy_maximin(pool: &[Vec<f64>], n: usize, fixed: &[Vec<f64>]) -> Vec<usize> {
    if pool.is_empty() || n == 0 {
        return Vec::new();
    }
    let dist2 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let mut chosen = Vec::with_capacity(n);
    let mut nearest: Vec<f64> = if fixed.is_empty() {
        let d = pool[0].len();
        let centroid: Vec<f64> = (0..d)
            .map(|j| pool.iter().map(|p| p[j]).sum::<f64>() / pool.len() as f64)
            .collect();
        let first = (0..pool.len())
            .min_by(|&a, &b| dist2(&pool[a], &centroid).total_cmp(&dist2(&pool[b], &centroid)))
            .expect("non-empty pool");
        chosen.push(first);
        pool.iter().map(|p| dist2(p, &pool[first])).collect()
    } else {
        pool.iter()
            .map(|p| fixed.iter().map(|f| dist2(p, f)).fold(f64::INFINITY, f64::min))
            .collect()
    };
    while chosen.len() < n.min(pool.len()) {
        let next = (0..pool.len())
            .max_by(|&a, &b| nearest[a].total_cmp(&nearest[b]).then(b.cmp(&a)))
            .expect("non-empty pool");
        chosen.push(next);
        for (i, p) in pool.iter().enumerate() {
            nearest[i] = nearest[i].min(dist2(p, &pool[next]));
        }
    }
    chosen
}

/// Independent uniform draws from the region by plain rejection from its box.
/// Stops early (returning what it has) once `max_candidates` are spent.
pub fn rejection_uniform(region: &Region, n: usize, seed: u64, max_candidates: usize) -> RejectionOutcome {
    const CHUNK: usize = 4096;
    let d = region.dims();
    let mut points = Vec::with_capacity(n);
    let mut candidates = 0usize;
    let mut chunk = 0u64;
    let mut hits = 0usize;
    while points.len() < n && candidates < max_candidates {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[chunk]));
        chunk += 1;
        let cand: Vec<Vec<f64>> = (0..CHUNK)
            .map(|_| {
                (0..d)
                    .map(|i| region.bbox.lower[i] + rng.random::<f64>() * region.bbox.width(i))
                    .collect()
            })
            .collect();
        candidates += CHUNK;
        let found = members(region, cand);
        hits += found.len();
        for p in found {
            if points.len() < n {
                points.push(p);
            }
        }
    }
    let acceptance = hits as f64 / candidates.max(1) as f64;
    RejectionOutcome {
        points,
        candidates,
        acceptance,
    }
}
