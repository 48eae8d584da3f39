//! Uniform sampling of a region by random-walk Metropolis.
//!
//! For a uniform target the Metropolis rule reduces to "accept any proposal
//! that stays inside the region". Chains start from known members, tune a
//! common step scale towards 20-40% acceptance, freeze it, burn in, then
//! thin at the lag where the worst per-coordinate autocorrelation of a
//! pilot run drops below the target.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::derive_seed;
use super::region::Region;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McmcOptions {
    pub chains: usize,
    /// Initial proposal sd as a fraction of each box width.
    pub initial_scale: f64,
    pub adapt_batches: usize,
    pub batch_len: usize,
    pub burn_in: usize,
    pub pilot_len: usize,
    /// Largest accepted lag-1 autocorrelation of the thinned chain.
    pub max_autocorrelation: f64,
    pub max_thin: usize,
    /// Below this acceptance during adaptation the chains are declared stuck.
    pub stuck_acceptance: f64,
}

impl Default for McmcOptions {
    fn default() -> Self {
        Self {
            chains: 8,
            initial_scale: 0.1,
            adapt_batches: 40,
            batch_len: 50,
            burn_in: 1000,
            pilot_len: 2000,
            max_autocorrelation: 0.1,
            max_thin: 500,
            stuck_acceptance: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct McmcOutcome {
    pub points: Vec<Vec<f64>>,
    /// Acceptance rate after adaptation.
    pub acceptance: f64,
    pub scale: f64,
    pub thin: usize,
}

struct Chain<'a> {
    region: &'a Region,
    x: Vec<f64>,
    rng: ChaCha8Rng,
    scale: f64,
    accepted: usize,
    proposed: usize,
}

impl Chain<'_> {
    fn step(&mut self) {
        let bbox = &self.region.bbox;
        let prop: Vec<f64> = self
            .x
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                v + z * self.scale * bbox.width(i)
            })
            .collect();
        self.proposed += 1;
        if self.region.contains(&prop) {
            self.x = prop;
            self.accepted += 1;
        }
    }

    fn reset_counts(&mut self) {
        self.accepted = 0;
        self.proposed = 0;
    }

    fn rate(&self) -> f64 {
        self.accepted as f64 / self.proposed.max(1) as f64
    }
}

/// Largest |lag-k autocorrelation| over coordinates.
fn worst_autocorrelation(trace: &[Vec<f64>], lag: usize) -> f64 {
    let n = trace.len();
    if n <= lag + 1 {
        return 1.0;
    }
    let d = trace[0].len();
    let mut worst = 0.0f64;
    for j in 0..d {
        let mean = trace.iter().map(|p| p[j]).sum::<f64>() / n as f64;
        let var: f64 = trace.iter().map(|p| (p[j] - mean).powi(2)).sum();
        if var <= 0.0 {
            return 1.0;
        }
        let cov: f64 = (0..n - lag).map(|t| (trace[t][j] - mean) * (trace[t + lag][j] - mean)).sum();
        worst = worst.max((cov / var).abs());
    }
    worst
}

fn choose_thin(trace: &[Vec<f64>], target: f64, max_thin: usize) -> usize {
    let limit = max_thin.min(trace.len() / 10).max(1);
    (1..=limit)
        .find(|&k| worst_autocorrelation(trace, k) <= target)
        .unwrap_or(limit)
}

/// Draws `n` approximately uniform points from `region`, starting chains at
/// the given members.
pub fn mcmc_uniform(region: &Region, n: usize, seed: u64, starts: &[Vec<f64>], opts: &McmcOptions) -> Result<McmcOutcome> {
    if n == 0 {
        return Ok(McmcOutcome {
            points: vec![],
            acceptance: 0.0,
            scale: opts.initial_scale,
            thin: 1,
        });
    }
    let starts: Vec<&Vec<f64>> = starts.iter().filter(|s| region.contains(s)).collect();
    if starts.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let chains = opts.chains.max(1);
    let quota = n.div_ceil(chains);

    let results: Vec<Result<(Vec<Vec<f64>>, f64, f64, usize)>> = (0..chains)
        .into_par_iter()
        .map(|c| {
            let mut ch = Chain {
                region,
                x: starts[c % starts.len()].clone(),
                rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, &[c as u64])),
                scale: opts.initial_scale,
                accepted: 0,
                proposed: 0,
            };
            let mut adapt_acc = 0;
            let mut adapt_prop = 0;
            for _ in 0..opts.adapt_batches {
                ch.reset_counts();
                for _ in 0..opts.batch_len {
                    ch.step();
                }
                adapt_acc += ch.accepted;
                adapt_prop += ch.proposed;
                let r = ch.rate();
                if r < 0.2 {
                    ch.scale *= 0.6;
                } else if r > 0.4 {
                    ch.scale = (ch.scale * 1.5).min(2.0);
                }
            }
            if adapt_prop > 0 && (adapt_acc as f64 / adapt_prop as f64) < opts.stuck_acceptance {
                return Err(Error::ChainsStuck {
                    acceptance: adapt_acc as f64 / adapt_prop as f64,
                });
            }
            for _ in 0..opts.burn_in {
                ch.step();
            }
            ch.reset_counts();
            let mut pilot = Vec::with_capacity(opts.pilot_len);
            for _ in 0..opts.pilot_len {
                ch.step();
                pilot.push(ch.x.clone());
            }
            let thin = choose_thin(&pilot, opts.max_autocorrelation, opts.max_thin);
            let mut out = Vec::with_capacity(quota);
            while out.len() < quota {
                for _ in 0..thin {
                    ch.step();
                }
                out.push(ch.x.clone());
            }
            if ch.rate() < opts.stuck_acceptance {
                return Err(Error::ChainsStuck { acceptance: ch.rate() });
            }
            Ok((out, ch.rate(), ch.scale, thin))
        })
        .collect();

    let mut points = Vec::with_capacity(chains * quota);
    let (mut acc, mut scale, mut thin) = (0.0, 0.0, 0usize);
    for r in results {
        let (pts, a, s, t) = r?;
        points.extend(pts);
        acc += a;
        scale += s;
        thin = thin.max(t);
    }
    points.truncate(n);
    debug_assert!(points.iter().all(|p| region.contains(p)));
    Ok(McmcOutcome {
        points,
        acceptance: acc / chains as f64,
        scale: scale / chains as f64,
        thin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::BoundingBox;

    #[test]
    fn zero_samples_is_empty() {
        let r = Region::full(BoundingBox::symmetric(2));
        let out = mcmc_uniform(&r, 0, 1, &[], &McmcOptions::default()).unwrap();
        assert!(out.points.is_empty());
    }

    #[test]
    fn no_member_start_is_empty_region() {
        let r = Region::full(BoundingBox::symmetric(2)).with_constraint(|x| x[0] > 0.0);
        let err = mcmc_uniform(&r, 10, 1, &[vec![-0.5, 0.0]], &McmcOptions::default()).unwrap_err();
        assert!(matches!(err, Error::EmptyRegion));
    }

    #[test]
    fn samples_stay_inside_and_spread() {
        let r = Region::full(BoundingBox::symmetric(2)).with_constraint(|x| x[0] * x[0] + x[1] * x[1] < 0.25);
        let out = mcmc_uniform(&r, 2000, 9, &[vec![0.0, 0.0]], &McmcOptions::default()).unwrap();
        assert_eq!(out.points.len(), 2000);
        assert!(out.points.iter().all(|p| r.contains(p)));
        let mean_r2 = out.points.iter().map(|p| p[0] * p[0] + p[1] * p[1]).sum::<f64>() / 2000.0;
        // uniform on a disc of radius 0.5: E[r^2] = 0.125
        assert!((mean_r2 - 0.125).abs() < 0.01, "{mean_r2}");
        assert!((0.15..0.45).contains(&out.acceptance), "{}", out.acceptance);
    }
}
