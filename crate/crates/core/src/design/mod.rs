//! Experimental designs and sampling inside non-implausible regions.

pub mod lhs;
pub mod mcmc;
pub mod region;
pub mod rejection;

use log::info;
use serde::{Deserialize, Serialize};

pub use lhs::{grid_1d, latin_hypercube, maximin_lhs, maximin_lhs_with, min_pairwise_distance};
pub use mcmc::{mcmc_uniform, McmcOptions, McmcOutcome};
pub use region::{BoundingBox, Region};
pub use rejection::{greedy_maximin, rejection_design, rejection_design_with, rejection_uniform, RejectionOptions, RejectionOutcome};

use crate::error::{Error, Result};

/// Derives an independent sub-seed (SplitMix64 finaliser over the path).
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    path.iter().fold(mix(master), |acc, &p| mix(acc ^ mix(p)))
}

/// Design family for a wave.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignMethod {
    #[default]
    MaximinLhs,
    /// Evenly spaced points, endpoints included; one input only, full box only.
    Grid,
}

/// How points were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Direct,
    Rejection,
    Mcmc,
}

impl std::fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SamplerKind::Direct => "direct",
            SamplerKind::Rejection => "rejection",
            SamplerKind::Mcmc => "mcmc",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingOptions {
    pub rejection: RejectionOptions,
    pub mcmc: McmcOptions,
    /// Candidate budget of plain uniform rejection before switching to MCMC.
    pub uniform_budget: Option<usize>,
}

impl SamplingOptions {
    fn budget(&self) -> usize {
        self.uniform_budget.unwrap_or(2_000_000)
    }
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub points: Vec<Vec<f64>>,
    pub kind: SamplerKind,
    pub acceptance: f64,
}

/// Space-filling design of `n` points inside the region, kept away from
/// `existing` runs. Falls back to MCMC from `starts` when rejection
/// acceptance is too low.
pub fn design_in_region(
    region: &Region,
    n: usize,
    method: DesignMethod,
    seed: u64,
    starts: &[Vec<f64>],
    existing: &[Vec<f64>],
    opts: &SamplingOptions,
) -> Result<Sample> {
    if method == DesignMethod::Grid {
        if region.dims() != 1 || !region.is_full_box() {
            return Err(Error::Config("grid designs need one input and an unrestricted box".into()));
        }
        return Ok(Sample {
            points: grid_1d(n).iter().map(|u| region.bbox.from_unit(u)).collect(),
            kind: SamplerKind::Direct,
            acceptance: 1.0,
        });
    }
    match rejection_design_with(region, n, seed, &opts.rejection, existing) {
        Ok(o) => Ok(Sample {
            kind: if region.is_full_box() { SamplerKind::Direct } else { SamplerKind::Rejection },
            points: o.points,
            acceptance: o.acceptance,
        }),
        Err(Error::AcceptanceTooLow { rate, .. }) => {
            info!("rejection acceptance {rate:.4} too low, switching to MCMC");
            let o = mcmc_uniform(region, n, derive_seed(seed, &[u64::MAX]), starts, &opts.mcmc)?;
            Ok(Sample {
                points: o.points,
                kind: SamplerKind::Mcmc,
                acceptance: o.acceptance,
            })
        }
        Err(e) => Err(e),
    }
}

/// `n` approximately uniform, unstructured draws from the region.
pub fn sample_region(region: &Region, n: usize, seed: u64, starts: &[Vec<f64>], opts: &SamplingOptions) -> Result<Sample> {
    let r = rejection_uniform(region, n, seed, opts.budget());
    if r.points.len() == n {
        return Ok(Sample {
            points: r.points,
            kind: if region.is_full_box() { SamplerKind::Direct } else { SamplerKind::Rejection },
            acceptance: r.acceptance,
        });
    }
    let mut all_starts: Vec<Vec<f64>> = r.points;
    all_starts.extend(starts.iter().cloned());
    if all_starts.is_empty() {
        return Err(Error::EmptyRegion);
    }
    info!("uniform rejection found too few members, switching to MCMC");
    let o = mcmc_uniform(region, n, derive_seed(seed, &[u64::MAX]), &all_starts, &opts.mcmc)?;
    Ok(Sample {
        points: o.points,
        kind: SamplerKind::Mcmc,
        acceptance: o.acceptance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, &[0]), derive_seed(1, &[1]));
        assert_ne!(derive_seed(1, &[0]), derive_seed(2, &[0]));
        assert_eq!(derive_seed(3, &[4, 5]), derive_seed(3, &[4, 5]));
    }

    #[test]
    fn grid_design_on_toy_box() {
        let r = Region::full(BoundingBox::new(vec![0.0], vec![7.0]).unwrap());
        let s = design_in_region(&r, 8, DesignMethod::Grid, 0, &[], &[], &SamplingOptions::default()).unwrap();
        assert_eq!(s.points.first().unwrap()[0], 0.0);
        assert_eq!(s.points.last().unwrap()[0], 7.0);
        assert!((s.points[1][0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampler_falls_back_to_mcmc() {
        let r = Region::full(BoundingBox::symmetric(2)).with_constraint(|x| x[0] > 0.99 && x[1] > 0.99);
        let opts = SamplingOptions {
            uniform_budget: Some(10_000),
            ..Default::default()
        };
        let s = sample_region(&r, 200, 4, &[vec![0.995, 0.995]], &opts).unwrap();
        assert_eq!(s.kind, SamplerKind::Mcmc);
        assert_eq!(s.points.len(), 200);
        assert!(s.points.iter().all(|p| r.contains(p)));
    }
}
