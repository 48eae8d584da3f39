//! What-if analysis splitting acceptable runs by the sign of one output.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::samples::SampleSet;
use crate::error::{Error, Result};

/// Probability levels of the per-output summaries.
pub const QUANTILE_LEVELS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];
/// Highest-density-region masses of the pair densities.
pub const HDR_MASSES: [f64; 2] = [0.5, 0.9];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitOptions {
    pub bins: usize,
    /// Inputs for the pair densities; all when `None`.
    pub inputs: Option<Vec<usize>>,
}

impl Default for SplitOptions {
    fn default() -> Self {
        Self { bins: 20, inputs: None }
    }
}

/// Type-7 (linear interpolation) sample quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputQuantiles {
    pub group: String,
    pub output: usize,
    pub quantiles: Vec<f64>,
}

/// 2-d histogram of one input pair for one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDensity {
    pub group: String,
    pub a: usize,
    pub b: usize,
    pub range_a: (f64, f64),
    pub range_b: (f64, f64),
    pub bins: usize,
    /// Row-major `bins x bins` counts, first index along `a`.
    pub counts: Vec<u64>,
    /// Count levels whose super-level sets hold at least 50% and 90% of runs.
    pub hdr_levels: Vec<u64>,
}

/// Smallest count level `c` such that bins with count >= `c` hold at least
/// `mass` of the total.
pub fn hdr_level(counts: &[u64], mass: f64) -> u64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0;
    }
    let mut sorted: Vec<u64> = counts.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let mut acc = 0u64;
    for c in sorted {
        acc += c;
        if acc as f64 >= mass * total as f64 {
            return c;
        }
    }
    0
}

pub fn pair_density(s: &SampleSet, a: usize, b: usize, range_a: (f64, f64), range_b: (f64, f64), bins: usize) -> PairDensity {
    let bins = bins.max(1);
    let cell = |v: f64, (lo, hi): (f64, f64)| -> usize {
        if hi <= lo {
            return 0;
        }
        (((v - lo) / (hi - lo) * bins as f64).floor().max(0.0) as usize).min(bins - 1)
    };
    let mut counts = vec![0u64; bins * bins];
    for p in &s.points {
        counts[cell(p[a], range_a) * bins + cell(p[b], range_b)] += 1;
    }
    PairDensity {
        group: s.label.clone(),
        a,
        b,
        range_a,
        range_b,
        bins,
        hdr_levels: HDR_MASSES.iter().map(|&m| hdr_level(&counts, m)).collect(),
        counts,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignSplit {
    pub output: usize,
    pub positive: SampleSet,
    pub negative: SampleSet,
    pub warning: Option<String>,
    pub quantiles: Vec<OutputQuantiles>,
    pub densities: Vec<PairDensity>,
}

/// Splits runs by the sign of output `output` (zero counts as negative) and
/// summarises each side.
pub fn sign_split(s: &SampleSet, output: usize, opts: &SplitOptions) -> Result<SignSplit> {
    let outs = s
        .outputs
        .as_ref()
        .ok_or_else(|| Error::Config(format!("sample {} has no outputs", s.label)))?;
    if outs.first().is_some_and(|o| output >= o.len()) {
        return Err(Error::Config(format!("output index {output} out of range")));
    }
    let keep: Vec<bool> = outs.iter().map(|o| o[output] > 0.0).collect();
    let flip: Vec<bool> = keep.iter().map(|k| !k).collect();
    let positive = s.subset(format!("{}-positive", s.label), &keep);
    let negative = s.subset(format!("{}-negative", s.label), &flip);
    let warning = if positive.is_empty() || negative.is_empty() {
        let msg = format!(
            "all {} runs fall on one side of zero; only one group is summarised",
            s.len()
        );
        warn!("{msg}");
        Some(msg)
    } else {
        None
    };
    let groups: Vec<&SampleSet> = [&positive, &negative].into_iter().filter(|g| !g.is_empty()).collect();

    let n_out = outs.first().map_or(0, Vec::len);
    let mut quantiles = Vec::new();
    for g in &groups {
        let go = g.outputs.as_ref().expect("subset keeps outputs");
        for j in 0..n_out {
            let mut col: Vec<f64> = go.iter().map(|o| o[j]).filter(|v| v.is_finite()).collect();
            col.sort_by(f64::total_cmp);
            quantiles.push(OutputQuantiles {
                group: g.label.clone(),
                output: j,
                quantiles: QUANTILE_LEVELS.iter().map(|&p| quantile(&col, p)).collect(),
            });
        }
    }

    let inputs: Vec<usize> = opts.inputs.clone().unwrap_or_else(|| (0..s.dims()).collect());
    let range = |i: usize| -> (f64, f64) {
        s.points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[i]), hi.max(p[i])))
    };
    let ranges: Vec<(f64, f64)> = inputs.iter().map(|&i| range(i)).collect();
    let pairs: Vec<(usize, usize)> = (0..inputs.len())
        .flat_map(|x| (x + 1..inputs.len()).map(move |y| (x, y)))
        .collect();
    let densities: Vec<PairDensity> = groups
        .iter()
        .flat_map(|g| {
            pairs
                .par_iter()
                .map(|&(x, y)| pair_density(g, inputs[x], inputs[y], ranges[x], ranges[y], opts.bins))
                .collect::<Vec<_>>()
        })
        .collect();

    Ok(SignSplit {
        output,
        positive,
        negative,
        warning,
        quantiles,
        densities,
    })
}
