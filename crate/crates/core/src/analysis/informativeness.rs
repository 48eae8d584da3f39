//! Which outputs constrain which inputs, and how often runs pass.

use serde::{Deserialize, Serialize};

use super::samples::SampleSet;
use super::stats::mean_var;
use crate::error::{Error, Result};
use crate::matching::{implausibility, ObservationTarget};
use crate::simulator::RunRecord;

/// Runs below this count make an informativeness entry low-confidence.
pub const MIN_PASSING: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Informativeness {
    pub outputs: Vec<String>,
    /// `values[i][j]`: share of input `i`'s variance removed by keeping only
    /// the runs that meet output `j`'s target.
    pub values: Vec<Vec<f64>>,
    pub passing: Vec<usize>,
    pub low_confidence: Vec<bool>,
}

fn passes(y: f64, t: &ObservationTarget, cutoff: f64) -> bool {
    implausibility(y, 0.0, t).is_ok_and(|i| i <= cutoff)
}

/// `1 - Var(x_i | runs passing output j) / Var(x_i | all runs)`.
///
/// `targets` pairs each target with its column in the sample's outputs.
pub fn input_output_informativeness(
    wave1: &SampleSet,
    targets: &[(usize, &ObservationTarget)],
    cutoff: f64,
) -> Result<Informativeness> {
    let outputs = wave1
        .outputs
        .as_ref()
        .ok_or_else(|| Error::Config(format!("sample {} has no outputs", wave1.label)))?;
    if wave1.len() < 2 {
        return Err(Error::Degenerate("informativeness needs at least two runs".into()));
    }
    let d = wave1.dims();
    let base: Vec<f64> = (0..d).map(|i| mean_var(&wave1.input(i)).1).collect();
    let mut values = vec![vec![f64::NAN; targets.len()]; d];
    let mut passing = Vec::with_capacity(targets.len());
    for (j, (c, t)) in targets.iter().enumerate() {
        let keep: Vec<usize> = (0..wave1.len()).filter(|&r| passes(outputs[r][*c], t, cutoff)).collect();
        passing.push(keep.len());
        if keep.len() < 2 {
            continue;
        }
        for (i, row) in values.iter_mut().enumerate() {
            let sub: Vec<f64> = keep.iter().map(|&r| wave1.points[r][i]).collect();
            row[j] = if base[i] > 0.0 { 1.0 - mean_var(&sub).1 / base[i] } else { f64::NAN };
        }
    }
    Ok(Informativeness {
        outputs: targets.iter().map(|(_, t)| t.output.clone()).collect(),
        low_confidence: passing.iter().map(|&p| p < MIN_PASSING).collect(),
        values,
        passing,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassProportions {
    pub waves: Vec<usize>,
    pub outputs: Vec<String>,
    /// `values[w][j]`; NaN for a wave without converged runs.
    pub values: Vec<Vec<f64>>,
    pub converged: Vec<usize>,
}

/// Share of each wave's converged runs whose true implausibility for each
/// output is within `cutoff`.
pub fn pass_proportions(
    runs_by_wave: &[(usize, Vec<RunRecord>)],
    targets: &[(usize, &ObservationTarget)],
    cutoff: f64,
) -> Result<PassProportions> {
    if runs_by_wave.is_empty() {
        return Err(Error::Config("no wave archives given".into()));
    }
    let mut values = Vec::with_capacity(runs_by_wave.len());
    let mut converged = Vec::with_capacity(runs_by_wave.len());
    for (_, runs) in runs_by_wave {
        let ys: Vec<&Vec<f64>> = runs.iter().filter_map(|r| r.y.as_ref()).collect();
        converged.push(ys.len());
        values.push(
            targets
                .iter()
                .map(|(c, t)| {
                    if ys.is_empty() {
                        f64::NAN
                    } else {
                        ys.iter().filter(|y| passes(y[*c], t, cutoff)).count() as f64 / ys.len() as f64
                    }
                })
                .collect(),
        );
    }
    Ok(PassProportions {
        waves: runs_by_wave.iter().map(|(w, _)| *w).collect(),
        outputs: targets.iter().map(|(_, t)| t.output.clone()).collect(),
        values,
        converged,
    })
}
