//! Variance resolution and correlation summaries of samples.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use super::samples::SampleSet;
use crate::error::{Error, Result};

pub(crate) fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, var)
}

/// Sample covariance of the selected coordinates.
pub fn sample_covariance(s: &SampleSet, inputs: &[usize]) -> DMatrix<f64> {
    let n = s.len();
    let k = inputs.len();
    let means: Vec<f64> = inputs.iter().map(|&i| s.points.iter().map(|p| p[i]).sum::<f64>() / n as f64).collect();
    let mut c = DMatrix::zeros(k, k);
    for p in &s.points {
        for a in 0..k {
            let da = p[inputs[a]] - means[a];
            for b in 0..=a {
                c[(a, b)] += da * (p[inputs[b]] - means[b]);
            }
        }
    }
    for a in 0..k {
        for b in 0..=a {
            c[(a, b)] /= (n - 1) as f64;
            c[(b, a)] = c[(a, b)];
        }
    }
    c
}

/// `1 - det Var_v / det Var_u` over the selected inputs.
pub fn variance_resolution(u: &SampleSet, v: &SampleSet, inputs: &[usize]) -> Result<f64> {
    if u.len() < 2 || v.len() < 2 {
        return Err(Error::Degenerate("variance resolution needs at least two points per sample".into()));
    }
    if inputs.is_empty() {
        return Err(Error::Config("no inputs selected".into()));
    }
    let cu = sample_covariance(u, inputs);
    let cv = sample_covariance(v, inputs);
    let eig = SymmetricEigen::new(cu.clone());
    let top = eig.eigenvalues.amax();
    let tiny: Vec<usize> = (0..inputs.len())
        .filter(|&k| eig.eigenvalues[k] <= 1e-12 * top.max(f64::MIN_POSITIVE))
        .collect();
    if top <= 0.0 || !tiny.is_empty() {
        let names: Vec<String> = tiny
            .iter()
            .map(|&k| {
                let col = eig.eigenvectors.column(k);
                let j = col.iamax();
                format!("direction dominated by input {}", inputs[j])
            })
            .collect();
        return Err(Error::Degenerate(format!(
            "reference covariance is singular ({})",
            if names.is_empty() { "all inputs constant".into() } else { names.join(", ") }
        )));
    }
    Ok(1.0 - cv.determinant() / cu.determinant())
}

/// Per-input resolution of `v` against `u` for every input.
pub fn single_input_resolutions(u: &SampleSet, v: &SampleSet) -> Result<Vec<f64>> {
    (0..u.dims()).map(|i| variance_resolution(u, v, &[i])).collect()
}

/// Pairwise resolution matrix; the diagonal holds single-input values.
pub fn pairwise_resolutions(u: &SampleSet, v: &SampleSet) -> Result<Vec<Vec<f64>>> {
    let d = u.dims();
    let rows: Vec<Result<Vec<f64>>> = (0..d)
        .into_par_iter()
        .map(|a| {
            (0..d)
                .map(|b| if a == b { variance_resolution(u, v, &[a]) } else { variance_resolution(u, v, &[a, b]) })
                .collect()
        })
        .collect();
    rows.into_iter().collect()
}

/// Squared sample correlations between inputs; zero on the diagonal and
/// `None` where an input has no spread.
pub fn joint_constraint_matrix(s: &SampleSet) -> Result<Vec<Vec<Option<f64>>>> {
    if s.len() < 3 {
        return Err(Error::Degenerate("joint constraint matrix needs at least three points".into()));
    }
    let d = s.dims();
    let all: Vec<usize> = (0..d).collect();
    let c = sample_covariance(s, &all);
    Ok((0..d)
        .map(|a| {
            (0..d)
                .map(|b| {
                    if c[(a, a)] <= 0.0 || c[(b, b)] <= 0.0 {
                        None
                    } else if a == b {
                        Some(0.0)
                    } else {
                        Some((c[(a, b)] * c[(a, b)] / (c[(a, a)] * c[(b, b)])).min(1.0))
                    }
                })
                .collect()
        })
        .collect())
}
