//! Correlation-length assignment for the residual process.

use log::warn;
use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How correlation lengths are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CorrelationMode {
    /// One value for every active input.
    Fixed { theta: f64 },
    /// Actives grouped by first-order effect size; one length per group by
    /// profile likelihood over a grid.
    Grouped { max_groups: usize },
}

impl Default for CorrelationMode {
    fn default() -> Self {
        CorrelationMode::Fixed { theta: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorrelationOptions {
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_points: usize,
    /// Nugget share of the residual variance assumed in the likelihood.
    pub nugget_fraction: f64,
    /// Runs used in the likelihood (evenly spaced subsample beyond this).
    pub max_points: usize,
    pub max_sweeps: usize,
}

impl Default for CorrelationOptions {
    fn default() -> Self {
        Self {
            grid_min: 0.2,
            grid_max: 20.0,
            grid_points: 15,
            nugget_fraction: 0.05,
            max_points: 400,
            max_sweeps: 4,
        }
    }
}

impl CorrelationOptions {
    /// Logarithmically spaced grid of candidate lengths.
    pub fn grid(&self) -> Vec<f64> {
        let (a, b) = (self.grid_min.ln(), self.grid_max.ln());
        let m = self.grid_points.max(2);
        (0..m).map(|k| (a + (b - a) * k as f64 / (m - 1) as f64).exp()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationFit {
    /// One length per active input, in active-set order.
    pub theta: Vec<f64>,
    /// Group label of each active input.
    pub groups: Vec<usize>,
    pub at_boundary: bool,
    pub log_likelihood: Option<f64>,
}

/// Assigns correlation lengths for the active inputs of one output.
///
/// `linear_coefs` gives the first-order coefficient of each active and is
/// used only to form groups; `residuals` are the detrended training values.
pub fn fit_correlation_lengths(
    x: &[Vec<f64>],
    residuals: &[f64],
    actives: &[usize],
    linear_coefs: &[f64],
    mode: CorrelationMode,
    opts: &CorrelationOptions,
) -> Result<CorrelationFit> {
    match mode {
        CorrelationMode::Fixed { theta } => {
            if !(theta > 0.0) {
                return Err(Error::Config(format!("correlation length must be positive, got {theta}")));
            }
            Ok(CorrelationFit {
                theta: vec![theta; actives.len()],
                groups: vec![0; actives.len()],
                at_boundary: false,
                log_likelihood: None,
            })
        }
        CorrelationMode::Grouped { max_groups } => grouped(x, residuals, actives, linear_coefs, max_groups, opts),
    }
}

/// Splits actives into at most `max_groups` groups of similar |coefficient|.
pub fn group_by_effect(linear_coefs: &[f64], max_groups: usize) -> Vec<usize> {
    let k = linear_coefs.len();
    if k == 0 {
        return Vec::new();
    }
    let g = max_groups.clamp(1, k);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| linear_coefs[b].abs().total_cmp(&linear_coefs[a].abs()).then(a.cmp(&b)));
    let mut groups = vec![0; k];
    for (rank, &idx) in order.iter().enumerate() {
        groups[idx] = rank * g / k;
    }
    groups
}

fn grouped(
    x: &[Vec<f64>],
    residuals: &[f64],
    actives: &[usize],
    linear_coefs: &[f64],
    max_groups: usize,
    opts: &CorrelationOptions,
) -> Result<CorrelationFit> {
    if actives.is_empty() {
        return Ok(CorrelationFit {
            theta: vec![],
            groups: vec![],
            at_boundary: false,
            log_likelihood: None,
        });
    }
    if linear_coefs.len() != actives.len() {
        return Err(Error::Config("one linear coefficient per active input required".into()));
    }
    let groups = group_by_effect(linear_coefs, max_groups);
    let n_groups = groups.iter().max().map_or(0, |g| g + 1);
    let grid = opts.grid();

    // Evenly spaced subsample, restricted to active coordinates.
    let n = residuals.len();
    let m = n.min(opts.max_points);
    let idx: Vec<usize> = (0..m).map(|k| k * n / m).collect();
    let xs: Vec<Vec<f64>> = idx.iter().map(|&i| actives.iter().map(|&a| x[i][a]).collect()).collect();
    let e = DVector::from_iterator(m, idx.iter().map(|&i| residuals[i]));

    let start = grid
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1.ln() - 2f64.ln()).abs().total_cmp(&(b.1.ln() - 2f64.ln()).abs()))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let mut choice = vec![start; n_groups];
    let theta_of = |choice: &[usize]| -> Vec<f64> { groups.iter().map(|&g| grid[choice[g]]).collect() };
    let mut best = profile_log_likelihood(&xs, &e, &theta_of(&choice), opts.nugget_fraction);
    for _ in 0..opts.max_sweeps {
        let mut changed = false;
        for g in 0..n_groups {
            for k in 0..grid.len() {
                if k == choice[g] {
                    continue;
                }
                let mut trial = choice.clone();
                trial[g] = k;
                let ll = profile_log_likelihood(&xs, &e, &theta_of(&trial), opts.nugget_fraction);
                if ll > best {
                    best = ll;
                    choice = trial;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let at_boundary = choice.iter().any(|&k| k == 0 || k == grid.len() - 1);
    if at_boundary {
        warn!("correlation-length likelihood maximised on the grid boundary");
    }
    Ok(CorrelationFit {
        theta: theta_of(&choice),
        groups,
        at_boundary,
        log_likelihood: best.is_finite().then_some(best),
    })
}

/// Profile log-likelihood of residuals under `sigma^2 [(1 - nu) R + nu I]`,
/// with `sigma^2` maximised out. `x` holds active coordinates only.
pub fn profile_log_likelihood(x: &[Vec<f64>], e: &DVector<f64>, theta: &[f64], nu: f64) -> f64 {
    let n = e.len();
    if n == 0 {
        return f64::NEG_INFINITY;
    }
    let mut k = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = 1.0;
        for j in 0..i {
            let s: f64 = x[i]
                .iter()
                .zip(&x[j])
                .zip(theta)
                .map(|((a, b), t)| {
                    let d = (a - b) / t;
                    d * d
                })
                .sum();
            let c = (1.0 - nu) * (-s).exp();
            k[(i, j)] = c;
            k[(j, i)] = c;
        }
    }
    let Some(chol) = Cholesky::new(k) else {
        return f64::NEG_INFINITY;
    };
    let mut w = e.clone();
    chol.l_dirty().solve_lower_triangular_mut(&mut w);
    let s2 = w.norm_squared() / n as f64;
    if s2 <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let logdet: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
    -0.5 * (n as f64) * s2.ln() - 0.5 * logdet
}
