//! Forward stepwise selection of active inputs and mean-function terms.
//!
//! Columns are orthogonalised against the current model by modified
//! Gram-Schmidt, so each candidate's reduction in residual sum of squares is
//! available without refitting. Terms enter while an extended BIC
//! (`n ln RSS/n + k ln n + 2 gamma ln C(P, k)`) keeps decreasing. The extra
//! combinatorial penalty keeps pure-noise responses from acquiring actives
//! when many inputs are screened at once.

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::basis::{second_order_terms, Term};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeanFitOptions {
    pub max_actives: usize,
    /// Cap on non-constant terms; `None` means `max(1, n / 10)`.
    pub max_terms: Option<usize>,
    /// Weight of the combinatorial penalty (0 gives plain BIC).
    pub ebic_gamma: f64,
    pub second_order: bool,
    /// Stop once `RSS <= perfect_fit * TSS`.
    pub perfect_fit: f64,
}

impl Default for MeanFitOptions {
    fn default() -> Self {
        Self {
            max_actives: 12,
            max_terms: None,
            ebic_gamma: 1.0,
            second_order: true,
            perfect_fit: 1e-12,
        }
    }
}

/// Result of the mean-function fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanFit {
    pub active_set: Vec<usize>,
    pub basis: Vec<Term>,
    pub coefficients: Vec<f64>,
    /// Unbiased residual variance `RSS / (n - p)`.
    pub residual_variance: f64,
    pub residuals: Vec<f64>,
    /// Candidates skipped as collinear with the current model.
    pub dropped: Vec<Term>,
}

impl MeanFit {
    /// First-order coefficient of each active input, in active-set order.
    pub fn linear_coefficients(&self) -> Vec<f64> {
        self.active_set
            .iter()
            .map(|&a| {
                self.basis
                    .iter()
                    .zip(&self.coefficients)
                    .find(|(t, _)| **t == Term::Linear { i: a })
                    .map_or(0.0, |(_, c)| *c)
            })
            .collect()
    }
}

struct Orth {
    q: Vec<DVector<f64>>,
    resid: DVector<f64>,
}

impl Orth {
    fn project_out(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut w = v.clone();
        for q in &self.q {
            let c = q.dot(&w);
            w.axpy(-c, q, 1.0);
        }
        w
    }

    /// Orthogonal component and the RSS drop it would give.
    fn gain(&self, v: &DVector<f64>) -> Option<(DVector<f64>, f64)> {
        let w = self.project_out(v);
        let nv = v.norm_squared();
        let nw = w.norm_squared();
        if nv == 0.0 || nw <= 1e-10 * nv {
            return None;
        }
        let d = w.dot(&self.resid);
        Some((w, d * d / nw))
    }

    fn add(&mut self, w: DVector<f64>) {
        let q = &w / w.norm();
        let c = q.dot(&self.resid);
        self.resid.axpy(-c, &q, 1.0);
        self.q.push(q);
    }
}

fn column(term: &Term, x: &[Vec<f64>]) -> DVector<f64> {
    DVector::from_iterator(x.len(), x.iter().map(|r| term.eval(r)))
}

fn ln_ratio_choose(pool: usize, selected: usize) -> f64 {
    // ln( C(P, s+1) / C(P, s) ) = ln( (P - s) / (s + 1) )
    ((pool - selected) as f64 / (selected + 1) as f64).ln()
}

/// Selects active inputs and mean terms for one output.
pub fn fit_mean_and_actives(
    x: &[Vec<f64>],
    y: &[f64],
    candidates: &[usize],
    opts: &MeanFitOptions,
) -> Result<MeanFit> {
    let n = y.len();
    if n < 2 || x.len() != n {
        return Err(Error::Fit {
            output: "mean".into(),
            reason: format!("need at least 2 runs with matching inputs, got {} / {}", x.len(), n),
        });
    }
    let max_terms = opts.max_terms.unwrap_or((n / 10).max(1));
    let yv = DVector::from_column_slice(y);
    let ones = DVector::from_element(n, 1.0);
    let mut orth = Orth {
        q: Vec::new(),
        resid: yv.clone(),
    };
    orth.add(ones);
    let tss = orth.resid.norm_squared();
    let nf = n as f64;
    let mut basis = vec![Term::Constant];
    let mut actives: Vec<usize> = Vec::new();
    let mut dropped = Vec::new();

    let done = |orth: &Orth| orth.resid.norm_squared() <= opts.perfect_fit * tss || tss == 0.0;

    // Stage 1: first-order terms pick the active inputs.
    let mut pool: Vec<Term> = candidates.iter().map(|&i| Term::Linear { i }).collect();
    let pool_size = pool.len();
    let cols: Vec<DVector<f64>> = pool.iter().map(|t| column(t, x)).collect();
    let mut cols = cols;
    while !done(&orth) && actives.len() < opts.max_actives && basis.len() - 1 < max_terms && !pool.is_empty() {
        let Some((k, w, gain)) = best_candidate(&orth, &pool, &cols, &mut dropped) else {
            break;
        };
        let rss = orth.resid.norm_squared();
        let new_rss = (rss - gain).max(0.0);
        if !accept(nf, rss, new_rss, tss, opts, pool_size, actives.len()) {
            break;
        }
        let t = pool.remove(k);
        cols.remove(k);
        orth.add(w);
        if let Term::Linear { i } = t {
            actives.push(i);
        }
        basis.push(t);
    }
    actives.sort_unstable();

    // Stage 2: squares and products among the actives.
    if opts.second_order && !actives.is_empty() {
        let mut pool = second_order_terms(&actives);
        let pool_size = pool.len();
        let mut cols: Vec<DVector<f64>> = pool.iter().map(|t| column(t, x)).collect();
        let mut chosen = 0;
        while !done(&orth) && basis.len() - 1 < max_terms && !pool.is_empty() {
            let Some((k, w, gain)) = best_candidate(&orth, &pool, &cols, &mut dropped) else {
                break;
            };
            let rss = orth.resid.norm_squared();
            let new_rss = (rss - gain).max(0.0);
            if !accept(nf, rss, new_rss, tss, opts, pool_size, chosen) {
                break;
            }
            basis.push(pool.remove(k));
            cols.remove(k);
            orth.add(w);
            chosen += 1;
        }
    }
    if !dropped.is_empty() {
        warn!("dropped {} collinear candidate term(s)", dropped.len());
    }

    let (coefficients, residuals) = least_squares(x, y, &basis)?;
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let p = basis.len();
    let residual_variance = if n > p { rss / (n - p) as f64 } else { rss / n as f64 };
    Ok(MeanFit {
        active_set: actives,
        basis,
        coefficients,
        residual_variance,
        residuals,
        dropped,
    })
}

fn best_candidate(
    orth: &Orth,
    pool: &[Term],
    cols: &[DVector<f64>],
    dropped: &mut Vec<Term>,
) -> Option<(usize, DVector<f64>, f64)> {
    let mut best: Option<(usize, DVector<f64>, f64)> = None;
    for (k, c) in cols.iter().enumerate() {
        match orth.gain(c) {
            Some((w, g)) => {
                if best.as_ref().is_none_or(|b| g > b.2) {
                    best = Some((k, w, g));
                }
            }
            None => {
                if !dropped.contains(&pool[k]) {
                    dropped.push(pool[k]);
                }
            }
        }
    }
    best
}

fn accept(n: f64, rss: f64, new_rss: f64, tss: f64, opts: &MeanFitOptions, pool: usize, selected: usize) -> bool {
    if new_rss <= opts.perfect_fit * tss {
        return true;
    }
    let delta = n * (new_rss / rss).ln() + n.ln() + 2.0 * opts.ebic_gamma * ln_ratio_choose(pool, selected);
    delta < 0.0
}

/// Ordinary least squares by SVD; returns coefficients and residuals.
pub fn least_squares(x: &[Vec<f64>], y: &[f64], basis: &[Term]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = y.len();
    let g = DMatrix::from_fn(n, basis.len(), |r, c| basis[c].eval(&x[r]));
    let yv = DVector::from_column_slice(y);
    let svd = g.clone().svd(true, true);
    let beta = svd.solve(&yv, 1e-12).map_err(|e| Error::Fit {
        output: "mean".into(),
        reason: e.to_string(),
    })?;
    let resid = &yv - &g * &beta;
    Ok((beta.as_slice().to_vec(), resid.as_slice().to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform_design(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
    }

    #[test]
    fn exact_linear_recovery() {
        let x = uniform_design(60, 4, 1);
        let y: Vec<f64> = x.iter().map(|r| 2.0 + 3.0 * r[1]).collect();
        let fit = fit_mean_and_actives(&x, &y, &[0, 1, 2, 3], &MeanFitOptions::default()).unwrap();
        assert_eq!(fit.active_set, vec![1]);
        assert_eq!(fit.basis, vec![Term::Constant, Term::Linear { i: 1 }]);
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 3.0).abs() < 1e-12);
        assert!(fit.residual_variance < 1e-24);
    }

    #[test]
    fn quadratic_structure_found() {
        let x = uniform_design(300, 5, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y: Vec<f64> = x
            .iter()
            .map(|r| 1.0 + r[0] - 2.0 * r[3] + 1.5 * r[0] * r[3] + 0.01 * rng.random_range(-1.0..1.0))
            .collect();
        let fit = fit_mean_and_actives(&x, &y, &[0, 1, 2, 3, 4], &MeanFitOptions::default()).unwrap();
        assert_eq!(fit.active_set, vec![0, 3]);
        assert!(fit.basis.contains(&Term::Product { i: 0, j: 3 }));
        assert!(fit.residual_variance < 1e-3);
        let lc = fit.linear_coefficients();
        assert!((lc[0] - 1.0).abs() < 0.01 && (lc[1] + 2.0).abs() < 0.01);
    }

    #[test]
    fn collinear_candidates_are_dropped() {
        let mut x = uniform_design(50, 2, 4);
        for r in &mut x {
            r.push(r[0]);
        }
        let y: Vec<f64> = x.iter().map(|r| r[0] + 0.5 * r[1]).collect();
        let fit = fit_mean_and_actives(&x, &y, &[0, 1, 2], &MeanFitOptions::default()).unwrap();
        assert_eq!(fit.active_set.len(), 2);
        assert!(fit.residual_variance < 1e-20);
    }

    #[test]
    fn constant_output_has_empty_actives() {
        let x = uniform_design(20, 3, 5);
        let fit = fit_mean_and_actives(&x, &[4.0; 20], &[0, 1, 2], &MeanFitOptions::default()).unwrap();
        assert!(fit.active_set.is_empty());
        assert!((fit.coefficients[0] - 4.0).abs() < 1e-12);
    }
}
