//! Polynomial regression terms over input coordinates.

use serde::{Deserialize, Serialize};

/// One regression function `g(x)` of the emulator mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "term", rename_all = "snake_case")]
pub enum Term {
    Constant,
    Linear { i: usize },
    Square { i: usize },
    Product { i: usize, j: usize },
}

impl Term {
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            Term::Constant => 1.0,
            Term::Linear { i } => x[i],
            Term::Square { i } => x[i] * x[i],
            Term::Product { i, j } => x[i] * x[j],
        }
    }

    /// Inputs the term depends on.
    pub fn inputs(&self) -> Vec<usize> {
        match *self {
            Term::Constant => vec![],
            Term::Linear { i } | Term::Square { i } => vec![i],
            Term::Product { i, j } => vec![i, j],
        }
    }

    pub fn label(&self, names: &[String]) -> String {
        let n = |i: usize| names.get(i).cloned().unwrap_or_else(|| format!("x{i}"));
        match *self {
            Term::Constant => "1".into(),
            Term::Linear { i } => n(i),
            Term::Square { i } => format!("{}^2", n(i)),
            Term::Product { i, j } => format!("{}*{}", n(i), n(j)),
        }
    }
}

/// Evaluates `sum_k beta_k g_k(x)`.
pub fn eval_mean(basis: &[Term], coefficients: &[f64], x: &[f64]) -> f64 {
    basis.iter().zip(coefficients).map(|(t, b)| b * t.eval(x)).sum()
}

/// Second-order terms (squares, then pairwise products) in the given inputs.
pub fn second_order_terms(actives: &[usize]) -> Vec<Term> {
    let mut v: Vec<Term> = actives.iter().map(|&i| Term::Square { i }).collect();
    for (a, &i) in actives.iter().enumerate() {
        for &j in &actives[a + 1..] {
            v.push(Term::Product { i: i.min(j), j: i.max(j) });
        }
    }
    v
}
