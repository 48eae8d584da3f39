//! Validation of an emulator against held-out simulator runs.

use serde::{Deserialize, Serialize};

use super::emulator::{Emulator, TrainingSet};
use crate::matching::{implausibility, ObservationTarget};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagnosticOptions {
    /// `|U|` above this counts as a large standardised error.
    pub u_threshold: f64,
    pub max_fraction_large: f64,
    /// Implausibility cutoff for the consistency check.
    pub cutoff: f64,
    pub max_violation_fraction: f64,
}

impl Default for DiagnosticOptions {
    fn default() -> Self {
        Self {
            u_threshold: 3.0,
            max_fraction_large: 0.05,
            cutoff: 3.0,
            max_violation_fraction: 0.05,
        }
    }
}

/// Per-output diagnostic summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub output: String,
    pub n: usize,
    /// Standardised prediction errors `(f(x) - E_D[f(x)]) / sqrt(Var_D[f(x)])`.
    pub u: Vec<f64>,
    pub fraction_large: f64,
    /// Holdout indices acceptable by the true run but rejected by the emulator.
    pub consistency_violations: Vec<usize>,
    /// Holdout runs acceptable by the true run (denominator of the violation rate).
    pub true_acceptable: usize,
    pub violation_fraction: f64,
    pub passed: bool,
}

fn standardised(y: f64, mean: f64, var: f64) -> f64 {
    let d = y - mean;
    if var > 0.0 {
        d / var.sqrt()
    } else if d == 0.0 {
        0.0
    } else {
        d.signum() * f64::INFINITY
    }
}

/// Compares emulator predictions with held-out runs.
pub fn diagnose(
    emulator: &Emulator,
    holdout: &TrainingSet,
    target: Option<&ObservationTarget>,
    opts: &DiagnosticOptions,
) -> DiagnosticReport {
    let n = holdout.len();
    let mut u = Vec::with_capacity(n);
    let mut violations = Vec::new();
    let mut acceptable = 0;
    for (k, (x, &y)) in holdout.x.iter().zip(&holdout.y).enumerate() {
        let (m, v) = emulator.predict(x);
        u.push(standardised(y, m, v));
        if let Some(t) = target {
            let truth = implausibility(y, 0.0, t).unwrap_or(f64::INFINITY);
            if truth <= opts.cutoff {
                acceptable += 1;
                let emu = implausibility(m, v, t).unwrap_or(f64::INFINITY);
                if emu > opts.cutoff {
                    violations.push(k);
                }
            }
        }
    }
    let large = u.iter().filter(|v| v.abs() > opts.u_threshold).count();
    let fraction_large = if n == 0 { 0.0 } else { large as f64 / n as f64 };
    let violation_fraction = if acceptable == 0 {
        0.0
    } else {
        violations.len() as f64 / acceptable as f64
    };
    DiagnosticReport {
        output: emulator.output().to_string(),
        n,
        u,
        fraction_large,
        passed: fraction_large <= opts.max_fraction_large && violation_fraction <= opts.max_violation_fraction,
        consistency_violations: violations,
        true_acceptable: acceptable,
        violation_fraction,
    }
}
