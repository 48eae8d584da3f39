//! Bayes linear emulation of individual simulator outputs.

pub mod basis;
pub mod correlation;
pub mod diagnostics;
pub mod emulator;
pub mod regression;

use serde::{Deserialize, Serialize};

pub use basis::Term;
pub use correlation::{fit_correlation_lengths, CorrelationFit, CorrelationMode, CorrelationOptions};
pub use diagnostics::{diagnose, DiagnosticOptions, DiagnosticReport};
pub use emulator::{bl_update, Emulator, EmulatorSpec, TrainingSet};
pub use regression::{fit_mean_and_actives, MeanFit, MeanFitOptions};

use crate::error::Result;

/// How an emulator is built from training runs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EmulatorStrategy {
    /// Regression only: residual treated as uncorrelated noise.
    #[default]
    Linear,
    /// Regression plus correlated residual with one shared length.
    FixedTheta { theta: f64 },
    /// Regression plus correlated residual with grouped, fitted lengths.
    GroupedTheta { max_groups: usize },
    /// Zero prior mean over every input with prescribed second-order beliefs.
    Prescribed { sigma_u2: f64, theta: f64, sigma_w2: f64 },
}

/// Fitting knobs shared by all strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub mean: MeanFitOptions,
    pub correlation: CorrelationOptions,
    /// Nugget share of the mean-fit residual variance.
    pub nugget_fraction: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            mean: MeanFitOptions::default(),
            correlation: CorrelationOptions::default(),
            nugget_fraction: 0.05,
        }
    }
}

/// Builds an emulator for one output.
pub fn build_emulator(
    output: &str,
    train: TrainingSet,
    candidates: &[usize],
    strategy: &EmulatorStrategy,
    opts: &FitOptions,
) -> Result<Emulator> {
    let spec = match *strategy {
        EmulatorStrategy::Prescribed { sigma_u2, theta, sigma_w2 } => EmulatorSpec {
            output: output.into(),
            active_set: candidates.to_vec(),
            basis: vec![],
            coefficients: vec![],
            sigma_u2,
            theta: vec![theta; candidates.len()],
            sigma_w2,
        },
        EmulatorStrategy::Linear => {
            let fit = fit_mean_and_actives(&train.x, &train.y, candidates, &opts.mean)?;
            EmulatorSpec {
                output: output.into(),
                theta: vec![2.0; fit.active_set.len()],
                active_set: fit.active_set,
                basis: fit.basis,
                coefficients: fit.coefficients,
                sigma_u2: 0.0,
                sigma_w2: fit.residual_variance,
            }
        }
        EmulatorStrategy::FixedTheta { theta } => {
            let fit = fit_mean_and_actives(&train.x, &train.y, candidates, &opts.mean)?;
            correlated_spec(output, &train, fit, CorrelationMode::Fixed { theta }, opts)?
        }
        EmulatorStrategy::GroupedTheta { max_groups } => {
            let fit = fit_mean_and_actives(&train.x, &train.y, candidates, &opts.mean)?;
            correlated_spec(output, &train, fit, CorrelationMode::Grouped { max_groups }, opts)?
        }
    };
    Emulator::fit(spec, train)
}

fn correlated_spec(
    output: &str,
    train: &TrainingSet,
    fit: MeanFit,
    mode: CorrelationMode,
    opts: &FitOptions,
) -> Result<EmulatorSpec> {
    let corr = fit_correlation_lengths(
        &train.x,
        &fit.residuals,
        &fit.active_set,
        &fit.linear_coefficients(),
        mode,
        &opts.correlation,
    )?;
    let sigma_w2 = opts.nugget_fraction * fit.residual_variance;
    Ok(EmulatorSpec {
        output: output.into(),
        active_set: fit.active_set,
        basis: fit.basis,
        coefficients: fit.coefficients,
        sigma_u2: fit.residual_variance - sigma_w2,
        theta: corr.theta,
        sigma_w2,
    })
}
