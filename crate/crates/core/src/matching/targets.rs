//! Observations with their discrepancy and measurement uncertainties.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, OutputSpec, OutputTable};

/// An observed value `z` for one simulator output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationTarget {
    pub output: String,
    pub z: f64,
    pub sigma_md: f64,
    pub sigma_me: f64,
    pub dataset: Dataset,
    /// Declared `z +/- 3 sigma` window, when the target came from one.
    #[serde(default)]
    pub window: Option<(f64, f64)>,
}

impl ObservationTarget {
    pub fn new(output: impl Into<String>, z: f64, sigma_md: f64, sigma_me: f64, dataset: Dataset) -> Result<Self> {
        let t = Self {
            output: output.into(),
            z,
            sigma_md,
            sigma_me,
            dataset,
            window: None,
        };
        t.validate()?;
        Ok(t)
    }

    /// Target whose `+/- 3 sigma` interval is `[lo, hi]`, with the total
    /// variance split equally between discrepancy and measurement error.
    pub fn from_window(output: impl Into<String>, lo: f64, hi: f64, dataset: Dataset) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::Config(format!("window [{lo}, {hi}] is empty")));
        }
        let sigma = (hi - lo) / 6.0;
        let part = sigma / std::f64::consts::SQRT_2;
        let mut t = Self::new(output, 0.5 * (lo + hi), part, part, dataset)?;
        t.window = Some((lo, hi));
        Ok(t)
    }

    pub fn from_output_spec(spec: &OutputSpec) -> Result<Self> {
        Self::from_window(spec.name.clone(), spec.log_min, spec.log_max, spec.dataset)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.z.is_finite() {
            return Err(Error::Config(format!("target {}: z must be finite", self.output)));
        }
        if !(self.sigma_md >= 0.0 && self.sigma_me >= 0.0) {
            return Err(Error::Config(format!("target {}: standard deviations must be non-negative", self.output)));
        }
        if self.observation_variance() <= 0.0 {
            return Err(Error::Config(format!(
                "target {}: discrepancy and measurement sd cannot both be zero",
                self.output
            )));
        }
        if let Some((lo, hi)) = self.window {
            let s = self.total_sd();
            if (0.5 * (lo + hi) - self.z).abs() > 1e-3 || ((hi - lo) - 6.0 * s).abs() > 1e-3 {
                return Err(Error::Config(format!("target {}: window is not z +/- 3 sigma", self.output)));
            }
        }
        Ok(())
    }

    /// `sigma_md^2 + sigma_me^2`.
    pub fn observation_variance(&self) -> f64 {
        self.sigma_md * self.sigma_md + self.sigma_me * self.sigma_me
    }

    pub fn total_sd(&self) -> f64 {
        self.observation_variance().sqrt()
    }
}

/// One target per row of an output table.
pub fn targets_from_outputs(table: &OutputTable) -> Result<Vec<ObservationTarget>> {
    table.outputs.iter().map(ObservationTarget::from_output_spec).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_gives_midpoint_and_sixth() {
        let t = ObservationTarget::from_window("x", 0.182, 2.303, Dataset::A).unwrap();
        assert!((t.z - 1.2425).abs() < 1e-12);
        assert!((t.total_sd() - 0.3535).abs() < 1e-4);
        assert!((t.sigma_md - t.sigma_me).abs() < 1e-15);
    }

    #[test]
    fn zero_variance_is_rejected() {
        assert!(ObservationTarget::new("x", 0.0, 0.0, 0.0, Dataset::A).is_err());
        assert!(ObservationTarget::new("x", 0.0, -1.0, 1.0, Dataset::A).is_err());
    }

    #[test]
    fn crosstalk_targets_validate() {
        let ts = targets_from_outputs(&OutputTable::crosstalk()).unwrap();
        assert_eq!(ts.len(), 32);
        assert!(ts.iter().all(|t| t.validate().is_ok()));
    }
}
