//! The membership test contributed by one wave.

use serde::{Deserialize, Serialize};

use super::implausibility::{combined_implausibility, implausibility, Cutoffs};
use super::targets::ObservationTarget;
use crate::emulation::Emulator;
use crate::error::{Error, Result};

/// Emulators, their targets and the cutoffs fitted at one wave.
#[derive(Debug, Clone)]
pub struct WaveCut {
    pub wave: usize,
    pub emulators: Vec<Emulator>,
    pub targets: Vec<ObservationTarget>,
    pub cutoffs: Cutoffs,
}

/// Serializable description of a cut; emulators are stored separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutManifest {
    pub wave: usize,
    pub cutoffs: Cutoffs,
    pub targets: Vec<ObservationTarget>,
}

impl WaveCut {
    pub fn new(wave: usize, emulators: Vec<Emulator>, targets: Vec<ObservationTarget>, cutoffs: Cutoffs) -> Result<Self> {
        cutoffs.validate()?;
        if emulators.is_empty() || emulators.len() != targets.len() {
            return Err(Error::Config("a cut needs one target per emulator and at least one emulator".into()));
        }
        if let Some((e, t)) = emulators.iter().zip(&targets).find(|(e, t)| e.output() != t.output) {
            return Err(Error::Config(format!("emulator {} paired with target {}", e.output(), t.output)));
        }
        Ok(Self {
            wave,
            emulators,
            targets,
            cutoffs,
        })
    }

    pub fn manifest(&self) -> CutManifest {
        CutManifest {
            wave: self.wave,
            cutoffs: self.cutoffs,
            targets: self.targets.clone(),
        }
    }

    pub fn outputs(&self) -> Vec<String> {
        self.targets.iter().map(|t| t.output.clone()).collect()
    }

    /// Emulator-based implausibility of every output at `x`.
    pub fn implausibilities(&self, x: &[f64]) -> Vec<f64> {
        self.emulators
            .iter()
            .zip(&self.targets)
            .map(|(e, t)| {
                let (m, v) = e.predict(x);
                implausibility(m, v, t).unwrap_or(f64::INFINITY)
            })
            .collect()
    }

    /// Emulator variance over observation variance, per output.
    pub fn variance_ratios(&self, x: &[f64]) -> Vec<f64> {
        self.emulators
            .iter()
            .zip(&self.targets)
            .map(|(e, t)| e.predict(x).1 / t.observation_variance())
            .collect()
    }

    /// Whether `x` survives this wave's cutoffs.
    ///
    /// Adjusted variances never exceed prior variances and are never
    /// negative, so the mean alone brackets every implausibility. Order
    /// statistics are monotone, so the decision is often settled before any
    /// variance is computed.
    pub fn contains(&self, x: &[f64]) -> bool {
        let k = self.emulators.len();
        let mut lower = Vec::with_capacity(k);
        let mut upper = Vec::with_capacity(k);
        let mut means = Vec::with_capacity(k);
        for (e, t) in self.emulators.iter().zip(&self.targets) {
            let m = e.predict_mean(x);
            let d = (m - t.z).abs();
            let obs = t.observation_variance();
            lower.push(d / (e.prior_variance() + obs).sqrt());
            upper.push(d / obs.sqrt());
            means.push(m);
        }
        if !self.cutoffs.passes_values(&lower) {
            return false;
        }
        if self.cutoffs.passes_values(&upper) {
            return true;
        }
        let exact: Vec<f64> = self.implausibilities(x);
        combined_implausibility(&exact).is_ok_and(|c| self.cutoffs.passes(&c))
    }
}
