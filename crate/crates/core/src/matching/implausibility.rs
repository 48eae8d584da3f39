//! Implausibility measures and cutoff rules.

use serde::{Deserialize, Serialize};

use super::targets::ObservationTarget;
use crate::error::{Error, Result};

/// `|mean - z| / sqrt(variance + sigma_md^2 + sigma_me^2)`.
///
/// With `variance = 0` this is the implausibility of an actual simulator run.
pub fn implausibility(mean: f64, variance: f64, target: &ObservationTarget) -> Result<f64> {
    if !(variance >= 0.0) {
        return Err(Error::Domain(format!("emulator variance must be non-negative, got {variance}")));
    }
    let total = variance + target.observation_variance();
    if total <= 0.0 {
        return Err(Error::Domain(format!("implausibility for {} undefined: all variances zero", target.output)));
    }
    Ok((mean - target.z).abs() / total.sqrt())
}

/// Largest, second and third largest implausibilities over outputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinedImplausibility {
    pub i_m: f64,
    pub i_2m: Option<f64>,
    pub i_3m: Option<f64>,
}

pub fn combined_implausibility(values: &[f64]) -> Result<CombinedImplausibility> {
    if values.is_empty() {
        return Err(Error::Domain("combined implausibility needs at least one value".into()));
    }
    let mut top = [f64::NEG_INFINITY; 3];
    for &v in values {
        if v > top[0] || v.is_nan() {
            top = [v, top[0], top[1]];
        } else if v > top[1] {
            top = [top[0], v, top[1]];
        } else if v > top[2] {
            top[2] = v;
        }
    }
    Ok(CombinedImplausibility {
        i_m: top[0],
        i_2m: (values.len() >= 2).then_some(top[1]),
        i_3m: (values.len() >= 3).then_some(top[2]),
    })
}

/// Cutoffs on `I_M`, `I_2M` and `I_3M`; any subset may be active.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoffs {
    #[serde(default)]
    pub i_m: Option<f64>,
    #[serde(default)]
    pub i_2m: Option<f64>,
    #[serde(default)]
    pub i_3m: Option<f64>,
}

impl Default for Cutoffs {
    fn default() -> Self {
        Self {
            i_m: Some(3.0),
            i_2m: None,
            i_3m: None,
        }
    }
}

impl Cutoffs {
    pub fn new(i_m: Option<f64>, i_2m: Option<f64>, i_3m: Option<f64>) -> Result<Self> {
        let c = Self { i_m, i_2m, i_3m };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let active = [self.i_m, self.i_2m, self.i_3m];
        if active.iter().all(Option::is_none) {
            return Err(Error::Config("at least one implausibility cutoff must be active".into()));
        }
        if active.iter().flatten().any(|c| !(*c > 0.0)) {
            return Err(Error::Config("implausibility cutoffs must be positive".into()));
        }
        Ok(())
    }

    /// Whether a point survives. An order statistic that does not exist
    /// (fewer outputs than its rank) cannot fail.
    pub fn passes(&self, c: &CombinedImplausibility) -> bool {
        let ok = |cut: Option<f64>, v: Option<f64>| match (cut, v) {
            (Some(cut), Some(v)) => v <= cut,
            _ => true,
        };
        ok(self.i_m, Some(c.i_m)) && ok(self.i_2m, c.i_2m) && ok(self.i_3m, c.i_3m)
    }

    /// Convenience: combine and test raw values.
    pub fn passes_values(&self, values: &[f64]) -> bool {
        combined_implausibility(values).is_ok_and(|c| self.passes(&c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Dataset;

    #[test]
    fn order_statistics() {
        let c = combined_implausibility(&[1.0, 5.0, 2.0]).unwrap();
        assert_eq!((c.i_m, c.i_2m, c.i_3m), (5.0, Some(2.0), Some(1.0)));
        let c = combined_implausibility(&[4.0]).unwrap();
        assert_eq!((c.i_m, c.i_2m, c.i_3m), (4.0, None, None));
        assert!(combined_implausibility(&[]).is_err());
        let c = combined_implausibility(&[3.0, 3.0, 1.0, 3.0]).unwrap();
        assert_eq!((c.i_m, c.i_2m, c.i_3m), (3.0, Some(3.0), Some(3.0)));
    }

    #[test]
    fn second_and_third_cutoffs_ignore_the_maximum() {
        let cut = Cutoffs::new(None, Some(3.0), Some(2.9)).unwrap();
        assert!(cut.passes_values(&[100.0, 2.9, 2.8]));
        assert!(!cut.passes_values(&[100.0, 3.1, 2.8]));
        assert!(!cut.passes_values(&[100.0, 2.95, 2.95]));
    }

    #[test]
    fn at_least_one_cutoff() {
        assert!(Cutoffs::new(None, None, None).is_err());
        assert!(Cutoffs::new(Some(0.0), None, None).is_err());
    }

    #[test]
    fn three_sigma_is_exactly_three() {
        let t = ObservationTarget::new("y", 1.0, 0.3, 0.4, Dataset::B).unwrap();
        assert_eq!(implausibility(1.0, 0.0, &t).unwrap(), 0.0);
        let v = 0.75;
        let m = 1.0 + 3.0 * (v + 0.25f64).sqrt();
        assert!((implausibility(m, v, &t).unwrap() - 3.0).abs() < 1e-14);
        assert!(implausibility(0.0, -1.0, &t).is_err());
    }
}
