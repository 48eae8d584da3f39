//! Input parameter tables and the scaled-coordinate mapping.
//!
//! Every input lives on a log scale. A scaled coordinate `c` in `[-1, 1]`
//! maps affinely onto `[ln(min), ln(max)]`, so `c = 0` is the geometric
//! midpoint of the range.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const CROSSTALK_PARAMETERS: &str = include_str!("../../config/crosstalk_parameters.toml");

/// One row of a parameter table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpec {
    pub name: String,
    /// Reference value (the "initial value" column); informational.
    #[serde(default)]
    pub initial: Option<f64>,
    pub min: f64,
    pub max: f64,
}

impl ParameterSpec {
    fn log_bounds(&self) -> (f64, f64) {
        (self.min.ln(), self.max.ln())
    }

    /// Natural value for a scaled coordinate in `[-1, 1]`.
    pub fn to_natural(&self, coord: f64) -> f64 {
        let (lo, hi) = self.log_bounds();
        (lo + 0.5 * (coord + 1.0) * (hi - lo)).exp()
    }

    /// Scaled coordinate for a natural value (not clamped).
    pub fn to_scaled(&self, value: f64) -> f64 {
        let (lo, hi) = self.log_bounds();
        2.0 * (value.ln() - lo) / (hi - lo) - 1.0
    }
}

/// Ordered table of log-scaled input parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterTable {
    #[serde(default = "default_version")]
    pub version: u32,
    #[serde(rename = "parameter")]
    pub parameters: Vec<ParameterSpec>,
}

fn default_version() -> u32 {
    1
}

impl ParameterTable {
    /// The 31 rate-constant ratios of the crosstalk model.
    pub fn crosstalk() -> Self {
        Self::from_toml(CROSSTALK_PARAMETERS).expect("bundled parameter table is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let table: ParameterTable = toml::from_str(text)?;
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        if self.parameters.is_empty() {
            return Err(Error::Config("parameter table is empty".into()));
        }
        for p in &self.parameters {
            if !(p.min > 0.0 && p.max > p.min && p.max.is_finite()) {
                return Err(Error::Config(format!(
                    "parameter {} needs 0 < min < max, got [{}, {}]",
                    p.name, p.min, p.max
                )));
            }
            if let Some(v) = p.initial {
                if !(v >= p.min && v <= p.max) {
                    return Err(Error::Config(format!(
                        "parameter {} initial value {} outside [{}, {}]",
                        p.name, v, p.min, p.max
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.parameters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parameters.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.parameters.iter().map(|p| p.name.clone()).collect()
    }

    /// Checks that `coords` has the right length and lies in `[-1, 1]`.
    pub fn check_point(&self, coords: &[f64]) -> Result<()> {
        if coords.len() != self.len() {
            return Err(Error::Domain(format!(
                "expected {} coordinates, got {}",
                self.len(),
                coords.len()
            )));
        }
        for (c, p) in coords.iter().zip(&self.parameters) {
            if !(-1.0..=1.0).contains(c) {
                return Err(Error::Domain(format!(
                    "coordinate {} = {} outside [-1, 1]",
                    p.name, c
                )));
            }
        }
        Ok(())
    }

    /// Natural-scale values for a scaled point.
    pub fn to_natural(&self, coords: &[f64]) -> Result<Vec<f64>> {
        self.check_point(coords)?;
        Ok(coords
            .iter()
            .zip(&self.parameters)
            .map(|(&c, p)| p.to_natural(c))
            .collect())
    }

    /// Scaled point of the reference ("initial value") column.
    pub fn initial_point(&self) -> Option<Vec<f64>> {
        self.parameters
            .iter()
            .map(|p| p.initial.map(|v| p.to_scaled(v).clamp(-1.0, 1.0)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crosstalk_table_has_31_rows() {
        let t = ParameterTable::crosstalk();
        assert_eq!(t.len(), 31);
        assert_eq!(t.parameters[0].name, "k1");
        assert_eq!(t.parameters[30].name, "k11m");
    }

    #[test]
    fn midpoint_is_geometric_mean() {
        let t = ParameterTable::crosstalk();
        let nat = t.to_natural(&vec![0.0; 31]).unwrap();
        for (v, p) in nat.iter().zip(&t.parameters) {
            let geo = (p.min * p.max).sqrt();
            assert!((v - geo).abs() <= 1e-12 * geo, "{}", p.name);
        }
        assert!((nat[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn endpoints_map_to_range() {
        let t = ParameterTable::crosstalk();
        let lo = t.to_natural(&vec![-1.0; 31]).unwrap();
        let hi = t.to_natural(&vec![1.0; 31]).unwrap();
        for ((a, b), p) in lo.iter().zip(&hi).zip(&t.parameters) {
            assert!((a - p.min).abs() <= 1e-12 * p.min);
            assert!((b - p.max).abs() <= 1e-12 * p.max);
        }
    }

    #[test]
    fn out_of_range_coordinate_names_parameter() {
        let t = ParameterTable::crosstalk();
        let mut x = vec![0.0; 31];
        x[4] = 1.5;
        let err = t.to_natural(&x).unwrap_err().to_string();
        assert!(err.contains("k2c"), "{err}");
    }

    #[test]
    fn initial_point_roundtrips() {
        let t = ParameterTable::crosstalk();
        let p = t.initial_point().unwrap();
        let nat = t.to_natural(&p).unwrap();
        for (v, spec) in nat.iter().zip(&t.parameters) {
            let init = spec.initial.unwrap();
            assert!((v - init).abs() <= 1e-9 * init, "{}", spec.name);
        }
    }
}
