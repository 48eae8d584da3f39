//! Output table and assembly of log-ratio outputs from steady states.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::network::{ChemicalState, Species, N_SPECIES};
use super::params::ParameterTable;
use super::rates::{to_rate_constants, ExperimentSpec};
use super::steady::{solve_with_rates, SolverConfig};
use crate::error::{Error, Result};

const CROSSTALK_TARGETS: &str = include_str!("../../config/crosstalk_targets.toml");

/// Experimental data subset an output belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dataset {
    A,
    B,
    C,
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dataset::A => "A",
            Dataset::B => "B",
            Dataset::C => "C",
        };
        f.write_str(s)
    }
}

/// Measured quantity of an output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chemical {
    Auxin,
    #[serde(rename = "CK")]
    Ck,
    #[serde(rename = "ET")]
    Et,
    #[serde(rename = "PLSm")]
    PlsM,
    /// Volume-weighted mix of membrane and internal PIN1.
    #[serde(rename = "PIN")]
    Pin,
}

impl Chemical {
    pub fn value(self, state: &ChemicalState, lambda: f64) -> f64 {
        match self {
            Chemical::Auxin => state.get(Species::Auxin),
            Chemical::Ck => state.get(Species::Ck),
            Chemical::Et => state.get(Species::Et),
            Chemical::PlsM => state.get(Species::PlsM),
            Chemical::Pin => state.mixed_pin(lambda),
        }
    }
}

/// Direction-only data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Up,
    Down,
    Flat,
}

/// One row of the output table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub name: String,
    pub dataset: Dataset,
    pub chemical: Chemical,
    pub numerator: ExperimentSpec,
    /// Reference configuration; `None` means an absolute (non-ratio) output.
    #[serde(default)]
    pub denominator: Option<ExperimentSpec>,
    pub log_min: f64,
    pub log_max: f64,
    #[serde(default)]
    pub min: Option<f64>,
    #[serde(default)]
    pub max: Option<f64>,
    #[serde(default)]
    pub trend: Option<Trend>,
}

/// Ordered table of model outputs with their target windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputTable {
    #[serde(default = "default_version")]
    pub version: u32,
    #[serde(rename = "output")]
    pub outputs: Vec<OutputSpec>,
}

fn default_version() -> u32 {
    1
}

impl OutputTable {
    /// The 32 outputs of the crosstalk model.
    pub fn crosstalk() -> Self {
        Self::from_toml(CROSSTALK_TARGETS).expect("bundled output table is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let t: OutputTable = toml::from_str(text)?;
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.outputs.is_empty() {
            return Err(Error::Config("output table is empty".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for o in &self.outputs {
            if !seen.insert(o.name.as_str()) {
                return Err(Error::Config(format!("duplicate output {}", o.name)));
            }
            if !(o.log_max > o.log_min) || !o.log_min.is_finite() || !o.log_max.is_finite() {
                return Err(Error::Config(format!("output {} has an empty window", o.name)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.outputs.iter().map(|o| o.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.outputs.iter().position(|o| o.name == name)
    }

    /// Distinct experiments needed, in order of first use.
    pub fn configurations(&self) -> Vec<ExperimentSpec> {
        let mut v: Vec<ExperimentSpec> = Vec::new();
        for o in &self.outputs {
            for e in std::iter::once(o.numerator).chain(o.denominator) {
                if !v.contains(&e) {
                    v.push(e);
                }
            }
        }
        v
    }
}

/// Log-scale outputs of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputVector {
    pub values: Vec<f64>,
}

/// Steady states of every configuration at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct RunStates {
    pub states: Vec<(ExperimentSpec, ChemicalState)>,
    pub lambda: f64,
}

impl RunStates {
    pub fn get(&self, e: ExperimentSpec) -> Option<&ChemicalState> {
        self.states.iter().find(|(c, _)| *c == e).map(|(_, s)| s)
    }
}

/// The crosstalk simulator: parameter table, output table and solver settings.
#[derive(Debug, Clone)]
pub struct CrosstalkModel {
    pub parameters: ParameterTable,
    pub outputs: OutputTable,
    pub solver: SolverConfig,
}

impl Default for CrosstalkModel {
    fn default() -> Self {
        Self {
            parameters: ParameterTable::crosstalk(),
            outputs: OutputTable::crosstalk(),
            solver: SolverConfig::default(),
        }
    }
}

impl CrosstalkModel {
    pub fn new(parameters: ParameterTable, outputs: OutputTable, solver: SolverConfig) -> Self {
        Self {
            parameters,
            outputs,
            solver,
        }
    }

    /// Solves every configuration used by the output table.
    pub fn steady_states(&self, coords: &[f64]) -> Result<RunStates> {
        self.parameters.check_point(coords)?;
        let mut states = Vec::new();
        let mut lambda = super::rates::DEFAULT_LAMBDA;
        for e in self.outputs.configurations() {
            let r = to_rate_constants(&self.parameters, coords, e)?;
            lambda = r.lambda;
            let ss = solve_with_rates(&r, e, &self.solver)?;
            states.push((e, ss.state));
        }
        Ok(RunStates { states, lambda })
    }

    /// Log outputs from precomputed steady states.
    pub fn outputs_from_states(&self, run: &RunStates) -> Result<OutputVector> {
        let mut values = Vec::with_capacity(self.outputs.len());
        for o in &self.outputs.outputs {
            let num = run
                .get(o.numerator)
                .ok_or_else(|| Error::Config(format!("missing steady state {}", o.numerator)))?;
            let mut v = o.chemical.value(num, run.lambda);
            if let Some(d) = o.denominator {
                let den = run
                    .get(d)
                    .ok_or_else(|| Error::Config(format!("missing steady state {d}")))?;
                v /= o.chemical.value(den, run.lambda);
            }
            let lv = v.ln();
            if !lv.is_finite() {
                return Err(Error::NonConverged {
                    context: o.name.clone(),
                    reason: format!("output ratio {v} has no finite logarithm"),
                });
            }
            values.push(lv);
        }
        Ok(OutputVector { values })
    }

    pub fn compute_outputs(&self, coords: &[f64]) -> Result<OutputVector> {
        let run = self.steady_states(coords)?;
        self.outputs_from_states(&run)
    }
}

/// Writes output rows (`run, x..., converged, outputs...`) as CSV.
pub fn write_outputs_csv<W: Write>(
    w: W,
    input_names: &[String],
    output_names: &[String],
    rows: &[(Vec<f64>, Option<OutputVector>)],
) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["run".to_string()];
    header.extend(input_names.iter().cloned());
    header.push("converged".into());
    header.extend(output_names.iter().cloned());
    wr.write_record(&header)?;
    for (i, (x, y)) in rows.iter().enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(x.iter().map(|v| format!("{v:.17e}")));
        match y {
            Some(y) => {
                rec.push("1".into());
                rec.extend(y.values.iter().map(|v| format!("{v:.17e}")));
            }
            None => {
                rec.push("0".into());
                rec.extend(output_names.iter().map(|_| "NaN".to_string()));
            }
        }
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

/// Writes steady states (`config, species...`) as CSV.
pub fn write_states_csv<W: Write>(w: W, run: &RunStates) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["configuration".to_string()];
    header.extend(Species::ALL.iter().map(|s| s.name().to_string()));
    wr.write_record(&header)?;
    for (e, s) in &run.states {
        let mut rec = vec![e.to_string()];
        rec.extend((0..N_SPECIES).map(|i| format!("{:.17e}", s.0[i])));
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rates::{Feeding, Mutant};

    #[test]
    fn bundled_table_shape() {
        let t = OutputTable::crosstalk();
        assert_eq!(t.len(), 32);
        let count = |d| t.outputs.iter().filter(|o| o.dataset == d).count();
        assert_eq!((count(Dataset::A), count(Dataset::B), count(Dataset::C)), (22, 5, 5));
        let absolute: Vec<_> = t.outputs.iter().filter(|o| o.denominator.is_none()).map(|o| o.name.as_str()).collect();
        assert_eq!(absolute, ["wt_Auxin", "wt_CK"]);
        assert_eq!(t.configurations().len(), 11);
    }

    #[test]
    fn pls_feeding_ratio_uses_pls_reference() {
        let t = OutputTable::crosstalk();
        let o = &t.outputs[t.index_of("pls_f_e_Auxin/pls_Auxin").unwrap()];
        assert_eq!(o.denominator, Some(ExperimentSpec::new(Mutant::Pls, Feeding::NONE)));
        for other in t.outputs.iter().filter(|x| x.name != o.name) {
            if let Some(d) = other.denominator {
                assert_eq!(d, ExperimentSpec::WILD_TYPE, "{}", other.name);
            }
        }
    }

    #[test]
    fn identical_states_give_zero_ratio_and_log_of_absolute() {
        let model = CrosstalkModel::default();
        let mut s = ChemicalState(crate::model::StateVector::repeat(0.1));
        s.0[Species::Auxin.index()] = 1.0;
        let states = model.outputs.configurations().into_iter().map(|e| (e, s)).collect();
        let out = model
            .outputs_from_states(&RunStates { states, lambda: 6.0 })
            .unwrap();
        let i = model.outputs.index_of("pls_Auxin").unwrap();
        assert_eq!(out.values[i], 0.0);
        assert_eq!(out.values[model.outputs.index_of("wt_Auxin").unwrap()], 0.0);
        assert!((out.values[model.outputs.index_of("wt_CK").unwrap()] - 0.1f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn midpoint_outputs_are_finite_and_deterministic() {
        let model = CrosstalkModel::default();
        let a = model.compute_outputs(&[0.0; 31]).unwrap();
        let b = model.compute_outputs(&[0.0; 31]).unwrap();
        assert_eq!(a.values.len(), 32);
        assert!(a.values.iter().all(|v| v.is_finite()));
        assert_eq!(a, b);
    }

    #[test]
    fn csv_has_fixed_columns() {
        let model = CrosstalkModel::default();
        let out = model.compute_outputs(&[0.0; 31]).unwrap();
        let mut buf = Vec::new();
        write_outputs_csv(
            &mut buf,
            &model.parameters.names(),
            &model.outputs.names(),
            &[(vec![0.0; 31], Some(out)), (vec![0.1; 31], None)],
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0].split(',').count(), 1 + 31 + 1 + 32);
        assert!(lines[2].contains(",0,NaN"));
    }
}
