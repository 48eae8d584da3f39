//! Campaign manifests: which simulator, its tables, the targets and the
//! wave schedule, in one TOML file.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hmatch_core::matching::{targets_from_outputs, CampaignConfig, ObservationTarget};
use hmatch_core::model::{CrosstalkModel, OutputSpec, OutputTable, ParameterSpec, ParameterTable, SolverConfig};
use hmatch_core::simulator::{ExternalCommand, Simulator, Toy1d};
use hmatch_core::Error;
use serde::Deserialize;

/// File name under which a manifest is copied into every output directory.
pub const MANIFEST_COPY: &str = "manifest.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimulatorId {
    Crosstalk,
    Toy1d,
    ExternalCommand,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignManifest {
    pub simulator: SimulatorId,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Replaces the bundled crosstalk parameter table.
    #[serde(default)]
    pub parameter: Option<Vec<ParameterSpec>>,
    /// Replaces the bundled crosstalk output table.
    #[serde(default)]
    pub output: Option<Vec<OutputSpec>>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub external: Option<ExternalCommand>,
    /// Explicit targets; the crosstalk model defaults to its output windows.
    #[serde(default)]
    pub target: Vec<ObservationTarget>,
    #[serde(default)]
    pub campaign: CampaignConfig,
}

/// A manifest together with its verbatim text.
pub struct Loaded {
    pub manifest: CampaignManifest,
    pub text: String,
    pub simulator: Box<dyn Simulator>,
    pub targets: Vec<ObservationTarget>,
}

impl CampaignManifest {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1);
            let message = e.message().to_string();
            match line {
                Some(line) => Error::Parse { line, message }.into(),
                None => Error::Config(message).into(),
            }
        })
    }

    fn crosstalk(&self) -> Result<CrosstalkModel> {
        let parameters = match &self.parameter {
            Some(rows) => ParameterTable {
                version: 1,
                parameters: rows.clone(),
            },
            None => ParameterTable::crosstalk(),
        };
        parameters.validate()?;
        let outputs = match &self.output {
            Some(rows) => OutputTable {
                version: 1,
                outputs: rows.clone(),
            },
            None => OutputTable::crosstalk(),
        };
        outputs.validate()?;
        Ok(CrosstalkModel::new(parameters, outputs, self.solver))
    }

    /// Builds the simulator and target table, validating both.
    pub fn build(&self) -> Result<(Box<dyn Simulator>, Vec<ObservationTarget>)> {
        if self.external.is_some() && self.simulator != SimulatorId::ExternalCommand {
            bail!(Error::Config("[external] is only allowed with simulator = \"external-command\"".into()));
        }
        let (sim, defaults): (Box<dyn Simulator>, Vec<ObservationTarget>) = match self.simulator {
            SimulatorId::Crosstalk => {
                let m = self.crosstalk()?;
                let t = targets_from_outputs(&m.outputs)?;
                (Box::new(m), t)
            }
            SimulatorId::Toy1d => (Box::new(Toy1d), Vec::new()),
            SimulatorId::ExternalCommand => {
                let ext = self
                    .external
                    .clone()
                    .ok_or_else(|| Error::Config("simulator \"external-command\" needs an [external] table".into()))?;
                check_external(&ext)?;
                (Box::new(ext), Vec::new())
            }
        };
        let targets = if self.target.is_empty() { defaults } else { self.target.clone() };
        if targets.is_empty() {
            bail!(Error::Config(format!("no [[target]] entries for simulator {}", sim.id())));
        }
        let outputs = sim.output_names();
        for t in &targets {
            t.validate()?;
            if !outputs.contains(&t.output) {
                bail!(Error::Config(format!("target {} is not an output of {}", t.output, sim.id())));
            }
        }
        Ok((sim, targets))
    }
}

fn check_external(ext: &ExternalCommand) -> Result<()> {
    let d = ext.inputs.len();
    if ext.command.is_empty() || d == 0 || ext.outputs.is_empty() {
        bail!(Error::Config("external simulator needs a command, inputs and outputs".into()));
    }
    if ext.lower.len() != d || ext.upper.len() != d {
        bail!(Error::Config("external simulator bounds must have one entry per input".into()));
    }
    Ok(())
}

/// Reads, parses and validates a manifest; CLI overrides are applied by the caller.
pub fn load(path: &Path) -> Result<Loaded> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read manifest {}", path.display()))?;
    let manifest = CampaignManifest::parse(&text).with_context(|| format!("invalid manifest {}", path.display()))?;
    let (simulator, targets) = manifest.build().with_context(|| format!("invalid manifest {}", path.display()))?;
    Ok(Loaded {
        manifest,
        text,
        simulator,
        targets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_manifest_needs_targets() {
        let m = CampaignManifest::parse("simulator = \"toy1d\"\n").unwrap();
        assert!(m.build().is_err());
    }

    #[test]
    fn crosstalk_defaults_to_output_windows() {
        let m = CampaignManifest::parse("simulator = \"crosstalk\"\nseed = 3\n").unwrap();
        let (sim, targets) = m.build().unwrap();
        assert_eq!(sim.input_names().len(), 31);
        assert_eq!(targets.len(), 32);
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = CampaignManifest::parse("simulator = \"toy1d\"\n\nbogus = 1\n").unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("line 3"), "{msg}");
    }
}
