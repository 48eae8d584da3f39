//! Simulator abstraction shared by the bundled models and external programs.

use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::BoundingBox;
use crate::error::{Error, Result};
use crate::model::outputs::CrosstalkModel;
use crate::model::toy::{toy_1d, TOY_UPPER};

/// A deterministic map from an input point to a vector of outputs.
///
/// `evaluate` returns `Err(Error::NonConverged { .. })` for runs that exist
/// but have no usable output; the engine treats those as implausible.
pub trait Simulator: Send + Sync {
    fn id(&self) -> &str;

    /// Input box on which designs and emulators operate.
    fn domain(&self) -> BoundingBox;

    fn input_names(&self) -> Vec<String>;

    fn output_names(&self) -> Vec<String>;

    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// Evaluates many points, in parallel on the current rayon pool.
    fn evaluate_batch(&self, xs: &[Vec<f64>]) -> Vec<Result<Vec<f64>>> {
        xs.par_iter().map(|x| self.evaluate(x)).collect()
    }
}

/// One simulator evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub x: Vec<f64>,
    /// `None` when the run did not converge.
    pub y: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl RunRecord {
    pub fn converged(&self) -> bool {
        self.y.is_some()
    }
}

/// Runs a batch and records failures instead of aborting. Errors other than
/// non-convergence (bad input, broken external process) are returned.
pub fn run_batch(sim: &dyn Simulator, xs: &[Vec<f64>]) -> Result<Vec<RunRecord>> {
    let results = sim.evaluate_batch(xs);
    let mut out = Vec::with_capacity(xs.len());
    for (x, r) in xs.iter().zip(results) {
        match r {
            Ok(y) => out.push(RunRecord {
                x: x.clone(),
                y: Some(y),
                failure: None,
            }),
            Err(e @ Error::NonConverged { .. }) => out.push(RunRecord {
                x: x.clone(),
                y: None,
                failure: Some(e.to_string()),
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

impl Simulator for CrosstalkModel {
    fn id(&self) -> &str {
        "crosstalk"
    }

    fn domain(&self) -> BoundingBox {
        BoundingBox::symmetric(self.parameters.len())
    }

    fn input_names(&self) -> Vec<String> {
        self.parameters.names()
    }

    fn output_names(&self) -> Vec<String> {
        self.outputs.names()
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.compute_outputs(x)?.values)
    }
}

/// `f(x) = 0.1 x + cos x` on `[0, 11 pi / 3]`, in natural units.
#[derive(Debug, Clone, Copy, Default)]
pub struct Toy1d;

impl Simulator for Toy1d {
    fn id(&self) -> &str {
        "toy1d"
    }

    fn domain(&self) -> BoundingBox {
        BoundingBox::new(vec![0.0], vec![TOY_UPPER]).expect("valid toy domain")
    }

    fn input_names(&self) -> Vec<String> {
        vec!["x".into()]
    }

    fn output_names(&self) -> Vec<String> {
        vec!["f".into()]
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != 1 {
            return Err(Error::Domain(format!("toy simulator takes 1 input, got {}", x.len())));
        }
        Ok(vec![toy_1d(x[0])?])
    }
}

/// Adapter for an external program that reads one whitespace-separated
/// point per line on stdin and answers with one line of outputs per point.
/// A line containing `nan` (or nothing) marks a non-converged run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalCommand {
    pub command: Vec<String>,
    pub inputs: Vec<String>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub outputs: Vec<String>,
}

impl ExternalCommand {
    fn spawn_and_run(&self, xs: &[Vec<f64>]) -> Result<Vec<Result<Vec<f64>>>> {
        let (prog, args) = self
            .command
            .split_first()
            .ok_or_else(|| Error::Config("external simulator command is empty".into()))?;
        let mut child = Command::new(prog)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Simulator(format!("cannot start {prog}: {e}")))?;
        {
            let mut stdin = child.stdin.take().expect("piped stdin");
            let mut text = String::new();
            for x in xs {
                let line: Vec<String> = x.iter().map(|v| format!("{v:.17e}")).collect();
                text.push_str(&line.join(" "));
                text.push('\n');
            }
            stdin.write_all(text.as_bytes())?;
        }
        let stdout = child.stdout.take().expect("piped stdout");
        let mut results = Vec::with_capacity(xs.len());
        for (i, line) in BufReader::new(stdout).lines().enumerate() {
            let line = line?;
            results.push(self.parse_line(&line, i + 1)?);
        }
        let status = child.wait()?;
        if !status.success() {
            return Err(Error::Simulator(format!("{prog} exited with {status}")));
        }
        if results.len() != xs.len() {
            return Err(Error::Simulator(format!(
                "{prog} returned {} lines for {} points",
                results.len(),
                xs.len()
            )));
        }
        Ok(results)
    }

    fn parse_line(&self, line: &str, lineno: usize) -> Result<Result<Vec<f64>>> {
        let fields: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
        if fields.is_empty() || fields.iter().any(|f| f.eq_ignore_ascii_case("nan")) {
            return Ok(Err(Error::NonConverged {
                context: format!("external run {lineno}"),
                reason: "simulator reported no output".into(),
            }));
        }
        if fields.len() != self.outputs.len() {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected {} outputs, found {}", self.outputs.len(), fields.len()),
            });
        }
        let mut v = Vec::with_capacity(fields.len());
        for f in fields {
            v.push(f.parse::<f64>().map_err(|e| Error::Parse {
                line: lineno,
                message: format!("{f:?}: {e}"),
            })?);
        }
        Ok(Ok(v))
    }
}

impl Simulator for ExternalCommand {
    fn id(&self) -> &str {
        "external-command"
    }

    fn domain(&self) -> BoundingBox {
        BoundingBox::new(self.lower.clone(), self.upper.clone()).expect("validated external domain")
    }

    fn input_names(&self) -> Vec<String> {
        self.inputs.clone()
    }

    fn output_names(&self) -> Vec<String> {
        self.outputs.clone()
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.spawn_and_run(&[x.to_vec()])?.pop().expect("one result")
    }

    fn evaluate_batch(&self, xs: &[Vec<f64>]) -> Vec<Result<Vec<f64>>> {
        if xs.is_empty() {
            return Vec::new();
        }
        match self.spawn_and_run(xs) {
            Ok(r) => r,
            Err(e) => {
                let msg = e.to_string();
                xs.iter().map(|_| Err(Error::Simulator(msg.clone()))).collect()
            }
        }
    }
}
