//! The `analyze` subcommand: dispatch to the analytics over archived runs.

use std::path::Path;

use anyhow::{bail, Context, Result};
use hmatch_core::analysis::export::{
    write_informativeness_csv, write_matrix_csv, write_pairs_density_csv, write_pass_proportions_csv, write_quantiles_csv,
    write_variance_resolution_csv,
};
use hmatch_core::analysis::{
    input_output_informativeness, joint_constraint_matrix, pair_density, pass_proportions, sample_sets_from_records,
    sign_split, single_input_resolutions, SampleSet, SplitOptions,
};
use hmatch_core::matching::{CampaignStore, ObservationTarget};
use hmatch_core::Error;

use crate::commands::{load_manifest, out_dir};
use crate::output::Outputs;
use crate::{Analysis, Common};

pub struct Options {
    pub output: Option<String>,
    pub inputs: Option<Vec<String>>,
    pub bins: usize,
    pub cutoff: f64,
}

impl Analysis {
    fn file_stem(self) -> &'static str {
        match self {
            Analysis::PairsDensity => "pairs-density",
            Analysis::VarianceResolution => "variance-resolution",
            Analysis::JointConstraint => "joint-constraint",
            Analysis::Informativeness => "informativeness",
            Analysis::PassProportions => "pass-proportions",
            Analysis::SignSplit => "sign-split",
        }
    }
}

fn input_indices(names: &[String], wanted: Option<&[String]>) -> Result<Vec<usize>> {
    match wanted {
        None => Ok((0..names.len()).collect()),
        Some(w) => w
            .iter()
            .map(|n| {
                names
                    .iter()
                    .position(|m| m == n)
                    .ok_or_else(|| Error::Config(format!("unknown input {n}")).into())
            })
            .collect(),
    }
}

fn target_columns<'t>(output_names: &[String], targets: &'t [ObservationTarget]) -> Vec<(usize, &'t ObservationTarget)> {
    targets
        .iter()
        .filter_map(|t| output_names.iter().position(|n| *n == t.output).map(|c| (c, t)))
        .collect()
}

pub fn run(common: &Common, analysis: Analysis, from: &Path, opts: &Options) -> Result<()> {
    let store = CampaignStore::new(from, true);
    let records = store.load_records().with_context(|| format!("reading campaign in {}", from.display()))?;
    if records.is_empty() {
        bail!(Error::Config(format!(
            "no archived campaign in {}: run `hmatch match` first",
            from.display()
        )));
    }
    let loaded = load_manifest(common, Some(from))?;
    let out = out_dir(common, None)?;
    let sim = loaded.simulator.as_ref();
    let inputs = sim.input_names();
    let outputs = sim.output_names();
    let columns = target_columns(&outputs, &loaded.targets);
    let sets = sample_sets_from_records(&records);
    let wave1 = &sets[0];
    let accepted: Vec<&SampleSet> = sets[1..].iter().collect();
    let stem = analysis.file_stem();
    let mut files = Outputs::default();

    match analysis {
        Analysis::VarianceResolution => {
            if accepted.is_empty() {
                bail!(Error::Degenerate("the archive holds no acceptable runs".into()));
            }
            let mut rows = Vec::new();
            for s in &accepted {
                rows.push((s.label.clone(), single_input_resolutions(wave1, s)?));
            }
            files.add(format!("{stem}.csv"), |w| write_variance_resolution_csv(w, &inputs, &rows))?;
        }
        Analysis::JointConstraint => {
            if accepted.is_empty() {
                bail!(Error::Degenerate("the archive holds no acceptable runs".into()));
            }
            for s in &accepted {
                let m = joint_constraint_matrix(s)?;
                files.add(format!("{stem}-{}.csv", s.label), |w| write_matrix_csv(w, "input", &inputs, &inputs, &m))?;
            }
        }
        Analysis::Informativeness => {
            let inf = input_output_informativeness(wave1, &columns, opts.cutoff)?;
            files.add(format!("{stem}.csv"), |w| write_informativeness_csv(w, &inputs, &inf))?;
        }
        Analysis::PassProportions => {
            let by_wave: Vec<_> = records.iter().map(|r| (r.summary.wave, r.design.clone())).collect();
            let pp = pass_proportions(&by_wave, &columns, opts.cutoff)?;
            files.add(format!("{stem}.csv"), |w| write_pass_proportions_csv(w, &pp))?;
        }
        Analysis::PairsDensity => {
            let idx = input_indices(&inputs, opts.inputs.as_deref())?;
            let dom = sim.domain();
            let mut densities = Vec::new();
            for s in &sets {
                for (k, &a) in idx.iter().enumerate() {
                    for &b in &idx[k + 1..] {
                        densities.push(pair_density(
                            s,
                            a,
                            b,
                            (dom.lower[a], dom.upper[a]),
                            (dom.lower[b], dom.upper[b]),
                            opts.bins,
                        ));
                    }
                }
            }
            files.add(format!("{stem}.csv"), |w| write_pairs_density_csv(w, &inputs, &densities))?;
        }
        Analysis::SignSplit => {
            let name = opts
                .output
                .as_ref()
                .ok_or_else(|| Error::Config("sign-split needs --output".into()))?;
            let col = outputs
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::Config(format!("unknown output {name}")))?;
            let Some(last) = accepted.last() else {
                bail!(Error::Degenerate("the archive holds no acceptable runs".into()));
            };
            let split = sign_split(
                last,
                col,
                &SplitOptions {
                    bins: opts.bins,
                    inputs: Some(input_indices(&inputs, opts.inputs.as_deref())?),
                },
            )?;
            if let Some(w) = &split.warning {
                eprintln!("warning: {w}");
            }
            files.add(format!("{stem}-quantiles.csv"), |w| write_quantiles_csv(w, &outputs, &split.quantiles))?;
            files.add(format!("{stem}-pairs-density.csv"), |w| write_pairs_density_csv(w, &inputs, &split.densities))?;
        }
    }
    let names: Vec<String> = files.names().map(String::from).collect();
    files.commit(&out, None)?;
    for n in names {
        println!("{}", out.join(n).display());
    }
    Ok(())
}
