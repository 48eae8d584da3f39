use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hmatch_core::design::{derive_seed, maximin_lhs, sample_region, Region};
use hmatch_core::matching::{run_campaign, write_runs_csv, CampaignStatus, CampaignStore};
use hmatch_core::simulator::{run_batch, Simulator};
use hmatch_core::Error;
use log::info;

use crate::manifest::{self, Loaded, MANIFEST_COPY};
use crate::output::{copy_manifest, Outputs};
use crate::points::{check_domain, parse_points};
use crate::Common;

/// Marker for "the region is empty": the model cannot match the data.
#[derive(Debug)]
pub struct EmptyRegion(pub String);

impl std::fmt::Display for EmptyRegion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for EmptyRegion {}

/// Manifest from `--manifest`, falling back to the copy inside a campaign directory.
pub fn load_manifest(common: &Common, campaign: Option<&Path>) -> Result<Loaded> {
    let path = match (&common.manifest, campaign) {
        (Some(p), _) => p.clone(),
        (None, Some(dir)) => dir.join(MANIFEST_COPY),
        (None, None) => bail!(Error::Config("--manifest is required".into())),
    };
    let loaded = manifest::load(&path)?;
    init_workers(common.workers.or(loaded.manifest.workers))?;
    Ok(loaded)
}

fn init_workers(workers: Option<usize>) -> Result<()> {
    if let Some(n) = workers {
        if n == 0 {
            bail!(Error::Config("--workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot start the worker pool")?;
    }
    Ok(())
}

pub fn out_dir(common: &Common, loaded: Option<&Loaded>) -> Result<PathBuf> {
    common
        .out
        .clone()
        .or_else(|| loaded.and_then(|l| l.manifest.out.clone()))
        .ok_or_else(|| Error::Config("no output directory: pass --out or set `out` in the manifest".into()).into())
}

fn seed(common: &Common, loaded: &Loaded) -> u64 {
    common.seed.unwrap_or(loaded.manifest.seed)
}

/// Points of a maximin Latin hypercube in simulator units.
fn domain_design(sim: &dyn Simulator, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let dom = sim.domain();
    maximin_lhs(n, dom.dims(), seed).iter().map(|u| dom.from_unit(u)).collect()
}

pub fn simulate(common: &Common, points: Option<&Path>, design: Option<usize>, midpoint: bool) -> Result<()> {
    let loaded = load_manifest(common, None)?;
    let out = out_dir(common, Some(&loaded))?;
    let sim = loaded.simulator.as_ref();
    let names = sim.input_names();
    let xs = match (points, design, midpoint) {
        (Some(p), _, _) => {
            let text = fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            parse_points(&text, &names).with_context(|| format!("in {}", p.display()))?
        }
        (None, Some(n), _) => {
            if n == 0 {
                bail!(Error::Config("--design needs at least one point".into()));
            }
            domain_design(sim, n, derive_seed(seed(common, &loaded), &[0]))
        }
        (None, None, true) => {
            let dom = sim.domain();
            vec![dom.lower.iter().zip(&dom.upper).map(|(a, b)| 0.5 * (a + b)).collect()]
        }
        (None, None, false) => bail!(Error::Config("give --points, --design or --midpoint".into())),
    };
    check_domain(&xs, &sim.domain(), &names)?;
    let runs = run_batch(sim, &xs)?;
    let ok = runs.iter().filter(|r| r.converged()).count();
    let mut files = Outputs::default();
    files.add("outputs.csv", |w| write_runs_csv(w, &names, &sim.output_names(), &runs))?;
    files.commit(&out, Some(&loaded.text))?;
    println!("{} runs, {ok} converged -> {}", runs.len(), out.join("outputs.csv").display());
    Ok(())
}

pub fn design(common: &Common, runs: usize) -> Result<()> {
    let loaded = load_manifest(common, None)?;
    let out = out_dir(common, Some(&loaded))?;
    if runs == 0 {
        bail!(Error::Config("--runs must be positive".into()));
    }
    let sim = loaded.simulator.as_ref();
    let xs = domain_design(sim, runs, derive_seed(seed(common, &loaded), &[0]));
    let mut files = Outputs::default();
    files.add("design.csv", |w| {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["run".to_string()];
        header.extend(sim.input_names());
        wr.write_record(&header)?;
        for (i, x) in xs.iter().enumerate() {
            let mut row = vec![i.to_string()];
            row.extend(x.iter().map(|v| v.to_string()));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    })?;
    files.commit(&out, Some(&loaded.text))?;
    println!("{runs} design points -> {}", out.join("design.csv").display());
    Ok(())
}

pub fn run_match(common: &Common, resume: bool) -> Result<()> {
    let loaded = load_manifest(common, None)?;
    let out = out_dir(common, Some(&loaded))?;
    let mut cfg = loaded.manifest.campaign.clone();
    cfg.seed = seed(common, &loaded);
    cfg.validate()?;

    let store = CampaignStore::new(&out, resume);
    store.prepare()?;
    let copy = out.join(MANIFEST_COPY);
    if resume && copy.exists() {
        let previous = fs::read_to_string(&copy)?;
        if previous != loaded.text {
            bail!(Error::Config(format!(
                "{} differs from the manifest of the campaign being resumed",
                copy.display()
            )));
        }
    } else {
        copy_manifest(&out, &loaded.text)?;
    }

    let result = run_campaign(&cfg, &loaded.targets, loaded.simulator.as_ref(), Some(&store))?;
    for row in &result.ledger.rows {
        println!(
            "wave {:>2}  datasets {:<6} fraction {:.4}  cumulative {:.6}  acceptable {:.4}",
            row.wave, row.datasets, row.fraction, row.cumulative, row.acceptable_fraction
        );
    }
    match result.status {
        CampaignStatus::Completed => println!("schedule completed"),
        CampaignStatus::Converged { wave } => println!("stopped after wave {wave}: emulator variance is small"),
        CampaignStatus::Empty { wave } => {
            bail!(EmptyRegion(format!("wave {wave} left no non-implausible points: the model cannot match the data")))
        }
        CampaignStatus::Aborted { wave, reason } => bail!("wave {wave} aborted: {reason}"),
    }
    Ok(())
}

pub fn sample(common: &Common, from: &Path, count: usize, evaluate: bool) -> Result<()> {
    let loaded = load_manifest(common, Some(from))?;
    let out = out_dir(common, None)?;
    let sim = loaded.simulator.as_ref();
    let store = CampaignStore::new(from, true);
    let waves = store.load_completed().with_context(|| format!("reading campaign in {}", from.display()))?;
    let Some((last, _)) = waves.last() else {
        bail!(Error::Config(format!("{} holds no completed waves", from.display())));
    };
    let starts = last.members.clone();
    if starts.is_empty() {
        bail!(EmptyRegion("the final region of the campaign is empty".into()));
    }
    let mut region = Region::full(sim.domain());
    for (_, cut) in waves {
        region = region.refine(cut.into());
    }
    let s = sample_region(&region, count, derive_seed(seed(common, &loaded), &[u64::MAX]), &starts, &loaded.manifest.campaign.sampling)?;
    info!("{} points by {} sampling", s.points.len(), s.kind);
    let names = sim.input_names();
    let mut files = Outputs::default();
    if evaluate {
        let runs = run_batch(sim, &s.points)?;
        files.add("samples.csv", |w| write_runs_csv(w, &names, &sim.output_names(), &runs))?;
    } else {
        files.add("samples.csv", |w| {
            let mut wr = csv::Writer::from_writer(w);
            let mut header = vec!["run".to_string()];
            header.extend(names.iter().cloned());
            wr.write_record(&header)?;
            for (i, x) in s.points.iter().enumerate() {
                let mut row = vec![i.to_string()];
                row.extend(x.iter().map(|v| v.to_string()));
                wr.write_record(&row)?;
            }
            wr.flush()?;
            Ok(())
        })?;
    }
    files.commit(&out, Some(&loaded.text))?;
    println!("{} points ({} sampler) -> {}", s.points.len(), s.kind, out.join("samples.csv").display());
    Ok(())
}

pub fn diagnose(common: &Common, from: &Path) -> Result<()> {
    let out = out_dir(common, None)?;
    let store = CampaignStore::new(from, true);
    let records = store.load_records().with_context(|| format!("reading campaign in {}", from.display()))?;
    if records.is_empty() {
        bail!(Error::Config(format!("{} holds no completed waves", from.display())));
    }
    let mut files = Outputs::default();
    files.add("diagnostics.csv", |w| {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record([
            "wave", "output", "n", "fraction_large", "true_acceptable", "violations", "violation_fraction", "passed",
        ])?;
        for r in &records {
            for d in &r.diagnostics {
                wr.write_record([
                    r.summary.wave.to_string(),
                    d.output.clone(),
                    d.n.to_string(),
                    d.fraction_large.to_string(),
                    d.true_acceptable.to_string(),
                    d.consistency_violations.len().to_string(),
                    d.violation_fraction.to_string(),
                    d.passed.to_string(),
                ])?;
            }
        }
        wr.flush()?;
        Ok(())
    })?;
    files.add("safety.csv", |w| {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["wave", "output", "qualifying", "discarded", "rate"])?;
        for r in &records {
            let s = &r.summary.safety;
            let rate = |q: usize, d: usize| if q > 0 { (d as f64 / q as f64).to_string() } else { String::new() };
            wr.write_record([
                r.summary.wave.to_string(),
                "all".into(),
                s.qualifying.to_string(),
                s.discarded.len().to_string(),
                rate(s.qualifying, s.discarded.len()),
            ])?;
            for o in &s.per_output {
                wr.write_record([
                    r.summary.wave.to_string(),
                    o.output.clone(),
                    o.qualifying.to_string(),
                    o.discarded.to_string(),
                    rate(o.qualifying, o.discarded),
                ])?;
            }
        }
        wr.flush()?;
        Ok(())
    })?;
    for r in &records {
        let s = &r.summary;
        let failed = r.diagnostics.iter().filter(|d| !d.passed).count();
        println!(
            "wave {:>2}: {} emulators, {failed} failed diagnostics, deferred [{}], max variance ratio {:.3}",
            s.wave,
            s.emulated.len(),
            s.deferred.join(", "),
            s.max_variance_ratio
        );
    }
    files.commit(&out, None)?;
    Ok(())
}
