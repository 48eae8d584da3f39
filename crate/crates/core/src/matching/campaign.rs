//! Wave-by-wave refocusing of the input space.

use std::collections::BTreeSet;
use std::sync::Arc;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cut::WaveCut;
use super::implausibility::{implausibility, Cutoffs};
use super::ledger::VolumeLedger;
use super::store::CampaignStore;
use super::targets::ObservationTarget;
use crate::design::{derive_seed, design_in_region, sample_region, DesignMethod, Region, SamplerKind, SamplingOptions};
use crate::emulation::{build_emulator, diagnose, DiagnosticOptions, DiagnosticReport, Emulator, EmulatorStrategy, FitOptions, TrainingSet};
use crate::error::{Error, Result};
use crate::model::Dataset;
use crate::simulator::{run_batch, RunRecord, Simulator};

fn default_holdout() -> usize {
    200
}

/// Which earlier runs join a wave's training set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunReuse {
    None,
    /// Only runs inside the current region.
    #[default]
    InRegion,
    All,
}

/// One row of the wave schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveConfig {
    /// Datasets in play; empty means every target.
    #[serde(default)]
    pub datasets: Vec<Dataset>,
    /// Restricts emulation to these outputs (others in play still count
    /// for the acceptable-run archive).
    #[serde(default)]
    pub emulate: Option<Vec<String>>,
    pub runs: usize,
    /// Held-out runs for diagnostics and safety checks.
    #[serde(default = "default_holdout")]
    pub holdout: usize,
    #[serde(default)]
    pub strategy: EmulatorStrategy,
    #[serde(default)]
    pub cutoffs: Cutoffs,
    #[serde(default)]
    pub design: DesignMethod,
    #[serde(default)]
    pub reuse: RunReuse,
}

impl WaveConfig {
    pub fn new(datasets: Vec<Dataset>, runs: usize, strategy: EmulatorStrategy, cutoffs: Cutoffs) -> Self {
        Self {
            datasets,
            emulate: None,
            runs,
            holdout: default_holdout(),
            strategy,
            cutoffs,
            design: DesignMethod::MaximinLhs,
            reuse: RunReuse::InRegion,
        }
    }

    fn in_play(&self, t: &ObservationTarget) -> bool {
        self.datasets.is_empty() || self.datasets.contains(&t.dataset)
    }

    fn emulated(&self, t: &ObservationTarget) -> bool {
        self.in_play(t) && self.emulate.as_ref().is_none_or(|e| e.contains(&t.output))
    }

    fn label(&self) -> String {
        if self.datasets.is_empty() {
            return "all".into();
        }
        self.datasets.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("+")
    }
}

/// A whole campaign: schedule plus global settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignConfig {
    pub seed: u64,
    #[serde(rename = "wave")]
    pub waves: Vec<WaveConfig>,
    /// Uniform points of the previous region tested against each new cut.
    pub fraction_samples: usize,
    /// Members of each new region kept as chain starts.
    pub retained_members: usize,
    /// Stop when every emulator variance is below this multiple of the
    /// observation variance across the new region.
    pub stop_variance_ratio: f64,
    pub stop_check_points: usize,
    /// Abort a wave when more than this share of its outputs fail.
    pub max_failed_fraction: f64,
    /// True-run implausibility bound for the acceptable-run archive.
    pub archive_cutoff: f64,
    pub fit: FitOptions,
    pub diagnostics: DiagnosticOptions,
    pub sampling: SamplingOptions,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            waves: Vec::new(),
            fraction_samples: 10_000,
            retained_members: 2_000,
            stop_variance_ratio: 0.1,
            stop_check_points: 500,
            max_failed_fraction: 0.5,
            archive_cutoff: 3.0,
            fit: FitOptions::default(),
            diagnostics: DiagnosticOptions::default(),
            sampling: SamplingOptions::default(),
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.waves.is_empty() {
            return Err(Error::Config("the wave schedule is empty".into()));
        }
        if self.fraction_samples == 0 {
            return Err(Error::Config("fraction_samples must be positive".into()));
        }
        let mut seen: BTreeSet<Dataset> = BTreeSet::new();
        for (k, w) in self.waves.iter().enumerate() {
            w.cutoffs.validate()?;
            if w.runs == 0 {
                return Err(Error::Config(format!("wave {} has no runs", k + 1)));
            }
            let now: BTreeSet<Dataset> = w.datasets.iter().copied().collect();
            if !w.datasets.is_empty() && !seen.is_subset(&now) {
                return Err(Error::Config(format!(
                    "wave {} drops a dataset already matched; datasets must be introduced cumulatively",
                    k + 1
                )));
            }
            seen = now;
        }
        Ok(())
    }
}

/// Held-out runs acceptable by the simulator but discarded by the cut.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SafetyReport {
    /// Held-out runs with true implausibility within the cutoff on every
    /// output of the cut.
    pub qualifying: usize,
    /// Holdout indices of qualifying runs the emulators discarded.
    pub discarded: Vec<usize>,
    pub per_output: Vec<OutputSafety>,
}

impl SafetyReport {
    pub fn rate(&self) -> Option<f64> {
        (self.qualifying > 0).then(|| self.discarded.len() as f64 / self.qualifying as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSafety {
    pub output: String,
    pub qualifying: usize,
    pub discarded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveSummary {
    pub wave: usize,
    pub datasets: String,
    pub runs: usize,
    pub converged: usize,
    pub holdout_runs: usize,
    pub holdout_converged: usize,
    pub training_runs: usize,
    pub emulated: Vec<String>,
    pub deferred: Vec<String>,
    pub design_sampler: SamplerKind,
    pub fraction_sampler: SamplerKind,
    pub fraction: f64,
    pub cumulative: f64,
    /// Runs (design and holdout) passing every in-play target.
    pub acceptable_runs: usize,
    pub acceptable_fraction: f64,
    pub max_variance_ratio: f64,
    pub stop: bool,
    pub safety: SafetyReport,
}

/// A simulator run meeting every in-play target of its wave.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchivedRun {
    pub wave: usize,
    pub datasets: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Everything a wave produced except the emulators themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveRecord {
    pub summary: WaveSummary,
    pub design: Vec<RunRecord>,
    pub holdout: Vec<RunRecord>,
    pub diagnostics: Vec<DiagnosticReport>,
    pub archived: Vec<ArchivedRun>,
    /// Uniform-ish members of the new region.
    pub members: Vec<Vec<f64>>,
}

pub struct WaveInput<'a> {
    pub wave: usize,
    pub config: &'a WaveConfig,
    pub region: &'a Region,
    pub members: &'a [Vec<f64>],
    pub previous_runs: &'a [RunRecord],
}

pub struct WaveResult {
    pub cut: Arc<WaveCut>,
    pub record: WaveRecord,
}

fn resolve<'t>(targets: &'t [ObservationTarget], sim: &dyn Simulator) -> Result<Vec<(usize, &'t ObservationTarget)>> {
    let names = sim.output_names();
    targets
        .iter()
        .map(|t| {
            names
                .iter()
                .position(|n| *n == t.output)
                .map(|c| (c, t))
                .ok_or_else(|| Error::Config(format!("target {} is not an output of {}", t.output, sim.id())))
        })
        .collect()
}

fn truth_passes(y: &[f64], targets: &[(usize, &ObservationTarget)], cutoff: f64) -> bool {
    targets
        .iter()
        .all(|(c, t)| implausibility(y[*c], 0.0, t).is_ok_and(|i| i <= cutoff))
}

/// Runs one wave inside `input.region`.
pub fn run_wave(
    cfg: &CampaignConfig,
    input: WaveInput<'_>,
    targets: &[ObservationTarget],
    sim: &dyn Simulator,
) -> Result<WaveResult> {
    let k = input.wave;
    let wc = input.config;
    let region = input.region;
    let seed = derive_seed(cfg.seed, &[k as u64]);
    let resolved = resolve(targets, sim)?;
    let in_play: Vec<(usize, &ObservationTarget)> = resolved.iter().copied().filter(|(_, t)| wc.in_play(t)).collect();
    let to_emulate: Vec<(usize, &ObservationTarget)> =
        resolved.iter().copied().filter(|(_, t)| wc.emulated(t)).collect();
    if to_emulate.is_empty() {
        return Err(Error::Config(format!("wave {k} has no outputs to emulate")));
    }

    // 1. Design and holdout inside the current region.
    let reused: Vec<&RunRecord> = match wc.reuse {
        RunReuse::None => Vec::new(),
        RunReuse::InRegion => input
            .previous_runs
            .par_iter()
            .filter(|r| r.converged() && region.contains(&r.x))
            .collect(),
        RunReuse::All => input.previous_runs.iter().filter(|r| r.converged()).collect(),
    };
    let existing: Vec<Vec<f64>> = reused.iter().map(|r| r.x.clone()).collect();
    let design = design_in_region(
        region,
        wc.runs,
        wc.design,
        derive_seed(seed, &[1]),
        input.members,
        &existing,
        &cfg.sampling,
    )?;
    let mut starts = input.members.to_vec();
    starts.extend(design.points.iter().cloned());
    let holdout_pts = if wc.holdout > 0 {
        sample_region(region, wc.holdout, derive_seed(seed, &[2]), &starts, &cfg.sampling)?.points
    } else {
        Vec::new()
    };
    info!("wave {k}: {} design and {} holdout runs ({})", design.points.len(), holdout_pts.len(), design.kind);
    let design_runs = run_batch(sim, &design.points)?;
    let holdout_runs = run_batch(sim, &holdout_pts)?;

    // 2. Emulators for the outputs of this wave.
    let mut training: Vec<&RunRecord> = design_runs.iter().filter(|r| r.converged()).collect();
    training.extend(reused);
    let candidates: Vec<usize> = (0..region.dims()).collect();
    let holdout_ok: Vec<&RunRecord> = holdout_runs.iter().filter(|r| r.converged()).collect();
    let fitted: Vec<(usize, std::result::Result<(Emulator, Option<DiagnosticReport>), String>)> = to_emulate
        .par_iter()
        .enumerate()
        .map(|(j, (c, t))| {
            let fit = || -> Result<(Emulator, Option<DiagnosticReport>)> {
                let train = TrainingSet::new(
                    training.iter().map(|r| r.x.clone()).collect(),
                    training.iter().map(|r| r.y.as_ref().expect("converged")[*c]).collect(),
                )?;
                let em = build_emulator(&t.output, train, &candidates, &wc.strategy, &cfg.fit)?;
                let report = if holdout_ok.is_empty() {
                    None
                } else {
                    let hold = TrainingSet::new(
                        holdout_ok.iter().map(|r| r.x.clone()).collect(),
                        holdout_ok.iter().map(|r| r.y.as_ref().expect("converged")[*c]).collect(),
                    )?;
                    Some(diagnose(&em, &hold, Some(t), &cfg.diagnostics))
                };
                Ok((em, report))
            };
            (j, fit().map_err(|e| e.to_string()))
        })
        .collect();

    let mut emulators = Vec::new();
    let mut cut_targets = Vec::new();
    let mut deferred = Vec::new();
    let mut reports = Vec::new();
    for (j, res) in fitted {
        let t = to_emulate[j].1;
        match res {
            Ok((em, report)) => {
                let passed = report.as_ref().is_none_or(|r| r.passed);
                if let Some(r) = report {
                    reports.push(r);
                }
                if passed {
                    emulators.push(em);
                    cut_targets.push(t.clone());
                } else {
                    warn!("wave {k}: {} failed diagnostics, deferred", t.output);
                    deferred.push(t.output.clone());
                }
            }
            Err(e) => {
                warn!("wave {k}: {} could not be emulated ({e}), deferred", t.output);
                deferred.push(t.output.clone());
            }
        }
    }
    let failed_share = deferred.len() as f64 / to_emulate.len() as f64;
    if emulators.is_empty() || failed_share > cfg.max_failed_fraction {
        return Err(Error::WaveAborted {
            wave: k,
            reason: format!(
                "{} of {} outputs failed fitting or diagnostics: {}",
                deferred.len(),
                to_emulate.len(),
                deferred.join(", ")
            ),
        });
    }
    let cut = Arc::new(WaveCut::new(k, emulators, cut_targets, wc.cutoffs)?);

    // 3. Fraction of the current region retained by the new cut.
    let sample = sample_region(region, cfg.fraction_samples, derive_seed(seed, &[3]), &starts, &cfg.sampling)?;
    let inside: Vec<bool> = sample.points.par_iter().map(|x| cut.contains(x)).collect();
    let kept = inside.iter().filter(|&&b| b).count();
    let fraction = kept as f64 / sample.points.len() as f64;
    let members: Vec<Vec<f64>> = sample
        .points
        .into_iter()
        .zip(&inside)
        .filter_map(|(p, &b)| b.then_some(p))
        .take(cfg.retained_members)
        .collect();
    info!("wave {k}: retained fraction {fraction:.4} ({})", sample.kind);

    // 4. Safety of the cut on held-out runs.
    let cut_cols: Vec<(usize, &ObservationTarget)> = resolved
        .iter()
        .copied()
        .filter(|(_, t)| cut.targets.iter().any(|c| c.output == t.output))
        .collect();
    let mut safety = SafetyReport::default();
    for (h, run) in holdout_runs.iter().enumerate() {
        if let Some(y) = &run.y {
            if truth_passes(y, &cut_cols, cfg.archive_cutoff) {
                safety.qualifying += 1;
                if !cut.contains(&run.x) {
                    safety.discarded.push(h);
                }
            }
        }
    }
    safety.per_output = reports
        .iter()
        .filter(|r| cut.targets.iter().any(|t| t.output == r.output))
        .map(|r| OutputSafety {
            output: r.output.clone(),
            qualifying: r.true_acceptable,
            discarded: r.consistency_violations.len(),
        })
        .collect();

    // 5. Acceptable runs and the stopping check.
    let label = wc.label();
    let archive_of = |runs: &[RunRecord]| -> Vec<ArchivedRun> {
        runs.iter()
            .filter_map(|r| {
                let y = r.y.as_ref()?;
                truth_passes(y, &in_play, cfg.archive_cutoff).then(|| ArchivedRun {
                    wave: k,
                    datasets: label.clone(),
                    x: r.x.clone(),
                    y: y.clone(),
                })
            })
            .collect()
    };
    let mut archived = archive_of(&design_runs);
    let from_holdout = archive_of(&holdout_runs);
    let acceptable_fraction = if holdout_runs.is_empty() {
        archived.len() as f64 / design_runs.len().max(1) as f64
    } else {
        from_holdout.len() as f64 / holdout_runs.len() as f64
    };
    archived.extend(from_holdout);

    let max_variance_ratio = members
        .par_iter()
        .take(cfg.stop_check_points)
        .map(|x| cut.variance_ratios(x).into_iter().fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max);

    let summary = WaveSummary {
        wave: k,
        datasets: label,
        runs: design_runs.len(),
        converged: design_runs.iter().filter(|r| r.converged()).count(),
        holdout_runs: holdout_runs.len(),
        holdout_converged: holdout_ok.len(),
        training_runs: training.len(),
        emulated: cut.outputs(),
        deferred,
        design_sampler: design.kind,
        fraction_sampler: sample.kind,
        fraction,
        cumulative: f64::NAN,
        acceptable_runs: archived.len(),
        acceptable_fraction,
        max_variance_ratio,
        stop: false,
        safety,
    };
    Ok(WaveResult {
        cut,
        record: WaveRecord {
            summary,
            design: design_runs,
            holdout: holdout_runs,
            diagnostics: reports,
            archived,
            members,
        },
    })
}

/// How a campaign ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CampaignStatus {
    Completed,
    /// Emulator variance became small relative to observation variance.
    Converged { wave: usize },
    /// No sampled point survived.
    Empty { wave: usize },
    Aborted { wave: usize, reason: String },
}

pub struct CampaignResult {
    pub region: Region,
    pub ledger: VolumeLedger,
    pub waves: Vec<WaveRecord>,
    pub archive: Vec<ArchivedRun>,
    pub status: CampaignStatus,
}

struct State {
    region: Region,
    ledger: VolumeLedger,
    waves: Vec<WaveRecord>,
    archive: Vec<ArchivedRun>,
    members: Vec<Vec<f64>>,
    runs: Vec<RunRecord>,
}

impl State {
    fn absorb(&mut self, mut record: WaveRecord, cut: Arc<WaveCut>) {
        let s = &mut record.summary;
        let row = self.ledger.push(s.wave, s.datasets.clone(), s.fraction, s.acceptable_fraction);
        s.cumulative = row.cumulative;
        self.archive.extend(record.archived.iter().cloned());
        self.runs.extend(record.design.iter().filter(|r| r.converged()).cloned());
        self.region = self.region.refine(cut);
        self.members = record.members.clone();
        self.waves.push(record);
    }

    fn finished(&self) -> Option<CampaignStatus> {
        let last = self.waves.last()?;
        if last.members.is_empty() {
            Some(CampaignStatus::Empty { wave: last.summary.wave })
        } else if last.summary.stop {
            Some(CampaignStatus::Converged { wave: last.summary.wave })
        } else {
            None
        }
    }
}

/// Runs the schedule in order, optionally persisting (and resuming) waves.
pub fn run_campaign(
    cfg: &CampaignConfig,
    targets: &[ObservationTarget],
    sim: &dyn Simulator,
    store: Option<&CampaignStore>,
) -> Result<CampaignResult> {
    cfg.validate()?;
    for t in targets {
        t.validate()?;
    }
    resolve(targets, sim)?;
    let mut st = State {
        region: Region::full(sim.domain()),
        ledger: VolumeLedger::default(),
        waves: Vec::new(),
        archive: Vec::new(),
        members: Vec::new(),
        runs: Vec::new(),
    };
    if let Some(store) = store {
        store.prepare()?;
        for (record, cut) in store.load_completed()? {
            info!("resuming: wave {} loaded", record.summary.wave);
            st.absorb(record, Arc::new(cut));
        }
    }
    let mut status = st.finished().unwrap_or(CampaignStatus::Completed);
    if status == CampaignStatus::Completed {
        for k in st.waves.len() + 1..=cfg.waves.len() {
            let wc = &cfg.waves[k - 1];
            let input = WaveInput {
                wave: k,
                config: wc,
                region: &st.region,
                members: &st.members,
                previous_runs: &st.runs,
            };
            let mut result = match run_wave(cfg, input, targets, sim) {
                Ok(r) => r,
                Err(Error::WaveAborted { wave, reason }) => {
                    warn!("wave {wave} aborted: {reason}");
                    status = CampaignStatus::Aborted { wave, reason };
                    break;
                }
                Err(e) => return Err(e),
            };
            let later_adds = cfg.waves[k..].iter().any(|w| {
                w.datasets.is_empty() && !wc.datasets.is_empty()
                    || w.datasets.iter().any(|d| !wc.datasets.contains(d))
            });
            let s = &mut result.record.summary;
            s.stop = s.deferred.is_empty() && !later_adds && s.max_variance_ratio <= cfg.stop_variance_ratio;
            st.absorb(result.record, result.cut.clone());
            if let Some(store) = store {
                store.save_wave(st.waves.last().expect("absorbed"), &result.cut, &st.ledger, &st.archive, sim)?;
            }
            if let Some(s) = st.finished() {
                status = s;
                break;
            }
        }
    }
    if let Some(store) = store {
        store.save_status(&status)?;
    }
    Ok(CampaignResult {
        region: st.region,
        ledger: st.ledger,
        waves: st.waves,
        archive: st.archive,
        status,
    })
}
