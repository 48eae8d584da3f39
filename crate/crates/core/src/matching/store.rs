//! On-disk layout of a campaign: one directory per completed wave.
//!
//! ```text
//! <dir>/ledger.csv, archive.csv, status.json
//! <dir>/wave_01/wave.json        (written last; marks the wave complete)
//! <dir>/wave_01/cut.json
//! <dir>/wave_01/emulators/*.json
//! <dir>/wave_01/design.csv, holdout.csv
//! ```

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::campaign::{ArchivedRun, CampaignStatus, WaveRecord};
use super::cut::{CutManifest, WaveCut};
use super::ledger::VolumeLedger;
use crate::emulation::Emulator;
use crate::error::{Error, Result};
use crate::simulator::{RunRecord, Simulator};

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("{} is not a file path", path.display())))?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut w = BufWriter::new(File::create(&tmp)?);
        write(&mut w)?;
        w.flush()?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        Ok(())
    })();
    match result {
        Ok(()) => {
            fs::rename(&tmp, path)?;
            Ok(())
        }
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

/// Runs as CSV: index, inputs, convergence flag, outputs (NaN if failed).
pub fn write_runs_csv<W: Write>(w: W, input_names: &[String], output_names: &[String], runs: &[RunRecord]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["run".to_string()];
    header.extend(input_names.iter().cloned());
    header.push("converged".into());
    header.extend(output_names.iter().cloned());
    wr.write_record(&header)?;
    for (i, r) in runs.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(r.x.iter().map(|v| v.to_string()));
        row.push(r.converged().to_string());
        match &r.y {
            Some(y) => row.extend(y.iter().map(|v| v.to_string())),
            None => row.extend(output_names.iter().map(|_| "NaN".to_string())),
        }
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct CutFile {
    #[serde(flatten)]
    manifest: CutManifest,
    emulators: Vec<String>,
}

fn file_stem(k: usize, name: &str) -> String {
    let clean: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' })
        .collect();
    format!("{k:02}_{clean}.json")
}

/// A campaign directory.
#[derive(Debug, Clone)]
pub struct CampaignStore {
    pub dir: PathBuf,
    pub resume: bool,
}

impl CampaignStore {
    pub fn new(dir: impl Into<PathBuf>, resume: bool) -> Self {
        Self { dir: dir.into(), resume }
    }

    pub fn wave_dir(&self, k: usize) -> PathBuf {
        self.dir.join(format!("wave_{k:02}"))
    }

    /// Creates the directory; refuses to overwrite a campaign unless resuming.
    pub fn prepare(&self) -> Result<()> {
        fs::create_dir_all(&self.dir)?;
        if !self.resume && self.wave_dir(1).join("wave.json").exists() {
            return Err(Error::Config(format!(
                "{} already holds a campaign; resume it or choose another directory",
                self.dir.display()
            )));
        }
        Ok(())
    }

    pub fn save_wave(
        &self,
        record: &WaveRecord,
        cut: &WaveCut,
        ledger: &VolumeLedger,
        archive: &[ArchivedRun],
        sim: &dyn Simulator,
    ) -> Result<()> {
        let k = record.summary.wave;
        let wd = self.wave_dir(k);
        let ed = wd.join("emulators");
        fs::create_dir_all(&ed)?;
        let mut files = Vec::new();
        for (j, em) in cut.emulators.iter().enumerate() {
            let f = file_stem(j, em.output());
            write_atomic(&ed.join(&f), |w| em.to_writer(w))?;
            files.push(f);
        }
        let cf = CutFile {
            manifest: cut.manifest(),
            emulators: files,
        };
        write_atomic(&wd.join("cut.json"), |w| Ok(serde_json::to_writer_pretty(w, &cf)?))?;
        let (inputs, outputs) = (sim.input_names(), sim.output_names());
        write_atomic(&wd.join("design.csv"), |w| write_runs_csv(w, &inputs, &outputs, &record.design))?;
        write_atomic(&wd.join("holdout.csv"), |w| write_runs_csv(w, &inputs, &outputs, &record.holdout))?;
        write_atomic(&self.dir.join("ledger.csv"), |w| ledger.write_csv(w))?;
        write_atomic(&self.dir.join("archive.csv"), |w| write_archive_csv(w, &inputs, &outputs, archive))?;
        write_atomic(&wd.join("wave.json"), |w| Ok(serde_json::to_writer(w, record)?))
    }

    pub fn save_status(&self, status: &CampaignStatus) -> Result<()> {
        write_atomic(&self.dir.join("status.json"), |w| Ok(serde_json::to_writer_pretty(w, status)?))
    }

    pub fn load_status(&self) -> Result<Option<CampaignStatus>> {
        let p = self.dir.join("status.json");
        if !p.exists() {
            return Ok(None);
        }
        Ok(Some(serde_json::from_reader(BufReader::new(File::open(p)?))?))
    }

    /// Completed wave records, in order, without emulators.
    pub fn load_records(&self) -> Result<Vec<WaveRecord>> {
        let mut out = Vec::new();
        for k in 1.. {
            let p = self.wave_dir(k).join("wave.json");
            if !p.exists() {
                break;
            }
            out.push(serde_json::from_reader(BufReader::new(File::open(p)?))?);
        }
        Ok(out)
    }

    pub fn load_cut(&self, k: usize) -> Result<WaveCut> {
        let wd = self.wave_dir(k);
        let cf: CutFile = serde_json::from_reader(BufReader::new(File::open(wd.join("cut.json"))?))?;
        let emulators = cf
            .emulators
            .iter()
            .map(|f| Emulator::from_reader(BufReader::new(File::open(wd.join("emulators").join(f))?)))
            .collect::<Result<Vec<_>>>()?;
        WaveCut::new(cf.manifest.wave, emulators, cf.manifest.targets, cf.manifest.cutoffs)
    }

    /// Completed waves with their refitted cuts.
    pub fn load_completed(&self) -> Result<Vec<(WaveRecord, WaveCut)>> {
        self.load_records()?
            .into_iter()
            .map(|r| {
                let cut = self.load_cut(r.summary.wave)?;
                Ok((r, cut))
            })
            .collect()
    }

    pub fn load_ledger(&self) -> Result<VolumeLedger> {
        let mut rd = csv::Reader::from_path(self.dir.join("ledger.csv"))?;
        let rows = rd.deserialize().collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(VolumeLedger { rows })
    }
}

pub fn write_archive_csv<W: Write>(w: W, input_names: &[String], output_names: &[String], archive: &[ArchivedRun]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["wave".to_string(), "datasets".to_string()];
    header.extend(input_names.iter().cloned());
    header.extend(output_names.iter().cloned());
    wr.write_record(&header)?;
    for a in archive {
        let mut row = vec![a.wave.to_string(), a.datasets.clone()];
        row.extend(a.x.iter().map(|v| v.to_string()));
        row.extend(a.y.iter().map(|v| v.to_string()));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}
