//! Volume accounting across waves.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub wave: usize,
    /// Datasets in play, e.g. "A+B".
    pub datasets: String,
    /// Estimated share of the previous wave's region retained.
    pub fraction: f64,
    /// Share of the original box: product of all fractions so far.
    pub cumulative: f64,
    /// Share of the previous region giving simulator-verified acceptable runs.
    pub acceptable_fraction: f64,
    /// The same, as a share of the original box.
    pub acceptable_volume: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VolumeLedger {
    pub rows: Vec<LedgerRow>,
}

impl VolumeLedger {
    pub fn cumulative(&self) -> f64 {
        self.rows.last().map_or(1.0, |r| r.cumulative)
    }

    /// Appends a wave; the cumulative column is derived here only.
    pub fn push(&mut self, wave: usize, datasets: String, fraction: f64, acceptable_fraction: f64) -> &LedgerRow {
        let previous = self.cumulative();
        self.rows.push(LedgerRow {
            wave,
            datasets,
            fraction,
            cumulative: previous * fraction,
            acceptable_fraction,
            acceptable_volume: previous * acceptable_fraction,
        });
        self.rows.last().expect("row just pushed")
    }

    pub fn is_non_increasing(&self) -> bool {
        let mut prev = 1.0;
        self.rows.iter().all(|r| {
            let ok = r.cumulative <= prev;
            prev = r.cumulative;
            ok
        })
    }

    /// Whether every cumulative entry is the running product of fractions.
    pub fn is_consistent(&self) -> bool {
        let mut prod = 1.0f64;
        self.rows.iter().all(|r| {
            prod *= r.fraction;
            (r.cumulative - prod).abs() <= 1e-12 * prod
        })
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for r in &self.rows {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    }
}
