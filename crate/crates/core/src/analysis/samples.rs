//! Labelled point sets drawn from campaign archives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::WaveRecord;

/// Parameter points with (optionally) their simulator outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub label: String,
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub outputs: Option<Vec<Vec<f64>>>,
}

impl SampleSet {
    pub fn new(label: impl Into<String>, points: Vec<Vec<f64>>, outputs: Option<Vec<Vec<f64>>>) -> Result<Self> {
        let label = label.into();
        if let Some(d) = points.first().map(Vec::len) {
            if points.iter().any(|p| p.len() != d) {
                return Err(Error::Config(format!("sample {label}: points of unequal length")));
            }
        }
        if let Some(o) = &outputs {
            if o.len() != points.len() {
                return Err(Error::Config(format!("sample {label}: one output row per point required")));
            }
        }
        Ok(Self { label, points, outputs })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    /// Column `i` of the inputs.
    pub fn input(&self, i: usize) -> Vec<f64> {
        self.points.iter().map(|p| p[i]).collect()
    }

    fn with_rows(&self, label: String, keep: &[bool]) -> Self {
        let pick = |rows: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            rows.iter().zip(keep).filter(|(_, &k)| k).map(|(r, _)| r.clone()).collect()
        };
        Self {
            label,
            points: pick(&self.points),
            outputs: self.outputs.as_ref().map(pick),
        }
    }

    /// Rows for which `keep` is true, under a new label.
    pub fn subset(&self, label: impl Into<String>, keep: &[bool]) -> Self {
        self.with_rows(label.into(), keep)
    }
}

/// The wave-1 design and one acceptable set per dataset milestone, in the
/// order the milestones appear.
pub fn sample_sets_from_records(records: &[WaveRecord]) -> Vec<SampleSet> {
    let mut sets = Vec::new();
    if let Some(first) = records.first() {
        let ok: Vec<_> = first.design.iter().filter_map(|r| Some((r.x.clone(), r.y.clone()?))).collect();
        sets.push(SampleSet {
            label: "wave-1".into(),
            points: ok.iter().map(|(x, _)| x.clone()).collect(),
            outputs: Some(ok.into_iter().map(|(_, y)| y).collect()),
        });
    }
    let mut labels: Vec<String> = Vec::new();
    for r in records {
        for a in &r.archived {
            if !labels.contains(&a.datasets) {
                labels.push(a.datasets.clone());
            }
        }
    }
    for l in labels {
        let runs: Vec<_> = records.iter().flat_map(|r| &r.archived).filter(|a| a.datasets == l).collect();
        sets.push(SampleSet {
            label: format!("acceptable-{l}"),
            points: runs.iter().map(|a| a.x.clone()).collect(),
            outputs: Some(runs.iter().map(|a| a.y.clone()).collect()),
        });
    }
    sets
}
