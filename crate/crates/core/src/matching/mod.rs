//! Implausibility, waves and the campaign that strings them together.

pub mod campaign;
pub mod cut;
pub mod implausibility;
pub mod ledger;
pub mod store;
pub mod targets;

pub use campaign::{
    run_campaign, run_wave, ArchivedRun, CampaignConfig, CampaignResult, CampaignStatus, OutputSafety, RunReuse, SafetyReport,
    WaveConfig, WaveInput, WaveRecord, WaveResult, WaveSummary,
};
pub use cut::{CutManifest, WaveCut};
pub use implausibility::{combined_implausibility, implausibility, CombinedImplausibility, Cutoffs};
pub use ledger::{LedgerRow, VolumeLedger};
pub use store::{write_atomic, write_runs_csv, CampaignStore};
pub use targets::{targets_from_outputs, ObservationTarget};
