//! Post-match analytics over archived simulator runs.
//!
//! Everything here works on actual runs, never on emulators.

pub mod export;
pub mod informativeness;
pub mod samples;
pub mod split;
pub mod stats;

pub use informativeness::{input_output_informativeness, pass_proportions, Informativeness, PassProportions, MIN_PASSING};
pub use samples::{sample_sets_from_records, SampleSet};
pub use split::{hdr_level, pair_density, quantile, sign_split, PairDensity, SignSplit, SplitOptions};
pub use stats::{joint_constraint_matrix, pairwise_resolutions, sample_covariance, single_input_resolutions, variance_resolution};
