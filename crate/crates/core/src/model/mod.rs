//! The hormonal crosstalk model and the one-dimensional toy function.

pub mod integrate;
pub mod network;
pub mod outputs;
pub mod params;
pub mod rates;
pub mod steady;
pub mod toy;

pub use network::{derivatives, jacobian, mixed_pin, ChemicalState, Species, StateVector, N_SPECIES};
pub use outputs::{Chemical, CrosstalkModel, Dataset, OutputSpec, OutputTable, OutputVector, RunStates, Trend};
pub use params::{ParameterSpec, ParameterTable};
pub use rates::{to_rate_constants, ExperimentSpec, Feeding, Mutant, RateConstants};
pub use steady::{solve_steady_state, SolverConfig, SteadyState};
pub use toy::{toy_1d, TOY_UPPER};
