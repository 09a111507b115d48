//! Four-level Rydberg EIT model: parameters, state, probe sweep and the
//! nonlinear optical Bloch equations.

mod dynamics;
mod params;
mod state;
mod sweep;

pub use dynamics::{decay_rates, hamiltonian, liouvillian_rhs, DecayRates, PopulationFlows};
pub use params::{
    probe_rabi_from_power, ProbeCoupling, SystemParams, DEFAULT_GAMMA2_MHZ, DEFAULT_GAMMA4_MHZ,
    DEFAULT_RYDBERG_LIFETIME_US,
};
pub use state::{CMatrix4, DensityMatrix, Packed, HERMITIAN_TOL, PACKED_LEN, POPULATION_TOL, TRACE_TOL};
pub use sweep::{ScanMode, SweepProgram};

pub(crate) use dynamics::PackedRhs;
pub(crate) use state::{idx, validate_packed};
