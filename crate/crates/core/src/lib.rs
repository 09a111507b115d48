//! Rydberg-state EIT in a cold atomic ensemble.
//!
//! A four-level ladder (ground `|1⟩`, intermediate `|2⟩`, Rydberg `|3⟩` and a
//! loss reservoir `|4⟩`) is driven by a swept probe and a fixed coupling
//! laser. The Rydberg level decays both linearly and through a
//! density-dependent term quadratic in its population, which empties the EIT
//! system into the reservoir during a scan.
//!
//! * [`model`] builds the Hamiltonian and the nonlinear master-equation
//!   right-hand side.
//! * [`integrator`] propagates along a probe sweep and solves for steady
//!   states.
//! * [`spectroscopy`] turns trajectories into transmission spectra and
//!   extracts linewidths and populations.
//! * [`fitting`] estimates parameters from spectra and synthesizes noisy data.
//! * [`cli`] is the config-driven front end used by the `eit-sim` binary.
//!
//! Internally every rate and detuning is an angular frequency in rad/μs and
//! every time is in μs. Laboratory units (MHz of ordinary frequency) are only
//! converted in [`units`].

pub mod cli;
pub mod error;
pub mod fitting;
pub mod integrator;
pub mod model;
pub mod spectroscopy;
pub mod units;

pub use error::{Error, Result};
pub use integrator::{evolve, steady_state, SolverOptions, SolverStats, Trajectory, TrajectorySample};
pub use model::{
    decay_rates, hamiltonian, liouvillian_rhs, probe_rabi_from_power, DecayRates, DensityMatrix,
    ProbeCoupling, ScanMode, SweepProgram, SystemParams,
};
pub use spectroscopy::{
    extract_fwhm, extract_peak_populations, spectrum_from_trajectory, transmission,
    weak_probe_analytic, Direction, Spectrum, SpectrumRow,
};
