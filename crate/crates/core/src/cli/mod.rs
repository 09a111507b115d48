//! Config-driven front end: `simulate`, `fit` and `synth` runs writing
//! CSV spectra, trajectories and text reports.

mod config;
pub mod io;
mod run;

pub use config::{parse_config, Command, ConfigError, ProbeSetting, RunConfig, FIT_PREFIX};
pub use run::{
    run, RunError, RunOutcome, FIT_MODEL_FILE, FIT_REPORT_FILE, SPECTRUM_FILE, SUMMARY_FILE, SYNTH_FILE,
    TRAJECTORY_FILE,
};
