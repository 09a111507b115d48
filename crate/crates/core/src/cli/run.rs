use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::config::{Command, ProbeSetting, RunConfig};
use super::io;
use crate::fitting::{self, FitProblem, FitResult};
use crate::integrator::{evolve, Trajectory};
use crate::model::{probe_rabi_from_power, DensityMatrix, SystemParams};
use crate::spectroscopy::{
    extract_fwhm_segment, extract_peak_populations, scan_repeat_mismatch, spectrum_from_trajectory, Direction,
    Spectrum,
};
use crate::units;

/// A failed run, tagged with the stage that failed.
#[derive(Debug, Error)]
#[error("{stage} failed: {message}")]
pub struct RunError {
    pub stage: &'static str,
    pub message: String,
}

impl RunError {
    fn at(stage: &'static str) -> impl Fn(crate::Error) -> RunError {
        move |e| RunError { stage, message: e.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    /// Human-readable summary, also written for SIMULATE and FIT runs.
    pub summary: String,
}

pub const SPECTRUM_FILE: &str = "spectrum.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const FIT_REPORT_FILE: &str = "fit_report.txt";
pub const FIT_MODEL_FILE: &str = "fit_model.csv";
pub const SYNTH_FILE: &str = "synth.csv";

pub fn run(config: &RunConfig) -> Result<RunOutcome, RunError> {
    let params = config.system_params().map_err(RunError::at("configuration"))?;
    fs::create_dir_all(&config.output_dir).map_err(|e| RunError {
        stage: "output",
        message: format!("cannot create directory {}: {e}", config.output_dir.display()),
    })?;
    match config.command {
        Command::Simulate => simulate(config, &params),
        Command::Fit => fit(config, &params),
        Command::Synth => synth(config, &params),
    }
}

fn create(dir: &Path, name: &str) -> Result<(BufWriter<File>, PathBuf), RunError> {
    let path = dir.join(name);
    let file = File::create(&path)
        .map_err(|e| RunError { stage: "output", message: format!("cannot write {}: {e}", path.display()) })?;
    Ok((BufWriter::new(file), path))
}

fn write_with<F>(dir: &Path, name: &str, f: F) -> Result<PathBuf, RunError>
where
    F: FnOnce(&mut BufWriter<File>) -> crate::Result<()>,
{
    let (mut w, path) = create(dir, name)?;
    f(&mut w).map_err(|e| RunError { stage: "output", message: format!("{}: {e}", path.display()) })?;
    Ok(path)
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf, RunError> {
    let path = dir.join(name);
    fs::write(&path, text)
        .map_err(|e| RunError { stage: "output", message: format!("cannot write {}: {e}", path.display()) })?;
    Ok(path)
}

fn simulate_trajectory(config: &RunConfig, params: &SystemParams) -> Result<(Trajectory, Spectrum), RunError> {
    let sweep = config.sweep().map_err(RunError::at("configuration"))?;
    let traj =
        evolve(&DensityMatrix::ground(), params, &sweep, &config.solver()).map_err(RunError::at("simulation"))?;
    let spec = spectrum_from_trajectory(&traj, params).map_err(RunError::at("spectrum"))?;
    Ok((traj, spec))
}

fn fwhm_line(spec: &Spectrum, dir: Direction) -> String {
    match extract_fwhm_segment(spec, dir) {
        Ok(w) => format!("{w:.6} MHz"),
        Err(e) => format!("n/a ({e})"),
    }
}

fn probe_lines(config: &RunConfig, params: &SystemParams, out: &mut String) {
    if let ProbeSetting::PowerUw(p) = config.probe {
        if let Ok(c) = probe_rabi_from_power(p, config.beam_radius_mm, config.i_sat_mw_cm2, params.gamma2) {
            let _ = writeln!(out, "probe power: {p} uW (saturation fraction {:.6})", c.sat_fraction);
        }
    }
    let _ = writeln!(out, "probe Rabi frequency: {:.6} MHz", units::to_mhz(params.omega_p));
    let _ = writeln!(out, "coupling Rabi frequency: {:.6} MHz", config.omega_c_mhz);
}

fn simulate(config: &RunConfig, params: &SystemParams) -> Result<RunOutcome, RunError> {
    let (traj, spec) = simulate_trajectory(config, params)?;
    let (max_pop3, final_pop4) = extract_peak_populations(&traj);

    let mut s = String::from("eit-sim simulate\n");
    probe_lines(config, params, &mut s);
    let _ = writeln!(s, "samples: {}", traj.len());
    let _ = writeln!(
        s,
        "solver: {} steps, {} rejected, {} rhs evaluations",
        traj.stats.steps, traj.stats.rejected_steps, traj.stats.rhs_evals
    );
    let _ = writeln!(s, "FWHM forward: {}", fwhm_line(&spec, Direction::Forward));
    if config.double_scan {
        let _ = writeln!(s, "FWHM backward: {}", fwhm_line(&spec, Direction::Backward));
        if let Some(m) = scan_repeat_mismatch(&spec) {
            let _ = writeln!(s, "forward/backward mismatch: {m:.3e}");
        }
    }
    let _ = writeln!(s, "max pop3: {max_pop3:.6e}");
    let _ = writeln!(s, "final pop4: {final_pop4:.6e}");

    let dir = &config.output_dir;
    let files = vec![
        write_with(dir, SPECTRUM_FILE, |w| io::write_spectrum(w, &spec))?,
        write_with(dir, TRAJECTORY_FILE, |w| io::write_trajectory(w, &traj))?,
        write_text(dir, SUMMARY_FILE, &s)?,
    ];
    Ok(RunOutcome { files, summary: s })
}

fn synth(config: &RunConfig, params: &SystemParams) -> Result<RunOutcome, RunError> {
    let sweep = config.sweep().map_err(RunError::at("configuration"))?;
    let spec = fitting::synthesize_data(params, &sweep, &config.solver(), config.noise_sigma, config.seed)
        .map_err(RunError::at("synthesis"))?;
    let path = write_with(&config.output_dir, SYNTH_FILE, |w| io::write_spectrum(w, &spec))?;
    let summary = format!(
        "eit-sim synth\nrows: {}\nnoise sigma: {}\nseed: {}\nwritten: {}\n",
        spec.len(),
        config.noise_sigma,
        config.seed,
        path.display()
    );
    Ok(RunOutcome { files: vec![path], summary })
}

fn fit(config: &RunConfig, params: &SystemParams) -> Result<RunOutcome, RunError> {
    let data_path = config.data_in.as_ref().ok_or(RunError { stage: "input", message: "data_in not set".into() })?;
    let file = File::open(data_path)
        .map_err(|e| RunError { stage: "input", message: format!("cannot open {}: {e}", data_path.display()) })?;
    let data = io::read_spectrum(file)
        .map_err(|e| RunError { stage: "input", message: format!("{}: {e}", data_path.display()) })?;

    let sweep = config.sweep().map_err(RunError::at("configuration"))?;
    let mut problem = FitProblem::new(data, config.fit.clone(), *params, sweep);
    problem.solver = config.solver();
    problem.n_starts = config.fit_starts;
    problem.max_iter = config.fit_max_iter;
    problem.seed = config.seed;
    let result = fitting::fit(&problem).map_err(RunError::at("fit"))?;

    let values: Vec<f64> = result.values.iter().map(|(_, v)| *v).collect();
    let resid = fitting::residuals(&values, &problem).map_err(RunError::at("fit"))?;
    let model: Vec<f64> = problem.data.rows.iter().zip(&resid).map(|(r, d)| r.transmission + d).collect();
    let fwhm = simulate_model_fwhm(config, &result)?;

    let report = fit_report(config, &problem, &result, &fwhm);
    let dir = &config.output_dir;
    let files = vec![
        write_text(dir, FIT_REPORT_FILE, &report)?,
        write_with(dir, FIT_MODEL_FILE, |w| io::write_overlay(w, &problem.data, &model))?,
    ];
    Ok(RunOutcome { files, summary: report })
}

fn simulate_model_fwhm(config: &RunConfig, result: &FitResult) -> Result<String, RunError> {
    let (_, spec) = simulate_trajectory(config, &result.params)?;
    let dir = spec.first_direction().unwrap_or(Direction::Forward);
    Ok(fwhm_line(&spec, dir))
}

fn fit_report(config: &RunConfig, problem: &FitProblem, result: &FitResult, fwhm: &str) -> String {
    let mut s = String::from("eit-sim fit\n");
    probe_lines(config, &problem.fixed, &mut s);
    let _ = writeln!(s, "data points: {}", problem.data.len());
    let _ = writeln!(s, "starts: {} (seed {}), best start: {}", problem.n_starts, problem.seed, result.start_index);
    let _ = writeln!(s, "iterations: {}", result.n_iter);
    let _ = writeln!(s, "converged: {}", result.converged);
    let _ = writeln!(s, "sse: {:.8e}", result.sse);
    let _ = writeln!(s, "best-fit model FWHM: {fwhm}");
    let _ = writeln!(s, "parameters (value +/- one-sigma, bounds):");
    for ((param, value), (free, unc)) in result.values.iter().zip(problem.free.iter().zip(&result.uncertainties)) {
        let unc = unc.map_or_else(|| "n/a".to_string(), |u| format!("{u:.3e}"));
        let unit = if param.unit().is_empty() { String::new() } else { format!(" {}", param.unit()) };
        let _ = writeln!(
            s,
            "  {} = {value:.8e} +/- {unc}{unit}  [{}, {}]",
            param.name(),
            free.lower,
            free.upper
        );
    }
    s
}
