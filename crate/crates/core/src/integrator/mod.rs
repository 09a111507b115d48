//! Time propagation along a probe sweep, and fixed-detuning steady states.

mod dopri;
mod steady;

pub use dopri::{SolverStats, METHOD_ORDER};
pub use steady::{steady_state, MAX_FIXED_POINT_ITERATIONS};

use dopri::{integrate_segment, StepControl};

use crate::error::{Error, Result};
use crate::model::{validate_packed, DensityMatrix, PackedRhs, SweepProgram, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Largest step in μs.
    pub max_step: f64,
    /// Output samples per scan direction, endpoints included.
    pub output_points: usize,
    pub max_steps: usize,
    /// Constant step in μs for convergence studies. Error control is off and
    /// states are only checked for finiteness, since truncation error can
    /// push small populations slightly negative.
    pub fixed_step: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            max_step: 1.0,
            output_points: 801,
            max_steps: 20_000_000,
            fixed_step: None,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::InvalidParameter("rtol and atol must be positive".into()));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidParameter("max_step must be positive".into()));
        }
        if self.output_points < 2 {
            return Err(Error::InvalidParameter("output_points must be at least 2".into()));
        }
        if let Some(h) = self.fixed_step {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::InvalidParameter("fixed_step must be positive".into()));
            }
        }
        Ok(())
    }

    fn step_control(&self) -> StepControl {
        StepControl {
            rtol: self.rtol,
            atol: self.atol,
            max_step: self.max_step,
            max_steps: self.max_steps,
            fixed_step: self.fixed_step,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    /// μs
    pub t: f64,
    /// rad/μs
    pub delta_p: f64,
    pub state: DensityMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub stats: SolverStats,
}

impl Trajectory {
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn last(&self) -> Option<&TrajectorySample> {
        self.samples.last()
    }
}

/// Output times: `output_points` per segment, the turning point shared.
fn output_times(sweep: &SweepProgram, points: usize) -> Vec<Vec<f64>> {
    let last = (points - 1) as f64;
    sweep
        .segments()
        .iter()
        .enumerate()
        .map(|(k, &(t0, t1))| {
            let first = if k == 0 { 0 } else { 1 };
            (first..points)
                .map(|j| if j == points - 1 { t1 } else { t0 + (t1 - t0) * (j as f64 / last) })
                .collect()
        })
        .collect()
}

/// Integrates the nonlinear optical Bloch equations along `sweep`.
///
/// Each linear piece of the sweep is integrated separately so that the
/// turning point of a double scan is always a step boundary.
pub fn evolve(
    initial: &DensityMatrix,
    params: &SystemParams,
    sweep: &SweepProgram,
    opts: &SolverOptions,
) -> Result<Trajectory> {
    initial.validate()?;
    params.validate()?;
    sweep.validate()?;
    opts.validate()?;

    let rhs = PackedRhs::new(params);
    let ctl = opts.step_control();
    let times = output_times(sweep, opts.output_points);

    let mut samples = Vec::with_capacity(times.iter().map(Vec::len).sum::<usize>() + 1);
    samples.push(TrajectorySample { t: 0.0, delta_p: sweep.detuning(0.0), state: *initial });

    let mut stats = SolverStats::default();
    let mut y = initial.to_packed();
    for (&(t0, t1), out_t) in sweep.segments().iter().zip(&times) {
        let out_t: Vec<f64> = out_t.iter().copied().filter(|&t| t > 0.0).collect();
        let f = |t: f64, y: &crate::model::Packed, dy: &mut crate::model::Packed| {
            rhs.eval(sweep.detuning(t), y, dy)
        };
        let fixed = opts.fixed_step.is_some();
        let check = |t: f64, y: &crate::model::Packed| {
            if fixed {
                if y.iter().all(|v| v.is_finite()) {
                    return Ok(());
                }
                return Err(Error::StateValidity(format!("at t = {t} us: non-finite state")));
            }
            validate_packed(y).map_err(|e| match e {
                Error::StateValidity(msg) => Error::StateValidity(format!("at t = {t} us: {msg}")),
                other => other,
            })
        };
        let (states, seg_stats) = integrate_segment(f, t0, t1, y, &out_t, &ctl, check)?;
        stats += seg_stats;
        for (&t, s) in out_t.iter().zip(&states) {
            if !fixed {
                validate_packed(s)?;
            }
            samples.push(TrajectorySample { t, delta_p: sweep.detuning(t), state: DensityMatrix::from_packed(s) });
        }
        y = *states.last().unwrap_or(&y);
    }
    Ok(Trajectory { samples, stats })
}
