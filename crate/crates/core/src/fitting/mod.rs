//! Least-squares estimation of model parameters from transmission spectra,
//! and synthetic data generation.
//!
//! Every objective evaluation is a full forward simulation of the sweep, so
//! the optimizer is a derivative-free simplex in box-normalized
//! coordinates. Parameter values cross this API in laboratory units: rates
//! and detunings in MHz of ordinary frequency, everything else
//! dimensionless.

mod noise;
mod simplex;

pub use noise::GaussianStream;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrator::{evolve, SolverOptions};
use crate::model::{DensityMatrix, SweepProgram, SystemParams};
use crate::spectroscopy::{interpolate_by, spectrum_from_trajectory, Direction, Spectrum, SpectrumRow};
use crate::units;

pub const DEFAULT_STARTS: usize = 5;
pub const DEFAULT_MAX_ITER: usize = 2000;

/// Initial simplex edge, as a fraction of each parameter's range.
const SIMPLEX_STEP: f64 = 0.1;
/// Half-width of the uniform start jitter, as a fraction of the range.
const START_JITTER: f64 = 0.15;
/// Finite-difference step for the curvature estimate, fraction of the range.
const CURVATURE_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FitParam {
    OmegaP,
    OmegaC,
    DeltaC,
    Gamma2,
    Gamma3,
    Gamma3p,
    Gamma4,
    Gamma31,
    BranchB,
    Od0,
    DensityScale,
    DetuningOffset,
}

impl FitParam {
    pub const ALL: [FitParam; 12] = [
        FitParam::OmegaP,
        FitParam::OmegaC,
        FitParam::DeltaC,
        FitParam::Gamma2,
        FitParam::Gamma3,
        FitParam::Gamma3p,
        FitParam::Gamma4,
        FitParam::Gamma31,
        FitParam::BranchB,
        FitParam::Od0,
        FitParam::DensityScale,
        FitParam::DetuningOffset,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FitParam::OmegaP => "omega_p",
            FitParam::OmegaC => "omega_c",
            FitParam::DeltaC => "delta_c",
            FitParam::Gamma2 => "gamma2",
            FitParam::Gamma3 => "gamma3",
            FitParam::Gamma3p => "gamma3p",
            FitParam::Gamma4 => "gamma4",
            FitParam::Gamma31 => "gamma31",
            FitParam::BranchB => "branch_b",
            FitParam::Od0 => "od0",
            FitParam::DensityScale => "density_scale",
            FitParam::DetuningOffset => "detuning_offset_MHz",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    /// Unit label of the laboratory value, empty when dimensionless.
    pub fn unit(self) -> &'static str {
        match self {
            FitParam::BranchB | FitParam::Od0 | FitParam::DensityScale => "",
            _ => "MHz",
        }
    }

    /// Laboratory value of this parameter in `params`. The detuning offset
    /// is not part of the physical model and reads as 0.
    pub fn get(self, params: &SystemParams) -> f64 {
        match self {
            FitParam::OmegaP => units::to_mhz(params.omega_p),
            FitParam::OmegaC => units::to_mhz(params.omega_c),
            FitParam::DeltaC => units::to_mhz(params.delta_c),
            FitParam::Gamma2 => units::to_mhz(params.gamma2),
            FitParam::Gamma3 => units::to_mhz(params.gamma3),
            FitParam::Gamma3p => units::to_mhz(params.gamma3p),
            FitParam::Gamma4 => units::to_mhz(params.gamma4),
            FitParam::Gamma31 => units::to_mhz(params.gamma31),
            FitParam::BranchB => params.branch_b,
            FitParam::Od0 => params.od0,
            FitParam::DensityScale => params.density_scale,
            FitParam::DetuningOffset => 0.0,
        }
    }

    fn set(self, params: &mut SystemParams, value: f64) {
        match self {
            FitParam::OmegaP => params.omega_p = units::mhz(value),
            FitParam::OmegaC => params.omega_c = units::mhz(value),
            FitParam::DeltaC => params.delta_c = units::mhz(value),
            FitParam::Gamma2 => params.gamma2 = units::mhz(value),
            FitParam::Gamma3 => params.gamma3 = units::mhz(value),
            FitParam::Gamma3p => params.gamma3p = units::mhz(value),
            FitParam::Gamma4 => params.gamma4 = units::mhz(value),
            FitParam::Gamma31 => params.gamma31 = units::mhz(value),
            FitParam::BranchB => params.branch_b = value,
            FitParam::Od0 => params.od0 = value,
            FitParam::DensityScale => params.density_scale = value,
            FitParam::DetuningOffset => {}
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeParam {
    pub param: FitParam,
    pub initial: f64,
    pub lower: f64,
    pub upper: f64,
}

impl FreeParam {
    pub fn new(param: FitParam, initial: f64, lower: f64, upper: f64) -> Self {
        Self { param, initial, lower, upper }
    }

    fn normalize(self, value: f64) -> f64 {
        (value - self.lower) / (self.upper - self.lower)
    }

    fn denormalize(self, u: f64) -> f64 {
        self.lower + u * (self.upper - self.lower)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitProblem {
    pub data: Spectrum,
    pub free: Vec<FreeParam>,
    pub fixed: SystemParams,
    pub sweep: SweepProgram,
    pub solver: SolverOptions,
    pub n_starts: usize,
    pub max_iter: usize,
    pub seed: u64,
    /// Whether to spend the extra evaluations on curvature uncertainties.
    pub estimate_uncertainties: bool,
}

impl FitProblem {
    pub fn new(data: Spectrum, free: Vec<FreeParam>, fixed: SystemParams, sweep: SweepProgram) -> Self {
        Self {
            data,
            free,
            fixed,
            sweep,
            solver: SolverOptions::default(),
            n_starts: DEFAULT_STARTS,
            max_iter: DEFAULT_MAX_ITER,
            seed: 0,
            estimate_uncertainties: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.free.is_empty() {
            return Err(Error::InvalidInput("no free parameters".into()));
        }
        for (i, f) in self.free.iter().enumerate() {
            if self.free[..i].iter().any(|g| g.param == f.param) {
                return Err(Error::InvalidInput(format!("parameter {} listed twice", f.param.name())));
            }
            if ![f.lower, f.initial, f.upper].iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidInput(format!("{}: bounds must be finite", f.param.name())));
            }
            if !(f.lower < f.upper && f.lower <= f.initial && f.initial <= f.upper) {
                return Err(Error::InvalidInput(format!(
                    "{}: need lower < upper and lower <= initial <= upper, got {} / {} / {}",
                    f.param.name(),
                    f.lower,
                    f.initial,
                    f.upper
                )));
            }
        }
        if self.data.len() < 2 * self.free.len() {
            return Err(Error::IllPosed(format!(
                "{} data points for {} free parameters",
                self.data.len(),
                self.free.len()
            )));
        }
        if self.data.rows.iter().any(|r| !r.transmission.is_finite() || !r.delta_p_mhz.is_finite()) {
            return Err(Error::InvalidInput("data contain non-finite values".into()));
        }
        let t0 = self.data.rows[0].transmission;
        if self.data.rows.iter().all(|r| r.transmission == t0) {
            return Err(Error::IllPosed("data transmission is constant".into()));
        }
        if self.n_starts == 0 {
            return Err(Error::InvalidInput("at least one start is required".into()));
        }
        self.fixed.validate()?;
        self.sweep.validate()?;
        self.solver.validate()
    }

    /// Model parameters and detuning offset (MHz) for a candidate given in
    /// the order of `free`.
    pub fn apply(&self, candidate: &[f64]) -> (SystemParams, f64) {
        let mut p = self.fixed;
        let mut offset = 0.0;
        for (f, &v) in self.free.iter().zip(candidate) {
            if f.param == FitParam::DetuningOffset {
                offset = v;
            } else {
                f.param.set(&mut p, v);
            }
        }
        (p, offset)
    }

    fn denormalize(&self, u: &[f64]) -> Vec<f64> {
        self.free.iter().zip(u).map(|(f, &u)| f.denormalize(u)).collect()
    }

    fn describe(&self, candidate: &[f64]) -> String {
        self.free
            .iter()
            .zip(candidate)
            .map(|(f, v)| format!("{}={v}", f.param.name()))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// Model-minus-data transmission at every data row.
///
/// The model is simulated over the problem's sweep and shifted rigidly by
/// the candidate's detuning offset, then interpolated linearly onto each
/// data detuning within the matching scan direction.
pub fn residuals(candidate: &[f64], problem: &FitProblem) -> Result<Vec<f64>> {
    if candidate.len() != problem.free.len() {
        return Err(Error::InvalidInput(format!(
            "candidate has {} values for {} free parameters",
            candidate.len(),
            problem.free.len()
        )));
    }
    for (f, &v) in problem.free.iter().zip(candidate) {
        if !(v >= f.lower && v <= f.upper) {
            return Err(Error::InvalidInput(format!(
                "{} = {v} outside [{}, {}]",
                f.param.name(),
                f.lower,
                f.upper
            )));
        }
    }
    let wrap = |e: Error| Error::Candidate { candidate: problem.describe(candidate), source: Box::new(e) };
    let (params, offset) = problem.apply(candidate);
    let model = simulate_spectrum(&params, &problem.sweep, &problem.solver).map_err(wrap)?;
    model_minus_data(&model, offset, &problem.data).map_err(wrap)
}

fn simulate_spectrum(params: &SystemParams, sweep: &SweepProgram, solver: &SolverOptions) -> Result<Spectrum> {
    let traj = evolve(&DensityMatrix::ground(), params, sweep, solver)?;
    spectrum_from_trajectory(&traj, params)
}

fn model_minus_data(model: &Spectrum, offset_mhz: f64, data: &Spectrum) -> Result<Vec<f64>> {
    let forward = model.segment(Direction::Forward);
    let backward = model.segment(Direction::Backward);
    data.rows
        .iter()
        .map(|r| {
            let seg: &[SpectrumRow] = match r.direction {
                Direction::Forward => &forward,
                Direction::Backward => &backward,
            };
            interpolate_by(seg, r.delta_p_mhz - offset_mhz, |m| m.delta_p_mhz)
                .map(|t| t - r.transmission)
                .ok_or_else(|| {
                    Error::InvalidInput(format!("model has no {} scan to compare with", r.direction.as_str()))
                })
        })
        .collect()
}

/// Sum of squared residuals.
pub fn sse(candidate: &[f64], problem: &FitProblem) -> Result<f64> {
    Ok(residuals(candidate, problem)?.iter().map(|r| r * r).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Fitted laboratory values in the order of the problem's free list.
    pub values: Vec<(FitParam, f64)>,
    /// Model parameters at the optimum.
    pub params: SystemParams,
    pub detuning_offset_mhz: f64,
    pub sse: f64,
    /// Simplex iterations of the selected start.
    pub n_iter: usize,
    pub converged: bool,
    /// One-sigma estimates from the SSE curvature; `None` where the
    /// curvature matrix is not positive definite or estimation is off.
    pub uncertainties: Vec<Option<f64>>,
    /// Best SSE after each iteration of the selected start.
    pub history: Vec<f64>,
    pub start_index: usize,
}

impl FitResult {
    pub fn value(&self, param: FitParam) -> Option<f64> {
        self.values.iter().find(|(p, _)| *p == param).map(|(_, v)| *v)
    }

    pub fn uncertainty(&self, param: FitParam) -> Option<f64> {
        let i = self.values.iter().position(|(p, _)| *p == param)?;
        self.uncertainties[i]
    }
}

fn start_points(problem: &FitProblem) -> Vec<Vec<f64>> {
    let base: Vec<f64> = problem.free.iter().map(|f| f.normalize(f.initial)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
    let mut starts = vec![base.clone()];
    for _ in 1..problem.n_starts {
        starts.push(
            base.iter()
                .map(|u| (u + rng.random_range(-START_JITTER..=START_JITTER)).clamp(0.0, 1.0))
                .collect(),
        );
    }
    starts
}

/// Bounded least-squares fit with multiple jittered starts.
///
/// Start 0 is the supplied initial point; the rest are drawn from a ChaCha8
/// stream seeded with `problem.seed`. Starts may run concurrently; the
/// result is the lowest SSE, ties going to the lower start index, so the
/// outcome does not depend on scheduling.
pub fn fit(problem: &FitProblem) -> Result<FitResult> {
    problem.validate()?;
    let objective = |u: &[f64]| sse(&problem.denormalize(u), problem);

    let outcomes: Vec<_> = start_points(problem)
        .par_iter()
        .map(|u0| simplex::minimize(objective, u0, SIMPLEX_STEP, problem.max_iter))
        .collect::<Result<_>>()?;
    let (start_index, best) = outcomes
        .into_iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.value.total_cmp(&b.value).then(i.cmp(j)))
        .expect("at least one start");

    let values = problem.denormalize(&best.x);
    let (params, offset) = problem.apply(&values);
    let uncertainties = if problem.estimate_uncertainties {
        curvature_uncertainties(problem, &best.x, best.value)?
    } else {
        vec![None; problem.free.len()]
    };
    Ok(FitResult {
        values: problem.free.iter().map(|f| f.param).zip(values.iter().copied()).collect(),
        params,
        detuning_offset_mhz: offset,
        sse: best.value,
        n_iter: best.iterations,
        converged: best.converged,
        uncertainties,
        history: best.history,
        start_index,
    })
}

/// One-sigma uncertainties from the local quadratic model of the SSE.
///
/// With `H` the SSE Hessian and `s² = SSE / (N − k)` the residual variance,
/// the covariance is `2 s² H⁻¹`. The stencil is centred at the optimum,
/// moved inward where it would leave the box.
fn curvature_uncertainties(problem: &FitProblem, u_best: &[f64], sse_best: f64) -> Result<Vec<Option<f64>>> {
    let k = u_best.len();
    let h = CURVATURE_STEP;
    let centre: Vec<f64> = u_best.iter().map(|u| u.clamp(h, 1.0 - h)).collect();
    let eval = |shift: &[(usize, f64)]| {
        let mut u = centre.clone();
        for &(i, d) in shift {
            u[i] += d;
        }
        sse(&problem.denormalize(&u), problem)
    };

    let mut stencils = vec![vec![]];
    for i in 0..k {
        stencils.push(vec![(i, h)]);
        stencils.push(vec![(i, -h)]);
        for j in 0..i {
            for (si, sj) in [(h, h), (h, -h), (-h, h), (-h, -h)] {
                stencils.push(vec![(i, si), (j, sj)]);
            }
        }
    }
    let values: Vec<f64> = stencils.par_iter().map(|s| eval(s)).collect::<Result<_>>()?;
    let mut it = values.into_iter();
    let f0 = it.next().unwrap();
    let mut hess = nalgebra::DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        let fp = it.next().unwrap();
        let fm = it.next().unwrap();
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in 0..i {
            let (pp, pm, mp, mm) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
            let v = (pp - pm - mp + mm) / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }

    let dof = problem.data.len().saturating_sub(k).max(1) as f64;
    let s2 = sse_best / dof;
    let Some(chol) = hess.cholesky() else {
        return Ok(vec![None; k]);
    };
    let cov = chol.inverse() * (2.0 * s2);
    Ok(problem
        .free
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let var = cov[(i, i)];
            (var >= 0.0).then(|| var.sqrt() * (f.upper - f.lower))
        })
        .collect())
}

/// Forward-simulated spectrum with additive Gaussian transmission noise.
///
/// Noise comes from [`GaussianStream`] seeded with `seed`, one variate per
/// row in row order. With noise the result is clamped to `(0, 1]`; with
/// `noise_sigma = 0` the clean spectrum is returned unchanged.
pub fn synthesize_data(
    params: &SystemParams,
    sweep: &SweepProgram,
    solver: &SolverOptions,
    noise_sigma: f64,
    seed: u64,
) -> Result<Spectrum> {
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!("noise_sigma must be >= 0, got {noise_sigma}")));
    }
    let mut spec = simulate_spectrum(params, sweep, solver)?;
    if noise_sigma > 0.0 {
        let mut g = GaussianStream::new(seed);
        for r in &mut spec.rows {
            r.transmission = (r.transmission + noise_sigma * g.next_standard()).clamp(f64::MIN_POSITIVE, 1.0);
        }
    }
    Ok(spec)
}
