use nalgebra::Matrix4;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix4 = Matrix4<Complex64>;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-9;
pub const POPULATION_TOL: f64 = 1e-9;

/// Number of reals in the packed state: four populations and the real and
/// imaginary parts of σ21, σ31 and σ32.
pub const PACKED_LEN: usize = 10;

pub(crate) mod idx {
    pub const P1: usize = 0;
    pub const P2: usize = 1;
    pub const P3: usize = 2;
    pub const P4: usize = 3;
    pub const RE21: usize = 4;
    pub const IM21: usize = 5;
    pub const RE31: usize = 6;
    pub const IM31: usize = 7;
    pub const RE32: usize = 8;
    pub const IM32: usize = 9;
}

pub type Packed = [f64; PACKED_LEN];

/// Ensemble-averaged state in the basis |1⟩, |2⟩, |3⟩, |4⟩.
///
/// The reservoir |4⟩ is never laser-coupled, so its coherences are stored
/// as exact zeros.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    sigma: CMatrix4,
}

impl DensityMatrix {
    /// All population in |1⟩.
    pub fn ground() -> Self {
        let mut sigma = CMatrix4::zeros();
        sigma[(0, 0)] = Complex64::new(1.0, 0.0);
        Self { sigma }
    }

    /// Pure population in level `level` (0-based).
    pub fn basis(level: usize) -> Result<Self> {
        if level >= 4 {
            return Err(Error::InvalidInput(format!("level index {level} out of range")));
        }
        let mut sigma = CMatrix4::zeros();
        sigma[(level, level)] = Complex64::new(1.0, 0.0);
        Ok(Self { sigma })
    }

    /// Validates `sigma` and stores it with exact zeros in the |4⟩ coherences
    /// and real diagonal.
    pub fn from_matrix(sigma: CMatrix4) -> Result<Self> {
        validate_matrix(&sigma)?;
        let mut clean = sigma;
        for k in 0..3 {
            clean[(k, 3)] = Complex64::new(0.0, 0.0);
            clean[(3, k)] = Complex64::new(0.0, 0.0);
        }
        for k in 0..4 {
            clean[(k, k)] = Complex64::new(clean[(k, k)].re, 0.0);
        }
        Ok(Self { sigma: clean })
    }

    pub fn from_packed(y: &Packed) -> Self {
        use idx::*;
        let mut s = CMatrix4::zeros();
        s[(0, 0)] = Complex64::new(y[P1], 0.0);
        s[(1, 1)] = Complex64::new(y[P2], 0.0);
        s[(2, 2)] = Complex64::new(y[P3], 0.0);
        s[(3, 3)] = Complex64::new(y[P4], 0.0);
        let pairs = [((1, 0), RE21, IM21), ((2, 0), RE31, IM31), ((2, 1), RE32, IM32)];
        for ((i, j), re, im) in pairs {
            let c = Complex64::new(y[re], y[im]);
            s[(i, j)] = c;
            s[(j, i)] = c.conj();
        }
        Self { sigma: s }
    }

    pub fn to_packed(&self) -> Packed {
        use idx::*;
        let s = &self.sigma;
        let mut y = [0.0; PACKED_LEN];
        y[P1] = s[(0, 0)].re;
        y[P2] = s[(1, 1)].re;
        y[P3] = s[(2, 2)].re;
        y[P4] = s[(3, 3)].re;
        y[RE21] = s[(1, 0)].re;
        y[IM21] = s[(1, 0)].im;
        y[RE31] = s[(2, 0)].re;
        y[IM31] = s[(2, 0)].im;
        y[RE32] = s[(2, 1)].re;
        y[IM32] = s[(2, 1)].im;
        y
    }

    pub fn matrix(&self) -> &CMatrix4 {
        &self.sigma
    }

    /// Population of level `k` (0-based).
    pub fn population(&self, k: usize) -> f64 {
        self.sigma[(k, k)].re
    }

    pub fn populations(&self) -> [f64; 4] {
        [0, 1, 2, 3].map(|k| self.population(k))
    }

    /// Element σ_ij (0-based indices).
    pub fn coherence(&self, i: usize, j: usize) -> Complex64 {
        self.sigma[(i, j)]
    }

    /// Probe coherence σ21.
    pub fn sigma21(&self) -> Complex64 {
        self.sigma[(1, 0)]
    }

    pub fn trace(&self) -> f64 {
        (0..4).map(|k| self.sigma[(k, k)].re).sum()
    }

    /// Largest elementwise |σ − σ†|.
    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.sigma)
    }

    pub fn validate(&self) -> Result<()> {
        validate_matrix(&self.sigma)
    }
}

pub(crate) fn hermiticity_error(m: &CMatrix4) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..4 {
        for j in 0..4 {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn validate_matrix(s: &CMatrix4) -> Result<()> {
    if s.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(Error::StateValidity("non-finite matrix element".into()));
    }
    let herm = hermiticity_error(s);
    if herm > HERMITIAN_TOL {
        return Err(Error::StateValidity(format!("not Hermitian (max |σ-σ†| = {herm:e})")));
    }
    let trace: f64 = (0..4).map(|k| s[(k, k)].re).sum();
    if (trace - 1.0).abs() > TRACE_TOL {
        return Err(Error::StateValidity(format!("trace {trace} differs from 1")));
    }
    for k in 0..4 {
        let p = s[(k, k)].re;
        if !(-POPULATION_TOL..=1.0 + POPULATION_TOL).contains(&p) {
            return Err(Error::StateValidity(format!("population of level {} is {p}", k + 1)));
        }
    }
    for k in 0..3 {
        if s[(k, 3)].norm() > HERMITIAN_TOL {
            return Err(Error::StateValidity(format!(
                "reservoir coherence σ{}4 is nonzero",
                k + 1
            )));
        }
    }
    Ok(())
}

/// Checks the invariants on a packed state; Hermiticity and the zero
/// reservoir coherences hold by construction.
pub(crate) fn validate_packed(y: &Packed) -> Result<()> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::StateValidity("non-finite state component".into()));
    }
    let trace = y[idx::P1] + y[idx::P2] + y[idx::P3] + y[idx::P4];
    if (trace - 1.0).abs() > TRACE_TOL {
        return Err(Error::StateValidity(format!("trace drifted to {trace}")));
    }
    for (k, p) in y[..4].iter().enumerate() {
        if !(-POPULATION_TOL..=1.0 + POPULATION_TOL).contains(p) {
            return Err(Error::StateValidity(format!("population of level {} is {p}", k + 1)));
        }
    }
    Ok(())
}
