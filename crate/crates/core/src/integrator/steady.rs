use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};
use crate::model::{idx, DensityMatrix, Packed, PackedRhs, SystemParams, PACKED_LEN};

pub const MAX_FIXED_POINT_ITERATIONS: usize = 200;

type LinearSystem = SMatrix<f64, PACKED_LEN, PACKED_LEN>;

/// Steady state with the nonlinear loss rate frozen at `nonlinear`.
///
/// The frozen right-hand side is linear; its matrix is assembled column by
/// column and the redundant |1⟩ population equation is replaced by the
/// trace condition.
fn frozen_steady_state(rhs: &PackedRhs, delta_p: f64, nonlinear: f64) -> Result<Packed> {
    let mut a = LinearSystem::zeros();
    let mut col = [0.0; PACKED_LEN];
    for k in 0..PACKED_LEN {
        let mut e = [0.0; PACKED_LEN];
        e[k] = 1.0;
        rhs.eval_frozen(delta_p, nonlinear, &e, &mut col);
        for (i, v) in col.iter().enumerate() {
            a[(i, k)] = *v;
        }
    }
    for k in 0..PACKED_LEN {
        a[(idx::P1, k)] = if k <= idx::P4 { 1.0 } else { 0.0 };
    }
    let mut b = SVector::<f64, PACKED_LEN>::zeros();
    b[idx::P1] = 1.0;
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::InvalidParameter("steady state is not unique (singular rate matrix)".into()))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("steady-state solve produced non-finite values".into()));
    }
    let mut y = [0.0; PACKED_LEN];
    y.copy_from_slice(x.as_slice());
    Ok(y)
}

/// Steady state of the nonlinear master equation at fixed probe detuning.
///
/// The loss rate `r = γ₃′σ33` is treated as a frozen scalar; each outer
/// iteration solves the linear problem for the current `r`. The root of
/// `g(r) = γ₃′σ33(r) − r` is bracketed by `[0, γ₃′]`, and updates are
/// secant steps damped back into the bracket (Illinois variant of regula
/// falsi), so the iteration cannot run away.
pub fn steady_state(params: &SystemParams, delta_p: f64, tol: f64) -> Result<DensityMatrix> {
    params.validate()?;
    if !delta_p.is_finite() {
        return Err(Error::InvalidParameter(format!("delta_p is not finite ({delta_p})")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let rhs = PackedRhs::new(params);
    let g3p = params.effective_gamma3p();

    let y0 = frozen_steady_state(&rhs, delta_p, 0.0)?;
    if g3p == 0.0 {
        return Ok(DensityMatrix::from_packed(&y0));
    }

    let residual = |r: f64| -> Result<(f64, Packed)> {
        let y = frozen_steady_state(&rhs, delta_p, r)?;
        Ok((g3p * y[idx::P3].max(0.0) - r, y))
    };

    let (mut lo, mut g_lo) = (0.0, g3p * y0[idx::P3].max(0.0));
    if g_lo == 0.0 {
        return Ok(DensityMatrix::from_packed(&y0));
    }
    // Extra loss lowers σ33, so the root normally lies below γ₃′σ33(0).
    let mut hi = g_lo;
    let (mut g_hi, y_hi) = residual(hi)?;
    if g_hi.abs() <= tol * hi {
        return Ok(DensityMatrix::from_packed(&y_hi));
    }
    if g_hi > 0.0 {
        // σ33 ≤ 1 guarantees g(γ₃′) ≤ 0.
        lo = hi;
        g_lo = g_hi;
        hi = g3p;
        g_hi = residual(hi)?.0;
    }

    let mut side = 0i8;
    let mut last_change = f64::INFINITY;
    for _ in 0..MAX_FIXED_POINT_ITERATIONS {
        let r = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
        let r = if r.is_finite() && r > lo && r < hi { r } else { 0.5 * (lo + hi) };
        let (g, y) = residual(r)?;
        last_change = g.abs() / r.max(f64::MIN_POSITIVE);
        if last_change <= tol || (hi - lo) <= tol * r {
            return Ok(DensityMatrix::from_packed(&y));
        }
        if g > 0.0 {
            lo = r;
            g_lo = g;
            if side == 1 {
                g_hi *= 0.5;
            }
            side = 1;
        } else {
            hi = r;
            g_hi = g;
            if side == -1 {
                g_lo *= 0.5;
            }
            side = -1;
        }
    }
    Err(Error::Convergence { iterations: MAX_FIXED_POINT_ITERATIONS, change: last_change })
}
