//! Dormand–Prince 5(4) embedded pair with local error control.
//!
//! Propagation uses the 5th-order solution (local extrapolation), the
//! 4th-order companion only estimates the error. The last stage is the
//! derivative at the new point (FSAL), which is reused for the cubic Hermite
//! dense output and as the first stage of the next step.

use crate::error::{Error, Result};
use crate::model::{Packed, PACKED_LEN};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
// 5th-order weights (also row 7 of A).
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Order of the propagated solution.
pub const METHOD_ORDER: u32 = 5;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub steps: usize,
    pub rejected_steps: usize,
    pub rhs_evals: usize,
}

impl std::ops::AddAssign for SolverStats {
    fn add_assign(&mut self, rhs: Self) {
        self.steps += rhs.steps;
        self.rejected_steps += rhs.rejected_steps;
        self.rhs_evals += rhs.rhs_evals;
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub max_steps: usize,
    /// Constant step with error control disabled.
    pub fixed_step: Option<f64>,
}

#[inline]
fn axpy(y: &Packed, h: f64, terms: &[(f64, &Packed)]) -> Packed {
    let mut out = *y;
    for (coef, k) in terms {
        let s = h * coef;
        for i in 0..PACKED_LEN {
            out[i] += s * k[i];
        }
    }
    out
}

/// Cubic Hermite interpolant on `[t0, t0 + h]` evaluated at `theta ∈ [0, 1]`.
#[inline]
fn hermite(y0: &Packed, f0: &Packed, y1: &Packed, f1: &Packed, h: f64, theta: f64) -> Packed {
    let t2 = theta * theta;
    let t3 = t2 * theta;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + theta;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let mut out = [0.0; PACKED_LEN];
    for i in 0..PACKED_LEN {
        out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
    }
    out
}

fn error_norm(err: &Packed, y0: &Packed, y1: &Packed, ctl: &StepControl) -> f64 {
    let mut acc = 0.0;
    for i in 0..PACKED_LEN {
        let scale = ctl.atol + ctl.rtol * y0[i].abs().max(y1[i].abs());
        let r = err[i] / scale;
        acc += r * r;
    }
    (acc / PACKED_LEN as f64).sqrt()
}

/// Initial step guess following Hairer, Nørsett & Wanner (II.4).
fn initial_step<F>(f: &mut F, t0: f64, y0: &Packed, f0: &Packed, span: f64, ctl: &StepControl, evals: &mut usize) -> f64
where
    F: FnMut(f64, &Packed, &mut Packed),
{
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..PACKED_LEN {
        let sc = ctl.atol + ctl.rtol * y0[i].abs();
        d0 += (y0[i] / sc).powi(2);
        d1 += (f0[i] / sc).powi(2);
    }
    d0 = (d0 / PACKED_LEN as f64).sqrt();
    d1 = (d1 / PACKED_LEN as f64).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span).min(ctl.max_step);
    let y1 = axpy(y0, h0, &[(1.0, f0)]);
    let mut f1 = [0.0; PACKED_LEN];
    f(t0 + h0, &y1, &mut f1);
    *evals += 1;
    let mut d2 = 0.0;
    for i in 0..PACKED_LEN {
        let sc = ctl.atol + ctl.rtol * y0[i].abs();
        d2 += ((f1[i] - f0[i]) / sc).powi(2);
    }
    d2 = (d2 / PACKED_LEN as f64).sqrt() / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / METHOD_ORDER as f64)
    };
    (100.0 * h0).min(h1).min(span).min(ctl.max_step)
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` and returns the state at each
/// of `out_times` (ascending, inside `[t0, t1]`).
///
/// `check` runs after every accepted step; an error aborts the integration.
pub(crate) fn integrate_segment<F, C>(
    mut f: F,
    t0: f64,
    t1: f64,
    y0: Packed,
    out_times: &[f64],
    ctl: &StepControl,
    mut check: C,
) -> Result<(Vec<Packed>, SolverStats)>
where
    F: FnMut(f64, &Packed, &mut Packed),
    C: FnMut(f64, &Packed) -> Result<()>,
{
    let span = t1 - t0;
    let mut stats = SolverStats::default();
    let mut outputs = Vec::with_capacity(out_times.len());
    let mut next_out = 0;
    while next_out < out_times.len() && out_times[next_out] <= t0 {
        outputs.push(y0);
        next_out += 1;
    }

    let mut t = t0;
    let mut y = y0;
    let mut k1 = [0.0; PACKED_LEN];
    f(t, &y, &mut k1);
    stats.rhs_evals += 1;

    let (mut h, fixed) = match ctl.fixed_step {
        Some(hf) => {
            let n = (span / hf).ceil().max(1.0);
            (span / n, true)
        }
        None => (initial_step(&mut f, t, &y, &k1, span, ctl, &mut stats.rhs_evals), false),
    };
    let h_floor = 1e-13 * t1.abs().max(1.0);

    let mut k2 = [0.0; PACKED_LEN];
    let mut k3 = [0.0; PACKED_LEN];
    let mut k4 = [0.0; PACKED_LEN];
    let mut k5 = [0.0; PACKED_LEN];
    let mut k6 = [0.0; PACKED_LEN];
    let mut k7 = [0.0; PACKED_LEN];
    let mut last_reject = false;

    while t < t1 {
        if stats.steps + stats.rejected_steps >= ctl.max_steps {
            return Err(Error::IntegrationFailure { t, reason: format!("exceeded {} steps", ctl.max_steps) });
        }
        let remaining = t1 - t;
        let last = h >= remaining * (1.0 - 1e-12);
        if last {
            h = remaining;
        }
        if !fixed && h < h_floor {
            return Err(Error::IntegrationFailure {
                t,
                reason: format!("step size underflow (h = {h:e}); the problem may be stiff"),
            });
        }

        f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]), &mut k2);
        f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]), &mut k3);
        f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]), &mut k4);
        f(t + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]), &mut k5);
        let t_new = if last { t1 } else { t + h };
        f(t_new, &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]), &mut k6);
        let y_new = axpy(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        f(t_new, &y_new, &mut k7);
        stats.rhs_evals += 6;

        let mut h_next = h;
        if !fixed {
            let err_vec = axpy(&[0.0; PACKED_LEN], h, &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)]);
            let err = error_norm(&err_vec, &y, &y_new, ctl);
            if !err.is_finite() {
                return Err(Error::IntegrationFailure { t, reason: "non-finite error estimate".into() });
            }
            let factor = if err == 0.0 { MAX_FACTOR } else { SAFETY * err.powf(-1.0 / METHOD_ORDER as f64) };
            let factor = factor.clamp(MIN_FACTOR, if last_reject { 1.0 } else { MAX_FACTOR });
            h_next = (h * factor).min(ctl.max_step);
            if err > 1.0 {
                stats.rejected_steps += 1;
                last_reject = true;
                h = h_next;
                continue;
            }
            last_reject = false;
        }

        emit(&mut outputs, &mut next_out, out_times, t, h, t_new, &y, &k1, &y_new, &k7);
        t = t_new;
        y = y_new;
        k1 = k7;
        stats.steps += 1;
        check(t, &y)?;
        h = h_next;
    }
    while next_out < out_times.len() {
        outputs.push(y);
        next_out += 1;
    }
    Ok((outputs, stats))
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn emit(
    outputs: &mut Vec<Packed>,
    next_out: &mut usize,
    out_times: &[f64],
    t: f64,
    h: f64,
    t_new: f64,
    y: &Packed,
    f0: &Packed,
    y_new: &Packed,
    f1: &Packed,
) {
    while *next_out < out_times.len() && out_times[*next_out] <= t_new {
        let to = out_times[*next_out];
        if to == t_new {
            outputs.push(*y_new);
        } else {
            let theta = ((to - t) / h).clamp(0.0, 1.0);
            outputs.push(hermite(y, f0, y_new, f1, h, theta));
        }
        *next_out += 1;
    }
}
