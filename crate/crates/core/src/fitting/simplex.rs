//! Nelder–Mead simplex on the unit box.

use crate::error::Result;

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

pub(crate) const VALUE_SPREAD_TOL: f64 = 1e-12;
pub(crate) const PARAM_SPREAD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SimplexOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best value after each iteration.
    pub history: Vec<f64>,
}

fn project(x: &mut [f64]) {
    for v in x.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
}

fn blend(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t (b − a), projected back into the box.
    let mut x: Vec<f64> = a.iter().zip(b).map(|(a, b)| a + t * (b - a)).collect();
    project(&mut x);
    x
}

/// Minimizes `f` over `[0, 1]^k` starting from `x0`.
///
/// Trial points leaving the box are projected onto it. Stops when the spread
/// of simplex values drops below `1e-12 (1 + f_best)` or every vertex lies
/// within `1e-6` of the best one in each coordinate.
pub(crate) fn minimize<F>(mut f: F, x0: &[f64], step: f64, max_iter: usize) -> Result<SimplexOutcome>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    let k = x0.len();
    let mut start = x0.to_vec();
    project(&mut start);

    let mut simplex = vec![start.clone()];
    for i in 0..k {
        let mut v = start.clone();
        v[i] = if v[i] + step <= 1.0 { v[i] + step } else { v[i] - step };
        simplex.push(v);
    }
    let mut values = Vec::with_capacity(k + 1);
    for v in &simplex {
        values.push(f(v)?);
    }

    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    loop {
        let mut order: Vec<usize> = (0..=k).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let best = values[0];
        let spread = values[k] - best;
        let width = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread < VALUE_SPREAD_TOL * (1.0 + best.abs()) || width < PARAM_SPREAD_TOL {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; k];
        for v in &simplex[..k] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / k as f64;
            }
        }
        let worst = simplex[k].clone();

        let xr = blend(&centroid, &worst, -REFLECT);
        let fr = f(&xr)?;
        if fr < values[0] {
            let xe = blend(&centroid, &worst, -EXPAND);
            let fe = f(&xe)?;
            if fe < fr {
                simplex[k] = xe;
                values[k] = fe;
            } else {
                simplex[k] = xr;
                values[k] = fr;
            }
        } else if fr < values[k - 1] {
            simplex[k] = xr;
            values[k] = fr;
        } else {
            let (xc, fc) = if fr < values[k] {
                let xc = blend(&centroid, &xr, CONTRACT);
                let fc = f(&xc)?;
                (xc, fc)
            } else {
                let xc = blend(&centroid, &worst, CONTRACT);
                let fc = f(&xc)?;
                (xc, fc)
            };
            if fc < fr.min(values[k]) {
                simplex[k] = xc;
                values[k] = fc;
            } else {
                for i in 1..=k {
                    simplex[i] = blend(&simplex[0], &simplex[i], SHRINK);
                    values[i] = f(&simplex[i])?;
                }
            }
        }
        history.push(values.iter().copied().fold(f64::INFINITY, f64::min));
    }

    Ok(SimplexOutcome { x: simplex[0].clone(), value: values[0], iterations, converged, history })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_minimum() {
        let f = |x: &[f64]| Ok((x[0] - 0.3).powi(2) + 10.0 * (x[1] - 0.7).powi(2));
        let out = minimize(f, &[0.9, 0.1], 0.1, 2000).unwrap();
        assert!(out.converged);
        assert!((out.x[0] - 0.3).abs() < 1e-4 && (out.x[1] - 0.7).abs() < 1e-4);
    }

    #[test]
    fn stops_on_the_boundary() {
        let f = |x: &[f64]| Ok((x[0] + 0.5).powi(2) + (x[1] - 0.5).powi(2));
        let out = minimize(f, &[0.5, 0.5], 0.1, 2000).unwrap();
        assert!(out.x[0].abs() < 1e-5);
        assert!(out.x.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn history_never_increases() {
        let f = |x: &[f64]| Ok((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2));
        let out = minimize(f, &[0.1, 0.9], 0.2, 500).unwrap();
        for w in out.history.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn reports_exhausted_budget() {
        let f = |x: &[f64]| Ok((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2));
        let out = minimize(f, &[0.0, 1.0], 0.1, 3).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 3);
    }
}
