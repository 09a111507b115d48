mod common;

use rydberg_eit::fitting::{fit, synthesize_data, FitParam, FitProblem, FreeParam};
use rydberg_eit::units::mhz;
use rydberg_eit::*;

/// A short single scan across the dark resonance keeps each forward
/// simulation cheap.
fn short_scan() -> (SweepProgram, SolverOptions) {
    let sweep = SweepProgram::new(mhz(-5.0), mhz(5.0), 60.0, ScanMode::Single).unwrap();
    (sweep, SolverOptions { output_points: 241, ..Default::default() })
}

fn problem(data: Spectrum, free: Vec<FreeParam>) -> FitProblem {
    let (sweep, solver) = short_scan();
    FitProblem { solver, n_starts: 2, ..FitProblem::new(data, free, common::weak_probe_params(), sweep) }
}

fn physical_free() -> Vec<FreeParam> {
    vec![
        FreeParam::new(FitParam::OmegaC, 1.5, 0.8, 3.0),
        FreeParam::new(FitParam::Gamma31, 0.15, 0.0, 0.5),
        FreeParam::new(FitParam::Od0, 0.8, 0.2, 3.0),
    ]
}

#[test]
fn noise_has_the_requested_spread() {
    let p = common::weak_probe_params();
    let sweep = common::double_scan();
    let opts = SolverOptions::default();
    let clean = synthesize_data(&p, &sweep, &opts, 0.0, 0).unwrap();
    let noisy = synthesize_data(&p, &sweep, &opts, 0.005, 11).unwrap();
    let fwd: Vec<f64> = clean
        .rows
        .iter()
        .zip(&noisy.rows)
        .filter(|(c, _)| c.direction == Direction::Forward)
        .map(|(c, n)| n.transmission - c.transmission)
        .collect();
    assert_eq!(fwd.len(), 801);
    let mean = fwd.iter().sum::<f64>() / fwd.len() as f64;
    let sd = (fwd.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (fwd.len() - 1) as f64).sqrt();
    assert!((sd / 0.005 - 1.0).abs() <= 0.15, "sample sd {sd}");
}

#[test]
fn shifted_axis_is_absorbed_by_the_offset() {
    let (sweep, solver) = short_scan();
    let truth = common::weak_probe_params();
    let data = synthesize_data(&truth, &sweep, &solver, 0.003, 1).unwrap();
    let mut shifted = data.clone();
    for r in &mut shifted.rows {
        r.delta_p_mhz += 0.25;
    }
    let mut free = physical_free();
    free.push(FreeParam::new(FitParam::DetuningOffset, 0.0, -1.0, 1.0));
    let a = fit(&problem(data, free.clone())).unwrap();
    let b = fit(&problem(shifted, free)).unwrap();
    for p in [FitParam::OmegaC, FitParam::Gamma31, FitParam::Od0] {
        let (x, y) = (a.value(p).unwrap(), b.value(p).unwrap());
        assert!((x - y).abs() <= 1e-3 * x.abs().max(0.01), "{}: {x} vs {y}", p.name());
    }
    let shift = b.value(FitParam::DetuningOffset).unwrap() - a.value(FitParam::DetuningOffset).unwrap();
    assert!((shift - 0.25).abs() < 1e-3, "offset moved by {shift}");
}

#[test]
fn fixing_dephasing_tightens_coupling_estimate() {
    let (sweep, solver) = short_scan();
    let data = synthesize_data(&common::weak_probe_params(), &sweep, &solver, 0.005, 4).unwrap();
    let joint = fit(&problem(data.clone(), physical_free())).unwrap();
    let fixed_free: Vec<FreeParam> = physical_free().into_iter().filter(|f| f.param != FitParam::Gamma31).collect();
    let conditional = fit(&problem(data, fixed_free)).unwrap();
    let (uj, uc) = (joint.uncertainty(FitParam::OmegaC).unwrap(), conditional.uncertainty(FitParam::OmegaC).unwrap());
    assert!(uc < uj, "conditional {uc} vs joint {uj}");
}

#[test]
fn fit_recovers_parameters_and_linewidth() {
    let p = common::weak_probe_params();
    let sweep = common::double_scan();
    let data = synthesize_data(&p, &sweep, &SolverOptions::default(), 0.005, 21).unwrap();
    let mut free = physical_free();
    free.push(FreeParam::new(FitParam::DetuningOffset, 0.0, -1.0, 1.0));
    let mut pr = FitProblem::new(data, free, p, sweep);
    pr.n_starts = 1;
    let res = fit(&pr).unwrap();
    assert!(res.converged);
    assert!((res.value(FitParam::OmegaC).unwrap() / 1.8 - 1.0).abs() <= 0.05);
    assert!((res.value(FitParam::Gamma31).unwrap() / 0.1 - 1.0).abs() <= 0.25);
    assert!((res.value(FitParam::Od0).unwrap() - 1.0).abs() <= 0.05);
    for u in &res.uncertainties {
        assert!(u.is_some_and(|u| u > 0.0 && u.is_finite()));
    }
    let model = evolve(&DensityMatrix::ground(), &res.params, &sweep, &SolverOptions::default()).unwrap();
    let w = extract_fwhm(&spectrum_from_trajectory(&model, &res.params).unwrap()).unwrap();
    assert!((w - 0.58).abs() <= 0.04, "best-fit FWHM {w}");
    for h in res.history.windows(2) {
        assert!(h[1] <= h[0]);
    }
}

#[test]
fn multistart_is_deterministic() {
    let (sweep, solver) = short_scan();
    let data = synthesize_data(&common::weak_probe_params(), &sweep, &solver, 0.005, 8).unwrap();
    let mut pr = problem(data, physical_free());
    pr.n_starts = 3;
    pr.seed = 99;
    let a = fit(&pr).unwrap();
    let b = fit(&pr).unwrap();
    assert_eq!(a, b);
}
