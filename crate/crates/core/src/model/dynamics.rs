//! Hamiltonian, dissipation and the nonlinear master-equation right-hand side.
//!
//! Rotating frame, rotating-wave approximation, basis |1⟩,|2⟩,|3⟩,|4⟩:
//!
//! ```text
//! H/ħ = [ 0      -Ωp/2   0            0 ]
//!       [ -Ωp/2  -Δp     -Ωc/2        0 ]
//!       [ 0      -Ωc/2   -(Δp + Δc)   0 ]
//!       [ 0      0       0            0 ]
//! ```
//!
//! With the dipole coupling sign `-Ω/2`, an absorbing probe has `Im σ21 > 0`
//! and two-photon resonance sits at `Δp = -Δc`.

use num_complex::Complex64;

use super::params::SystemParams;
use super::state::{idx, CMatrix4, DensityMatrix, Packed, POPULATION_TOL};
use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Rotating-frame Hamiltonian divided by ħ, in rad/μs.
pub fn hamiltonian(params: &SystemParams, delta_p: f64) -> Result<CMatrix4> {
    let inputs = [
        ("omega_p", params.omega_p),
        ("omega_c", params.omega_c),
        ("delta_c", params.delta_c),
        ("delta_p", delta_p),
    ];
    if let Some((name, v)) = inputs.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name} is not finite ({v})")));
    }
    let mut h = CMatrix4::zeros();
    let half_p = Complex64::new(-0.5 * params.omega_p, 0.0);
    let half_c = Complex64::new(-0.5 * params.omega_c, 0.0);
    h[(1, 1)] = Complex64::new(-delta_p, 0.0);
    h[(2, 2)] = Complex64::new(-(delta_p + params.delta_c), 0.0);
    h[(0, 1)] = half_p;
    h[(1, 0)] = half_p;
    h[(1, 2)] = half_c;
    h[(2, 1)] = half_c;
    Ok(h)
}

/// Population-transfer coefficients and coherence damping rates, evaluated
/// at a given Rydberg population.
///
/// Population flows are `k * σ_source`: e.g. the |3⟩→|4⟩ flow is
/// `k34 * σ33`, where `k34` already contains the nonlinear `γ₃′σ33`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRates {
    /// |2⟩→|1⟩, γ₂.
    pub k21: f64,
    /// |3⟩→|2⟩, b·γ₃.
    pub k32: f64,
    /// |3⟩→|4⟩, (1−b)·γ₃ + γ₃′σ33.
    pub k34: f64,
    /// |4⟩→|1⟩, γ₄.
    pub k41: f64,
    /// Damping of σ21.
    pub g21: f64,
    /// Damping of σ31.
    pub g31: f64,
    /// Damping of σ32.
    pub g32: f64,
}

/// Population flows between levels, per μs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationFlows {
    pub f21: f64,
    pub f32: f64,
    pub f34: f64,
    pub f41: f64,
}

impl DecayRates {
    pub fn flows(&self, populations: [f64; 4]) -> PopulationFlows {
        PopulationFlows {
            f21: self.k21 * populations[1],
            f32: self.k32 * populations[2],
            f34: self.k34 * populations[2],
            f41: self.k41 * populations[3],
        }
    }

    /// Total decay rate out of |3⟩ per unit population.
    pub fn rydberg_outflow(&self) -> f64 {
        self.k32 + self.k34
    }
}

pub fn decay_rates(params: &SystemParams, sigma33: f64) -> Result<DecayRates> {
    if !(-POPULATION_TOL..=1.0 + POPULATION_TOL).contains(&sigma33) {
        return Err(Error::StateValidity(format!("sigma33 = {sigma33} outside [0, 1]")));
    }
    let nonlinear = params.effective_gamma3p() * sigma33.max(0.0);
    Ok(rates_with_frozen_loss(params, nonlinear))
}

/// Decay table with the state-dependent loss rate `γ₃′σ33` supplied directly.
pub(crate) fn rates_with_frozen_loss(params: &SystemParams, nonlinear: f64) -> DecayRates {
    let b = params.branch_b;
    let extra_32 = if params.gamma31_dephases_32 { params.gamma31 } else { 0.0 };
    DecayRates {
        k21: params.gamma2,
        k32: b * params.gamma3,
        k34: (1.0 - b) * params.gamma3 + nonlinear,
        k41: params.gamma4,
        g21: 0.5 * params.gamma2,
        g31: 0.5 * (params.gamma3 + nonlinear) + params.gamma31,
        g32: 0.5 * (params.gamma2 + params.gamma3 + nonlinear) + extra_32,
    }
}

/// dσ/dt = −i[H, σ] + dissipation, in 1/μs.
pub fn liouvillian_rhs(state: &DensityMatrix, params: &SystemParams, delta_p: f64) -> Result<CMatrix4> {
    state.validate()?;
    params.validate()?;
    let h = hamiltonian(params, delta_p)?;
    let s = state.matrix();
    let mut d = (h * s - s * h) * (-I);

    let rates = decay_rates(params, state.population(2))?;
    let flows = rates.flows(state.populations());
    d[(0, 0)] += flows.f21 + flows.f41;
    d[(1, 1)] += flows.f32 - flows.f21;
    d[(2, 2)] -= flows.f32 + flows.f34;
    d[(3, 3)] += flows.f34 - flows.f41;

    for (i, j, g) in [(1, 0, rates.g21), (2, 0, rates.g31), (2, 1, rates.g32)] {
        d[(i, j)] -= s[(i, j)] * g;
        d[(j, i)] -= s[(j, i)] * g;
    }
    for k in 0..3 {
        d[(k, 3)] = Complex64::new(0.0, 0.0);
        d[(3, k)] = Complex64::new(0.0, 0.0);
    }
    Ok(d)
}

/// Right-hand side on the packed 10-component state, written out by hand.
/// This is the hot loop of every integration.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PackedRhs {
    half_p: f64,
    half_c: f64,
    delta_c: f64,
    gamma3p: f64,
    params: SystemParams,
}

impl PackedRhs {
    pub fn new(params: &SystemParams) -> Self {
        Self {
            half_p: 0.5 * params.omega_p,
            half_c: 0.5 * params.omega_c,
            delta_c: params.delta_c,
            gamma3p: params.effective_gamma3p(),
            params: *params,
        }
    }

    #[inline]
    pub fn eval(&self, delta_p: f64, y: &Packed, dy: &mut Packed) {
        let nonlinear = self.gamma3p * y[idx::P3].max(0.0);
        self.eval_frozen(delta_p, nonlinear, y, dy);
    }

    /// Same as [`eval`](Self::eval) with the nonlinear loss rate held at
    /// `nonlinear`; the map `y ↦ dy` is then linear.
    #[inline]
    pub fn eval_frozen(&self, delta_p: f64, nonlinear: f64, y: &Packed, dy: &mut Packed) {
        use idx::*;
        let r = rates_with_frozen_loss(&self.params, nonlinear);
        let (a, c) = (self.half_p, self.half_c);
        let dc = self.delta_c;
        let d2 = delta_p + dc;

        let (p1, p2, p3, p4) = (y[P1], y[P2], y[P3], y[P4]);
        let s21 = Complex64::new(y[RE21], y[IM21]);
        let s31 = Complex64::new(y[RE31], y[IM31]);
        let s32 = Complex64::new(y[RE32], y[IM32]);

        let f21 = r.k21 * p2;
        let f32 = r.k32 * p3;
        let f34 = r.k34 * p3;
        let f41 = r.k41 * p4;

        dy[P1] = -2.0 * a * s21.im + f21 + f41;
        dy[P2] = 2.0 * a * s21.im - 2.0 * c * s32.im - f21 + f32;
        dy[P3] = 2.0 * c * s32.im - f32 - f34;
        dy[P4] = f34 - f41;

        let ds21 = I * (a * (p1 - p2) + delta_p * s21 + c * s31) - r.g21 * s21;
        let ds31 = I * (c * s21 + d2 * s31 - a * s32) - r.g31 * s31;
        let ds32 = I * (c * (p2 - p3) + dc * s32 - a * s31) - r.g32 * s32;

        dy[RE21] = ds21.re;
        dy[IM21] = ds21.im;
        dy[RE31] = ds31.re;
        dy[IM31] = ds31.im;
        dy[RE32] = ds32.re;
        dy[IM32] = ds32.im;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::state::PACKED_LEN;
    use crate::units::mhz;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn no_fields_no_detuning_gives_zero_hamiltonian() {
        let p = SystemParams::default();
        assert_eq!(hamiltonian(&p, 0.0).unwrap(), CMatrix4::zeros());
    }

    #[test]
    fn detuning_only_shifts_diagonal() {
        let p = SystemParams::default();
        let h = hamiltonian(&p, mhz(20.0)).unwrap();
        let mut expect = CMatrix4::zeros();
        expect[(1, 1)] = c(-mhz(20.0));
        expect[(2, 2)] = c(-mhz(20.0));
        assert_eq!(h, expect);
    }

    #[test]
    fn couplings_on_off_diagonals() {
        let p = SystemParams { omega_p: mhz(1.55), omega_c: mhz(1.8), ..Default::default() };
        let h = hamiltonian(&p, 0.0).unwrap();
        assert!((h[(0, 1)].re + mhz(0.775)).abs() < 1e-12);
        assert!((h[(1, 2)].re + mhz(0.9)).abs() < 1e-12);
        assert_eq!(h[(0, 1)], h[(1, 0)]);
        assert_eq!(h[(1, 2)], h[(2, 1)]);
        for k in 0..4 {
            assert_eq!(h[(k, k)], c(0.0));
        }
        assert_eq!(h[(0, 2)], c(0.0));
        assert_eq!(h[(0, 3)], c(0.0));
    }

    #[test]
    fn hamiltonian_rejects_non_finite() {
        let p = SystemParams { omega_c: f64::INFINITY, ..Default::default() };
        assert!(matches!(hamiltonian(&p, 0.0), Err(Error::InvalidParameter(_))));
        assert!(hamiltonian(&SystemParams::default(), f64::NAN).is_err());
    }

    #[test]
    fn empty_rydberg_level_has_no_nonlinear_loss() {
        let p = SystemParams { gamma3p: 7.0, gamma31: 0.3, ..Default::default() };
        let r = decay_rates(&p, 0.0).unwrap();
        assert_eq!(r.k34, 0.5 * p.gamma3);
        assert_eq!(r.g31, 0.5 * p.gamma3 + p.gamma31);
    }

    #[test]
    fn linear_model_when_nonlinearity_off() {
        let p = SystemParams { gamma31: 0.2, ..Default::default() };
        let r = decay_rates(&p, 0.4).unwrap();
        assert_eq!(r.k34, (1.0 - p.branch_b) * p.gamma3);
        assert_eq!(r.g32, 0.5 * (p.gamma2 + p.gamma3) + 0.2);
    }

    #[test]
    fn nonlinear_flow_closed_form() {
        let p = SystemParams { gamma3: mhz(0.016), gamma3p: mhz(50.0), ..Default::default() };
        let s33 = 0.03;
        let r = decay_rates(&p, s33).unwrap();
        let flows = r.flows([0.97, 0.0, s33, 0.0]);
        let expect = 0.5 * mhz(0.016) * 0.03 + mhz(50.0) * 0.0009;
        assert!((flows.f34 - expect).abs() < 1e-14);
        let total = r.rydberg_outflow() * s33;
        let parts = p.branch_b * p.gamma3 * s33 + (1.0 - p.branch_b) * p.gamma3 * s33 + p.gamma3p * s33 * s33;
        assert!((total - parts).abs() < 1e-14);
        assert!((flows.f32 + flows.f34 - total).abs() < 1e-15);
    }

    #[test]
    fn decay_rates_reject_out_of_range_population() {
        let p = SystemParams::default();
        assert!(matches!(decay_rates(&p, 1.1), Err(Error::StateValidity(_))));
        assert!(decay_rates(&p, -0.01).is_err());
    }

    #[test]
    fn dark_ground_state_is_stationary() {
        let p = SystemParams { omega_c: mhz(1.8), gamma3p: 10.0, gamma31: 0.3, ..Default::default() };
        let d = liouvillian_rhs(&DensityMatrix::ground(), &p, mhz(3.0)).unwrap();
        assert!(d.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn rydberg_level_decays_through_both_channels() {
        let p = SystemParams { gamma3: 0.1, gamma3p: 2.0, branch_b: 0.5, ..Default::default() };
        let s = DensityMatrix::basis(2).unwrap();
        let d = liouvillian_rhs(&s, &p, 0.0).unwrap();
        assert!((d[(2, 2)].re + (0.1 + 2.0)).abs() < 1e-14);
        assert!((d[(1, 1)].re - 0.05).abs() < 1e-14);
        assert!((d[(3, 3)].re - (0.05 + 2.0)).abs() < 1e-14);
        assert!(d[(0, 0)].re.abs() < 1e-14);
    }

    fn random_state(raw: &[f64]) -> DensityMatrix {
        // Normalize four non-negative weights and keep coherences inside the
        // Cauchy–Schwarz bound so the state is a valid density matrix.
        let w: Vec<f64> = raw[..4].iter().map(|x| x.abs() + 1e-3).collect();
        let total: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|x| x / total).collect();
        let mut y = [0.0; PACKED_LEN];
        y[..4].copy_from_slice(&p);
        let bound = |i: usize, j: usize| 0.5 * (p[i] * p[j]).sqrt();
        let pairs = [(1, 0), (2, 0), (2, 1)];
        for (k, (i, j)) in pairs.iter().enumerate() {
            y[4 + 2 * k] = raw[4 + 2 * k] * bound(*i, *j);
            y[5 + 2 * k] = raw[5 + 2 * k] * bound(*i, *j);
        }
        DensityMatrix::from_packed(&y)
    }

    fn random_params(raw: &[f64]) -> SystemParams {
        SystemParams {
            omega_p: raw[0] * 20.0,
            omega_c: raw[1] * 20.0,
            delta_c: raw[2] * 10.0,
            gamma3: raw[3].abs(),
            gamma3p: raw[4].abs() * 50.0,
            gamma4: raw[5].abs(),
            gamma31: raw[6].abs() * 2.0,
            branch_b: raw[7].abs().min(1.0),
            ..Default::default()
        }
    }

    proptest! {
        #[test]
        fn rhs_is_hermitian_and_traceless(
            s in proptest::collection::vec(-1.0f64..1.0, 10),
            q in proptest::collection::vec(-1.0f64..1.0, 8),
            delta in -150.0f64..150.0,
        ) {
            let rho = random_state(&s);
            let p = random_params(&q);
            let d = liouvillian_rhs(&rho, &p, delta).unwrap();
            let norm = d.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let tr: Complex64 = (0..4).map(|k| d[(k, k)]).sum();
            prop_assert!(tr.norm() <= 1e-12 * norm.max(1e-300));
            prop_assert!(crate::model::state::hermiticity_error(&d) <= 1e-12 * norm.max(1.0));
            for k in 0..3 {
                prop_assert_eq!(d[(k, 3)].norm(), 0.0);
                prop_assert_eq!(d[(3, k)].norm(), 0.0);
            }
        }

        #[test]
        fn packed_route_matches_commutator_route(
            s in proptest::collection::vec(-1.0f64..1.0, 10),
            q in proptest::collection::vec(-1.0f64..1.0, 8),
            delta in -150.0f64..150.0,
        ) {
            let rho = random_state(&s);
            let p = random_params(&q);
            let full = liouvillian_rhs(&rho, &p, delta).unwrap();
            let mut dy = [0.0; PACKED_LEN];
            PackedRhs::new(&p).eval(delta, &rho.to_packed(), &mut dy);
            let packed = DensityMatrix::from_packed(&dy);
            let scale = full.iter().map(|z| z.norm()).fold(1.0, f64::max);
            for i in 0..4 {
                for j in 0..4 {
                    prop_assert!((packed.coherence(i, j) - full[(i, j)]).norm() <= 1e-12 * scale);
                }
            }
        }

        #[test]
        fn flows_non_negative_and_consistent(s33 in 0.0f64..=1.0, q in proptest::collection::vec(-1.0f64..1.0, 8)) {
            let p = random_params(&q);
            let r = decay_rates(&p, s33).unwrap();
            let f = r.flows([0.2, 0.3, s33, 0.1]);
            prop_assert!(f.f21 >= 0.0 && f.f32 >= 0.0 && f.f34 >= 0.0 && f.f41 >= 0.0);
            let out = r.rydberg_outflow() * s33;
            prop_assert!((out - (f.f32 + f.f34)).abs() <= 1e-12 * out.max(1e-300));
        }

        #[test]
        fn hamiltonian_superposition(
            p1 in -30.0f64..30.0, c1 in -30.0f64..30.0, d1 in -100.0f64..100.0,
            p2 in -30.0f64..30.0, c2 in -30.0f64..30.0, d2 in -100.0f64..100.0,
            dc in -10.0f64..10.0,
        ) {
            let mk = |op, oc| SystemParams { omega_p: op, omega_c: oc, delta_c: dc, ..Default::default() };
            // Linear in the Rabi frequencies at fixed detuning.
            let zero = hamiltonian(&mk(0.0, 0.0), d1).unwrap();
            let sum = hamiltonian(&mk(p1 + p2, c1 + c2), d1).unwrap() - zero;
            let parts = (hamiltonian(&mk(p1, c1), d1).unwrap() - zero) + (hamiltonian(&mk(p2, c2), d1).unwrap() - zero);
            prop_assert!((sum - parts).norm() <= 1e-12 * (1.0 + sum.norm()));
            // Affine in the probe detuning.
            let hm = hamiltonian(&mk(p1, c1), 0.5 * (d1 + d2)).unwrap();
            let avg = (hamiltonian(&mk(p1, c1), d1).unwrap() + hamiltonian(&mk(p1, c1), d2).unwrap()) * Complex64::new(0.5, 0.0);
            prop_assert!((hm - avg).norm() <= 1e-12 * (1.0 + hm.norm()));
        }
    }
}
