#![allow(dead_code)]

use rydberg_eit::units::mhz;
use rydberg_eit::{probe_rabi_from_power, SweepProgram, SystemParams};

pub const BEAM_RADIUS_MM: f64 = 0.75;
pub const I_SAT_MW_CM2: f64 = 1.67;

/// Weak-probe dark-resonance settings: 200 nW probe, 1.8 MHz coupling,
/// 100 kHz dephasing, unit optical depth, no nonlinear loss.
pub fn weak_probe_params() -> SystemParams {
    with_probe_power(0.2)
}

/// Same ladder, strong 3.6 μW probe (nonlinear loss set by the caller).
pub fn strong_probe_params() -> SystemParams {
    with_probe_power(3.6)
}

pub fn with_probe_power(power_uw: f64) -> SystemParams {
    let base = SystemParams { omega_c: mhz(1.8), gamma31: mhz(0.1), od0: 1.0, ..Default::default() };
    let probe = probe_rabi_from_power(power_uw, BEAM_RADIUS_MM, I_SAT_MW_CM2, base.gamma2).unwrap();
    SystemParams { omega_p: probe.omega_p, ..base }
}

/// ±20 MHz in 480 μs, up then down.
pub fn double_scan() -> SweepProgram {
    SweepProgram::default()
}
