use crate::error::{Error, Result};
use crate::units;

/// Physical rates and couplings of the four-level ladder.
///
/// All frequencies are angular, in rad/μs. `density_scale` is the atom
/// density relative to the reference density and multiplies both the
/// nonlinear loss coefficient and the optical depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Probe Rabi frequency on |1⟩→|2⟩.
    pub omega_p: f64,
    /// Coupling Rabi frequency on |2⟩→|3⟩.
    pub omega_c: f64,
    /// Coupling laser detuning.
    pub delta_c: f64,
    /// Spontaneous decay rate of |2⟩.
    pub gamma2: f64,
    /// Spontaneous decay rate of the Rydberg level |3⟩.
    pub gamma3: f64,
    /// Density-dependent loss coefficient; the |3⟩ loss term is `gamma3p * σ33²`.
    pub gamma3p: f64,
    /// Return rate from the reservoir |4⟩ to |1⟩.
    pub gamma4: f64,
    /// Extra dephasing of coherences involving |3⟩ (laser linewidth plus interactions).
    pub gamma31: f64,
    /// Fraction of the spontaneous |3⟩ decay that lands in |2⟩; the rest goes to |4⟩.
    pub branch_b: f64,
    /// Resonant two-level optical depth at the reference density.
    pub od0: f64,
    /// Density relative to the reference density.
    pub density_scale: f64,
    /// Whether `gamma31` also dephases the |3⟩–|2⟩ coherence.
    pub gamma31_dephases_32: bool,
}

/// Rb D2 natural linewidth, 6.065 MHz.
pub const DEFAULT_GAMMA2_MHZ: f64 = 6.065;
/// Rydberg lifetime used for the default `gamma3`.
pub const DEFAULT_RYDBERG_LIFETIME_US: f64 = 10.0;
/// Reservoir return, 10 Hz: a 16 ms lifetime, long against a 960 μs double scan.
pub const DEFAULT_GAMMA4_MHZ: f64 = 1e-5;

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            omega_p: 0.0,
            omega_c: 0.0,
            delta_c: 0.0,
            gamma2: units::mhz(DEFAULT_GAMMA2_MHZ),
            gamma3: units::rate_from_lifetime_us(DEFAULT_RYDBERG_LIFETIME_US),
            gamma3p: 0.0,
            gamma4: units::mhz(DEFAULT_GAMMA4_MHZ),
            gamma31: 0.0,
            branch_b: 0.5,
            od0: 1.0,
            density_scale: 1.0,
            gamma31_dephases_32: true,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("omega_p", self.omega_p),
            ("omega_c", self.omega_c),
            ("delta_c", self.delta_c),
            ("gamma2", self.gamma2),
            ("gamma3", self.gamma3),
            ("gamma3p", self.gamma3p),
            ("gamma4", self.gamma4),
            ("gamma31", self.gamma31),
            ("branch_b", self.branch_b),
            ("od0", self.od0),
            ("density_scale", self.density_scale),
        ];
        for (name, value) in finite {
            if !value.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} is not finite ({value})")));
            }
        }
        let non_negative = [
            ("gamma2", self.gamma2),
            ("gamma3", self.gamma3),
            ("gamma3p", self.gamma3p),
            ("gamma4", self.gamma4),
            ("gamma31", self.gamma31),
            ("od0", self.od0),
            ("density_scale", self.density_scale),
        ];
        for (name, value) in non_negative {
            if value < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} must be >= 0, got {value}")));
            }
        }
        if !(0.0..=1.0).contains(&self.branch_b) {
            return Err(Error::InvalidParameter(format!(
                "branch_b must lie in [0, 1], got {}",
                self.branch_b
            )));
        }
        Ok(())
    }

    /// Nonlinear loss coefficient at the configured density.
    #[inline]
    pub fn effective_gamma3p(&self) -> f64 {
        self.gamma3p * self.density_scale
    }

    /// Optical depth at the configured density.
    #[inline]
    pub fn effective_od0(&self) -> f64 {
        self.od0 * self.density_scale
    }
}

/// Saturation fraction and probe Rabi frequency for a given beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeCoupling {
    pub sat_fraction: f64,
    /// rad/μs
    pub omega_p: f64,
}

/// Probe Rabi frequency from optical power for a uniform (top-hat) beam.
///
/// `I = P / (π r²)`, `s = I / I_sat`, `Ω_p = γ₂ √(s/2)`.
pub fn probe_rabi_from_power(
    power_uw: f64,
    beam_radius_mm: f64,
    i_sat_mw_per_cm2: f64,
    gamma2: f64,
) -> Result<ProbeCoupling> {
    for (name, value) in [
        ("power_uW", power_uw),
        ("beam_radius_mm", beam_radius_mm),
        ("i_sat_mW_per_cm2", i_sat_mw_per_cm2),
        ("gamma2", gamma2),
    ] {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {value}")));
        }
    }
    let power_mw = power_uw * 1e-3;
    let radius_cm = beam_radius_mm * 0.1;
    let intensity = power_mw / (std::f64::consts::PI * radius_cm * radius_cm);
    let sat_fraction = intensity / i_sat_mw_per_cm2;
    Ok(ProbeCoupling {
        sat_fraction,
        omega_p: gamma2 * (sat_fraction / 2.0).sqrt(),
    })
}
