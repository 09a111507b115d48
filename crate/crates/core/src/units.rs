//! Conversion between laboratory units and the internal angular units.
//!
//! Rates and detunings quoted as "X MHz" are ordinary frequencies; the
//! simulator works in rad/μs, so `1 MHz ↦ 2π rad/μs`.

use std::f64::consts::TAU;

/// Ordinary frequency in MHz to angular frequency in rad/μs.
#[inline]
pub fn mhz(freq_mhz: f64) -> f64 {
    TAU * freq_mhz
}

/// Angular frequency in rad/μs to ordinary frequency in MHz.
#[inline]
pub fn to_mhz(rad_per_us: f64) -> f64 {
    rad_per_us / TAU
}

/// Ordinary frequency in kHz to rad/μs.
#[inline]
pub fn khz(freq_khz: f64) -> f64 {
    mhz(freq_khz * 1e-3)
}

/// Decay rate (rad/μs) of a level with the given lifetime in μs.
#[inline]
pub fn rate_from_lifetime_us(lifetime_us: f64) -> f64 {
    1.0 / lifetime_us
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        assert!((to_mhz(mhz(6.065)) - 6.065).abs() < 1e-15);
        assert!((khz(100.0) - mhz(0.1)).abs() < 1e-15);
    }
}
