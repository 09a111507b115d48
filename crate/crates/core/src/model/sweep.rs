use crate::error::{Error, Result};
use crate::units;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanMode {
    Single,
    /// Forward scan followed by the reverse scan, total time `2 * duration_single`.
    Double,
}

/// Linear probe-detuning chirp, optionally followed by its time reverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepProgram {
    /// rad/μs
    pub delta_start: f64,
    /// rad/μs
    pub delta_end: f64,
    /// μs
    pub duration_single: f64,
    pub mode: ScanMode,
}

impl Default for SweepProgram {
    /// ±20 MHz in 480 μs, forward then back.
    fn default() -> Self {
        Self {
            delta_start: units::mhz(-20.0),
            delta_end: units::mhz(20.0),
            duration_single: 480.0,
            mode: ScanMode::Double,
        }
    }
}

impl SweepProgram {
    pub fn new(delta_start: f64, delta_end: f64, duration_single: f64, mode: ScanMode) -> Result<Self> {
        let s = Self { delta_start, delta_end, duration_single, mode };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_start.is_finite() && self.delta_end.is_finite()) {
            return Err(Error::InvalidParameter("sweep endpoints must be finite".into()));
        }
        if !(self.duration_single.is_finite() && self.duration_single > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sweep duration must be positive, got {}",
                self.duration_single
            )));
        }
        if self.delta_start == self.delta_end {
            return Err(Error::InvalidParameter("sweep start and end detunings coincide".into()));
        }
        Ok(())
    }

    pub fn total_duration(&self) -> f64 {
        match self.mode {
            ScanMode::Single => self.duration_single,
            ScanMode::Double => 2.0 * self.duration_single,
        }
    }

    /// Time intervals on which the detuning is linear.
    pub fn segments(&self) -> Vec<(f64, f64)> {
        match self.mode {
            ScanMode::Single => vec![(0.0, self.duration_single)],
            ScanMode::Double => vec![
                (0.0, self.duration_single),
                (self.duration_single, 2.0 * self.duration_single),
            ],
        }
    }

    /// Probe detuning at time `t` (clamped to the program duration).
    pub fn detuning(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.total_duration());
        let d = self.duration_single;
        let local = if t <= d { t } else { 2.0 * d - t };
        self.delta_start + (self.delta_end - self.delta_start) * (local / d)
    }

    /// Detuning rate of change on the segment containing `t`; at the turning
    /// point the forward value is returned.
    pub fn detuning_rate(&self, t: f64) -> f64 {
        let slope = (self.delta_end - self.delta_start) / self.duration_single;
        if self.mode == ScanMode::Double && t > self.duration_single {
            -slope
        } else {
            slope
        }
    }
}
