//! Transmission spectra from trajectories, the analytic weak-probe response,
//! and spectral observables (dark-resonance width, populations).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::model::SystemParams;
use crate::units;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "forward" => Some(Direction::Forward),
            "backward" => Some(Direction::Backward),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumRow {
    pub t_us: f64,
    pub delta_p_mhz: f64,
    pub direction: Direction,
    pub transmission: f64,
    pub populations: [f64; 4],
    pub sigma21: Complex64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Spectrum {
    pub rows: Vec<SpectrumRow>,
}

impl Spectrum {
    pub fn new(rows: Vec<SpectrumRow>) -> Self {
        Self { rows }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// Rows of one scan direction, in time order.
    pub fn segment(&self, direction: Direction) -> Vec<SpectrumRow> {
        self.rows.iter().filter(|r| r.direction == direction).copied().collect()
    }

    /// Direction of the first row.
    pub fn first_direction(&self) -> Option<Direction> {
        self.rows.first().map(|r| r.direction)
    }

    /// Checks transmission range, population bookkeeping and per-direction
    /// monotonic detuning.
    pub fn validate(&self) -> Result<()> {
        for (k, r) in self.rows.iter().enumerate() {
            if !(r.transmission.is_finite() && r.transmission > 0.0) {
                return Err(Error::InvalidInput(format!("row {k}: transmission {} not positive", r.transmission)));
            }
            let total: f64 = r.populations.iter().sum();
            if (total - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidInput(format!("row {k}: populations sum to {total}")));
            }
        }
        for dir in [Direction::Forward, Direction::Backward] {
            let seg = self.segment(dir);
            let sign = match dir {
                Direction::Forward => 1.0,
                Direction::Backward => -1.0,
            };
            for w in seg.windows(2) {
                if sign * (w[1].delta_p_mhz - w[0].delta_p_mhz) < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "{} segment detuning is not monotone near {} MHz",
                        dir.as_str(),
                        w[0].delta_p_mhz
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Beer–Lambert probe transmission of a thin medium.
///
/// `T = exp(−od · (γ₂/Ω_p) · Im σ21)`, normalized so that the resonant
/// weak-probe two-level coherence `Im σ21 = Ω_p/γ₂` gives `T = e^{−od}`.
pub fn transmission(sigma21: Complex64, omega_p: f64, gamma2: f64, od: f64) -> Result<f64> {
    if !(omega_p.is_finite() && omega_p > 0.0) {
        return Err(Error::InvalidParameter(format!("omega_p must be positive, got {omega_p}")));
    }
    if !(gamma2.is_finite() && gamma2 > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma2 must be positive, got {gamma2}")));
    }
    if !(od.is_finite() && od >= 0.0) {
        return Err(Error::InvalidParameter(format!("optical depth must be >= 0, got {od}")));
    }
    Ok((-od * (gamma2 / omega_p) * sigma21.im).exp())
}

/// First-order (in Ω_p) steady-state probe coherence of the three-level
/// ladder with all population in |1⟩.
pub fn weak_probe_analytic(params: &SystemParams, delta_p: f64) -> Complex64 {
    let probe = Complex64::new(0.0, 0.5 * params.omega_p);
    let one_photon = Complex64::new(0.5 * params.gamma2, -delta_p);
    if params.omega_c == 0.0 {
        return probe / one_photon;
    }
    // Multiplied through by the two-photon denominator so that the ideal
    // dark resonance (zero two-photon damping and detuning) evaluates to 0.
    let two_photon = Complex64::new(0.5 * params.gamma3 + params.gamma31, -(delta_p + params.delta_c));
    let coupling = 0.25 * params.omega_c * params.omega_c;
    probe * two_photon / (one_photon * two_photon + coupling)
}

pub fn spectrum_from_trajectory(traj: &Trajectory, params: &SystemParams) -> Result<Spectrum> {
    if traj.samples.is_empty() {
        return Err(Error::InvalidInput("empty trajectory".into()));
    }
    let od = params.effective_od0();
    let n = traj.samples.len();
    let mut rows = Vec::with_capacity(n);
    for (k, s) in traj.samples.iter().enumerate() {
        let slope = if n < 2 {
            0.0
        } else if k == 0 {
            traj.samples[1].delta_p - s.delta_p
        } else {
            s.delta_p - traj.samples[k - 1].delta_p
        };
        let direction = if slope < 0.0 { Direction::Backward } else { Direction::Forward };
        let sigma21 = s.state.sigma21();
        let t = if params.omega_p == 0.0 {
            // Without a probe there is no coherence and nothing to absorb.
            1.0
        } else {
            transmission(sigma21, params.omega_p.abs(), params.gamma2, od)?
        };
        rows.push(SpectrumRow {
            t_us: s.t,
            delta_p_mhz: units::to_mhz(s.delta_p),
            direction,
            transmission: t,
            populations: s.state.populations(),
            sigma21,
        });
    }
    Ok(Spectrum { rows })
}

/// Location of a transparency peak and the absorption minima that flank it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransparencyFeature {
    pub peak: usize,
    pub left_min: usize,
    pub right_min: usize,
    pub prominence: f64,
}

/// Most prominent interior local maximum of `t`.
///
/// The flanking minima are the lowest points between the peak and the
/// nearest higher sample on each side (topographic prominence).
pub fn find_transparency_feature(t: &[f64]) -> Result<TransparencyFeature> {
    let n = t.len();
    let mut best: Option<TransparencyFeature> = None;
    for i in 1..n.saturating_sub(1) {
        if !(t[i] > t[i - 1] && t[i] >= t[i + 1]) {
            continue;
        }
        let mut left_min = i;
        let mut j = i;
        while j > 0 && t[j - 1] <= t[i] {
            j -= 1;
            if t[j] < t[left_min] {
                left_min = j;
            }
        }
        let mut right_min = i;
        let mut j = i;
        while j + 1 < n && t[j + 1] <= t[i] {
            j += 1;
            if t[j] < t[right_min] {
                right_min = j;
            }
        }
        let prominence = t[i] - t[left_min].max(t[right_min]);
        if prominence <= 0.0 {
            continue;
        }
        if best.is_none_or(|b| prominence > b.prominence) {
            best = Some(TransparencyFeature { peak: i, left_min, right_min, prominence });
        }
    }
    best.ok_or(Error::FeatureNotFound)
}

/// Half-maximum width of the transparency peak of a sampled profile.
///
/// The half level is midway between the peak and the mean of the two
/// flanking absorption minima; crossings are linearly interpolated.
pub fn fwhm_of_profile(detuning: &[f64], trans: &[f64]) -> Result<f64> {
    if detuning.len() != trans.len() {
        return Err(Error::InvalidInput("detuning and transmission lengths differ".into()));
    }
    if detuning.len() < 3 {
        return Err(Error::FeatureNotFound);
    }
    // Work on an ascending detuning axis.
    let (x, y): (Vec<f64>, Vec<f64>) = if detuning[detuning.len() - 1] < detuning[0] {
        (detuning.iter().rev().copied().collect(), trans.iter().rev().copied().collect())
    } else {
        (detuning.to_vec(), trans.to_vec())
    };
    if x.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("detuning axis is not monotone".into()));
    }
    let n = y.len();
    let f = find_transparency_feature(&y)?;
    if f.left_min == 0 || f.right_min == n - 1 {
        return Err(Error::IllPosedFeature("flanking minimum lies on the grid boundary".into()));
    }
    let base = 0.5 * (y[f.left_min] + y[f.right_min]);
    let half = 0.5 * (y[f.peak] + base);

    let mut j = f.peak;
    while j > f.left_min && y[j] >= half {
        j -= 1;
    }
    if y[j] >= half {
        return Err(Error::IllPosedFeature("half level not crossed on the low-detuning side".into()));
    }
    let left = x[j] + (half - y[j]) * (x[j + 1] - x[j]) / (y[j + 1] - y[j]);

    let mut j = f.peak;
    while j < f.right_min && y[j] >= half {
        j += 1;
    }
    if y[j] >= half {
        return Err(Error::IllPosedFeature("half level not crossed on the high-detuning side".into()));
    }
    let right = x[j - 1] + (half - y[j - 1]) * (x[j] - x[j - 1]) / (y[j] - y[j - 1]);
    Ok(right - left)
}

/// Dark-resonance FWHM in MHz, measured on the first scan direction of `spec`.
pub fn extract_fwhm(spec: &Spectrum) -> Result<f64> {
    let dir = spec.first_direction().ok_or(Error::FeatureNotFound)?;
    extract_fwhm_segment(spec, dir)
}

pub fn extract_fwhm_segment(spec: &Spectrum, direction: Direction) -> Result<f64> {
    let seg = spec.segment(direction);
    let x: Vec<f64> = seg.iter().map(|r| r.delta_p_mhz).collect();
    let y: Vec<f64> = seg.iter().map(|r| r.transmission).collect();
    fwhm_of_profile(&x, &y)
}

/// Largest Rydberg population along the trajectory and the reservoir
/// population at its final sample.
pub fn extract_peak_populations(traj: &Trajectory) -> (f64, f64) {
    let max_pop3 = traj.samples.iter().map(|s| s.state.population(2)).fold(0.0, f64::max);
    let final_pop4 = traj.samples.last().map_or(0.0, |s| s.state.population(3));
    (max_pop3, final_pop4)
}

/// Largest transmission difference between the backward and the forward
/// scan, pairing rows at equal elapsed time within each scan.
///
/// For a symmetric sweep about the two-photon resonance the reverse scan
/// of an unchanged medium replays the forward scan in time; any mismatch
/// is hysteresis left by the first pass.
pub fn scan_repeat_mismatch(spec: &Spectrum) -> Option<f64> {
    let fwd = spec.segment(Direction::Forward);
    let bwd = spec.segment(Direction::Backward);
    if fwd.len() < 2 || bwd.is_empty() {
        return None;
    }
    let t_start = fwd[0].t_us;
    let t_turn = fwd[fwd.len() - 1].t_us;
    let mut worst = 0.0_f64;
    for r in &bwd {
        let t_equiv = t_start + (r.t_us - t_turn);
        let t_fwd = interpolate_by(&fwd, t_equiv, |r| r.t_us)?;
        worst = worst.max((t_fwd - r.transmission).abs());
    }
    Some(worst)
}

/// Mean absorption `1 − T` over rows with `|Δ| ≥ min_abs_detuning_mhz`.
pub fn mean_absorption(rows: &[SpectrumRow], min_abs_detuning_mhz: f64) -> Option<f64> {
    let sel: Vec<f64> = rows
        .iter()
        .filter(|r| r.delta_p_mhz.abs() >= min_abs_detuning_mhz)
        .map(|r| 1.0 - r.transmission)
        .collect();
    if sel.is_empty() {
        None
    } else {
        Some(sel.iter().sum::<f64>() / sel.len() as f64)
    }
}

/// Linear interpolation of transmission at abscissa `x`, where `key`
/// extracts a monotone abscissa from each row. Outside the range the end
/// value is held.
pub(crate) fn interpolate_by<F>(rows: &[SpectrumRow], x: f64, key: F) -> Option<f64>
where
    F: Fn(&SpectrumRow) -> f64,
{
    let n = rows.len();
    if n == 0 {
        return None;
    }
    let ascending = key(&rows[n - 1]) >= key(&rows[0]);
    let at = |k: usize| if ascending { &rows[k] } else { &rows[n - 1 - k] };
    let (x0, xn) = (key(at(0)), key(at(n - 1)));
    if x <= x0 {
        return Some(at(0).transmission);
    }
    if x >= xn {
        return Some(at(n - 1).transmission);
    }
    // First index with abscissa > x.
    let (mut lo, mut hi) = (0usize, n - 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if key(at(mid)) <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (a, b) = (at(lo), at(hi));
    let (xa, xb) = (key(a), key(b));
    if xb == xa {
        return Some(a.transmission);
    }
    let w = (x - xa) / (xb - xa);
    Some(a.transmission + w * (b.transmission - a.transmission))
}
