//! Line-oriented `key = value` run configuration.
//!
//! Values are in laboratory units: MHz of ordinary frequency, μs, μW, mm.
//! They are converted to internal angular units only when a
//! [`SystemParams`] is built.

use std::collections::HashMap;
use std::path::PathBuf;

use thiserror::Error;

use crate::fitting::{FitParam, FreeParam};
use crate::integrator::SolverOptions;
use crate::model::{
    probe_rabi_from_power, ScanMode, SweepProgram, SystemParams, DEFAULT_GAMMA2_MHZ, DEFAULT_GAMMA4_MHZ,
    DEFAULT_RYDBERG_LIFETIME_US,
};
use crate::units;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { key: String, line: usize },
    #[error("line {line}: cannot parse `{value}` for `{key}`")]
    Unparseable { key: String, line: usize, value: String },
    #[error("line {line}: `{key}` {reason}")]
    UnitViolation { key: String, line: usize, reason: String },
    #[error("missing required key `{key}`")]
    MissingKey { key: String },
    #[error("line {line}: `{key}` cannot be combined with `{other}`")]
    Conflict { key: String, other: String, line: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Fit,
    Synth,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbeSetting {
    PowerUw(f64),
    RabiMhz(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub probe: ProbeSetting,
    pub beam_radius_mm: f64,
    pub i_sat_mw_cm2: f64,
    pub omega_c_mhz: f64,
    pub delta_c_mhz: f64,
    pub gamma2_mhz: f64,
    pub gamma3_mhz: f64,
    pub gamma3p_mhz: f64,
    pub gamma4_mhz: f64,
    pub gamma31_mhz: f64,
    pub gamma31_dephases_32: bool,
    pub branch_b: f64,
    pub od0: f64,
    pub density_scale: f64,
    pub sweep_start_mhz: f64,
    pub sweep_end_mhz: f64,
    pub sweep_duration_us: f64,
    pub double_scan: bool,
    pub rtol: f64,
    pub atol: f64,
    pub max_step_us: f64,
    pub output_points: usize,
    pub output_dir: PathBuf,
    pub data_in: Option<PathBuf>,
    pub noise_sigma: f64,
    pub seed: u64,
    /// `fit.<name> = lower, initial, upper`, in file order.
    pub fit: Vec<FreeParam>,
    pub fit_starts: usize,
    pub fit_max_iter: usize,
}

impl RunConfig {
    pub fn probe_power_uw(&self) -> Option<f64> {
        match self.probe {
            ProbeSetting::PowerUw(p) => Some(p),
            ProbeSetting::RabiMhz(_) => None,
        }
    }

    pub fn system_params(&self) -> crate::Result<SystemParams> {
        let gamma2 = units::mhz(self.gamma2_mhz);
        let omega_p = match self.probe {
            ProbeSetting::RabiMhz(f) => units::mhz(f),
            ProbeSetting::PowerUw(p) => probe_rabi_from_power(p, self.beam_radius_mm, self.i_sat_mw_cm2, gamma2)?.omega_p,
        };
        let p = SystemParams {
            omega_p,
            omega_c: units::mhz(self.omega_c_mhz),
            delta_c: units::mhz(self.delta_c_mhz),
            gamma2,
            gamma3: units::mhz(self.gamma3_mhz),
            gamma3p: units::mhz(self.gamma3p_mhz),
            gamma4: units::mhz(self.gamma4_mhz),
            gamma31: units::mhz(self.gamma31_mhz),
            branch_b: self.branch_b,
            od0: self.od0,
            density_scale: self.density_scale,
            gamma31_dephases_32: self.gamma31_dephases_32,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn sweep(&self) -> crate::Result<SweepProgram> {
        let mode = if self.double_scan { ScanMode::Double } else { ScanMode::Single };
        SweepProgram::new(
            units::mhz(self.sweep_start_mhz),
            units::mhz(self.sweep_end_mhz),
            self.sweep_duration_us,
            mode,
        )
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions {
            rtol: self.rtol,
            atol: self.atol,
            max_step: self.max_step_us,
            output_points: self.output_points,
            ..SolverOptions::default()
        }
    }
}

const KEYS: &[&str] = &[
    "command",
    "probe_power_uW",
    "omega_p_MHz",
    "beam_radius_mm",
    "i_sat_mW_cm2",
    "omega_c_MHz",
    "delta_c_MHz",
    "gamma2_MHz",
    "gamma3_MHz",
    "gamma3p_MHz",
    "gamma4_MHz",
    "gamma31_MHz",
    "gamma31_dephases_32",
    "branch_b",
    "od0",
    "density_scale",
    "sweep_start_MHz",
    "sweep_end_MHz",
    "sweep_duration_us",
    "double_scan",
    "rtol",
    "atol",
    "max_step_us",
    "output_points",
    "output_dir",
    "data_in",
    "noise_sigma",
    "seed",
    "fit_starts",
    "fit_max_iter",
];

pub const FIT_PREFIX: &str = "fit.";

struct Entries {
    map: HashMap<String, (String, usize)>,
    fit: Vec<(FitParam, String, usize)>,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<(&str, usize)> {
        self.map.get(key).map(|(v, l)| (v.as_str(), *l))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<(T, usize)>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<T>().map(|x| Some((x, line))).map_err(|_| ConfigError::Unparseable {
                key: key.into(),
                line,
                value: v.into(),
            }),
        }
    }

    fn number(&self, key: &str, default: f64, rule: Rule) -> Result<f64, ConfigError> {
        match self.parse::<f64>(key)? {
            None => Ok(default),
            Some((x, line)) => {
                let ok = x.is_finite()
                    && match rule {
                        Rule::Any => true,
                        Rule::NonNegative => x >= 0.0,
                        Rule::Positive => x > 0.0,
                        Rule::Fraction => (0.0..=1.0).contains(&x),
                    };
                if ok {
                    Ok(x)
                } else {
                    Err(ConfigError::UnitViolation { key: key.into(), line, reason: rule.describe().into() })
                }
            }
        }
    }

    fn flag(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        Ok(self.parse::<bool>(key)?.map_or(default, |(b, _)| b))
    }

    fn count(&self, key: &str, default: usize, min: usize) -> Result<usize, ConfigError> {
        match self.parse::<usize>(key)? {
            None => Ok(default),
            Some((n, _)) if n >= min => Ok(n),
            Some((_, line)) => {
                Err(ConfigError::UnitViolation { key: key.into(), line, reason: format!("must be at least {min}") })
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Rule {
    Any,
    NonNegative,
    Positive,
    Fraction,
}

impl Rule {
    fn describe(self) -> &'static str {
        match self {
            Rule::Any => "must be finite",
            Rule::NonNegative => "must be finite and non-negative",
            Rule::Positive => "must be finite and positive",
            Rule::Fraction => "must lie in [0, 1]",
        }
    }
}

fn tokenize(text: &str) -> Result<Entries, ConfigError> {
    let mut map: HashMap<String, (String, usize)> = HashMap::new();
    let mut fit = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or(ConfigError::Syntax { line })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ConfigError::Syntax { line });
        }
        if let Some(name) = key.strip_prefix(FIT_PREFIX) {
            let param = FitParam::parse(name).ok_or_else(|| ConfigError::UnknownKey { key: key.into(), line })?;
            if fit.iter().any(|(p, _, _)| *p == param) {
                return Err(ConfigError::Duplicate { key: key.into(), line });
            }
            fit.push((param, value.to_string(), line));
            continue;
        }
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey { key: key.into(), line });
        }
        if map.insert(key.to_string(), (value.to_string(), line)).is_some() {
            return Err(ConfigError::Duplicate { key: key.into(), line });
        }
    }
    Ok(Entries { map, fit })
}

fn parse_bounds(param: FitParam, value: &str, line: usize) -> Result<FreeParam, ConfigError> {
    let key = format!("{FIT_PREFIX}{}", param.name());
    let parts: Vec<f64> = value
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| ConfigError::Unparseable { key: key.clone(), line, value: value.into() })?;
    let [lower, initial, upper] = parts[..] else {
        return Err(ConfigError::Unparseable { key, line, value: value.into() });
    };
    if !(lower.is_finite() && upper.is_finite() && lower < upper && lower <= initial && initial <= upper) {
        return Err(ConfigError::UnitViolation {
            key,
            line,
            reason: "needs `lower, initial, upper` with lower < upper and lower <= initial <= upper".into(),
        });
    }
    Ok(FreeParam::new(param, initial, lower, upper))
}

/// Parses and validates a configuration, applying defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let e = tokenize(text)?;

    let command = match e.raw("command") {
        None => return Err(ConfigError::MissingKey { key: "command".into() }),
        Some(("simulate", _)) => Command::Simulate,
        Some(("fit", _)) => Command::Fit,
        Some(("synth", _)) => Command::Synth,
        Some((v, line)) => return Err(ConfigError::Unparseable { key: "command".into(), line, value: v.into() }),
    };

    let probe = match (e.raw("probe_power_uW"), e.raw("omega_p_MHz")) {
        (Some(_), Some((_, line))) => {
            return Err(ConfigError::Conflict { key: "omega_p_MHz".into(), other: "probe_power_uW".into(), line })
        }
        (Some(_), None) => ProbeSetting::PowerUw(e.number("probe_power_uW", 0.0, Rule::Positive)?),
        (None, Some(_)) => ProbeSetting::RabiMhz(e.number("omega_p_MHz", 0.0, Rule::NonNegative)?),
        (None, None) => return Err(ConfigError::MissingKey { key: "probe_power_uW".into() }),
    };
    if e.raw("omega_c_MHz").is_none() {
        return Err(ConfigError::MissingKey { key: "omega_c_MHz".into() });
    }

    let sweep_start_mhz = e.number("sweep_start_MHz", -20.0, Rule::Any)?;
    let sweep_end_mhz = e.number("sweep_end_MHz", 20.0, Rule::Any)?;
    if sweep_start_mhz == sweep_end_mhz {
        let line = e.raw("sweep_end_MHz").or(e.raw("sweep_start_MHz")).map_or(0, |(_, l)| l);
        return Err(ConfigError::UnitViolation {
            key: "sweep_end_MHz".into(),
            line,
            reason: "must differ from sweep_start_MHz".into(),
        });
    }

    let data_in = e.raw("data_in").map(|(v, _)| PathBuf::from(v));
    let fit = e.fit.iter().map(|(p, v, l)| parse_bounds(*p, v, *l)).collect::<Result<Vec<_>, _>>()?;
    if command == Command::Fit {
        if data_in.is_none() {
            return Err(ConfigError::MissingKey { key: "data_in".into() });
        }
        if fit.is_empty() {
            return Err(ConfigError::MissingKey { key: format!("{FIT_PREFIX}<parameter>") });
        }
    }

    Ok(RunConfig {
        command,
        probe,
        beam_radius_mm: e.number("beam_radius_mm", 0.75, Rule::Positive)?,
        i_sat_mw_cm2: e.number("i_sat_mW_cm2", 1.67, Rule::Positive)?,
        omega_c_mhz: e.number("omega_c_MHz", 0.0, Rule::NonNegative)?,
        delta_c_mhz: e.number("delta_c_MHz", 0.0, Rule::Any)?,
        gamma2_mhz: e.number("gamma2_MHz", DEFAULT_GAMMA2_MHZ, Rule::Positive)?,
        gamma3_mhz: e.number(
            "gamma3_MHz",
            units::to_mhz(units::rate_from_lifetime_us(DEFAULT_RYDBERG_LIFETIME_US)),
            Rule::NonNegative,
        )?,
        gamma3p_mhz: e.number("gamma3p_MHz", 0.0, Rule::NonNegative)?,
        gamma4_mhz: e.number("gamma4_MHz", DEFAULT_GAMMA4_MHZ, Rule::NonNegative)?,
        gamma31_mhz: e.number("gamma31_MHz", 0.0, Rule::NonNegative)?,
        gamma31_dephases_32: e.flag("gamma31_dephases_32", true)?,
        branch_b: e.number("branch_b", 0.5, Rule::Fraction)?,
        od0: e.number("od0", 1.0, Rule::NonNegative)?,
        density_scale: e.number("density_scale", 1.0, Rule::NonNegative)?,
        sweep_start_mhz,
        sweep_end_mhz,
        sweep_duration_us: e.number("sweep_duration_us", 480.0, Rule::Positive)?,
        double_scan: e.flag("double_scan", true)?,
        rtol: e.number("rtol", 1e-8, Rule::Positive)?,
        atol: e.number("atol", 1e-10, Rule::Positive)?,
        max_step_us: e.number("max_step_us", 1.0, Rule::Positive)?,
        output_points: e.count("output_points", 801, 2)?,
        output_dir: e.raw("output_dir").map_or_else(|| PathBuf::from("eit-output"), |(v, _)| PathBuf::from(v)),
        data_in,
        noise_sigma: e.number("noise_sigma", 0.0, Rule::NonNegative)?,
        seed: e.parse::<u64>("seed")?.map_or(0, |(s, _)| s),
        fit,
        fit_starts: e.count("fit_starts", crate::fitting::DEFAULT_STARTS, 1)?,
        fit_max_iter: e.count("fit_max_iter", crate::fitting::DEFAULT_MAX_ITER, 1)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const WEAK_PROBE: &str = "\
# weak-probe dark resonance
command = simulate
probe_power_uW = 0.2
omega_c_MHz = 1.8
gamma31_MHz = 0.1   # coupling-laser dephasing
";

    #[test]
    fn minimal_simulate_config() {
        let c = parse_config(WEAK_PROBE).unwrap();
        assert_eq!(c.command, Command::Simulate);
        assert_eq!(c.omega_c_mhz, 1.8);
        assert_eq!(c.probe_power_uw(), Some(0.2));
        assert_eq!(c.gamma2_mhz, 6.065);
        assert_eq!((c.sweep_start_mhz, c.sweep_end_mhz, c.sweep_duration_us), (-20.0, 20.0, 480.0));
        assert!(c.double_scan);
        assert_eq!((c.rtol, c.atol, c.output_points), (1e-8, 1e-10, 801));
        let p = c.system_params().unwrap();
        assert_eq!(p.omega_c, units::mhz(1.8));
        assert!((p.gamma3 - 0.1).abs() < 1e-15);
    }

    #[test]
    fn empty_document_misses_command() {
        assert_eq!(parse_config("").unwrap_err(), ConfigError::MissingKey { key: "command".into() });
        assert_eq!(parse_config("# only a comment\n\n").unwrap_err(), ConfigError::MissingKey { key: "command".into() });
    }

    #[test]
    fn negative_rate_is_a_unit_violation() {
        let text = format!("{WEAK_PROBE}gamma3p_MHz = -1\n");
        match parse_config(&text).unwrap_err() {
            ConfigError::UnitViolation { key, line, .. } => {
                assert_eq!(key, "gamma3p_MHz");
                assert_eq!(line, 6);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn errors_name_key_and_line() {
        let e = parse_config(&format!("{WEAK_PROBE}omega_c_Mhz = 2\n")).unwrap_err();
        assert_eq!(e, ConfigError::UnknownKey { key: "omega_c_Mhz".into(), line: 6 });
        assert!(e.to_string().contains("line 6") && e.to_string().contains("omega_c_Mhz"));

        let e = parse_config("command = simulate\nprobe_power_uW = 0.2\nomega_c_MHz = fast\n").unwrap_err();
        assert_eq!(e, ConfigError::Unparseable { key: "omega_c_MHz".into(), line: 3, value: "fast".into() });

        let e = parse_config("command = simulate\nomega_c_MHz = 1\n").unwrap_err();
        assert!(matches!(e, ConfigError::MissingKey { .. }));

        let e = parse_config("command simulate\n").unwrap_err();
        assert_eq!(e, ConfigError::Syntax { line: 1 });

        let e = parse_config(&format!("{WEAK_PROBE}od0 = 1\nod0 = 2\n")).unwrap_err();
        assert_eq!(e, ConfigError::Duplicate { key: "od0".into(), line: 7 });
    }

    #[test]
    fn zero_duration_is_rejected() {
        let e = parse_config(&format!("{WEAK_PROBE}sweep_duration_us = 0\n")).unwrap_err();
        assert!(matches!(e, ConfigError::UnitViolation { ref key, .. } if key == "sweep_duration_us"));
    }

    #[test]
    fn probe_given_twice_conflicts() {
        let e = parse_config(&format!("{WEAK_PROBE}omega_p_MHz = 0.3\n")).unwrap_err();
        assert!(matches!(e, ConfigError::Conflict { .. }));
    }

    #[test]
    fn fit_entries() {
        let text = "command = fit\nomega_p_MHz = 0.3\nomega_c_MHz = 1.8\ndata_in = d.csv\n\
                    fit.omega_c = 1.0, 1.5, 3.0\nfit.detuning_offset_MHz = -1, 0, 1\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.fit.len(), 2);
        assert_eq!(c.fit[0], FreeParam::new(FitParam::OmegaC, 1.5, 1.0, 3.0));
        assert_eq!(c.fit[1].param, FitParam::DetuningOffset);

        let e = parse_config(&text.replace("1.0, 1.5", "2.0, 1.5")).unwrap_err();
        assert!(matches!(e, ConfigError::UnitViolation { line: 5, .. }));
        let e = parse_config(&text.replace("fit.omega_c", "fit.omega")).unwrap_err();
        assert!(matches!(e, ConfigError::UnknownKey { line: 5, .. }));
        let e = parse_config(&text.replace("data_in = d.csv\n", "")).unwrap_err();
        assert_eq!(e, ConfigError::MissingKey { key: "data_in".into() });
    }

    #[test]
    fn keys_are_case_sensitive() {
        let e = parse_config(&format!("{WEAK_PROBE}OD0 = 1\n")).unwrap_err();
        assert!(matches!(e, ConfigError::UnknownKey { .. }));
    }
}
