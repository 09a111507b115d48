//! CSV files: spectra, trajectories and fit overlays.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::spectroscopy::{Direction, Spectrum, SpectrumRow};
use crate::units;

pub const SPECTRUM_HEADER: [&str; 10] = [
    "time_us",
    "detuning_MHz",
    "direction",
    "transmission",
    "pop1",
    "pop2",
    "pop3",
    "pop4",
    "re_sigma21",
    "im_sigma21",
];

pub const TRAJECTORY_HEADER: [&str; 12] = [
    "time_us",
    "detuning_MHz",
    "pop1",
    "pop2",
    "pop3",
    "pop4",
    "re_sigma21",
    "im_sigma21",
    "re_sigma31",
    "im_sigma31",
    "re_sigma32",
    "im_sigma32",
];

pub const OVERLAY_HEADER: [&str; 6] =
    ["time_us", "detuning_MHz", "direction", "data_transmission", "model_transmission", "residual"];

/// Nine significant digits.
pub fn fmt(x: f64) -> String {
    format!("{x:.8e}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidInput(format!("csv: {e}"))
}

pub fn write_spectrum<W: Write>(out: W, spec: &Spectrum) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SPECTRUM_HEADER).map_err(csv_err)?;
    for r in &spec.rows {
        let p = r.populations;
        w.write_record([
            fmt(r.t_us),
            fmt(r.delta_p_mhz),
            r.direction.as_str().to_string(),
            fmt(r.transmission),
            fmt(p[0]),
            fmt(p[1]),
            fmt(p[2]),
            fmt(p[3]),
            fmt(r.sigma21.re),
            fmt(r.sigma21.im),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::InvalidInput(format!("write failed: {e}")))
}

/// Reads a spectrum written by [`write_spectrum`]. The header must match
/// exactly.
pub fn read_spectrum<R: Read>(input: R) -> Result<Spectrum> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rd.headers().map_err(csv_err)?.clone();
    if header.iter().ne(SPECTRUM_HEADER) {
        return Err(Error::InvalidInput(format!(
            "unexpected header `{}`, expected `{}`",
            header.iter().collect::<Vec<_>>().join(","),
            SPECTRUM_HEADER.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (k, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = k + 2;
        let num = |i: usize| -> Result<f64> {
            rec[i].trim().parse::<f64>().map_err(|_| {
                Error::InvalidInput(format!("line {line}: cannot parse {} `{}`", SPECTRUM_HEADER[i], &rec[i]))
            })
        };
        let direction = Direction::parse(rec[2].trim())
            .ok_or_else(|| Error::InvalidInput(format!("line {line}: unknown direction `{}`", &rec[2])))?;
        rows.push(SpectrumRow {
            t_us: num(0)?,
            delta_p_mhz: num(1)?,
            direction,
            transmission: num(3)?,
            populations: [num(4)?, num(5)?, num(6)?, num(7)?],
            sigma21: Complex64::new(num(8)?, num(9)?),
        });
    }
    Ok(Spectrum::new(rows))
}

pub fn write_trajectory<W: Write>(out: W, traj: &Trajectory) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_HEADER).map_err(csv_err)?;
    for s in &traj.samples {
        let p = s.state.populations();
        let mut rec = vec![fmt(s.t), fmt(units::to_mhz(s.delta_p))];
        rec.extend(p.iter().map(|v| fmt(*v)));
        for (i, j) in [(1, 0), (2, 0), (2, 1)] {
            let c = s.state.coherence(i, j);
            rec.push(fmt(c.re));
            rec.push(fmt(c.im));
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::InvalidInput(format!("write failed: {e}")))
}

/// Data and best-fit model transmission on the data grid.
pub fn write_overlay<W: Write>(out: W, data: &Spectrum, model: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(OVERLAY_HEADER).map_err(csv_err)?;
    for (r, m) in data.rows.iter().zip(model) {
        w.write_record([
            fmt(r.t_us),
            fmt(r.delta_p_mhz),
            r.direction.as_str().to_string(),
            fmt(r.transmission),
            fmt(*m),
            fmt(m - r.transmission),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::InvalidInput(format!("write failed: {e}")))
}
