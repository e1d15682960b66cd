//! File formats: flat key–value parameter files, spectrum and time-series
//! CSV, and the parameter fingerprint embedded in reports.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::oracle::ConvergenceRow;
use crate::params::{AtomicSystem, ContinuumShape, FieldConfig, ProbeGrid};
use crate::susceptibility::SusceptibilitySpectrum;
use crate::units::UnitContext;

pub const PARAM_KEYS: [&str; 14] = [
    "e_b_au",
    "e_c_au",
    "e_a_au",
    "gamma_au",
    "q",
    "b_b_au",
    "b_c_au",
    "gamma_cb_au",
    "density_cm3",
    "eps2_au",
    "omega2_au",
    "grid_center_au",
    "grid_halfwidth_au",
    "grid_points",
];

const GRID_KEYS: [&str; 3] = ["grid_center_au", "grid_halfwidth_au", "grid_points"];

/// Stable hash of the resolved parameters.
pub fn fingerprint(sys: &AtomicSystem, field: &FieldConfig) -> String {
    let bytes = serde_json::to_vec(&(sys, field)).expect("parameters serialize");
    Sha256::digest(&bytes)
        .iter()
        .take(16)
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Parses `key = value` lines; `#` starts a comment. The three grid keys
/// are optional as a group; without them the nested default grid is used.
pub fn parse_params(text: &str) -> Result<(AtomicSystem, FieldConfig)> {
    let mut values: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim();
        let known = PARAM_KEYS.iter().find(|k| **k == key).ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("unknown key `{key}`"),
        })?;
        let v: f64 = value.trim().parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("`{}` is not a number", value.trim()),
        })?;
        if values.insert(known, (line_no, v)).is_some() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("duplicate key `{key}`"),
            });
        }
    }
    let missing: Vec<&str> = PARAM_KEYS
        .iter()
        .copied()
        .filter(|k| !GRID_KEYS.contains(k) && !values.contains_key(k))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: format!("missing keys: {}", missing.join(", ")),
        });
    }
    let get = |k: &str| values[k].1;
    let units = UnitContext::CODATA2018;
    let sys = AtomicSystem {
        e_b: get("e_b_au"),
        e_c: get("e_c_au"),
        e_a: get("e_a_au"),
        gamma: get("gamma_au"),
        q: get("q"),
        b_b: get("b_b_au"),
        b_c: get("b_c_au"),
        gamma_cb: get("gamma_cb_au"),
        density_n: units.convert_density(get("density_cm3"))?,
        continuum: ContinuumShape::Fano,
    };
    sys.validate()?;
    let grid_present = GRID_KEYS.iter().filter(|k| values.contains_key(*k)).count();
    let probe_grid = match grid_present {
        0 => ProbeGrid::nested(sys.resonance_frequency(), sys.gamma),
        3 => {
            let (line, points) = values["grid_points"];
            if points.fract() != 0.0 || points < 2.0 {
                return Err(Error::Parse {
                    line,
                    message: "grid_points must be an integer >= 2".into(),
                });
            }
            ProbeGrid::uniform(get("grid_center_au"), get("grid_halfwidth_au"), points as usize)?
        }
        _ => {
            return Err(Error::Parse {
                line: 0,
                message: "grid_center_au, grid_halfwidth_au and grid_points go together".into(),
            })
        }
    };
    let field = FieldConfig {
        eps2: get("eps2_au"),
        omega2: get("omega2_au"),
        probe_grid,
    };
    field.validate()?;
    Ok((sys, field))
}

/// Inverse of [`parse_params`]. Non-uniform grids are written as the
/// default (keys omitted).
pub fn format_params(sys: &AtomicSystem, field: &FieldConfig) -> String {
    let units = UnitContext::CODATA2018;
    let mut out = String::new();
    let mut put = |k: &str, v: f64| out.push_str(&format!("{k} = {v:e}\n"));
    put("e_b_au", sys.e_b);
    put("e_c_au", sys.e_c);
    put("e_a_au", sys.e_a);
    put("gamma_au", sys.gamma);
    put("q", sys.q);
    put("b_b_au", sys.b_b);
    put("b_c_au", sys.b_c);
    put("gamma_cb_au", sys.gamma_cb);
    put("density_cm3", units.density_to_cm3(sys.density_n));
    put("eps2_au", field.eps2);
    put("omega2_au", field.omega2);
    let g = &field.probe_grid;
    if let Some(halfwidth) = g.uniform_halfwidth() {
        put("grid_center_au", g.center);
        put("grid_halfwidth_au", halfwidth);
        out.push_str(&format!("grid_points = {}\n", g.len()));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub detuning_au: f64,
    pub omega1_au: f64,
    pub re_chi: f64,
    pub im_chi: f64,
}

pub fn spectrum_rows(spec: &SusceptibilitySpectrum, sys: &AtomicSystem) -> Vec<SpectrumRow> {
    spec.grid
        .probes(sys)
        .zip(&spec.chi)
        .map(|(p, c)| SpectrumRow {
            detuning_au: p.detuning,
            omega1_au: p.omega1,
            re_chi: c.re,
            im_chi: c.im,
        })
        .collect()
}

pub fn write_spectrum_csv<W: Write>(writer: W, rows: &[SpectrumRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        if !(row.re_chi.is_finite() && row.im_chi.is_finite()) {
            return Err(Error::invalid(
                "spectrum",
                format!("non-finite susceptibility at detuning {:e} a.u.", row.detuning_au),
            ));
        }
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_spectrum_csv<R: Read>(reader: R) -> Result<Vec<SpectrumRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    let expected = ["detuning_au", "omega1_au", "re_chi", "im_chi"];
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected columns {}", expected.join(",")),
        });
    }
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseRow {
    pub t_au: f64,
    pub re_amp: f64,
    pub im_amp: f64,
    pub intensity: f64,
}

pub fn pulse_rows(times: &[f64], samples: &[Complex64]) -> Vec<PulseRow> {
    times
        .iter()
        .zip(samples)
        .map(|(t, a)| PulseRow {
            t_au: *t,
            re_amp: a.re,
            im_amp: a.im,
            intensity: a.norm_sqr(),
        })
        .collect()
}

pub fn write_rows<W: Write, T: Serialize>(writer: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: Read, T: for<'de> Deserialize<'de>>(reader: R) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(reader);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn write_convergence_csv<W: Write>(writer: W, rows: &[ConvergenceRow]) -> Result<()> {
    write_rows(writer, rows)
}
