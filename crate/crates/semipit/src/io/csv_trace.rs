//! Column formats for sweep traces.
//!
//! CSV columns are `freq_hz,re_ohm,im_ohm,mag_db` with `mag_db` in dB re 1 Ω
//! (`-inf` for an exact zero). Reading ignores `mag_db`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use semipit_core::{Complex64, SweepTrace};

use super::FormatError;

#[derive(Debug, Serialize)]
struct Row {
    freq_hz: f64,
    re_ohm: f64,
    im_ohm: f64,
    mag_db: f64,
}

#[derive(Debug, Deserialize)]
struct InRow {
    freq_hz: f64,
    re_ohm: f64,
    im_ohm: f64,
}

pub fn mag_db(z: Complex64) -> f64 {
    20.0 * z.norm().log10()
}

pub fn write<W: Write>(trace: &SweepTrace, out: W) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_writer(out);
    for (f, z) in trace.freqs_mhz.iter().zip(&trace.values) {
        w.serialize(Row { freq_hz: f * 1e6, re_ohm: z.re, im_ohm: z.im, mag_db: mag_db(*z) })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read<R: Read>(input: R) -> Result<SweepTrace, FormatError> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    for want in ["freq_hz", "re_ohm", "im_ohm"] {
        if !headers.iter().any(|h| h == want) {
            return Err(FormatError::Syntax { line: 1, message: format!("missing column {want}") });
        }
    }
    let (mut freqs, mut values) = (Vec::new(), Vec::new());
    for row in rdr.deserialize::<InRow>() {
        let row = row?;
        freqs.push(row.freq_hz / 1e6);
        values.push(Complex64::new(row.re_ohm, row.im_ohm));
    }
    if freqs.is_empty() {
        return Err(FormatError::Empty);
    }
    Ok(SweepTrace::from_columns(freqs, values)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct Columns {
    freq_hz: Vec<f64>,
    re_ohm: Vec<f64>,
    im_ohm: Vec<f64>,
}

pub fn write_json<W: Write>(trace: &SweepTrace, mut out: W) -> Result<(), FormatError> {
    let cols = Columns {
        freq_hz: trace.freqs_mhz.iter().map(|f| f * 1e6).collect(),
        re_ohm: trace.values.iter().map(|z| z.re).collect(),
        im_ohm: trace.values.iter().map(|z| z.im).collect(),
    };
    serde_json::to_writer(&mut out, &cols).map_err(std::io::Error::from)?;
    writeln!(out)?;
    Ok(())
}

pub fn read_json(text: &str) -> Result<SweepTrace, FormatError> {
    let cols: Columns = serde_json::from_str(text)
        .map_err(|e| FormatError::Syntax { line: e.line(), message: e.to_string() })?;
    if cols.re_ohm.len() != cols.im_ohm.len() {
        return Err(FormatError::Syntax { line: 1, message: "re_ohm and im_ohm differ in length".into() });
    }
    let values = cols.re_ohm.iter().zip(&cols.im_ohm).map(|(&re, &im)| Complex64::new(re, im)).collect();
    Ok(SweepTrace::from_columns(cols.freq_hz.iter().map(|f| f / 1e6).collect(), values)?)
}
