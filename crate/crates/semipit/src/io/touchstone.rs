//! One-port Touchstone (.s1p) carriage for bridge traces.
//!
//! The bridge output is a differential impedance, not a reflection
//! coefficient, so it is mapped as `S = Z_d / (Z_d + 2·R)` with `R` the
//! reference resistance, and read back with `Z_d = 2·R·S / (1 − S)`.

use std::io::Write;

use semipit_core::{Complex64, SweepTrace};

use super::FormatError;

pub const REFERENCE_OHM: f64 = 50.0;

fn z_to_s(z: Complex64, r: f64) -> Complex64 {
    z / (z + 2.0 * r)
}

fn s_to_z(s: Complex64, r: f64) -> Complex64 {
    2.0 * r * s / (Complex64::new(1.0, 0.0) - s)
}

pub fn write<W: Write>(trace: &SweepTrace, mut out: W) -> Result<(), FormatError> {
    writeln!(out, "! semipit bridge sweep, {} points", trace.len())?;
    writeln!(out, "! S11 = Zd / (Zd + 100), Zd = 100 * S11 / (1 - S11); Zd is the bridge differential impedance")?;
    writeln!(out, "# HZ S RI R 50")?;
    for (f, z) in trace.freqs_mhz.iter().zip(&trace.values) {
        let s = z_to_s(*z, REFERENCE_OHM);
        writeln!(out, "{:?} {:?} {:?}", f * 1e6, s.re, s.im)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum DataFormat {
    Ri,
    Ma,
    Db,
}

struct OptionLine {
    hz_per_unit: f64,
    format: DataFormat,
    r: f64,
}

impl Default for OptionLine {
    // Touchstone's defaults when the option line omits a field.
    fn default() -> Self {
        Self { hz_per_unit: 1e9, format: DataFormat::Ma, r: 50.0 }
    }
}

fn parse_option_line(line: &str, lineno: usize) -> Result<OptionLine, FormatError> {
    let err = |message: String| FormatError::Syntax { line: lineno, message };
    let mut opt = OptionLine::default();
    let mut tokens = line.trim_start_matches('#').split_whitespace();
    while let Some(tok) = tokens.next() {
        match tok.to_ascii_uppercase().as_str() {
            "HZ" => opt.hz_per_unit = 1.0,
            "KHZ" => opt.hz_per_unit = 1e3,
            "MHZ" => opt.hz_per_unit = 1e6,
            "GHZ" => opt.hz_per_unit = 1e9,
            "S" => {}
            "Y" | "Z" | "H" | "G" => return Err(err(format!("only S parameters are supported, got {tok}"))),
            "RI" => opt.format = DataFormat::Ri,
            "MA" => opt.format = DataFormat::Ma,
            "DB" => opt.format = DataFormat::Db,
            "R" => {
                let v = tokens.next().ok_or_else(|| err("R without a value".into()))?;
                opt.r = v.parse().map_err(|_| err(format!("bad reference resistance {v:?}")))?;
            }
            other => return Err(err(format!("unknown option {other:?}"))),
        }
    }
    Ok(opt)
}

pub fn read(text: &str) -> Result<SweepTrace, FormatError> {
    let mut opt: Option<OptionLine> = None;
    let (mut freqs, mut values) = (Vec::new(), Vec::new());
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('!').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if opt.is_some() {
                return Err(FormatError::Syntax { line: lineno, message: "second option line".into() });
            }
            opt = Some(parse_option_line(line, lineno)?);
            continue;
        }
        let o = opt.get_or_insert_with(OptionLine::default);
        let nums: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| FormatError::Syntax { line: lineno, message: e.to_string() })?;
        if nums.len() != 3 {
            return Err(FormatError::Syntax {
                line: lineno,
                message: format!("one-port data needs 3 numbers, got {}", nums.len()),
            });
        }
        let s = match o.format {
            DataFormat::Ri => Complex64::new(nums[1], nums[2]),
            DataFormat::Ma => Complex64::from_polar(nums[1], nums[2].to_radians()),
            DataFormat::Db => Complex64::from_polar(10f64.powf(nums[1] / 20.0), nums[2].to_radians()),
        };
        freqs.push(nums[0] * o.hz_per_unit / 1e6);
        values.push(s_to_z(s, o.r));
    }
    if freqs.is_empty() {
        return Err(FormatError::Empty);
    }
    Ok(SweepTrace::from_columns(freqs, values)?)
}
