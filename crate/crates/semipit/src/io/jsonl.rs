//! Decoded-event stream, one JSON object per line with keys
//! `t_ms`, `label`, `f_peak_mhz`, `snr_db`.

use std::io::{BufRead, Write};

use semipit_core::DecodedEvent;

use super::FormatError;

pub fn write_events<W: Write>(events: &[DecodedEvent], mut out: W) -> Result<(), FormatError> {
    for ev in events {
        serde_json::to_writer(&mut out, ev).map_err(std::io::Error::from)?;
        writeln!(out)?;
    }
    Ok(())
}

pub fn read_events<R: BufRead>(input: R) -> Result<Vec<DecodedEvent>, FormatError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ev = serde_json::from_str(&line).map_err(|e| FormatError::Syntax { line: i + 1, message: e.to_string() })?;
        out.push(ev);
    }
    Ok(out)
}
