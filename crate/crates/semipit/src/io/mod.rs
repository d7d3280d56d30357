//! Trace and event file formats.

pub mod csv_trace;
pub mod jsonl;
pub mod touchstone;

use std::path::Path;

use semipit_core::{SweepTrace, TraceError};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("file holds no data rows")]
    Empty,
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum TraceFormat {
    Csv,
    S1p,
    Json,
}

impl TraceFormat {
    /// Guess from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "csv" => Some(TraceFormat::Csv),
            "s1p" => Some(TraceFormat::S1p),
            "json" => Some(TraceFormat::Json),
            _ => None,
        }
    }
}

/// Reads a trace written by [`write_trace`], picking the parser from the
/// extension, or from the first character when the extension is unknown.
///
/// Every writer ends its output with a newline; a file that does not is
/// taken to be truncated.
pub fn read_trace(path: &Path) -> Result<SweepTrace, FormatError> {
    let text = std::fs::read_to_string(path)?;
    if !text.is_empty() && !text.ends_with('\n') {
        return Err(FormatError::Syntax {
            line: text.lines().count(),
            message: "last line is not terminated; file looks truncated".into(),
        });
    }
    let format = TraceFormat::from_path(path).unwrap_or_else(|| {
        match text.trim_start().chars().next() {
            Some('!') | Some('#') => TraceFormat::S1p,
            Some('{') => TraceFormat::Json,
            _ => TraceFormat::Csv,
        }
    });
    match format {
        TraceFormat::Csv => csv_trace::read(text.as_bytes()),
        TraceFormat::S1p => touchstone::read(&text),
        TraceFormat::Json => csv_trace::read_json(&text),
    }
}

pub fn write_trace<W: std::io::Write>(trace: &SweepTrace, format: TraceFormat, out: W) -> Result<(), FormatError> {
    match format {
        TraceFormat::Csv => csv_trace::write(trace, out),
        TraceFormat::S1p => touchstone::write(trace, out),
        TraceFormat::Json => csv_trace::write_json(trace, out),
    }
}
