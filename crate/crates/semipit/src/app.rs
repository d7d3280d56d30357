//! Command-line interface.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use semipit_core::{
    classify, estimate, power_report, run_session, run_sweep, DecodeError, GestureKind, Label, RingLoad,
};

use crate::config::{Overrides, ToolConfig};
use crate::io::{self, jsonl, TraceFormat};
use crate::scenario::ScenarioFile;

/// Exit status when a trace holds no recognizable gesture.
pub const EXIT_NO_INPUT: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "semipit", version, about = "Simulate and decode a ring-to-wristband inductive gesture link")]
pub struct Cli {
    /// JSON config file; built-in prototype values when absent.
    #[arg(long, global = true, env = "SEMIPIT_CONFIG")]
    pub config: Option<PathBuf>,
    /// Noise seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file (a directory for `session`). Standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format. Traces default to the --out extension, else csv.
    #[arg(long, global = true, value_enum)]
    pub format: Option<TraceFormat>,
    #[command(flatten)]
    pub overrides: OverrideArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct OverrideArgs {
    /// Coupling coefficient.
    #[arg(long, global = true)]
    pub k: Option<f64>,
    /// Noise standard deviation on each of Re and Im, Ω.
    #[arg(long, global = true)]
    pub noise_sigma: Option<f64>,
    /// Ring coil inductance, µH
    #[arg(long, global = true)]
    pub ring_l_uh: Option<f64>,
    /// Wristband coil inductance, µH
    #[arg(long, global = true)]
    pub wrist_l_uh: Option<f64>,
    /// Sweep start, MHz
    #[arg(long, global = true)]
    pub f_start_mhz: Option<f64>,
    /// Sweep stop, MHz
    #[arg(long, global = true)]
    pub f_stop_mhz: Option<f64>,
    /// Sweep points.
    #[arg(long, global = true)]
    pub points: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one bridge sweep and write the trace.
    Sweep {
        /// Gesture the ring streams (scroll-up, scroll-down, scroll-left,
        /// scroll-right, press). Idle ring when omitted.
        #[arg(value_parser = parse_gesture, conflicts_with = "c_v_pf")]
        gesture: Option<GestureKind>,
        /// Drive the varactor at this capacitance instead of a gesture.
        #[arg(long)]
        c_v_pf: Option<f64>,
    },
    /// Decode a trace file. Exit 0 on a gesture, 2 on no input.
    Classify {
        /// Trace file (csv, s1p or json)
        trace: PathBuf,
    },
    /// Replay a scenario; writes report.json and events.jsonl.
    Session {
        /// Scenario JSON file
        scenario: PathBuf,
    },
    /// Print the calibrated ring network, gesture plan and wristband resonance.
    Calibrate,
    /// Print mutual inductance and k for the grasp geometry, flat and tilted.
    Coupling,
    /// Print the ring power and battery report.
    Power,
}

fn parse_gesture(s: &str) -> Result<GestureKind, String> {
    s.parse().map_err(|e| format!("{e}; expected one of scroll-up, scroll-down, scroll-left, scroll-right, press"))
}

impl Cli {
    fn overrides(&self) -> Overrides {
        let o = &self.overrides;
        Overrides {
            k: o.k,
            noise_sigma_ohm: o.noise_sigma,
            ring_l_uh: o.ring_l_uh,
            wrist_l_uh: o.wrist_l_uh,
            f_start_mhz: o.f_start_mhz,
            f_stop_mhz: o.f_stop_mhz,
            n_points: o.points,
            seed: self.seed,
        }
    }

    fn config(&self) -> Result<ToolConfig> {
        let mut cfg = ToolConfig::load(self.config.as_deref())?;
        cfg.apply(&self.overrides());
        cfg.validate()?;
        Ok(cfg)
    }

    fn json_only(&self) -> Result<()> {
        match self.format {
            None | Some(TraceFormat::Json) => Ok(()),
            Some(f) => bail!("--format {f:?} is only valid for sweep; this command writes JSON"),
        }
    }
}

/// Parses arguments and runs. Usage errors exit 1 so that 2 keeps meaning
/// "no input".
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

pub fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Sweep { gesture, c_v_pf } => cmd_sweep(cli, *gesture, *c_v_pf),
        Command::Classify { trace } => cmd_classify(cli, trace),
        Command::Session { scenario } => cmd_session(cli, scenario),
        Command::Calibrate => cmd_calibrate(cli),
        Command::Coupling => cmd_coupling(cli),
        Command::Power => cmd_power(cli),
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn emit_json<T: Serialize>(cli: &Cli, value: &T) -> Result<()> {
    let mut out = open_out(cli.out.as_deref())?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn cmd_sweep(cli: &Cli, gesture: Option<GestureKind>, c_v_pf: Option<f64>) -> Result<ExitCode> {
    let cfg = cli.config()?;
    let model = cfg.link_model()?;
    let link = cfg.coupling()?;
    let load = match (gesture, c_v_pf) {
        (_, Some(c)) => RingLoad::Varactor(c),
        (g, None) => model.load_for(g),
    };
    let mut trace = run_sweep(&cfg.sweep, &model.wrist, &model.ring, &link, load)?;
    trace.truth = gesture;
    let format = cli
        .format
        .or_else(|| cli.out.as_deref().and_then(TraceFormat::from_path))
        .unwrap_or(TraceFormat::Csv);
    let mut out = open_out(cli.out.as_deref())?;
    io::write_trace(&trace, format, &mut out)?;
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ClassifyLine {
    label: Label,
    f_peak_mhz: Option<f64>,
    snr_db: Option<f64>,
}

fn cmd_classify(cli: &Cli, path: &Path) -> Result<ExitCode> {
    cli.json_only()?;
    let cfg = cli.config()?;
    let model = cfg.link_model()?;
    let trace = io::read_trace(path).with_context(|| format!("cannot read trace {}", path.display()))?;
    let line = match estimate(&trace, &model.decoder) {
        Ok(peak) => {
            let c = classify(&peak, &model.symbols, &model.decoder)?;
            ClassifyLine { label: c.label, f_peak_mhz: Some(c.f_peak_mhz), snr_db: Some(c.snr_db) }
        }
        Err(DecodeError::NoPeak) => ClassifyLine { label: Label::NoInput, f_peak_mhz: None, snr_db: None },
        Err(e) => return Err(e).with_context(|| format!("cannot decode {}", path.display())),
    };
    let mut out = open_out(cli.out.as_deref())?;
    serde_json::to_writer(&mut out, &line)?;
    writeln!(out)?;
    out.flush()?;
    Ok(match line.label {
        Label::Gesture(_) => ExitCode::SUCCESS,
        Label::NoInput => ExitCode::from(EXIT_NO_INPUT),
    })
}

fn cmd_session(cli: &Cli, path: &Path) -> Result<ExitCode> {
    cli.json_only()?;
    let cfg = cli.config()?;
    let model = cfg.link_model()?;
    let text = fs::read_to_string(path).with_context(|| format!("cannot read scenario {}", path.display()))?;
    let file = ScenarioFile::parse(&text, &path.display().to_string())?;
    let scn = file.resolve(&cfg, cli.seed)?;
    let report = run_session(&scn, &model).with_context(|| format!("scenario {}", path.display()))?;

    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let report_path = dir.join("report.json");
    let events_path = dir.join("events.jsonl");
    let mut f = std::io::BufWriter::new(fs::File::create(&report_path)?);
    serde_json::to_writer_pretty(&mut f, &report)?;
    writeln!(f)?;
    f.flush()?;
    let mut f = std::io::BufWriter::new(fs::File::create(&events_path)?);
    jsonl::write_events(&report.decoded, &mut f)?;
    f.flush()?;

    let summary = json!({
        "scenario": file.name,
        "accuracy": report.accuracy,
        "decoded": report.decoded.len(),
        "median_latency_ms": report.median_latency_ms,
        "avg_uw": report.energy.avg_uw,
        "report": report_path,
        "events": events_path,
    });
    println!("{summary}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_calibrate(cli: &Cli) -> Result<ExitCode> {
    cli.json_only()?;
    let cfg = cli.config()?;
    let model = cfg.link_model()?;
    let ring = &model.ring;
    let wrist_f0 = model.wrist.resonant_frequency_mhz(None)?;
    // The wristband is quoted as a 27 MHz coil.
    let nominal_wrist_mhz = 27.0;
    let gestures: Vec<_> = model
        .symbols
        .iter()
        .map(|s| {
            json!({
                "gesture": s.kind.name(),
                "target_f0_mhz": s.target_f0_mhz,
                "digipot_code": s.digipot_code,
                "bias_v": s.bias_v,
                "c_v_pf": s.c_v_pf,
                "realized_f0_mhz": s.realized_f0_mhz,
                "error_pct": 100.0 * (s.realized_f0_mhz - s.target_f0_mhz) / s.target_f0_mhz,
            })
        })
        .collect();
    let report = json!({
        "ring": {
            "inductance_uh": ring.inductance_uh,
            "resistance_ohm": ring.total_resistance_ohm(),
            "segments": ring.caps.n_segments,
            "c_fixed_pf": ring.caps.c_fixed_pf,
            "c_varseg_pf": ring.caps.c_varseg_fixed_pf,
            "f_at_cmax_mhz": ring.resonant_frequency_mhz(Some(cfg.varactor.c_max_pf))?,
            "f_at_cmin_mhz": ring.resonant_frequency_mhz(Some(cfg.varactor.c_min_pf))?,
            "linewidth_mhz": ring.linewidth_mhz(),
        },
        "codes": model.symbols.iter().map(|s| s.digipot_code).collect::<Vec<_>>(),
        "gestures": gestures,
        "wrist": {
            "inductance_uh": model.wrist.inductance_uh,
            "resistance_ohm": model.wrist.total_resistance_ohm(),
            "c_eff_pf": model.wrist.effective_capacitance_pf(None)?,
            "f0_mhz": wrist_f0,
            "nominal_f0_mhz": nominal_wrist_mhz,
            "deviation_pct": 100.0 * (wrist_f0 - nominal_wrist_mhz) / nominal_wrist_mhz,
        },
    });
    emit_json(cli, &report)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_coupling(cli: &Cli) -> Result<ExitCode> {
    cli.json_only()?;
    let cfg = cli.config()?;
    let g = &cfg.link.geometry;
    let pts = cfg.link.quadrature_points;
    let (l_ring, l_wrist) = (cfg.ring.inductance_uh, cfg.wrist.inductance_uh);
    let tilt = cfg.link.tilt_deg;
    let m0 = g.mutual_nh(0.0, pts)?;
    let mt = g.mutual_nh(tilt, pts)?;
    let k = |m: f64| semipit_core::coupling_coefficient(m.abs(), l_ring, l_wrist);
    let report = json!({
        "geometry": g,
        "quadrature_points": pts,
        "tilt_deg": tilt,
        "m_nh_0deg": m0,
        "k_0deg": k(m0),
        "m_nh_tilted": mt,
        "k_tilted": k(mt),
        "tilt_increases_coupling": mt.abs() > m0.abs(),
        "configured_k": cfg.link.k,
    });
    emit_json(cli, &report)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_power(cli: &Cli) -> Result<ExitCode> {
    cli.json_only()?;
    let cfg = cli.config()?;
    let report = power_report(&cfg.power, &cfg.battery, cfg.session.active_hours_per_day)?;
    emit_json(cli, &report)?;
    Ok(ExitCode::SUCCESS)
}
