//! End-to-end replay: switch edges drive the ring firmware, the wristband
//! sweeps on a fixed period, and each sweep is decoded and scored against the
//! gesture the ring was streaming at that instant.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::coupling::CouplingLink;
use crate::decoder::{classify, estimate, DecodeError, DecoderConfig, Label};
use crate::firmware::{
    plan_digipot_codes, quadrature_edges, AxisPhase, Channel, FirmwareConfig, FirmwareState, GestureKind,
    GestureSymbol, PlanError, SwitchEvent, DEFAULT_GESTURE_ORDER, DEFAULT_TARGETS_MHZ,
};
use crate::power::{session_energy, BatterySpec, ModeInterval, PowerMode, PowerProfile, SessionEnergy, TimelineError};
use crate::resonant::ResonantTank;
use crate::sensing::{run_sweep_with_rng, RingLoad, SweepConfig, TraceError};

pub const DEFAULT_SWEEP_PERIOD_MS: u64 = 50;

/// Sweep start times `0, period, 2·period, …` strictly before `duration_ms`.
pub fn sweep_schedule(duration_ms: u64, period_ms: u64) -> Vec<u64> {
    if period_ms == 0 {
        return Vec::new();
    }
    (0..duration_ms).step_by(period_ms as usize).collect()
}

/// The fixed hardware a session runs on.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkModel {
    pub ring: ResonantTank,
    pub wrist: ResonantTank,
    pub symbols: [GestureSymbol; 5],
    pub decoder: DecoderConfig,
    pub firmware: FirmwareConfig,
    pub power: PowerProfile,
    pub battery: BatterySpec,
}

impl LinkModel {
    /// Calibrated ring, stock wristband, default gesture plan.
    pub fn paper_defaults() -> Result<Self, PlanError> {
        let ring = ResonantTank::calibrated_ring()?;
        Self::new(ring, ResonantTank::wristband(), &DEFAULT_TARGETS_MHZ)
    }

    pub fn new(ring: ResonantTank, wrist: ResonantTank, targets_mhz: &[f64; 5]) -> Result<Self, PlanError> {
        let varactor = ring.varactor.unwrap_or_default();
        let symbols = plan_digipot_codes(&ring, &varactor, targets_mhz, &DEFAULT_GESTURE_ORDER)?;
        Ok(Self {
            decoder: DecoderConfig::for_ring(&ring),
            ring,
            wrist,
            symbols,
            firmware: FirmwareConfig::default(),
            power: PowerProfile::default(),
            battery: BatterySpec::default(),
        })
    }

    pub fn symbol(&self, g: GestureKind) -> &GestureSymbol {
        self.symbols.iter().find(|s| s.kind == g).expect("plan covers every gesture")
    }

    /// What the ring presents while streaming `g` (open when idle).
    pub fn load_for(&self, g: Option<GestureKind>) -> RingLoad {
        match g {
            Some(g) => RingLoad::Varactor(self.symbol(g).c_v_pf),
            None => RingLoad::Open,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SessionScenario {
    pub switch_events: Vec<SwitchEvent>,
    pub duration_ms: u64,
    pub sweep_period_ms: u64,
    pub link: CouplingLink,
    pub sweep_cfg: SweepConfig,
    /// Seeds the noise; sweep `i` draws from stream `i` of this seed.
    pub rng_seed: u64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Timeline(#[from] TimelineError),
}

impl SessionScenario {
    /// Every problem found, one message each, so a bad file can be fixed in
    /// one pass.
    pub fn issues(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.duration_ms == 0 {
            out.push(String::from("duration_ms must be positive"));
        }
        if self.sweep_period_ms < 1 {
            out.push(String::from("sweep_period_ms must be at least 1"));
        }
        if !(self.link.k >= 0.0 && self.link.k < 1.0) {
            out.push(format!("link.k must lie in [0, 1), got {}", self.link.k));
        }
        if let Err(e) = self.sweep_cfg.validate() {
            out.push(format!("sweep: {e}"));
        }
        let mut prev = 0u64;
        for (i, ev) in self.switch_events.iter().enumerate() {
            if ev.t_ms < prev {
                out.push(format!("events[{i}]: t_ms {} precedes previous event at {prev} ms", ev.t_ms));
            }
            prev = prev.max(ev.t_ms);
            if ev.t_ms > self.duration_ms {
                out.push(format!("events[{i}]: t_ms {} beyond duration {} ms", ev.t_ms, self.duration_ms));
            }
            if ev.level > 1 {
                out.push(format!("events[{i}]: level must be 0 or 1, got {}", ev.level));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let issues = self.issues();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError::Invalid(issues))
        }
    }
}

/// One sweep's ground truth and decode.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepOutcome {
    pub t_ms: u64,
    pub truth: Option<GestureKind>,
    pub label: Label,
    pub f_peak_mhz: Option<f64>,
    pub snr_db: Option<f64>,
}

/// A decoded gesture, emitted when the decoded label switches to it.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecodedEvent {
    pub t_ms: u64,
    pub label: Label,
    pub f_peak_mhz: f64,
    pub snr_db: f64,
}

/// A stretch during which the ring streamed one gesture.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GestureInterval {
    pub gesture: GestureKind,
    pub start_ms: u64,
    pub end_ms: u64,
    /// Switch edge that started it.
    pub cause_t_ms: u64,
    pub sweeps: u32,
    pub correct: bool,
    pub latency_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SessionReport {
    pub decoded: Vec<DecodedEvent>,
    /// Fraction of gesture intervals whose every sweep decoded correctly.
    /// 1.0 when no gesture was injected.
    pub accuracy: f64,
    pub median_latency_ms: Option<f64>,
    pub mode_timeline: Vec<ModeInterval>,
    pub energy: SessionEnergy,
    pub intervals: Vec<GestureInterval>,
    pub sweeps: Vec<SweepOutcome>,
    pub quadrature_faults: u32,
}

impl SessionReport {
    /// Start of the last STANDBY stretch, if the session ends asleep.
    pub fn final_standby_entry_ms(&self) -> Option<u64> {
        self.mode_timeline.last().filter(|iv| iv.mode == PowerMode::Standby).map(|iv| iv.start_ms)
    }
}

struct Timeline {
    intervals: Vec<ModeInterval>,
}

impl Timeline {
    fn new() -> Self {
        Self { intervals: alloc::vec![ModeInterval { start_ms: 0, end_ms: 0, mode: PowerMode::Standby }] }
    }

    fn record(&mut self, t: u64, mode: PowerMode) {
        let last = self.intervals.last_mut().expect("timeline never empty");
        if last.mode == mode {
            return;
        }
        if last.start_ms == t {
            last.mode = mode;
            // Merge with the previous stretch if that left two alike.
            let n = self.intervals.len();
            if n >= 2 && self.intervals[n - 2].mode == mode {
                self.intervals.pop();
            }
            return;
        }
        last.end_ms = t;
        self.intervals.push(ModeInterval { start_ms: t, end_ms: t, mode });
    }

    fn finish(mut self, end: u64) -> Vec<ModeInterval> {
        if let Some(last) = self.intervals.last_mut() {
            last.end_ms = end;
        }
        self.intervals
    }
}

enum Next {
    Event,
    Deadline(u64),
    Sweep(u64),
}

/// Replays `scn` on `model`. Deterministic for a given scenario.
///
/// At equal timestamps switch edges go first, then firmware deadlines, then
/// the sweep.
pub fn run_session(scn: &SessionScenario, model: &LinkModel) -> Result<SessionReport, ScenarioError> {
    scn.validate()?;
    let sweeps = sweep_schedule(scn.duration_ms, scn.sweep_period_ms);
    let mut fw = FirmwareState::new(model.firmware);
    let mut timeline = Timeline::new();
    let mut changes: Vec<(u64, Option<GestureKind>, u64)> = Vec::new();
    let mut outcomes: Vec<SweepOutcome> = Vec::with_capacity(sweeps.len());
    let (mut ei, mut si) = (0usize, 0usize);

    loop {
        let ev_t = scn.switch_events.get(ei).map(|e| e.t_ms);
        let dl = fw.next_deadline().filter(|&d| d < scn.duration_ms);
        let sw = sweeps.get(si).copied();
        let next = match (ev_t, dl, sw) {
            (Some(te), d, s) if d.is_none_or(|d| te <= d) && s.is_none_or(|s| te <= s) => Next::Event,
            (_, Some(d), s) if s.is_none_or(|s| d <= s) => Next::Deadline(d),
            (_, _, Some(s)) => Next::Sweep(s),
            _ => break,
        };
        match next {
            Next::Event => {
                let ev = scn.switch_events[ei];
                ei += 1;
                if let Some(c) = fw.step(Some(&ev), ev.t_ms) {
                    changes.push((c.t_ms, c.gesture, c.cause_t_ms));
                }
                timeline.record(fw.mode_since_ms, fw.mode);
            }
            Next::Deadline(d) => {
                if let Some(c) = fw.step(None, d) {
                    changes.push((c.t_ms, c.gesture, c.cause_t_ms));
                }
                timeline.record(fw.mode_since_ms, fw.mode);
            }
            Next::Sweep(t) => {
                let truth = fw.current_gesture;
                let mut rng = ChaCha8Rng::seed_from_u64(scn.rng_seed);
                rng.set_stream(si as u64);
                si += 1;
                let trace = run_sweep_with_rng(&scn.sweep_cfg, &model.wrist, &model.ring, &scn.link, model.load_for(truth), &mut rng)?;
                outcomes.push(decode_sweep(t, truth, &trace, model)?);
            }
        }
    }

    let mode_timeline = timeline.finish(scn.duration_ms);
    let energy = session_energy(&mode_timeline, &model.power, &model.battery)?;
    let intervals = gesture_intervals(&changes, &outcomes, scn.duration_ms);
    let correct = intervals.iter().filter(|iv| iv.correct).count();
    let accuracy = if intervals.is_empty() { 1.0 } else { correct as f64 / intervals.len() as f64 };
    let mut latencies: Vec<u64> = intervals.iter().filter_map(|iv| iv.latency_ms).collect();
    latencies.sort_unstable();

    Ok(SessionReport {
        decoded: decoded_events(&outcomes),
        accuracy,
        median_latency_ms: median(&latencies),
        mode_timeline,
        energy,
        intervals,
        sweeps: outcomes,
        quadrature_faults: fw.faults,
    })
}

fn decode_sweep(
    t: u64,
    truth: Option<GestureKind>,
    trace: &crate::sensing::SweepTrace,
    model: &LinkModel,
) -> Result<SweepOutcome, ScenarioError> {
    let peak = match estimate(trace, &model.decoder) {
        Ok(p) => p,
        // Nothing above the floor at all; an idle sweep without noise.
        Err(DecodeError::NoPeak) => {
            return Ok(SweepOutcome { t_ms: t, truth, label: Label::NoInput, f_peak_mhz: None, snr_db: None });
        }
        Err(e) => return Err(e.into()),
    };
    let c = classify(&peak, &model.symbols, &model.decoder)?;
    Ok(SweepOutcome { t_ms: t, truth, label: c.label, f_peak_mhz: Some(c.f_peak_mhz), snr_db: Some(c.snr_db) })
}

fn decoded_events(outcomes: &[SweepOutcome]) -> Vec<DecodedEvent> {
    let mut out = Vec::new();
    let mut prev = Label::NoInput;
    for o in outcomes {
        if o.label != prev {
            if let (Label::Gesture(_), Some(f), Some(snr)) = (o.label, o.f_peak_mhz, o.snr_db) {
                out.push(DecodedEvent { t_ms: o.t_ms, label: o.label, f_peak_mhz: f, snr_db: snr });
            }
        }
        prev = o.label;
    }
    out
}

fn gesture_intervals(
    changes: &[(u64, Option<GestureKind>, u64)],
    outcomes: &[SweepOutcome],
    duration_ms: u64,
) -> Vec<GestureInterval> {
    let mut out = Vec::new();
    for (i, &(start, g, cause)) in changes.iter().enumerate() {
        let Some(gesture) = g else { continue };
        let end = changes.get(i + 1).map_or(duration_ms, |c| c.0);
        let inside: Vec<&SweepOutcome> = outcomes.iter().filter(|o| o.t_ms >= start && o.t_ms < end).collect();
        let ok = |o: &SweepOutcome| o.label == Label::Gesture(gesture);
        let latency_ms = inside.iter().find(|o| ok(o)).map(|o| o.t_ms - cause);
        out.push(GestureInterval {
            gesture,
            start_ms: start,
            end_ms: end,
            cause_t_ms: cause,
            sweeps: inside.len() as u32,
            correct: !inside.is_empty() && inside.iter().all(|o| ok(o)),
            latency_ms,
        });
    }
    out
}

fn median(sorted: &[u64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2] as f64),
        _ => Some((sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0),
    }
}

/// Scripts switch activity for a scenario.
#[derive(Debug, Clone)]
pub struct ScenarioBuilder {
    scn: SessionScenario,
    x: AxisPhase,
    y: AxisPhase,
}

impl ScenarioBuilder {
    /// Empty scenario at the default link (k = 0.0039) and sweep settings.
    pub fn new(duration_ms: u64) -> Self {
        let link = CouplingLink::from_k(0.0039, 2.6, 4.0).expect("default coupling is valid");
        Self {
            scn: SessionScenario {
                switch_events: Vec::new(),
                duration_ms,
                sweep_period_ms: DEFAULT_SWEEP_PERIOD_MS,
                link,
                sweep_cfg: SweepConfig::default(),
                rng_seed: 0,
            },
            x: AxisPhase::default(),
            y: AxisPhase::default(),
        }
    }

    pub fn link(mut self, link: CouplingLink) -> Self {
        self.scn.link = link;
        self
    }

    pub fn sweep(mut self, cfg: SweepConfig) -> Self {
        self.scn.sweep_cfg = SweepConfig { rng_seed: self.scn.rng_seed, ..cfg };
        self
    }

    pub fn noise(mut self, sigma_ohm: f64) -> Self {
        self.scn.sweep_cfg.noise_sigma_ohm = sigma_ohm;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.scn.rng_seed = seed;
        self.scn.sweep_cfg.rng_seed = seed;
        self
    }

    pub fn sweep_period(mut self, ms: u64) -> Self {
        self.scn.sweep_period_ms = ms;
        self
    }

    pub fn event(mut self, ev: SwitchEvent) -> Self {
        self.scn.switch_events.push(ev);
        self
    }

    /// Button down at `t_ms`, up `hold_ms` later.
    pub fn press(self, t_ms: u64, hold_ms: u64) -> Self {
        self.event(SwitchEvent::new(t_ms, Channel::Btn, true))
            .event(SwitchEvent::new(t_ms + hold_ms, Channel::Btn, false))
    }

    /// `ticks` quadrature detents on one roller, one edge every `step_ms`.
    pub fn scroll(mut self, t_ms: u64, x_axis: bool, ticks: i32, step_ms: u64) -> Self {
        let phase = if x_axis { &mut self.x } else { &mut self.y };
        let edges = quadrature_edges(phase, x_axis, ticks, t_ms, step_ms);
        self.scn.switch_events.extend(edges);
        self
    }

    /// Scrolls `g` (or presses, for `Press`) at `t_ms` and keeps it streaming
    /// for about `hold_ms`.
    pub fn gesture(self, g: GestureKind, t_ms: u64, hold_ms: u64) -> Self {
        match g {
            GestureKind::ScrollUp => self.scroll(t_ms, false, 2, 10),
            GestureKind::ScrollDown => self.scroll(t_ms, false, -2, 10),
            GestureKind::ScrollLeft => self.scroll(t_ms, true, -2, 10),
            GestureKind::ScrollRight => self.scroll(t_ms, true, 2, 10),
            GestureKind::Press => self.press(t_ms, hold_ms),
        }
    }

    /// Each gesture in turn, 500 ms apart, then idle long enough to time out.
    pub fn all_gestures() -> Self {
        let mut b = Self::new(8_500);
        for (i, g) in DEFAULT_GESTURE_ORDER.into_iter().enumerate() {
            b = b.gesture(g, 500 + 500 * i as u64, 400);
        }
        b
    }

    /// One 150 ms press at `t_ms`.
    pub fn single_press(t_ms: u64) -> Self {
        Self::new(t_ms + 6_000).press(t_ms, 150)
    }

    pub fn build(self) -> SessionScenario {
        self.scn
    }
}

impl fmt::Display for SessionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} sweeps, {} decoded, accuracy {:.3}, avg {:.1} µW",
            self.sweeps.len(),
            self.decoded.len(),
            self.accuracy,
            self.energy.avg_uw
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> LinkModel {
        LinkModel::paper_defaults().unwrap()
    }

    #[test]
    fn schedule_examples() {
        assert_eq!(sweep_schedule(100, 50), [0, 50]);
        assert_eq!(sweep_schedule(49, 50), [0]);
        assert_eq!(sweep_schedule(1000, 50).len(), 20);
        assert!(sweep_schedule(1000, 0).is_empty());
    }

    #[test]
    fn empty_session_sleeps_throughout() {
        let scn = ScenarioBuilder::new(10_000).build();
        let r = run_session(&scn, &model()).unwrap();
        assert!(r.decoded.is_empty());
        assert_eq!(r.mode_timeline, [ModeInterval { start_ms: 0, end_ms: 10_000, mode: PowerMode::Standby }]);
        assert!((r.energy.avg_uw - 50.4).abs() < 1e-9);
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.median_latency_ms, None);
    }

    #[test]
    fn single_press_timing() {
        let scn = ScenarioBuilder::single_press(1000).build();
        let r = run_session(&scn, &model()).unwrap();
        assert_eq!(r.decoded.len(), 1);
        let d = r.decoded[0];
        assert_eq!(d.label, Label::Gesture(GestureKind::Press));
        assert!(d.t_ms >= 1000 && d.t_ms <= 1070, "{d:?}");
        // Release at 1150 is the last edge.
        let standby = r.final_standby_entry_ms().unwrap();
        assert!(standby.abs_diff(1150 + 5000) <= 20, "{standby}");
        assert_eq!(r.accuracy, 1.0);
    }

    #[test]
    fn off_boundary_press_waits_for_poll() {
        let scn = ScenarioBuilder::single_press(1001).build();
        let r = run_session(&scn, &model()).unwrap();
        assert_eq!(r.intervals[0].start_ms, 1020);
        assert_eq!(r.decoded[0].t_ms, 1050);
        assert_eq!(r.median_latency_ms, Some(49.0));
    }

    #[test]
    fn all_gestures_decode() {
        let scn = ScenarioBuilder::all_gestures().noise(0.1).seed(7).build();
        let r = run_session(&scn, &model()).unwrap();
        assert_eq!(r.intervals.len(), 5);
        assert_eq!(r.accuracy, 1.0, "{:?}", r.intervals);
        let labels: Vec<_> = r.decoded.iter().map(|d| d.label.gesture().unwrap()).collect();
        assert_eq!(labels, DEFAULT_GESTURE_ORDER);
        assert_eq!(r.quadrature_faults, 0);
    }

    #[test]
    fn held_gesture_persists_every_sweep() {
        let scn = ScenarioBuilder::new(3000).gesture(GestureKind::ScrollLeft, 100, 0).noise(0.1).build();
        let r = run_session(&scn, &model()).unwrap();
        let held: Vec<_> = r.sweeps.iter().filter(|o| o.t_ms >= 100).collect();
        assert!(!held.is_empty());
        assert!(held.iter().all(|o| o.label == Label::Gesture(GestureKind::ScrollLeft)));
    }

    #[test]
    fn timeline_energy_matches_power_model() {
        let m = model();
        let scn = ScenarioBuilder::all_gestures().build();
        let r = run_session(&scn, &m).unwrap();
        assert_eq!(r.energy, session_energy(&r.mode_timeline, &m.power, &m.battery).unwrap());
        assert_eq!(r.mode_timeline.first().unwrap().start_ms, 0);
        assert_eq!(r.mode_timeline.last().unwrap().end_ms, 8_500);
    }

    #[test]
    fn validation_lists_every_issue() {
        let mut scn = ScenarioBuilder::new(1000).press(500, 100).build();
        scn.switch_events.push(SwitchEvent { t_ms: 200, channel: Channel::XA, level: 3 });
        scn.switch_events.push(SwitchEvent { t_ms: 2000, channel: Channel::XA, level: 1 });
        scn.sweep_period_ms = 0;
        let Err(ScenarioError::Invalid(issues)) = run_session(&scn, &model()) else { panic!() };
        assert_eq!(issues.len(), 4, "{issues:?}");
        assert!(issues.iter().any(|s| s.starts_with("events[2]")));
    }

    #[test]
    fn deterministic() {
        let scn = ScenarioBuilder::all_gestures().noise(0.1).seed(3).build();
        let m = model();
        assert_eq!(run_session(&scn, &m).unwrap(), run_session(&scn, &m).unwrap());
    }
}
