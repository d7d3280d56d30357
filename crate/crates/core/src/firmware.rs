//! Discrete-event model of the ring MCU.
//!
//! Trackball rollers turn alternating-pole magnets over pairs of hall
//! switches, one pair per axis in quadrature. The MCU decodes direction,
//! picks the gesture, and sets the digipot feeding the varactor bias. It
//! sleeps in STANDBY, polling every `poll_period_ms`, and falls back to
//! STANDBY after `standby_timeout_ms` without a switch change.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::power::PowerMode;
use crate::resonant::{NetworkError, ResonantTank, VaractorModel};
use crate::units::capacitance_for_mhz;

pub const DIGIPOT_STEPS: u8 = 255;
pub const DEFAULT_TARGETS_MHZ: [f64; 5] = [28.0, 28.4, 28.8, 29.2, 29.6];
pub const DEFAULT_GESTURE_ORDER: [GestureKind; 5] = [
    GestureKind::ScrollUp,
    GestureKind::ScrollDown,
    GestureKind::ScrollLeft,
    GestureKind::ScrollRight,
    GestureKind::Press,
];
/// Realized resonance must land within this fraction of its target.
pub const PLAN_TOLERANCE: f64 = 0.002;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum GestureKind {
    ScrollUp,
    ScrollDown,
    ScrollLeft,
    ScrollRight,
    Press,
}

impl GestureKind {
    pub const ALL: [GestureKind; 5] = DEFAULT_GESTURE_ORDER;

    pub fn name(self) -> &'static str {
        match self {
            GestureKind::ScrollUp => "ScrollUp",
            GestureKind::ScrollDown => "ScrollDown",
            GestureKind::ScrollLeft => "ScrollLeft",
            GestureKind::ScrollRight => "ScrollRight",
            GestureKind::Press => "Press",
        }
    }

    /// Kebab-case form used on the command line.
    pub fn cli_name(self) -> &'static str {
        match self {
            GestureKind::ScrollUp => "scroll-up",
            GestureKind::ScrollDown => "scroll-down",
            GestureKind::ScrollLeft => "scroll-left",
            GestureKind::ScrollRight => "scroll-right",
            GestureKind::Press => "press",
        }
    }
}

impl fmt::Display for GestureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown gesture {0:?}")]
pub struct UnknownGesture(pub alloc::string::String);

impl FromStr for GestureKind {
    type Err = UnknownGesture;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GestureKind::ALL
            .into_iter()
            .find(|g| g.name().eq_ignore_ascii_case(s) || g.cli_name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownGesture(s.into()))
    }
}

/// One gesture's slot in the frequency plan.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GestureSymbol {
    pub kind: GestureKind,
    pub target_f0_mhz: f64,
    pub digipot_code: u8,
    pub bias_v: f64,
    /// Varactor capacitance at the quantized bias.
    pub c_v_pf: f64,
    /// Ring resonance at `c_v_pf`.
    pub realized_f0_mhz: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("target {target_mhz} MHz outside achievable band [{lo_mhz}, {hi_mhz}] MHz")]
    Infeasible { target_mhz: f64, lo_mhz: f64, hi_mhz: f64 },
    #[error("targets must be strictly increasing")]
    NotIncreasing,
    #[error("gesture order must name each gesture exactly once")]
    BadOrder,
    #[error("ring tank has no varactor segment")]
    NoVaractorSegment,
    #[error("realized {realized_mhz} MHz misses target {target_mhz} MHz by more than 0.2%")]
    OutOfTolerance { target_mhz: f64, realized_mhz: f64 },
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// Works out, for each target frequency, the varactor capacitance the ring
/// network needs, the bias that produces it, and the nearest digipot code.
///
/// `order[i]` is the gesture assigned to `targets_mhz[i]`.
pub fn plan_digipot_codes(
    ring: &ResonantTank,
    varactor: &VaractorModel,
    targets_mhz: &[f64; 5],
    order: &[GestureKind; 5],
) -> Result<[GestureSymbol; 5], PlanError> {
    if !ring.caps.has_varactor_segment {
        return Err(PlanError::NoVaractorSegment);
    }
    varactor.validate()?;
    if targets_mhz.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(PlanError::NotIncreasing);
    }
    for g in GestureKind::ALL {
        if order.iter().filter(|&&o| o == g).count() != 1 {
            return Err(PlanError::BadOrder);
        }
    }

    let caps = &ring.caps;
    let fixed_inv = f64::from(caps.n_segments - 1) / caps.c_fixed_pf;
    let lo_mhz = ring.resonant_frequency_mhz(Some(varactor.c_max_pf))?;
    let hi_mhz = ring.resonant_frequency_mhz(Some(varactor.c_min_pf))?;

    let mut out = [GestureSymbol {
        kind: GestureKind::ScrollUp,
        target_f0_mhz: 0.0,
        digipot_code: 0,
        bias_v: 0.0,
        c_v_pf: 0.0,
        realized_f0_mhz: 0.0,
    }; 5];
    for (slot, (&target, &kind)) in out.iter_mut().zip(targets_mhz.iter().zip(order)) {
        let infeasible = PlanError::Infeasible { target_mhz: target, lo_mhz, hi_mhz };
        let c_eff = capacitance_for_mhz(ring.inductance_uh, target);
        let seg_inv = 1.0 / c_eff - fixed_inv;
        if !(seg_inv > 0.0) {
            return Err(infeasible);
        }
        let c_v = 1.0 / seg_inv - caps.c_varseg_fixed_pf;
        let bias = varactor.bias_for(c_v).map_err(|_| infeasible)?;
        let code = libm::round(bias / varactor.v_rail * f64::from(DIGIPOT_STEPS)) as u8;
        let bias_q = f64::from(code) / f64::from(DIGIPOT_STEPS) * varactor.v_rail;
        let c_q = varactor.capacitance_pf(bias_q)?;
        let realized = ring.resonant_frequency_mhz(Some(c_q))?;
        if (realized - target).abs() > PLAN_TOLERANCE * target {
            return Err(PlanError::OutOfTolerance { target_mhz: target, realized_mhz: realized });
        }
        *slot = GestureSymbol {
            kind,
            target_f0_mhz: target,
            digipot_code: code,
            bias_v: bias_q,
            c_v_pf: c_q,
            realized_f0_mhz: realized,
        };
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Channel {
    #[cfg_attr(feature = "serde", serde(rename = "X_A"))]
    XA,
    #[cfg_attr(feature = "serde", serde(rename = "X_B"))]
    XB,
    #[cfg_attr(feature = "serde", serde(rename = "Y_A"))]
    YA,
    #[cfg_attr(feature = "serde", serde(rename = "Y_B"))]
    YB,
    #[cfg_attr(feature = "serde", serde(rename = "BTN"))]
    Btn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SwitchEvent {
    pub t_ms: u64,
    pub channel: Channel,
    /// 0 or 1.
    pub level: u8,
}

impl SwitchEvent {
    pub fn new(t_ms: u64, channel: Channel, level: bool) -> Self {
        Self { t_ms, channel, level: u8::from(level) }
    }

    pub fn is_high(&self) -> bool {
        self.level != 0
    }
}

/// Outcome of one quadrature transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tick {
    Forward,
    Backward,
    /// No change of state.
    Idle,
    /// Both bits changed at once; direction is unknowable.
    Fault,
}

impl Tick {
    pub fn delta(self) -> i8 {
        match self {
            Tick::Forward => 1,
            Tick::Backward => -1,
            Tick::Idle | Tick::Fault => 0,
        }
    }
}

/// Latched levels of one axis' two hall switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AxisPhase {
    pub a: bool,
    pub b: bool,
}

impl AxisPhase {
    fn code(self) -> u8 {
        (u8::from(self.a) << 1) | u8::from(self.b)
    }

    /// Position in the forward Gray cycle 00 → 10 → 11 → 01.
    fn gray_index(self) -> u8 {
        match self.code() {
            0b00 => 0,
            0b10 => 1,
            0b11 => 2,
            _ => 3,
        }
    }

    /// Classifies the move from `self` to `next`.
    pub fn transition(self, next: AxisPhase) -> Tick {
        match (next.gray_index() + 4 - self.gray_index()) % 4 {
            0 => Tick::Idle,
            1 => Tick::Forward,
            3 => Tick::Backward,
            _ => Tick::Fault,
        }
    }
}

/// Applies one switch edge to an axis and reports the tick. Faults bump
/// `faults` rather than erroring.
pub fn quadrature_step(phase: &mut AxisPhase, channel_a: bool, level: bool, faults: &mut u32) -> Tick {
    let mut next = *phase;
    if channel_a {
        next.a = level;
    } else {
        next.b = level;
    }
    let tick = phase.transition(next);
    if tick == Tick::Fault {
        *faults += 1;
    }
    *phase = next;
    tick
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct FirmwareConfig {
    pub poll_period_ms: u64,
    pub standby_timeout_ms: u64,
}

impl Default for FirmwareConfig {
    fn default() -> Self {
        Self { poll_period_ms: 20, standby_timeout_ms: 5000 }
    }
}

/// The streamed gesture changed at `t_ms`. `gesture` is `None` when the ring
/// stops streaming; `cause_t_ms` is the time of the switch edge (or timeout)
/// that caused it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GestureChange {
    pub t_ms: u64,
    pub gesture: Option<GestureKind>,
    pub cause_t_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirmwareState {
    pub config: FirmwareConfig,
    pub mode: PowerMode,
    /// When `mode` was entered.
    pub mode_since_ms: u64,
    pub last_input_t_ms: u64,
    pub x: AxisPhase,
    pub y: AxisPhase,
    pub button: bool,
    pub faults: u32,
    pub current_gesture: Option<GestureKind>,
    /// Switch edges seen while asleep, handled at the next poll.
    pending: Vec<SwitchEvent>,
    wake_at_ms: Option<u64>,
    now_ms: u64,
}

impl FirmwareState {
    /// Powered up at t = 0 in STANDBY with every switch low.
    pub fn new(config: FirmwareConfig) -> Self {
        Self {
            config,
            mode: PowerMode::Standby,
            mode_since_ms: 0,
            last_input_t_ms: 0,
            x: AxisPhase::default(),
            y: AxisPhase::default(),
            button: false,
            faults: 0,
            current_gesture: None,
            pending: Vec::new(),
            wake_at_ms: None,
            now_ms: 0,
        }
    }

    pub fn now_ms(&self) -> u64 {
        self.now_ms
    }

    /// Next time the state machine changes on its own: a poll wake-up with
    /// latched edges, or the inactivity timeout.
    pub fn next_deadline(&self) -> Option<u64> {
        match self.mode {
            PowerMode::Standby => self.wake_at_ms,
            PowerMode::Active => Some(self.last_input_t_ms + self.config.standby_timeout_ms),
        }
    }

    fn next_poll_boundary(&self, t: u64) -> u64 {
        let p = self.config.poll_period_ms.max(1);
        t.div_ceil(p) * p
    }

    /// Feeds an optional switch edge (at `ev.t_ms <= now_ms`) and advances
    /// the clock to `now_ms`. Returns the net change of streamed gesture, if
    /// any.
    pub fn step(&mut self, ev: Option<&SwitchEvent>, now_ms: u64) -> Option<GestureChange> {
        let before = self.current_gesture;
        let mut last_change = None;
        if let Some(ev) = ev {
            let t = ev.t_ms.max(self.now_ms);
            self.advance(t, false, &mut last_change);
            self.ingest(*ev, t, &mut last_change);
        }
        let now = now_ms.max(self.now_ms);
        self.advance(now, true, &mut last_change);
        if self.current_gesture != before {
            last_change
        } else {
            None
        }
    }

    /// Handles deadlines strictly before `t` (or up to and including `t` when
    /// `inclusive`).
    fn advance(&mut self, t: u64, inclusive: bool, change: &mut Option<GestureChange>) {
        while let Some(d) = self.next_deadline() {
            let due = if inclusive { d <= t } else { d < t };
            if !due {
                break;
            }
            match self.mode {
                PowerMode::Standby => self.wake(d, change),
                PowerMode::Active => {
                    self.mode = PowerMode::Standby;
                    self.mode_since_ms = d;
                    self.now_ms = d;
                    self.set_gesture(None, d, d, change);
                }
            }
        }
        self.now_ms = self.now_ms.max(t);
    }

    fn wake(&mut self, at: u64, change: &mut Option<GestureChange>) {
        self.wake_at_ms = None;
        self.mode = PowerMode::Active;
        self.mode_since_ms = at;
        self.now_ms = at;
        self.last_input_t_ms = at;
        let pending = core::mem::take(&mut self.pending);
        for ev in pending {
            self.apply(ev, at, change);
        }
    }

    fn ingest(&mut self, ev: SwitchEvent, t: u64, change: &mut Option<GestureChange>) {
        match self.mode {
            PowerMode::Active => self.apply(ev, t, change),
            PowerMode::Standby => {
                self.pending.push(ev);
                if self.wake_at_ms.is_none() {
                    self.wake_at_ms = Some(self.next_poll_boundary(t));
                }
            }
        }
    }

    /// Acts on one edge as observed by the running MCU at `t`.
    fn apply(&mut self, ev: SwitchEvent, t: u64, change: &mut Option<GestureChange>) {
        let level = ev.is_high();
        let gesture = match ev.channel {
            Channel::Btn => {
                if level == self.button {
                    return;
                }
                self.button = level;
                if level {
                    Some(Some(GestureKind::Press))
                } else if self.current_gesture == Some(GestureKind::Press) {
                    Some(None)
                } else {
                    None
                }
            }
            Channel::XA | Channel::XB | Channel::YA | Channel::YB => {
                let is_x = matches!(ev.channel, Channel::XA | Channel::XB);
                let is_a = matches!(ev.channel, Channel::XA | Channel::YA);
                let phase = if is_x { &mut self.x } else { &mut self.y };
                let current = if is_a { phase.a } else { phase.b };
                if current == level {
                    return;
                }
                let tick = quadrature_step(phase, is_a, level, &mut self.faults);
                let scroll = match (is_x, tick) {
                    (true, Tick::Forward) => Some(GestureKind::ScrollRight),
                    (true, Tick::Backward) => Some(GestureKind::ScrollLeft),
                    (false, Tick::Forward) => Some(GestureKind::ScrollUp),
                    (false, Tick::Backward) => Some(GestureKind::ScrollDown),
                    _ => None,
                };
                // A held button wins over scrolling.
                match scroll {
                    Some(g) if !self.button => Some(Some(g)),
                    _ => None,
                }
            }
        };
        self.last_input_t_ms = t;
        if let Some(g) = gesture {
            self.set_gesture(g, t, ev.t_ms, change);
        }
    }

    fn set_gesture(&mut self, g: Option<GestureKind>, t: u64, cause: u64, change: &mut Option<GestureChange>) {
        if self.current_gesture != g {
            self.current_gesture = g;
            *change = Some(GestureChange { t_ms: t, gesture: g, cause_t_ms: cause });
        }
    }
}

/// Functional form of [`FirmwareState::step`].
pub fn firmware_step(
    st: &FirmwareState,
    ev: Option<&SwitchEvent>,
    now_ms: u64,
) -> (FirmwareState, Option<GestureChange>) {
    let mut next = st.clone();
    let change = next.step(ev, now_ms);
    (next, change)
}

/// Edge sequence for `ticks` detents on one axis, starting from `phase`.
/// Positive counts run forward. Edges are `step_ms` apart from `t0_ms`.
pub fn quadrature_edges(phase: &mut AxisPhase, x_axis: bool, ticks: i32, t0_ms: u64, step_ms: u64) -> Vec<SwitchEvent> {
    let (ch_a, ch_b) = if x_axis { (Channel::XA, Channel::XB) } else { (Channel::YA, Channel::YB) };
    let mut out = Vec::with_capacity(ticks.unsigned_abs() as usize);
    let mut t = t0_ms;
    for _ in 0..ticks.unsigned_abs() {
        // Forward cycle 00 → 10 → 11 → 01 → 00 flips A when A == B.
        let flip_a = (phase.a == phase.b) == (ticks > 0);
        if flip_a {
            phase.a = !phase.a;
            out.push(SwitchEvent::new(t, ch_a, phase.a));
        } else {
            phase.b = !phase.b;
            out.push(SwitchEvent::new(t, ch_b, phase.b));
        }
        t += step_ms;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn plan() -> [GestureSymbol; 5] {
        let ring = ResonantTank::calibrated_ring().unwrap();
        plan_digipot_codes(&ring, &VaractorModel::default(), &DEFAULT_TARGETS_MHZ, &DEFAULT_GESTURE_ORDER).unwrap()
    }

    #[test]
    fn quadrature_table() {
        let mut faults = 0;
        let mut p = AxisPhase { a: false, b: false };
        assert_eq!(quadrature_step(&mut p, true, true, &mut faults), Tick::Forward);
        let mut p = AxisPhase { a: false, b: true };
        assert_eq!(quadrature_step(&mut p, true, true, &mut faults), Tick::Backward);
        assert_eq!(faults, 0);
        // Both bits flipping at once.
        let from = AxisPhase { a: false, b: false };
        assert_eq!(from.transition(AxisPhase { a: true, b: true }), Tick::Fault);
        assert_eq!(from.transition(from), Tick::Idle);
    }

    #[test]
    fn generated_edges_decode_to_ticks() {
        for ticks in [-9, -1, 1, 4, 13] {
            let mut gen = AxisPhase::default();
            let edges = quadrature_edges(&mut gen, false, ticks, 0, 1);
            let mut phase = AxisPhase::default();
            let mut faults = 0;
            let sum: i32 = edges
                .iter()
                .map(|e| i32::from(quadrature_step(&mut phase, e.channel == Channel::YA, e.is_high(), &mut faults).delta()))
                .sum();
            assert_eq!(sum, ticks);
            assert_eq!(faults, 0);
            assert_eq!(phase, gen);
        }
    }

    #[test]
    fn plan_matches_network_inversion() {
        let ring = ResonantTank::calibrated_ring().unwrap();
        let caps = ring.caps;
        let symbols = plan();
        // Independent inversion: 1/C_eff = 7/c_fixed + 1/(c_seg + c_v).
        let expected_cv: Vec<f64> = DEFAULT_TARGETS_MHZ
            .iter()
            .map(|&f| {
                let w = 2.0 * core::f64::consts::PI * f * 1e6;
                let c_eff = 1.0 / (w * w * 2.6e-6) * 1e12;
                1.0 / (1.0 / c_eff - 7.0 / caps.c_fixed_pf) - caps.c_varseg_fixed_pf
            })
            .collect();
        let approx_cv = [69.0, 53.2, 41.9, 33.5, 27.0];
        let expected_codes = [0u8, 96, 164, 215, 255];
        for (i, s) in symbols.iter().enumerate() {
            let code_oracle = libm::round((69.0 - expected_cv[i]) / 42.0 * 255.0) as u8;
            assert_eq!(s.digipot_code, code_oracle);
            assert_eq!(s.digipot_code, expected_codes[i]);
            assert_relative_eq!(s.c_v_pf, approx_cv[i], epsilon = 0.25);
            assert!((s.realized_f0_mhz - s.target_f0_mhz).abs() <= 0.002 * s.target_f0_mhz);
        }
        assert_eq!(symbols[0].kind, GestureKind::ScrollUp);
        assert_eq!(symbols[4].kind, GestureKind::Press);
        assert!(symbols.windows(2).all(|w| w[0].digipot_code < w[1].digipot_code));
    }

    #[test]
    fn plan_rejects_unreachable_target() {
        let ring = ResonantTank::calibrated_ring().unwrap();
        let targets = [28.0, 28.4, 28.8, 29.2, 30.5];
        let err = plan_digipot_codes(&ring, &VaractorModel::default(), &targets, &DEFAULT_GESTURE_ORDER).unwrap_err();
        assert!(matches!(err, PlanError::Infeasible { .. }), "{err:?}");
        let unsorted = [28.4, 28.0, 28.8, 29.2, 29.6];
        assert_eq!(
            plan_digipot_codes(&ring, &VaractorModel::default(), &unsorted, &DEFAULT_GESTURE_ORDER),
            Err(PlanError::NotIncreasing)
        );
        let dup = [GestureKind::Press; 5];
        assert_eq!(
            plan_digipot_codes(&ring, &VaractorModel::default(), &DEFAULT_TARGETS_MHZ, &dup),
            Err(PlanError::BadOrder)
        );
    }

    #[test]
    fn press_wakes_within_one_poll() {
        let mut st = FirmwareState::new(FirmwareConfig::default());
        let ev = SwitchEvent::new(101, Channel::Btn, true);
        assert_eq!(st.step(Some(&ev), 101), None);
        assert_eq!(st.mode, PowerMode::Standby);
        assert_eq!(st.next_deadline(), Some(120));
        let change = st.step(None, 120).unwrap();
        assert_eq!(change, GestureChange { t_ms: 120, gesture: Some(GestureKind::Press), cause_t_ms: 101 });
        assert_eq!(st.mode, PowerMode::Active);
    }

    #[test]
    fn press_on_poll_boundary_is_immediate() {
        let mut st = FirmwareState::new(FirmwareConfig::default());
        let change = st.step(Some(&SwitchEvent::new(100, Channel::Btn, true)), 100).unwrap();
        assert_eq!(change.t_ms, 100);
        assert_eq!(st.current_gesture, Some(GestureKind::Press));
    }

    #[test]
    fn inactivity_returns_to_standby() {
        let mut st = FirmwareState::new(FirmwareConfig::default());
        st.step(Some(&SwitchEvent::new(1000, Channel::Btn, true)), 1000);
        assert_eq!(st.mode, PowerMode::Active);
        assert_eq!(st.step(None, 5999), None);
        assert_eq!(st.mode, PowerMode::Active);
        let change = st.step(None, 6000).unwrap();
        assert_eq!(change.gesture, None);
        assert_eq!(st.mode, PowerMode::Standby);
        assert_eq!(st.mode_since_ms, 6000);
        assert_eq!(st.current_gesture, None);
    }

    #[test]
    fn scroll_directions() {
        let cases = [
            (false, 1, GestureKind::ScrollUp),
            (false, -1, GestureKind::ScrollDown),
            (true, 1, GestureKind::ScrollRight),
            (true, -1, GestureKind::ScrollLeft),
        ];
        for (x_axis, dir, want) in cases {
            let mut st = FirmwareState::new(FirmwareConfig::default());
            let mut gen = AxisPhase::default();
            for ev in quadrature_edges(&mut gen, x_axis, dir * 3, 200, 10) {
                st.step(Some(&ev), ev.t_ms);
            }
            st.step(None, 260);
            assert_eq!(st.current_gesture, Some(want));
            assert_eq!(st.faults, 0);
        }
    }

    #[test]
    fn held_button_beats_scroll() {
        let mut st = FirmwareState::new(FirmwareConfig::default());
        st.step(Some(&SwitchEvent::new(0, Channel::Btn, true)), 0);
        let mut gen = AxisPhase::default();
        for ev in quadrature_edges(&mut gen, false, 4, 10, 10) {
            st.step(Some(&ev), ev.t_ms);
        }
        assert_eq!(st.current_gesture, Some(GestureKind::Press));
        let change = st.step(Some(&SwitchEvent::new(100, Channel::Btn, false)), 100).unwrap();
        assert_eq!(change.gesture, None);
        assert_eq!(st.mode, PowerMode::Active);
    }

    #[test]
    fn repeated_level_is_not_an_edge() {
        let mut st = FirmwareState::new(FirmwareConfig::default());
        st.step(Some(&SwitchEvent::new(0, Channel::YA, true)), 0);
        let last = st.last_input_t_ms;
        st.step(Some(&SwitchEvent::new(3000, Channel::YA, true)), 3000);
        assert_eq!(st.last_input_t_ms, last);
        st.step(None, 5000);
        assert_eq!(st.mode, PowerMode::Standby);
    }

    #[test]
    fn functional_step_leaves_input_untouched() {
        let st = FirmwareState::new(FirmwareConfig::default());
        let (next, change) = firmware_step(&st, Some(&SwitchEvent::new(0, Channel::Btn, true)), 0);
        assert_eq!(st.mode, PowerMode::Standby);
        assert_eq!(next.mode, PowerMode::Active);
        assert_eq!(change.unwrap().gesture, Some(GestureKind::Press));
    }

    #[test]
    fn gesture_names_round_trip() {
        for g in GestureKind::ALL {
            assert_eq!(g.name().parse::<GestureKind>().unwrap(), g);
            assert_eq!(g.cli_name().parse::<GestureKind>().unwrap(), g);
        }
        assert!("wiggle".parse::<GestureKind>().is_err());
    }
}
