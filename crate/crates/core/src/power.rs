//! Ring power and battery accounting.

use core::fmt;

/// Conversion from µW·ms to mWh.
const UW_MS_PER_MWH: f64 = 3.6e9;
const MS_PER_HOUR: f64 = 3.6e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "UPPERCASE"))]
pub enum PowerMode {
    Active,
    Standby,
}

impl fmt::Display for PowerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PowerMode::Active => "ACTIVE",
            PowerMode::Standby => "STANDBY",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TimelineError {
    #[error("timeline is empty")]
    Empty,
    #[error("interval {index} ends before it starts ({start_ms} > {end_ms})")]
    Reversed { index: usize, start_ms: u64, end_ms: u64 },
    #[error("interval {index} starts at {start_ms} ms but the previous one ended at {prev_end_ms} ms (overlap)")]
    Overlap { index: usize, start_ms: u64, prev_end_ms: u64 },
    #[error("interval {index} starts at {start_ms} ms leaving a gap after {prev_end_ms} ms")]
    Gap { index: usize, start_ms: u64, prev_end_ms: u64 },
    #[error("power setting {what} invalid: {value}")]
    BadProfile { what: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct PowerProfile {
    pub v_logic: f64,
    pub i_active_ua: f64,
    pub i_standby_ua: f64,
    pub wrist_circuit_w: f64,
    pub wrist_vna_w: f64,
    /// Headline ACTIVE figure, the rounded-up 1.8 V × 430 µA.
    pub rated_active_uw: f64,
}

impl Default for PowerProfile {
    fn default() -> Self {
        Self {
            v_logic: 1.8,
            i_active_ua: 430.0,
            i_standby_ua: 28.0,
            wrist_circuit_w: 0.46,
            wrist_vna_w: 3.9,
            rated_active_uw: 800.0,
        }
    }
}

impl PowerProfile {
    pub fn validate(&self) -> Result<(), TimelineError> {
        let checks = [
            ("v_logic", self.v_logic, self.v_logic > 0.0),
            ("i_active_ua", self.i_active_ua, self.i_active_ua >= 0.0),
            ("i_standby_ua", self.i_standby_ua, self.i_standby_ua >= 0.0),
            ("wrist_circuit_w", self.wrist_circuit_w, self.wrist_circuit_w >= 0.0),
            ("wrist_vna_w", self.wrist_vna_w, self.wrist_vna_w >= 0.0),
            ("rated_active_uw", self.rated_active_uw, self.rated_active_uw > 0.0),
        ];
        for (what, value, ok) in checks {
            if !ok || !value.is_finite() {
                return Err(TimelineError::BadProfile { what, value });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct BatterySpec {
    pub capacity_mah: f64,
    pub nominal_v: f64,
    pub conversion_efficiency: f64,
}

impl Default for BatterySpec {
    fn default() -> Self {
        Self { capacity_mah: 20.0, nominal_v: 3.7, conversion_efficiency: 1.0 }
    }
}

impl BatterySpec {
    pub fn validate(&self) -> Result<(), TimelineError> {
        let bad = |what, value| Err(TimelineError::BadProfile { what, value });
        if !(self.capacity_mah > 0.0) || !self.capacity_mah.is_finite() {
            return bad("capacity_mah", self.capacity_mah);
        }
        if !(self.nominal_v > 0.0) || !self.nominal_v.is_finite() {
            return bad("nominal_v", self.nominal_v);
        }
        if !(self.conversion_efficiency > 0.0 && self.conversion_efficiency <= 1.0) {
            return bad("conversion_efficiency", self.conversion_efficiency);
        }
        Ok(())
    }

    pub fn energy_mwh(&self) -> f64 {
        self.capacity_mah * self.nominal_v * self.conversion_efficiency
    }
}

/// Ring draw in µW.
pub fn mode_power(profile: &PowerProfile, mode: PowerMode) -> f64 {
    let i = match mode {
        PowerMode::Active => profile.i_active_ua,
        PowerMode::Standby => profile.i_standby_ua,
    };
    profile.v_logic * i
}

/// Hours until the battery's stored energy is spent at a constant `load_uw`.
pub fn battery_life_hours(battery: &BatterySpec, load_uw: f64) -> f64 {
    battery.energy_mwh() * 1000.0 / load_uw
}

/// Hours until `capacity_mah` is drawn at a constant `current_ua`, ignoring
/// voltage conversion.
pub fn charge_life_hours(battery: &BatterySpec, current_ua: f64) -> f64 {
    battery.capacity_mah * 1000.0 / current_ua
}

/// Half-open interval `[start_ms, end_ms)` spent in one mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModeInterval {
    pub start_ms: u64,
    pub end_ms: u64,
    pub mode: PowerMode,
}

impl ModeInterval {
    pub fn duration_ms(&self) -> u64 {
        self.end_ms - self.start_ms
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SessionEnergy {
    pub energy_mwh: f64,
    pub avg_uw: f64,
    pub projected_life_h: f64,
    pub active_ms: u64,
    pub standby_ms: u64,
}

/// Integrates the piecewise-constant ring power over a contiguous timeline.
///
/// Durations are summed per mode in integer milliseconds before any floating
/// point work, so splitting an interval never changes the result.
pub fn session_energy(
    timeline: &[ModeInterval],
    profile: &PowerProfile,
    battery: &BatterySpec,
) -> Result<SessionEnergy, TimelineError> {
    if timeline.is_empty() {
        return Err(TimelineError::Empty);
    }
    let (mut active_ms, mut standby_ms) = (0u64, 0u64);
    let mut prev_end: Option<u64> = None;
    for (index, iv) in timeline.iter().enumerate() {
        if iv.end_ms < iv.start_ms {
            return Err(TimelineError::Reversed { index, start_ms: iv.start_ms, end_ms: iv.end_ms });
        }
        if let Some(prev_end_ms) = prev_end {
            if iv.start_ms < prev_end_ms {
                return Err(TimelineError::Overlap { index, start_ms: iv.start_ms, prev_end_ms });
            }
            if iv.start_ms > prev_end_ms {
                return Err(TimelineError::Gap { index, start_ms: iv.start_ms, prev_end_ms });
            }
        }
        prev_end = Some(iv.end_ms);
        match iv.mode {
            PowerMode::Active => active_ms += iv.duration_ms(),
            PowerMode::Standby => standby_ms += iv.duration_ms(),
        }
    }
    let total_ms = active_ms + standby_ms;
    let uw_ms = mode_power(profile, PowerMode::Active) * active_ms as f64
        + mode_power(profile, PowerMode::Standby) * standby_ms as f64;
    let avg_uw = if total_ms == 0 { 0.0 } else { uw_ms / total_ms as f64 };
    let projected_life_h = if avg_uw > 0.0 { battery_life_hours(battery, avg_uw) } else { f64::INFINITY };
    Ok(SessionEnergy { energy_mwh: uw_ms / UW_MS_PER_MWH, avg_uw, projected_life_h, active_ms, standby_ms })
}

/// Everything the `power` command reports.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PowerReport {
    pub p_active_uw: f64,
    pub p_standby_uw: f64,
    pub active_hours_per_day: f64,
    /// Average ring draw over a day with `active_hours_per_day` ACTIVE.
    pub avg_uw: f64,
    /// Energy model at the rated ACTIVE figure.
    pub life_h_energy_model: f64,
    /// Energy model at the exact ACTIVE product.
    pub life_h_energy_model_exact: f64,
    /// Charge model: capacity over ACTIVE current.
    pub life_h_charge_model: f64,
    /// False when the charge model lands more than 10% off the energy model.
    pub charge_model_consistent: bool,
    pub life_h_duty_cycle: f64,
    pub life_days_duty_cycle: f64,
    /// Wristband draw, excluded from ring battery life.
    pub wrist_circuit_w: f64,
    pub wrist_vna_w: f64,
}

pub fn power_report(
    profile: &PowerProfile,
    battery: &BatterySpec,
    active_hours_per_day: f64,
) -> Result<PowerReport, TimelineError> {
    profile.validate()?;
    battery.validate()?;
    if !(0.0..=24.0).contains(&active_hours_per_day) {
        return Err(TimelineError::BadProfile { what: "active_hours_per_day", value: active_hours_per_day });
    }
    let p_active = mode_power(profile, PowerMode::Active);
    let p_standby = mode_power(profile, PowerMode::Standby);
    let day_ms = 24.0 * MS_PER_HOUR;
    let active_ms = libm::round(active_hours_per_day * MS_PER_HOUR) as u64;
    let timeline = [
        ModeInterval { start_ms: 0, end_ms: active_ms, mode: PowerMode::Active },
        ModeInterval { start_ms: active_ms, end_ms: day_ms as u64, mode: PowerMode::Standby },
    ];
    let day = session_energy(&timeline, profile, battery)?;
    let life_energy = battery_life_hours(battery, profile.rated_active_uw);
    let life_charge = charge_life_hours(battery, profile.i_active_ua);
    Ok(PowerReport {
        p_active_uw: p_active,
        p_standby_uw: p_standby,
        active_hours_per_day,
        avg_uw: day.avg_uw,
        life_h_energy_model: life_energy,
        life_h_energy_model_exact: battery_life_hours(battery, p_active),
        life_h_charge_model: life_charge,
        charge_model_consistent: (life_charge - life_energy).abs() <= 0.1 * life_energy,
        life_h_duty_cycle: day.projected_life_h,
        life_days_duty_cycle: day.projected_life_h / 24.0,
        wrist_circuit_w: profile.wrist_circuit_w,
        wrist_vna_w: profile.wrist_vna_w,
    })
}
