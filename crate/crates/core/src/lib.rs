//! Models and signal processing for a semi-passive inductive telemetry link
//! between a ring coil and a wristband coil.
//!
//! The ring encodes five mouse gestures as distinct resonant frequencies by
//! biasing a varactor inside its distributed capacitor network. The wristband
//! sweeps a balanced bridge across the band, finds the reflected resonance
//! peak, and classifies it. Everything here is `no_std` + `alloc`; file formats
//! and the command line live in the `semipit` crate.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` is how NaN gets rejected alongside non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod coupling;
pub mod decoder;
pub mod firmware;
pub mod power;
pub mod resonant;
pub mod sensing;
pub mod session;

pub use num_complex::Complex64;

pub use coupling::{
    coaxial_mutual_oracle, coupling_coefficient, mutual_inductance, CouplingLink, GeometryError,
    GraspGeometry, LinkSource, LoopGeometry,
};
pub use decoder::{
    classify, compute_snr, detect_peak, estimate, Classification, DecodeError, DecoderConfig,
    Label, Peak, PeakEstimate,
};
pub use firmware::{
    firmware_step, plan_digipot_codes, quadrature_step, AxisPhase, Channel, FirmwareConfig,
    FirmwareState, GestureChange, GestureKind, GestureSymbol, PlanError, SwitchEvent, Tick,
    DEFAULT_GESTURE_ORDER, DEFAULT_TARGETS_MHZ,
};
pub use power::{
    battery_life_hours, charge_life_hours, mode_power, power_report, session_energy, BatterySpec,
    ModeInterval, PowerMode, PowerProfile, PowerReport, SessionEnergy, TimelineError,
};
pub use resonant::{
    calibrate_ring_network, effective_capacitance, reflected_impedance, resonant_frequency,
    tank_impedance, varactor_capacitance, DistributedCapNetwork, NetworkError, ResonantTank,
    VaractorCurve, VaractorModel,
};
pub use sensing::{bridge_response, run_sweep, RingLoad, SweepConfig, SweepTrace, TraceError};
pub use session::{
    run_session, sweep_schedule, DecodedEvent, LinkModel, ScenarioBuilder, ScenarioError,
    SessionReport, SessionScenario, SweepOutcome,
};

/// Physical constants and unit helpers shared by the models.
pub mod units {
    use core::f64::consts::PI;

    /// µ₀ / 4π in H/m.
    pub const MU0_OVER_4PI: f64 = 1.0e-7;
    /// µ₀ in H/m.
    pub const MU0: f64 = 4.0 * PI * MU0_OVER_4PI;

    #[inline]
    pub fn angular_mhz(f_mhz: f64) -> f64 {
        2.0 * PI * f_mhz * 1.0e6
    }

    /// Series-LC resonance in MHz for `l_uh` µH and `c_pf` pF.
    #[inline]
    pub fn resonance_mhz(l_uh: f64, c_pf: f64) -> f64 {
        1.0 / (2.0 * PI * libm::sqrt(l_uh * 1.0e-6 * c_pf * 1.0e-12)) / 1.0e6
    }

    /// Capacitance (pF) that resonates with `l_uh` at `f_mhz`.
    #[inline]
    pub fn capacitance_for_mhz(l_uh: f64, f_mhz: f64) -> f64 {
        let w = angular_mhz(f_mhz);
        1.0 / (w * w * l_uh * 1.0e-6) * 1.0e12
    }
}
