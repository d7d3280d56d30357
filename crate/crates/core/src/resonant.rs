//! Electrical model of the ring and wristband resonant tanks.
//!
//! Both coils are series RLC circuits whose capacitance is a chain of chip
//! capacitors distributed along the winding. The ring's chain has one segment
//! where a varactor sits in parallel with the fixed capacitor, which is how
//! the ring moves its resonance.

use core::f64::consts::PI;

use num_complex::Complex64;

use crate::units::{angular_mhz, capacitance_for_mhz, resonance_mhz};

/// Component values of the prototype coils.
pub mod defaults {
    pub const RING_INDUCTANCE_UH: f64 = 2.6;
    pub const RING_RESISTANCE_OHM: f64 = 3.5;
    /// One capacitor per turn of the 8-turn ring coil.
    pub const RING_SEGMENTS: u32 = 8;

    pub const WRIST_INDUCTANCE_UH: f64 = 4.0;
    /// Coil resistance alone; the 50 Ω series resistor brings the total to 53 Ω.
    pub const WRIST_COIL_RESISTANCE_OHM: f64 = 3.0;
    pub const WRIST_SERIES_RESISTOR_OHM: f64 = 50.0;
    pub const WRIST_SEGMENTS: u32 = 17;
    pub const WRIST_SEGMENT_PF: f64 = 140.0;

    pub const VARACTOR_C_MIN_PF: f64 = 27.0;
    pub const VARACTOR_C_MAX_PF: f64 = 69.0;
    pub const VARACTOR_RAIL_V: f64 = 1.8;

    /// Ring resonance with the varactor at its largest capacitance (bias 0 V).
    pub const RING_F_AT_CMAX_MHZ: f64 = 28.0;
    /// Ring resonance with the varactor at its smallest capacitance (full rail).
    pub const RING_F_AT_CMIN_MHZ: f64 = 29.6;
}

const CAL_BRACKET_PF: (f64, f64) = (0.1, 1.0e4);
const CAL_MAX_ITER: usize = 200;
/// Slack allowed when an inverted varactor capacitance lands a hair outside
/// its range because of root-finding residue.
const RANGE_SLACK: f64 = 1.0e-6;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum NetworkError {
    #[error("bias {bias_v} V is outside [0, {v_rail} V]")]
    BiasOutOfRange { bias_v: f64, v_rail: f64 },
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },
    #[error("varactor range invalid: c_min {c_min_pf} pF must be below c_max {c_max_pf} pF")]
    InvalidVaractorRange { c_min_pf: f64, c_max_pf: f64 },
    #[error("capacitance {c_pf} pF is outside the varactor range [{c_min_pf}, {c_max_pf}] pF")]
    CapacitanceOutOfRange { c_pf: f64, c_min_pf: f64, c_max_pf: f64 },
    #[error("network has a varactor segment but no varactor capacitance was given")]
    MissingVaractor,
    #[error("a varactor capacitance was given but the network has no varactor segment")]
    UnexpectedVaractor,
    #[error("segment count must be at least {min}, got {got}")]
    TooFewSegments { min: u32, got: u32 },
    #[error("infeasible design: {0}")]
    Infeasible(&'static str),
}

fn positive(what: &'static str, value: f64) -> Result<f64, NetworkError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(NetworkError::NonPositive { what, value })
    }
}

/// Shape of the varactor's capacitance-voltage curve between its endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum VaractorCurve {
    /// Straight line from (0 V, c_max) to (v_rail, c_min).
    #[default]
    Linear,
    /// `c_min + (c_max - c_min) * (1 - V/v_rail)^exponent`.
    Power { exponent: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct VaractorModel {
    pub c_min_pf: f64,
    pub c_max_pf: f64,
    pub v_rail: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub curve: VaractorCurve,
}

impl Default for VaractorModel {
    fn default() -> Self {
        Self {
            c_min_pf: defaults::VARACTOR_C_MIN_PF,
            c_max_pf: defaults::VARACTOR_C_MAX_PF,
            v_rail: defaults::VARACTOR_RAIL_V,
            curve: VaractorCurve::Linear,
        }
    }
}

impl VaractorModel {
    pub fn new(c_min_pf: f64, c_max_pf: f64, v_rail: f64, curve: VaractorCurve) -> Result<Self, NetworkError> {
        let model = Self { c_min_pf, c_max_pf, v_rail, curve };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        positive("varactor c_min_pf", self.c_min_pf)?;
        positive("varactor c_max_pf", self.c_max_pf)?;
        positive("varactor v_rail", self.v_rail)?;
        if self.c_min_pf >= self.c_max_pf {
            return Err(NetworkError::InvalidVaractorRange {
                c_min_pf: self.c_min_pf,
                c_max_pf: self.c_max_pf,
            });
        }
        if let VaractorCurve::Power { exponent } = self.curve {
            positive("varactor curve exponent", exponent)?;
        }
        Ok(())
    }

    pub fn span_pf(&self) -> f64 {
        self.c_max_pf - self.c_min_pf
    }

    pub fn capacitance_pf(&self, bias_v: f64) -> Result<f64, NetworkError> {
        if !(0.0..=self.v_rail).contains(&bias_v) {
            return Err(NetworkError::BiasOutOfRange { bias_v, v_rail: self.v_rail });
        }
        // Endpoints are returned verbatim so they are exact.
        if bias_v == 0.0 {
            return Ok(self.c_max_pf);
        }
        if bias_v == self.v_rail {
            return Ok(self.c_min_pf);
        }
        let remaining = 1.0 - bias_v / self.v_rail;
        let frac = match self.curve {
            VaractorCurve::Linear => remaining,
            VaractorCurve::Power { exponent } => libm::pow(remaining, exponent),
        };
        Ok(self.c_min_pf + self.span_pf() * frac)
    }

    /// Bias that produces `c_pf`; the inverse of [`capacitance_pf`](Self::capacitance_pf).
    pub fn bias_for(&self, c_pf: f64) -> Result<f64, NetworkError> {
        let c = self.clamp_within_slack(c_pf)?;
        if c == self.c_max_pf {
            return Ok(0.0);
        }
        if c == self.c_min_pf {
            return Ok(self.v_rail);
        }
        let frac = (c - self.c_min_pf) / self.span_pf();
        let remaining = match self.curve {
            VaractorCurve::Linear => frac,
            VaractorCurve::Power { exponent } => libm::pow(frac, 1.0 / exponent),
        };
        Ok(self.v_rail * (1.0 - remaining))
    }

    fn clamp_within_slack(&self, c_pf: f64) -> Result<f64, NetworkError> {
        let slack = RANGE_SLACK * self.c_max_pf;
        if c_pf < self.c_min_pf - slack || c_pf > self.c_max_pf + slack || !c_pf.is_finite() {
            return Err(NetworkError::CapacitanceOutOfRange {
                c_pf,
                c_min_pf: self.c_min_pf,
                c_max_pf: self.c_max_pf,
            });
        }
        Ok(c_pf.clamp(self.c_min_pf, self.c_max_pf))
    }
}

/// Varactor capacitance (pF) at `bias_v`.
pub fn varactor_capacitance(model: &VaractorModel, bias_v: f64) -> Result<f64, NetworkError> {
    model.capacitance_pf(bias_v)
}

/// Series chain of chip capacitors along a coil. When `has_varactor_segment`
/// is set, the last segment is `c_varseg_fixed_pf` in parallel with the
/// varactor and the other `n_segments - 1` are `c_fixed_pf` each.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DistributedCapNetwork {
    pub n_segments: u32,
    pub c_fixed_pf: f64,
    pub c_varseg_fixed_pf: f64,
    pub has_varactor_segment: bool,
}

impl DistributedCapNetwork {
    pub fn uniform(n_segments: u32, c_fixed_pf: f64) -> Result<Self, NetworkError> {
        let net = Self { n_segments, c_fixed_pf, c_varseg_fixed_pf: c_fixed_pf, has_varactor_segment: false };
        net.validate()?;
        Ok(net)
    }

    pub fn with_varactor_segment(n_segments: u32, c_fixed_pf: f64, c_varseg_fixed_pf: f64) -> Result<Self, NetworkError> {
        let net = Self { n_segments, c_fixed_pf, c_varseg_fixed_pf, has_varactor_segment: true };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        if self.n_segments < 1 {
            return Err(NetworkError::TooFewSegments { min: 1, got: self.n_segments });
        }
        positive("c_fixed_pf", self.c_fixed_pf)?;
        if self.has_varactor_segment {
            positive("c_varseg_fixed_pf", self.c_varseg_fixed_pf)?;
        }
        Ok(())
    }

    /// Series-combined capacitance in pF.
    pub fn effective_pf(&self, c_v_pf: Option<f64>) -> Result<f64, NetworkError> {
        self.validate()?;
        let inv = match (self.has_varactor_segment, c_v_pf) {
            (true, Some(c_v)) => {
                let c_v = positive("varactor capacitance", c_v)?;
                f64::from(self.n_segments - 1) / self.c_fixed_pf + 1.0 / (self.c_varseg_fixed_pf + c_v)
            }
            (true, None) => return Err(NetworkError::MissingVaractor),
            (false, None) => f64::from(self.n_segments) / self.c_fixed_pf,
            (false, Some(_)) => return Err(NetworkError::UnexpectedVaractor),
        };
        Ok(1.0 / inv)
    }
}

pub fn effective_capacitance(net: &DistributedCapNetwork, c_v_pf: Option<f64>) -> Result<f64, NetworkError> {
    net.effective_pf(c_v_pf)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResonantTank {
    pub inductance_uh: f64,
    pub series_resistance_ohm: f64,
    pub caps: DistributedCapNetwork,
    pub varactor: Option<VaractorModel>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub extra_series_resistance_ohm: f64,
}

impl ResonantTank {
    pub fn new(
        inductance_uh: f64,
        series_resistance_ohm: f64,
        caps: DistributedCapNetwork,
        varactor: Option<VaractorModel>,
    ) -> Result<Self, NetworkError> {
        let tank = Self { inductance_uh, series_resistance_ohm, caps, varactor, extra_series_resistance_ohm: 0.0 };
        tank.validate()?;
        Ok(tank)
    }

    pub fn with_extra_resistance(mut self, ohm: f64) -> Result<Self, NetworkError> {
        if !(ohm >= 0.0 && ohm.is_finite()) {
            return Err(NetworkError::NonPositive { what: "extra_series_resistance_ohm", value: ohm });
        }
        self.extra_series_resistance_ohm = ohm;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        positive("inductance_uh", self.inductance_uh)?;
        positive("series_resistance_ohm", self.series_resistance_ohm)?;
        self.caps.validate()?;
        if let Some(v) = &self.varactor {
            v.validate()?;
        }
        if self.extra_series_resistance_ohm < 0.0 {
            return Err(NetworkError::NonPositive {
                what: "extra_series_resistance_ohm",
                value: self.extra_series_resistance_ohm,
            });
        }
        Ok(())
    }

    /// Wristband coil: 4.0 µH, 3 Ω winding plus a 50 Ω series resistor,
    /// seventeen 140 pF capacitors.
    pub fn wristband() -> Self {
        Self {
            inductance_uh: defaults::WRIST_INDUCTANCE_UH,
            series_resistance_ohm: defaults::WRIST_COIL_RESISTANCE_OHM,
            caps: DistributedCapNetwork {
                n_segments: defaults::WRIST_SEGMENTS,
                c_fixed_pf: defaults::WRIST_SEGMENT_PF,
                c_varseg_fixed_pf: defaults::WRIST_SEGMENT_PF,
                has_varactor_segment: false,
            },
            varactor: None,
            extra_series_resistance_ohm: defaults::WRIST_SERIES_RESISTOR_OHM,
        }
    }

    /// Ring coil with its capacitor network calibrated so the varactor's
    /// range maps onto 28.0–29.6 MHz.
    pub fn calibrated_ring() -> Result<Self, NetworkError> {
        let varactor = VaractorModel::default();
        let caps = calibrate_ring_network(
            defaults::RING_INDUCTANCE_UH,
            &varactor,
            defaults::RING_SEGMENTS,
            defaults::RING_F_AT_CMAX_MHZ,
            defaults::RING_F_AT_CMIN_MHZ,
        )?;
        Self::new(defaults::RING_INDUCTANCE_UH, defaults::RING_RESISTANCE_OHM, caps, Some(varactor))
    }

    pub fn total_resistance_ohm(&self) -> f64 {
        self.series_resistance_ohm + self.extra_series_resistance_ohm
    }

    pub fn effective_capacitance_pf(&self, c_v_pf: Option<f64>) -> Result<f64, NetworkError> {
        self.caps.effective_pf(c_v_pf)
    }

    pub fn resonant_frequency_mhz(&self, c_v_pf: Option<f64>) -> Result<f64, NetworkError> {
        Ok(resonance_mhz(self.inductance_uh, self.effective_capacitance_pf(c_v_pf)?))
    }

    /// Series impedance `R + jωL + 1/(jωC)` in Ω.
    pub fn impedance(&self, f_mhz: f64, c_v_pf: Option<f64>) -> Result<Complex64, NetworkError> {
        positive("frequency", f_mhz)?;
        let c = self.effective_capacitance_pf(c_v_pf)? * 1.0e-12;
        let w = angular_mhz(f_mhz);
        let reactance = w * self.inductance_uh * 1.0e-6 - 1.0 / (w * c);
        Ok(Complex64::new(self.total_resistance_ohm(), reactance))
    }

    /// Loaded quality factor ωL/R at this tank's resonance.
    pub fn q_factor(&self, c_v_pf: Option<f64>) -> Result<f64, NetworkError> {
        let f0 = self.resonant_frequency_mhz(c_v_pf)?;
        Ok(angular_mhz(f0) * self.inductance_uh * 1.0e-6 / self.total_resistance_ohm())
    }

    /// Half-power bandwidth f₀/Q in MHz. For a series RLC this is R/(2πL),
    /// independent of the tuning capacitance.
    pub fn linewidth_mhz(&self) -> f64 {
        self.total_resistance_ohm() / (2.0 * PI * self.inductance_uh * 1.0e-6) / 1.0e6
    }
}

pub fn resonant_frequency(tank: &ResonantTank, c_v_pf: Option<f64>) -> Result<f64, NetworkError> {
    tank.resonant_frequency_mhz(c_v_pf)
}

pub fn tank_impedance(tank: &ResonantTank, f_mhz: f64, c_v_pf: Option<f64>) -> Result<Complex64, NetworkError> {
    tank.impedance(f_mhz, c_v_pf)
}

/// Impedance the ring reflects into the wristband through mutual inductance
/// `m_nh`: `(ωM)² / Z_ring(f)`.
pub fn reflected_impedance(
    ring: &ResonantTank,
    m_nh: f64,
    f_mhz: f64,
    c_v_pf: Option<f64>,
) -> Result<Complex64, NetworkError> {
    if !(m_nh >= 0.0) {
        return Err(NetworkError::NonPositive { what: "mutual inductance", value: m_nh });
    }
    let z_ring = ring.impedance(f_mhz, c_v_pf)?;
    if m_nh == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let wm = angular_mhz(f_mhz) * m_nh * 1.0e-9;
    Ok(Complex64::new(wm * wm, 0.0) / z_ring)
}

/// Chooses the fixed capacitors of a ring network so the resonance sits at
/// `f_at_cmax_mhz` with the varactor at `c_max` and at `f_at_cmin_mhz` with
/// it at `c_min`.
///
/// With `a = (n-1)/c_fixed` and `x = c_varseg_fixed` the two targets give
/// `1/C₁ = a + 1/(x + c_max)` and `1/C₂ = a + 1/(x + c_min)`. Subtracting
/// eliminates `a` and leaves a single decreasing function of `x`, which is
/// bisected on [0.1 pF, 10 nF].
pub fn calibrate_ring_network(
    l_uh: f64,
    varactor: &VaractorModel,
    n_segments: u32,
    f_at_cmax_mhz: f64,
    f_at_cmin_mhz: f64,
) -> Result<DistributedCapNetwork, NetworkError> {
    positive("inductance_uh", l_uh)?;
    varactor.validate()?;
    positive("f_at_cmax_mhz", f_at_cmax_mhz)?;
    positive("f_at_cmin_mhz", f_at_cmin_mhz)?;
    if n_segments < 2 {
        return Err(NetworkError::TooFewSegments { min: 2, got: n_segments });
    }
    if f_at_cmax_mhz >= f_at_cmin_mhz {
        return Err(NetworkError::Infeasible(
            "frequency at c_max must be below frequency at c_min",
        ));
    }

    let c_lo_f = capacitance_for_mhz(l_uh, f_at_cmax_mhz);
    let c_hi_f = capacitance_for_mhz(l_uh, f_at_cmin_mhz);
    let gap = 1.0 / c_hi_f - 1.0 / c_lo_f;
    let (c_min, c_max) = (varactor.c_min_pf, varactor.c_max_pf);
    let residual = |x: f64| 1.0 / (x + c_min) - 1.0 / (x + c_max) - gap;

    let (mut lo, mut hi) = CAL_BRACKET_PF;
    if residual(lo) < 0.0 || residual(hi) > 0.0 {
        return Err(NetworkError::Infeasible(
            "no fixed varactor-segment capacitor in [0.1 pF, 10 nF] spans the requested band",
        ));
    }
    for _ in 0..CAL_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if residual(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1.0e-12 * mid {
            break;
        }
    }
    let c_varseg = 0.5 * (lo + hi);
    let a = 1.0 / c_lo_f - 1.0 / (c_varseg + c_max);
    if a <= 0.0 {
        return Err(NetworkError::Infeasible("fixed segments would need negative capacitance"));
    }
    let c_fixed = f64::from(n_segments - 1) / a;
    DistributedCapNetwork::with_varactor_segment(n_segments, c_fixed, c_varseg)
}
