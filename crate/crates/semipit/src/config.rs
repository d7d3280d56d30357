//! Tool configuration: every model parameter in one JSON document, with the
//! prototype's values as defaults. Command-line flags are applied on top.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use semipit_core::resonant::defaults;
use semipit_core::{
    calibrate_ring_network, BatterySpec, CouplingLink, DecoderConfig, DistributedCapNetwork, FirmwareConfig,
    GraspGeometry, LinkModel, PlanError, PowerProfile, ResonantTank, SweepConfig, VaractorModel,
    DEFAULT_TARGETS_MHZ,
};

/// The config shipped as `paper-defaults.json`.
pub const PAPER_DEFAULTS_JSON: &str = include_str!("../paper-defaults.json");

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("config {origin}: {path}: {message}")]
    Parse { origin: String, path: String, message: String },
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error("ring calibration failed: {0}")]
    Calibration(#[from] PlanError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RingSection {
    pub inductance_uh: f64,
    pub resistance_ohm: f64,
    pub segments: u32,
    /// Resonance the calibration places at the varactor's largest capacitance.
    pub f_at_cmax_mhz: f64,
    /// Resonance the calibration places at the varactor's smallest capacitance.
    pub f_at_cmin_mhz: f64,
}

impl Default for RingSection {
    fn default() -> Self {
        Self {
            inductance_uh: defaults::RING_INDUCTANCE_UH,
            resistance_ohm: defaults::RING_RESISTANCE_OHM,
            segments: defaults::RING_SEGMENTS,
            f_at_cmax_mhz: defaults::RING_F_AT_CMAX_MHZ,
            f_at_cmin_mhz: defaults::RING_F_AT_CMIN_MHZ,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WristSection {
    pub inductance_uh: f64,
    pub coil_resistance_ohm: f64,
    pub series_resistor_ohm: f64,
    pub segments: u32,
    pub segment_pf: f64,
}

impl Default for WristSection {
    fn default() -> Self {
        Self {
            inductance_uh: defaults::WRIST_INDUCTANCE_UH,
            coil_resistance_ohm: defaults::WRIST_COIL_RESISTANCE_OHM,
            series_resistor_ohm: defaults::WRIST_SERIES_RESISTOR_OHM,
            segments: defaults::WRIST_SEGMENTS,
            segment_pf: defaults::WRIST_SEGMENT_PF,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSection {
    /// Coupling coefficient. When null, k comes from `geometry` at `tilt_deg`.
    pub k: Option<f64>,
    pub geometry: GraspGeometry,
    pub tilt_deg: f64,
    pub quadrature_points: usize,
}

impl Default for LinkSection {
    fn default() -> Self {
        Self { k: Some(0.0039), geometry: GraspGeometry::default(), tilt_deg: 20.0, quadrature_points: 256 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecoderSection {
    pub threshold_db: f64,
    pub guard_band_mhz: Option<f64>,
    pub smoothing_points: Option<usize>,
    pub snr_cap_db: f64,
}

impl Default for DecoderSection {
    fn default() -> Self {
        let d = DecoderConfig::default();
        Self {
            threshold_db: d.threshold_db,
            guard_band_mhz: d.guard_band_mhz,
            smoothing_points: d.smoothing_points,
            snr_cap_db: d.snr_cap_db,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionSection {
    pub sweep_period_ms: u64,
    pub active_hours_per_day: f64,
}

impl Default for SessionSection {
    fn default() -> Self {
        Self { sweep_period_ms: semipit_core::session::DEFAULT_SWEEP_PERIOD_MS, active_hours_per_day: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolConfig {
    pub ring: RingSection,
    pub wrist: WristSection,
    pub varactor: VaractorModel,
    pub gesture_targets_mhz: [f64; 5],
    pub link: LinkSection,
    pub sweep: SweepConfig,
    pub decoder: DecoderSection,
    pub firmware: FirmwareConfig,
    pub power: PowerProfile,
    pub battery: BatterySpec,
    pub session: SessionSection,
}

impl Default for ToolConfig {
    fn default() -> Self {
        Self {
            ring: RingSection::default(),
            wrist: WristSection::default(),
            varactor: VaractorModel::default(),
            gesture_targets_mhz: DEFAULT_TARGETS_MHZ,
            link: LinkSection::default(),
            sweep: SweepConfig::default(),
            decoder: DecoderSection::default(),
            firmware: FirmwareConfig::default(),
            power: PowerProfile::default(),
            battery: BatterySpec::default(),
            session: SessionSection::default(),
        }
    }
}

/// Values given on the command line; each `Some` replaces the file value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub k: Option<f64>,
    pub noise_sigma_ohm: Option<f64>,
    pub ring_l_uh: Option<f64>,
    pub wrist_l_uh: Option<f64>,
    pub f_start_mhz: Option<f64>,
    pub f_stop_mhz: Option<f64>,
    pub n_points: Option<usize>,
    pub seed: Option<u64>,
}

/// Parses JSON into `T`, reporting the failing field as a dotted path.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str, origin: &str) -> Result<T, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Parse {
        origin: origin.to_string(),
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

fn positive(issues: &mut Vec<String>, path: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        issues.push(format!("{path}: must be a positive number, got {v}"));
    }
}

fn non_negative(issues: &mut Vec<String>, path: &str, v: f64) {
    if !(v >= 0.0 && v.is_finite()) {
        issues.push(format!("{path}: must be zero or positive, got {v}"));
    }
}

impl ToolConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        parse_json(&text, &path.display().to_string())
    }

    /// File at `path` if given, else the built-in defaults.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        match path {
            Some(p) => Self::from_file(p),
            None => Ok(Self::default()),
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(k) = o.k {
            self.link.k = Some(k);
        }
        if let Some(s) = o.noise_sigma_ohm {
            self.sweep.noise_sigma_ohm = s;
        }
        if let Some(l) = o.ring_l_uh {
            self.ring.inductance_uh = l;
        }
        if let Some(l) = o.wrist_l_uh {
            self.wrist.inductance_uh = l;
        }
        if let Some(f) = o.f_start_mhz {
            self.sweep.f_start_mhz = f;
        }
        if let Some(f) = o.f_stop_mhz {
            self.sweep.f_stop_mhz = f;
        }
        if let Some(n) = o.n_points {
            self.sweep.n_points = n;
        }
        if let Some(s) = o.seed {
            self.sweep.rng_seed = s;
        }
    }

    /// Every invalid field, each prefixed with its dotted path.
    pub fn issues(&self) -> Vec<String> {
        let mut out = Vec::new();
        let i = &mut out;
        positive(i, "ring.inductance_uh", self.ring.inductance_uh);
        positive(i, "ring.resistance_ohm", self.ring.resistance_ohm);
        if self.ring.segments < 2 {
            i.push(format!("ring.segments: need at least 2, got {}", self.ring.segments));
        }
        positive(i, "ring.f_at_cmax_mhz", self.ring.f_at_cmax_mhz);
        positive(i, "ring.f_at_cmin_mhz", self.ring.f_at_cmin_mhz);
        if self.ring.f_at_cmax_mhz >= self.ring.f_at_cmin_mhz {
            i.push("ring.f_at_cmax_mhz: must be below ring.f_at_cmin_mhz".into());
        }

        positive(i, "wrist.inductance_uh", self.wrist.inductance_uh);
        non_negative(i, "wrist.coil_resistance_ohm", self.wrist.coil_resistance_ohm);
        non_negative(i, "wrist.series_resistor_ohm", self.wrist.series_resistor_ohm);
        if self.wrist.coil_resistance_ohm + self.wrist.series_resistor_ohm <= 0.0 {
            i.push("wrist.coil_resistance_ohm: total wristband resistance must be positive".into());
        }
        if self.wrist.segments < 1 {
            i.push("wrist.segments: need at least 1".into());
        }
        positive(i, "wrist.segment_pf", self.wrist.segment_pf);

        if let Err(e) = self.varactor.validate() {
            i.push(format!("varactor: {e}"));
        }
        if self.gesture_targets_mhz.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
            i.push("gesture_targets_mhz: must be strictly increasing".into());
        }

        match self.link.k {
            Some(k) if !(0.0..1.0).contains(&k) => i.push(format!("link.k: must lie in [0, 1), got {k}")),
            _ => {}
        }
        let g = &self.link.geometry;
        positive(i, "link.geometry.ring_radius_m", g.ring_radius_m);
        positive(i, "link.geometry.wrist_radius_m", g.wrist_radius_m);
        if g.ring_turns == 0 || g.wrist_turns == 0 {
            i.push("link.geometry: turn counts must be positive".into());
        }
        if self.link.quadrature_points < 2 {
            i.push(format!("link.quadrature_points: need at least 2, got {}", self.link.quadrature_points));
        }

        if let Err(e) = self.sweep.validate() {
            i.push(format!("sweep: {e}"));
        }
        if !self.decoder.threshold_db.is_finite() {
            i.push("decoder.threshold_db: must be finite".into());
        }
        if let Some(gb) = self.decoder.guard_band_mhz {
            positive(i, "decoder.guard_band_mhz", gb);
        }
        if self.decoder.smoothing_points == Some(0) {
            i.push("decoder.smoothing_points: must be at least 1".into());
        }
        positive(i, "decoder.snr_cap_db", self.decoder.snr_cap_db);

        if self.firmware.poll_period_ms == 0 {
            i.push("firmware.poll_period_ms: must be at least 1".into());
        }
        if let Err(e) = self.power.validate() {
            i.push(format!("power: {e}"));
        }
        if let Err(e) = self.battery.validate() {
            i.push(format!("battery: {e}"));
        }
        if self.session.sweep_period_ms == 0 {
            i.push("session.sweep_period_ms: must be at least 1".into());
        }
        if !(0.0..=24.0).contains(&self.session.active_hours_per_day) {
            i.push(format!("session.active_hours_per_day: must lie in [0, 24], got {}", self.session.active_hours_per_day));
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let issues = self.issues();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(issues))
        }
    }

    pub fn ring_tank(&self) -> Result<ResonantTank, ConfigError> {
        let r = &self.ring;
        let caps = calibrate_ring_network(r.inductance_uh, &self.varactor, r.segments, r.f_at_cmax_mhz, r.f_at_cmin_mhz)
            .map_err(PlanError::from)?;
        Ok(ResonantTank::new(r.inductance_uh, r.resistance_ohm, caps, Some(self.varactor)).map_err(PlanError::from)?)
    }

    pub fn wrist_tank(&self) -> Result<ResonantTank, ConfigError> {
        let w = &self.wrist;
        let caps = DistributedCapNetwork::uniform(w.segments, w.segment_pf).map_err(PlanError::from)?;
        let tank = ResonantTank::new(w.inductance_uh, w.coil_resistance_ohm, caps, None)
            .and_then(|t| t.with_extra_resistance(w.series_resistor_ohm))
            .map_err(PlanError::from)?;
        Ok(tank)
    }

    /// Validated hardware model: calibrated ring, wristband, gesture plan,
    /// decoder, firmware and power settings.
    pub fn link_model(&self) -> Result<LinkModel, ConfigError> {
        self.validate()?;
        let ring = self.ring_tank()?;
        let mut model = LinkModel::new(ring, self.wrist_tank()?, &self.gesture_targets_mhz)?;
        let d = &self.decoder;
        model.decoder = DecoderConfig {
            threshold_db: d.threshold_db,
            guard_band_mhz: d.guard_band_mhz,
            smoothing_points: d.smoothing_points,
            snr_cap_db: d.snr_cap_db,
            linewidth_mhz: model.ring.linewidth_mhz(),
        };
        model.firmware = self.firmware;
        model.power = self.power;
        model.battery = self.battery;
        Ok(model)
    }

    /// The configured coupling: `link.k` if set, else computed from the grasp
    /// geometry at `link.tilt_deg`.
    pub fn coupling(&self) -> Result<CouplingLink, ConfigError> {
        let (l_ring, l_wrist) = (self.ring.inductance_uh, self.wrist.inductance_uh);
        let invalid = |e: semipit_core::GeometryError| ConfigError::Invalid(vec![format!("link: {e}")]);
        match self.link.k {
            Some(k) => CouplingLink::from_k(k, l_ring, l_wrist).map_err(invalid),
            None => {
                let m = self.link.geometry.mutual_nh(self.link.tilt_deg, self.link.quadrature_points).map_err(invalid)?;
                CouplingLink::from_mutual(m, l_ring, l_wrist).map_err(invalid)
            }
        }
    }
}
