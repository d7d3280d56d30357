//! Scenario files for the `session` command.
//!
//! ```json
//! {"duration_ms": 3000, "sweep_period_ms": 50, "link": {"k": 0.0039},
//!  "sweep": {"f_start_mhz": 27.5, "f_stop_mhz": 30.0, "n_points": 251,
//!            "noise_sigma_ohm": 0.1, "seed": 1},
//!  "events": [{"t_ms": 1000, "channel": "BTN", "level": 1}]}
//! ```
//!
//! Everything except `duration_ms` falls back to the tool config.

use serde::{Deserialize, Serialize};

use semipit_core::{CouplingLink, SessionScenario, SwitchEvent};

use crate::config::{ConfigError, ToolConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioLink {
    pub k: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSweep {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_start_mhz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_stop_mhz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_sigma_ohm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub duration_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_period_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<ScenarioLink>,
    #[serde(default)]
    pub sweep: ScenarioSweep,
    #[serde(default)]
    pub events: Vec<SwitchEvent>,
}

impl ScenarioFile {
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        crate::config::parse_json(text, origin)
    }

    /// Resolves against `cfg`. `seed`, when given, replaces the file's seed.
    pub fn resolve(&self, cfg: &ToolConfig, seed: Option<u64>) -> Result<SessionScenario, ConfigError> {
        let link = match &self.link {
            Some(l) => CouplingLink::from_k(l.k, cfg.ring.inductance_uh, cfg.wrist.inductance_uh)
                .map_err(|e| ConfigError::Invalid(vec![format!("link.k: {e}")]))?,
            None => cfg.coupling()?,
        };
        let mut sweep_cfg = cfg.sweep;
        let s = &self.sweep;
        sweep_cfg.f_start_mhz = s.f_start_mhz.unwrap_or(sweep_cfg.f_start_mhz);
        sweep_cfg.f_stop_mhz = s.f_stop_mhz.unwrap_or(sweep_cfg.f_stop_mhz);
        sweep_cfg.n_points = s.n_points.unwrap_or(sweep_cfg.n_points);
        sweep_cfg.noise_sigma_ohm = s.noise_sigma_ohm.unwrap_or(sweep_cfg.noise_sigma_ohm);
        let rng_seed = seed.or(s.seed).unwrap_or(cfg.sweep.rng_seed);
        sweep_cfg.rng_seed = rng_seed;
        Ok(SessionScenario {
            switch_events: self.events.clone(),
            duration_ms: self.duration_ms,
            sweep_period_ms: self.sweep_period_ms.unwrap_or(cfg.session.sweep_period_ms),
            link,
            sweep_cfg,
            rng_seed,
        })
    }

    /// File form of a built scenario, listing every setting explicitly.
    pub fn from_scenario(scn: &SessionScenario, name: &str) -> Self {
        let c = &scn.sweep_cfg;
        Self {
            name: Some(name.to_string()),
            duration_ms: scn.duration_ms,
            sweep_period_ms: Some(scn.sweep_period_ms),
            link: Some(ScenarioLink { k: scn.link.k }),
            sweep: ScenarioSweep {
                f_start_mhz: Some(c.f_start_mhz),
                f_stop_mhz: Some(c.f_stop_mhz),
                n_points: Some(c.n_points),
                noise_sigma_ohm: Some(c.noise_sigma_ohm),
                seed: Some(scn.rng_seed),
            },
            events: scn.switch_events.clone(),
        }
    }
}
