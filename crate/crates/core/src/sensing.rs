//! Wristband-side measurement: balanced-bridge differential impedance swept
//! over a frequency grid, with additive complex Gaussian noise.

use alloc::vec::Vec;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::coupling::CouplingLink;
use crate::firmware::GestureKind;
use crate::resonant::{reflected_impedance, NetworkError, ResonantTank};

/// Relative tolerance on grid uniformity when accepting a trace from outside.
const GRID_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TraceError {
    #[error("sweep band invalid: f_start {f_start_mhz} MHz must be below f_stop {f_stop_mhz} MHz")]
    BadBand { f_start_mhz: f64, f_stop_mhz: f64 },
    #[error("sweep needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("noise sigma must be non-negative, got {0}")]
    BadNoise(f64),
    #[error("probe power must be positive, got {0}")]
    BadProbePower(f64),
    #[error("frequency and value columns differ in length ({freqs} vs {values})")]
    LengthMismatch { freqs: usize, values: usize },
    #[error("frequency grid is not strictly increasing and uniform at index {0}")]
    NonUniformGrid(usize),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// What the ring presents to the link during a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RingLoad {
    /// Ring switch open: no resonant current, nothing reflected.
    Open,
    /// Ring resonating with the varactor at this capacitance (pF).
    Varactor(f64),
    /// Ring without a varactor segment.
    Fixed,
}

impl RingLoad {
    fn varactor_pf(self) -> Option<f64> {
        match self {
            RingLoad::Varactor(c) => Some(c),
            _ => None,
        }
    }
}

impl From<f64> for RingLoad {
    fn from(c_v_pf: f64) -> Self {
        RingLoad::Varactor(c_v_pf)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SweepConfig {
    pub f_start_mhz: f64,
    pub f_stop_mhz: f64,
    pub n_points: usize,
    pub probe_power_mw: f64,
    /// Standard deviation of the noise on each of Re and Im, in Ω.
    pub noise_sigma_ohm: f64,
    pub rng_seed: u64,
    /// Residual imbalance of the bridge, added to every sample.
    #[cfg_attr(feature = "serde", serde(default))]
    pub bridge_offset_ohm: Complex64,
}

impl Default for SweepConfig {
    /// 27.5–30.0 MHz at 10 kHz steps, so all five gesture peaks are inside.
    fn default() -> Self {
        Self {
            f_start_mhz: 27.5,
            f_stop_mhz: 30.0,
            n_points: 251,
            probe_power_mw: 0.2,
            noise_sigma_ohm: 0.1,
            rng_seed: 0,
            bridge_offset_ohm: Complex64::new(0.0, 0.0),
        }
    }
}

impl SweepConfig {
    /// The prototype's narrower 27.8–29.0 MHz band.
    pub fn prototype_band() -> Self {
        Self { f_start_mhz: 27.8, f_stop_mhz: 29.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        if !(self.f_start_mhz > 0.0 && self.f_start_mhz < self.f_stop_mhz && self.f_stop_mhz.is_finite()) {
            return Err(TraceError::BadBand { f_start_mhz: self.f_start_mhz, f_stop_mhz: self.f_stop_mhz });
        }
        if self.n_points < 2 {
            return Err(TraceError::TooFewPoints(self.n_points));
        }
        if !(self.noise_sigma_ohm >= 0.0 && self.noise_sigma_ohm.is_finite()) {
            return Err(TraceError::BadNoise(self.noise_sigma_ohm));
        }
        if !(self.probe_power_mw > 0.0) {
            return Err(TraceError::BadProbePower(self.probe_power_mw));
        }
        Ok(())
    }

    pub fn step_mhz(&self) -> f64 {
        (self.f_stop_mhz - self.f_start_mhz) / (self.n_points - 1) as f64
    }

    pub fn grid_mhz(&self) -> Vec<f64> {
        let step = self.step_mhz();
        let last = self.n_points - 1;
        (0..self.n_points)
            .map(|i| if i == last { self.f_stop_mhz } else { self.f_start_mhz + step * i as f64 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepTrace {
    pub freqs_mhz: Vec<f64>,
    pub values: Vec<Complex64>,
    pub config: SweepConfig,
    pub truth: Option<GestureKind>,
}

impl SweepTrace {
    /// Builds a trace from measured columns, checking the grid contract.
    /// The config echo is reconstructed from the grid with noise unknown (0).
    pub fn from_columns(freqs_mhz: Vec<f64>, values: Vec<Complex64>) -> Result<Self, TraceError> {
        if freqs_mhz.len() != values.len() {
            return Err(TraceError::LengthMismatch { freqs: freqs_mhz.len(), values: values.len() });
        }
        if freqs_mhz.len() < 2 {
            return Err(TraceError::TooFewPoints(freqs_mhz.len()));
        }
        let n = freqs_mhz.len();
        let step = (freqs_mhz[n - 1] - freqs_mhz[0]) / (n - 1) as f64;
        if !(step > 0.0) {
            return Err(TraceError::NonUniformGrid(1));
        }
        for (i, pair) in freqs_mhz.windows(2).enumerate() {
            let d = pair[1] - pair[0];
            if !(d > 0.0) || (d - step).abs() > GRID_TOLERANCE * step {
                return Err(TraceError::NonUniformGrid(i + 1));
            }
        }
        let config = SweepConfig {
            f_start_mhz: freqs_mhz[0],
            f_stop_mhz: freqs_mhz[n - 1],
            n_points: n,
            noise_sigma_ohm: 0.0,
            ..SweepConfig::default()
        };
        Ok(Self { freqs_mhz, values, config, truth: None })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn step_mhz(&self) -> f64 {
        let n = self.freqs_mhz.len();
        (self.freqs_mhz[n - 1] - self.freqs_mhz[0]) / (n - 1) as f64
    }

    pub fn magnitudes(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(|z| z.norm())
    }
}

/// Coupled arm minus reference arm of an ideal balanced bridge at `f_mhz`.
///
/// The reference arm is the same wristband tank with no ring nearby, so the
/// difference is the reflected impedance; with `k = 0` it is exactly zero.
pub fn bridge_response(
    wrist: &ResonantTank,
    ring: &ResonantTank,
    link: &CouplingLink,
    f_mhz: f64,
    load: RingLoad,
) -> Result<Complex64, NetworkError> {
    let z_ref = wrist.impedance(f_mhz, None)?;
    let z_refl = match load {
        RingLoad::Open => Complex64::new(0.0, 0.0),
        _ => reflected_impedance(ring, link.m_nh, f_mhz, load.varactor_pf())?,
    };
    let z_coupled = z_ref + z_refl;
    Ok(z_coupled - z_ref)
}

/// Sweeps the bridge over the configured grid, seeding the noise from
/// `cfg.rng_seed`.
pub fn run_sweep(
    cfg: &SweepConfig,
    wrist: &ResonantTank,
    ring: &ResonantTank,
    link: &CouplingLink,
    load: RingLoad,
) -> Result<SweepTrace, TraceError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    run_sweep_with_rng(cfg, wrist, ring, link, load, &mut rng)
}

/// Same as [`run_sweep`] but draws noise from a caller-owned generator.
/// Noise is drawn as Re then Im per grid point, in grid order.
pub fn run_sweep_with_rng<R: rand::Rng + ?Sized>(
    cfg: &SweepConfig,
    wrist: &ResonantTank,
    ring: &ResonantTank,
    link: &CouplingLink,
    load: RingLoad,
    rng: &mut R,
) -> Result<SweepTrace, TraceError> {
    cfg.validate()?;
    let freqs = cfg.grid_mhz();
    let sigma = cfg.noise_sigma_ohm;
    let mut values = Vec::with_capacity(freqs.len());
    for &f in &freqs {
        let mut z = bridge_response(wrist, ring, link, f, load)? + cfg.bridge_offset_ohm;
        if sigma > 0.0 {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            z += Complex64::new(sigma * re, sigma * im);
        }
        values.push(z);
    }
    Ok(SweepTrace { freqs_mhz: freqs, values, config: *cfg, truth: None })
}
