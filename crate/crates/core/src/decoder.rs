//! Wristband-side decoding: find the reflected resonance in a sweep, measure
//! its SNR against the off-resonance floor, and map it to a gesture.
//!
//! The complex trace is first smoothed with a short centered moving average
//! (a fraction of the ring linewidth, so the peak shape survives). Peak
//! picking then runs on the smoothed magnitude. The noise floor comes from
//! the smoothing residual over the baseline, which removes the slowly varying
//! resonance tail and leaves only the white noise.

use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::firmware::{GestureKind, GestureSymbol};
use crate::resonant::ResonantTank;
use crate::sensing::SweepTrace;

/// Baseline starts this many linewidths away from the peak.
pub const BASELINE_LINEWIDTHS: f64 = 3.0;
pub const MIN_BASELINE_POINTS: usize = 10;
pub const DEFAULT_THRESHOLD_DB: f64 = 10.0;
pub const DEFAULT_SNR_CAP_DB: f64 = 120.0;
/// Smoothing window as a fraction of the linewidth.
const SMOOTHING_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DecodeError {
    #[error("trace needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("trace is flat; no peak to find")]
    NoPeak,
    #[error("trace contains a non-finite value at index {0}")]
    NonFinite(usize),
    #[error("only {got} baseline points beyond {BASELINE_LINEWIDTHS} linewidths of the peak, need {MIN_BASELINE_POINTS}")]
    InsufficientBaseline { got: usize },
    #[error("calibration frequencies must be distinct")]
    DuplicateCalibration,
    #[error("decoder setting {what} invalid: {value}")]
    BadConfig { what: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct DecoderConfig {
    pub threshold_db: f64,
    /// Maximum distance from a calibrated frequency. `None` means half the
    /// smallest spacing between calibrated frequencies.
    pub guard_band_mhz: Option<f64>,
    /// Ring resonance linewidth f₀/Q, used to size the baseline exclusion.
    pub linewidth_mhz: f64,
    /// Moving-average length in points. `None` derives it from the
    /// linewidth and the trace step.
    pub smoothing_points: Option<usize>,
    pub snr_cap_db: f64,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        // Linewidth of the default ring: 3.5 Ω over 2.6 µH.
        let linewidth = 3.5 / (2.0 * core::f64::consts::PI * 2.6e-6) / 1.0e6;
        Self {
            threshold_db: DEFAULT_THRESHOLD_DB,
            guard_band_mhz: None,
            linewidth_mhz: linewidth,
            smoothing_points: None,
            snr_cap_db: DEFAULT_SNR_CAP_DB,
        }
    }
}

impl DecoderConfig {
    pub fn for_ring(ring: &ResonantTank) -> Self {
        Self { linewidth_mhz: ring.linewidth_mhz(), ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), DecodeError> {
        let bad = |what, value| Err(DecodeError::BadConfig { what, value });
        if !self.threshold_db.is_finite() {
            return bad("threshold_db", self.threshold_db);
        }
        if !(self.linewidth_mhz > 0.0) || !self.linewidth_mhz.is_finite() {
            return bad("linewidth_mhz", self.linewidth_mhz);
        }
        if let Some(g) = self.guard_band_mhz {
            if !(g > 0.0) {
                return bad("guard_band_mhz", g);
            }
        }
        if self.smoothing_points == Some(0) {
            return bad("smoothing_points", 0.0);
        }
        if !(self.snr_cap_db > 0.0) {
            return bad("snr_cap_db", self.snr_cap_db);
        }
        Ok(())
    }

    /// Odd window length used on a trace with grid step `step_mhz`.
    pub fn window_for(&self, step_mhz: f64) -> usize {
        let w = match self.smoothing_points {
            Some(w) => w,
            None => libm::round(SMOOTHING_FRACTION * self.linewidth_mhz / step_mhz).max(1.0) as usize,
        };
        if w % 2 == 0 {
            w + 1
        } else {
            w
        }
    }
}

/// Location of the strongest response in a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Peak {
    /// Sub-grid estimate, MHz.
    pub f_peak_mhz: f64,
    /// Interpolated apex of the smoothed magnitude, Ω.
    pub magnitude_ohm: f64,
    pub grid_index: usize,
    pub grid_f_mhz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PeakEstimate {
    pub f_peak_mhz: f64,
    pub magnitude_ohm: f64,
    pub snr_db: f64,
}

/// Serialized as the bare name: `"ScrollUp"`, …, `"NoInput"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Gesture(GestureKind),
    NoInput,
}

impl Label {
    pub fn name(self) -> &'static str {
        match self {
            Label::Gesture(g) => g.name(),
            Label::NoInput => "NoInput",
        }
    }

    pub fn gesture(self) -> Option<GestureKind> {
        match self {
            Label::Gesture(g) => Some(g),
            Label::NoInput => None,
        }
    }
}

impl From<Option<GestureKind>> for Label {
    fn from(g: Option<GestureKind>) -> Self {
        g.map_or(Label::NoInput, Label::Gesture)
    }
}

impl core::str::FromStr for Label {
    type Err = crate::firmware::UnknownGesture;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("NoInput") || s.eq_ignore_ascii_case("no-input") {
            return Ok(Label::NoInput);
        }
        s.parse().map(Label::Gesture)
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(self.name())
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = <alloc::borrow::Cow<'de, str>>::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Classification {
    pub label: Label,
    pub snr_db: f64,
    pub f_peak_mhz: f64,
}

/// Centered moving average; the window shrinks at the edges.
fn smooth(values: &[Complex64], w: usize) -> Vec<Complex64> {
    if w <= 1 {
        return values.to_vec();
    }
    let h = w / 2;
    let n = values.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(h);
            let hi = (i + h + 1).min(n);
            let sum: Complex64 = values[lo..hi].iter().sum();
            sum / (hi - lo) as f64
        })
        .collect()
}

fn check_trace(trace: &SweepTrace) -> Result<(), DecodeError> {
    if trace.len() < 3 || trace.freqs_mhz.len() != trace.len() {
        return Err(DecodeError::TooFewPoints(trace.len()));
    }
    if let Some(i) = trace.values.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(DecodeError::NonFinite(i));
    }
    Ok(())
}

/// Argmax of the smoothed magnitude, refined by a parabola through the
/// argmax and its two neighbours. No refinement at the band edges.
pub fn detect_peak(trace: &SweepTrace, cfg: &DecoderConfig) -> Result<Peak, DecodeError> {
    cfg.validate()?;
    check_trace(trace)?;
    let step = trace.step_mhz();
    let mags: Vec<f64> = smooth(&trace.values, cfg.window_for(step)).iter().map(|z| z.norm()).collect();

    let (mut i_max, mut max, mut min) = (0, mags[0], mags[0]);
    for (i, &m) in mags.iter().enumerate() {
        if m > max {
            i_max = i;
            max = m;
        }
        min = min.min(m);
    }
    if max == min {
        return Err(DecodeError::NoPeak);
    }

    let f_grid = trace.freqs_mhz[i_max];
    let (mut f_peak, mut apex) = (f_grid, max);
    if i_max > 0 && i_max + 1 < mags.len() {
        let (y0, y1, y2) = (mags[i_max - 1], mags[i_max], mags[i_max + 1]);
        let curvature = y0 - 2.0 * y1 + y2;
        if curvature < 0.0 {
            let delta = (0.5 * (y0 - y2) / curvature).clamp(-0.5, 0.5);
            f_peak = f_grid + delta * step;
            apex = y1 - 0.25 * (y0 - y2) * delta;
        }
    }
    Ok(Peak { f_peak_mhz: f_peak, magnitude_ohm: apex, grid_index: i_max, grid_f_mhz: f_grid })
}

/// Peak-to-noise ratio in dB.
///
/// σ̂ is the per-component noise level estimated from the smoothing residual
/// at grid points more than three linewidths from the peak, rescaled for the
/// variance the moving average itself removes. Clamped at `snr_cap_db` when
/// the floor is numerically zero.
pub fn compute_snr(trace: &SweepTrace, peak: &Peak, cfg: &DecoderConfig) -> Result<f64, DecodeError> {
    cfg.validate()?;
    check_trace(trace)?;
    let w = cfg.window_for(trace.step_mhz());
    let h = w / 2;
    let n = trace.len();
    let smoothed = smooth(&trace.values, w);
    let exclusion = BASELINE_LINEWIDTHS * cfg.linewidth_mhz;

    let residuals: Vec<Complex64> = (h..n.saturating_sub(h))
        .filter(|&i| (trace.freqs_mhz[i] - peak.f_peak_mhz).abs() > exclusion)
        .map(|i| if w > 1 { trace.values[i] - smoothed[i] } else { trace.values[i] })
        .collect();
    let m = residuals.len();
    if m < MIN_BASELINE_POINTS {
        return Err(DecodeError::InsufficientBaseline { got: m });
    }
    let mean: Complex64 = residuals.iter().sum::<Complex64>() / m as f64;
    let ss: f64 = residuals.iter().map(|r| (r - mean).norm_sqr()).sum();
    let mut sigma = libm::sqrt(ss / (2.0 * (m - 1) as f64));
    if w > 1 {
        sigma /= libm::sqrt(1.0 - 1.0 / w as f64);
    }

    let mag = peak.magnitude_ohm;
    if !(sigma > f64::EPSILON * mag) {
        return Ok(cfg.snr_cap_db);
    }
    Ok((20.0 * libm::log10(mag / sigma)).min(cfg.snr_cap_db))
}

/// Peak location and SNR in one pass.
pub fn estimate(trace: &SweepTrace, cfg: &DecoderConfig) -> Result<PeakEstimate, DecodeError> {
    let peak = detect_peak(trace, cfg)?;
    let snr_db = compute_snr(trace, &peak, cfg)?;
    Ok(PeakEstimate { f_peak_mhz: peak.f_peak_mhz, magnitude_ohm: peak.magnitude_ohm, snr_db })
}

/// Half the smallest gap between calibrated frequencies.
pub fn default_guard_band(calibration: &[GestureSymbol]) -> Result<f64, DecodeError> {
    let mut fs: Vec<f64> = calibration.iter().map(|s| s.realized_f0_mhz).collect();
    fs.sort_by(f64::total_cmp);
    let gap = fs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    if !(gap > 0.0) {
        return Err(DecodeError::DuplicateCalibration);
    }
    Ok(0.5 * gap)
}

/// Nearest calibrated gesture, provided the SNR clears the threshold and the
/// peak sits strictly inside that gesture's guard band. Anything else,
/// including a peak exactly midway between two gestures, is `NoInput`.
pub fn classify(
    peak: &PeakEstimate,
    calibration: &[GestureSymbol],
    cfg: &DecoderConfig,
) -> Result<Classification, DecodeError> {
    cfg.validate()?;
    let guard = match cfg.guard_band_mhz {
        Some(g) => {
            default_guard_band(calibration)?;
            g
        }
        None => default_guard_band(calibration)?,
    };
    let no_input = Classification { label: Label::NoInput, snr_db: peak.snr_db, f_peak_mhz: peak.f_peak_mhz };
    if !(peak.snr_db >= cfg.threshold_db) {
        return Ok(no_input);
    }
    let mut best: Option<(f64, GestureKind)> = None;
    let mut tie = false;
    for s in calibration {
        let d = (peak.f_peak_mhz - s.realized_f0_mhz).abs();
        match best {
            Some((bd, _)) if d == bd => tie = true,
            Some((bd, _)) if d > bd => {}
            _ => {
                best = Some((d, s.kind));
                tie = false;
            }
        }
    }
    match best {
        Some((d, kind)) if !tie && d < guard => Ok(Classification { label: Label::Gesture(kind), ..no_input }),
        _ => Ok(no_input),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::CouplingLink;
    use crate::firmware::{plan_digipot_codes, DEFAULT_GESTURE_ORDER, DEFAULT_TARGETS_MHZ};
    use crate::resonant::VaractorModel;
    use crate::sensing::{run_sweep, RingLoad, SweepConfig};
    use approx::assert_relative_eq;

    fn plan() -> [GestureSymbol; 5] {
        let ring = ResonantTank::calibrated_ring().unwrap();
        plan_digipot_codes(&ring, &VaractorModel::default(), &DEFAULT_TARGETS_MHZ, &DEFAULT_GESTURE_ORDER).unwrap()
    }

    fn sweep(load: RingLoad, k: f64, sigma: f64, seed: u64) -> SweepTrace {
        let ring = ResonantTank::calibrated_ring().unwrap();
        let link = CouplingLink::from_k(k, 2.6, 4.0).unwrap();
        let cfg = SweepConfig { noise_sigma_ohm: sigma, rng_seed: seed, ..SweepConfig::default() };
        run_sweep(&cfg, &ResonantTank::wristband(), &ring, &link, load).unwrap()
    }

    fn est(f: f64, snr: f64) -> PeakEstimate {
        PeakEstimate { f_peak_mhz: f, magnitude_ohm: 1.0, snr_db: snr }
    }

    #[test]
    fn default_window_is_five_points() {
        let cfg = DecoderConfig::default();
        assert_eq!(cfg.window_for(0.01), 5);
        assert_eq!(cfg.window_for(0.1), 1);
        assert_eq!(DecoderConfig { smoothing_points: Some(4), ..cfg }.window_for(0.01), 5);
    }

    #[test]
    fn noiseless_peaks_land_on_targets() {
        let cfg = DecoderConfig::default();
        for s in plan() {
            let trace = sweep(RingLoad::Varactor(s.c_v_pf), 0.0039, 0.0, 0);
            let p = detect_peak(&trace, &cfg).unwrap();
            assert!((p.f_peak_mhz - s.realized_f0_mhz).abs() < 0.005, "{s:?} {p:?}");
            assert!((p.grid_f_mhz - s.realized_f0_mhz).abs() <= 0.01 + 1e-9);
        }
    }

    #[test]
    fn flat_and_short_traces_rejected() {
        let cfg = DecoderConfig::default();
        let flat = sweep(RingLoad::Open, 0.0039, 0.0, 0);
        assert_eq!(detect_peak(&flat, &cfg), Err(DecodeError::NoPeak));
        let short = SweepTrace::from_columns(alloc::vec![1.0, 2.0], alloc::vec![Complex64::new(0.0, 0.0); 2]).unwrap();
        assert_eq!(detect_peak(&short, &cfg), Err(DecodeError::TooFewPoints(2)));
    }

    #[test]
    fn parabola_recovers_exact_vertex() {
        // Quadratic magnitude profile: refinement must be exact.
        let f0 = 28.0137;
        let freqs: Vec<f64> = (0..41).map(|i| 27.8 + 0.01 * i as f64).collect();
        let values = freqs.iter().map(|&f| Complex64::new(5.0 - 40.0 * (f - f0) * (f - f0), 0.0)).collect();
        let trace = SweepTrace::from_columns(freqs, values).unwrap();
        let cfg = DecoderConfig { smoothing_points: Some(1), ..DecoderConfig::default() };
        let p = detect_peak(&trace, &cfg).unwrap();
        assert_relative_eq!(p.f_peak_mhz, f0, epsilon = 1e-9);
        assert_relative_eq!(p.magnitude_ohm, 5.0, epsilon = 1e-9);
    }

    #[test]
    fn edge_argmax_is_not_refined() {
        let freqs: Vec<f64> = (0..30).map(|i| 28.0 + 0.01 * i as f64).collect();
        let values = (0..30).map(|i| Complex64::new(i as f64, 0.0)).collect();
        let trace = SweepTrace::from_columns(freqs, values).unwrap();
        let cfg = DecoderConfig { smoothing_points: Some(1), ..DecoderConfig::default() };
        let p = detect_peak(&trace, &cfg).unwrap();
        assert_eq!(p.grid_index, 29);
        assert_eq!(p.f_peak_mhz, p.grid_f_mhz);
    }

    #[test]
    fn snr_clamps_on_noiseless_flat_baseline() {
        let freqs: Vec<f64> = (0..200).map(|i| 27.5 + 0.01 * i as f64).collect();
        let values = (0..200).map(|i| Complex64::new(if i == 100 { 1.0 } else { 0.0 }, 0.0)).collect();
        let trace = SweepTrace::from_columns(freqs, values).unwrap();
        let cfg = DecoderConfig { smoothing_points: Some(1), ..DecoderConfig::default() };
        let p = detect_peak(&trace, &cfg).unwrap();
        assert_eq!(compute_snr(&trace, &p, &cfg).unwrap(), DEFAULT_SNR_CAP_DB);
    }

    #[test]
    fn snr_near_expected_at_default_link() {
        let cfg = DecoderConfig::default();
        let load = RingLoad::Varactor(plan()[1].c_v_pf);
        for (k, expect) in [(0.0039, 23.0), (0.0031, 19.0)] {
            let n = 40;
            let mean: f64 = (0..n).map(|s| estimate(&sweep(load, k, 0.1, s), &cfg).unwrap().snr_db).sum::<f64>() / n as f64;
            assert!((mean - expect).abs() < 2.0, "k={k} mean={mean}");
        }
    }

    #[test]
    fn noise_only_stays_under_gate() {
        let cfg = DecoderConfig::default();
        for seed in 0..200 {
            let e = estimate(&sweep(RingLoad::Open, 0.0039, 0.1, seed), &cfg).unwrap();
            assert!(e.snr_db < DEFAULT_THRESHOLD_DB, "seed {seed}: {e:?}");
        }
    }

    #[test]
    fn insufficient_baseline() {
        let freqs: Vec<f64> = (0..20).map(|i| 28.0 + 0.01 * i as f64).collect();
        let values = (0..20).map(|i| Complex64::new(if i == 10 { 1.0 } else { 0.1 }, 0.0)).collect();
        let trace = SweepTrace::from_columns(freqs, values).unwrap();
        let cfg = DecoderConfig::default();
        let p = detect_peak(&trace, &cfg).unwrap();
        assert!(matches!(compute_snr(&trace, &p, &cfg), Err(DecodeError::InsufficientBaseline { .. })));
    }

    #[test]
    fn classify_examples() {
        let cal = plan();
        let cfg = DecoderConfig::default();
        assert_eq!(classify(&est(28.39, 18.0), &cal, &cfg).unwrap().label, Label::Gesture(GestureKind::ScrollDown));
        assert_eq!(classify(&est(28.2, 18.0), &cal, &cfg).unwrap().label, Label::NoInput);
        assert_eq!(classify(&est(28.4, 6.0), &cal, &cfg).unwrap().label, Label::NoInput);
        assert_eq!(classify(&est(29.6, 10.0), &cal, &cfg).unwrap().label, Label::Gesture(GestureKind::Press));
        assert_eq!(classify(&est(31.0, 40.0), &cal, &cfg).unwrap().label, Label::NoInput);
        let narrow = DecoderConfig { guard_band_mhz: Some(0.005), ..cfg };
        assert_eq!(classify(&est(28.39, 18.0), &cal, &narrow).unwrap().label, Label::NoInput);
    }

    #[test]
    fn classify_rejects_duplicate_calibration() {
        let mut cal = plan();
        cal[1].realized_f0_mhz = cal[0].realized_f0_mhz;
        assert_eq!(classify(&est(28.0, 20.0), &cal, &DecoderConfig::default()), Err(DecodeError::DuplicateCalibration));
    }
}
