//! Streaming detectors for the three characteristic moments: maximum hip
//! flexion (MHF), heel strike (HS) and boundary-band crossing.
//!
//! Single pass, constant memory per sample, causal: the events returned for
//! sample `i` depend only on samples `1..=i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{GaitEvent, GaitEventKind, GaitSample};

/// Detector tuning. Serializes as the `[detector]` section of the engine
/// config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    /// Minimum rise from the preceding valley for an MHF peak, degrees.
    pub mhf_min_prominence: f64,
    /// Minimum spacing between two MHF events, seconds.
    pub mhf_refractory: f64,
    /// Low-pass cutoff for the MHF peak test, Hz. `0` disables the filter
    /// and runs the peak test on the raw angle.
    pub mhf_filter_cutoff_hz: f64,
    /// Load level whose upward crossing is a heel strike, newtons (or proxy
    /// units when load is derived from foot height).
    pub hs_load_threshold: f64,
    /// Lower edge of the crossing band, degrees.
    pub crossing_band_low: f64,
    /// Upper edge of the crossing band, degrees.
    pub crossing_band_high: f64,
    /// The original single-boundary angle, degrees.
    pub legacy_crossing: f64,
    /// Use the single legacy boundary instead of the band.
    pub use_legacy_crossing: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            mhf_min_prominence: 5.0,
            mhf_refractory: 0.3,
            mhf_filter_cutoff_hz: 8.0,
            hs_load_threshold: 50.0,
            crossing_band_low: 70.0,
            crossing_band_high: 75.0,
            legacy_crossing: 10.0,
            use_legacy_crossing: false,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.crossing_band_low < self.crossing_band_high) {
            return Err(Error::Config(format!(
                "crossing_band_low ({}) must be below crossing_band_high ({})",
                self.crossing_band_low, self.crossing_band_high
            )));
        }
        if !(self.mhf_min_prominence > 0.0) {
            return Err(Error::Config("mhf_min_prominence must be > 0".into()));
        }
        if !(self.mhf_refractory > 0.0) {
            return Err(Error::Config("mhf_refractory must be > 0".into()));
        }
        if !(self.hs_load_threshold > 0.0) {
            return Err(Error::Config("hs_load_threshold must be > 0".into()));
        }
        if self.mhf_filter_cutoff_hz < 0.0 || !self.mhf_filter_cutoff_hz.is_finite() {
            return Err(Error::Config("mhf_filter_cutoff_hz must be >= 0".into()));
        }
        Ok(())
    }
}

/// Causal second-order Butterworth low-pass (transposed direct form II).
#[derive(Debug, Clone, Copy)]
struct Biquad {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
    z1: f64,
    z2: f64,
}

impl Biquad {
    fn lowpass(cutoff_hz: f64, sample_rate_hz: f64) -> Self {
        let w = (std::f64::consts::PI * cutoff_hz / sample_rate_hz).tan();
        let k = std::f64::consts::SQRT_2;
        let norm = 1.0 / (1.0 + k * w + w * w);
        let b0 = w * w * norm;
        Self {
            b0,
            b1: 2.0 * b0,
            b2: b0,
            a1: 2.0 * (w * w - 1.0) * norm,
            a2: (1.0 - k * w + w * w) * norm,
            z1: 0.0,
            z2: 0.0,
        }
    }

    /// Put the filter in steady state for a constant input `x`, so the
    /// first samples of a trial do not look like a step response.
    fn warm_start(&mut self, x: f64) {
        self.z2 = self.b2 * x - self.a2 * x;
        self.z1 = self.b1 * x - self.a1 * x + self.z2;
    }

    fn push(&mut self, x: f64) -> f64 {
        let y = self.b0 * x + self.z1;
        self.z1 = self.b1 * x - self.a1 * y + self.z2;
        self.z2 = self.b2 * x - self.a2 * y;
        y
    }

    /// Low-frequency group delay in samples, used to size the raw lookback
    /// window that recovers the true peak sample.
    fn group_delay_samples(cutoff_hz: f64, sample_rate_hz: f64) -> f64 {
        std::f64::consts::SQRT_2 * sample_rate_hz / (2.0 * std::f64::consts::PI * cutoff_hz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LoadPhase {
    Loaded,
    Unloaded,
}

/// Which side of the legacy boundary the angle was on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BoundarySide {
    Below,
    On,
    Above,
}

/// All mutable detector state. Reset between trials.
#[derive(Debug, Clone)]
pub struct DetectorState {
    /// Samples seen so far (1-based index of the last accepted sample).
    index: usize,
    prev_t: f64,
    /// Raw samples, newest last; sized to cover the filter delay.
    raw_ring: Vec<GaitSample>,
    raw_capacity: usize,
    /// Last three values of the (possibly filtered) peak-test signal.
    peak_ring: [f64; 3],
    peak_ring_len: usize,
    /// Running minimum of the peak-test signal since the last MHF.
    valley: f64,
    /// Detection-time of the last MHF peak test, seconds.
    last_mhf_detect_t: Option<f64>,
    /// Reported timestamp of the last emitted MHF, seconds.
    last_mhf_emit_t: Option<f64>,
    filter: Option<Biquad>,
    load_phase: Option<LoadPhase>,
    in_band: bool,
    legacy_side: Option<BoundarySide>,
}

impl DetectorState {
    pub fn new() -> Self {
        Self {
            index: 0,
            prev_t: f64::NEG_INFINITY,
            raw_ring: Vec::new(),
            raw_capacity: 3,
            peak_ring: [0.0; 3],
            peak_ring_len: 0,
            valley: f64::INFINITY,
            last_mhf_detect_t: None,
            last_mhf_emit_t: None,
            filter: None,
            load_phase: None,
            in_band: false,
            legacy_side: None,
        }
    }

    /// Discard all state; the next trial starts clean.
    pub fn reset(&mut self) {
        *self = DetectorState::new();
    }

    /// Number of samples accepted so far.
    pub fn samples_seen(&self) -> usize {
        self.index
    }

    /// Feed one sample; returns the events it completed, in the order
    /// MHF, HS, BandCrossing (at most one of each).
    pub fn push_sample(&mut self, cfg: &DetectorConfig, s: GaitSample) -> Result<Vec<GaitEvent>> {
        let index = self.index + 1;
        if !s.t.is_finite() {
            return Err(Error::NonFiniteSample { index, field: "t" });
        }
        if s.t <= self.prev_t {
            return Err(Error::NonMonotonicTimestamp {
                index,
                prev: self.prev_t,
                t: s.t,
            });
        }
        if !s.theta_th.is_finite() {
            return Err(Error::NonFiniteSample {
                index,
                field: "theta_th",
            });
        }
        if !s.theta_dot_th.is_finite() {
            return Err(Error::NonFiniteSample {
                index,
                field: "theta_dot_th",
            });
        }
        if !s.load.is_finite() {
            return Err(Error::NonFiniteSample {
                index,
                field: "load",
            });
        }

        // Lazily size the filter from the first observed sample interval.
        if cfg.mhf_filter_cutoff_hz > 0.0 && self.filter.is_none() && self.index == 1 {
            let fs = 1.0 / (s.t - self.prev_t);
            // Skip the filter when the cutoff is not below Nyquist; the peak
            // test then runs on the raw angle.
            if cfg.mhf_filter_cutoff_hz < fs / 2.0 {
                let mut f = Biquad::lowpass(cfg.mhf_filter_cutoff_hz, fs);
                // The first raw sample is already in the ring; warm the
                // filter on it and re-run it through.
                let first = self.raw_ring[0].theta_th;
                f.warm_start(first);
                let y0 = f.push(first);
                self.peak_ring = [y0, 0.0, 0.0];
                self.peak_ring_len = 1;
                let delay = Biquad::group_delay_samples(cfg.mhf_filter_cutoff_hz, fs);
                self.raw_capacity = (delay.ceil() as usize + 4).max(3);
                self.filter = Some(f);
            }
        }

        self.index = index;
        self.prev_t = s.t;
        self.raw_ring.push(s);
        if self.raw_ring.len() > self.raw_capacity {
            self.raw_ring.remove(0);
        }

        let mut events = Vec::new();
        if let Some(ev) = self.step_mhf(cfg, s) {
            events.push(ev);
        }
        if let Some(ev) = self.step_heel_strike(cfg, s) {
            events.push(ev);
        }
        if let Some(ev) = self.step_band_crossing(cfg, s) {
            events.push(ev);
        }
        Ok(events)
    }

    fn step_mhf(&mut self, cfg: &DetectorConfig, s: GaitSample) -> Option<GaitEvent> {
        let y = match &mut self.filter {
            Some(f) => f.push(s.theta_th),
            None => s.theta_th,
        };
        if self.peak_ring_len < 3 {
            self.peak_ring[self.peak_ring_len] = y;
            self.peak_ring_len += 1;
            if self.peak_ring_len == 2 {
                // The very first sample can never be the middle of a peak;
                // fold it into the valley now.
                self.valley = self.valley.min(self.peak_ring[0]);
            }
            return None;
        }
        self.peak_ring.rotate_left(1);
        self.peak_ring[2] = y;

        let [a, b, c] = self.peak_ring;
        // Detection time: the middle sample, one behind the current one.
        let detect_t = self.raw_ring[self.raw_ring.len() - 2].t;
        let is_peak = b > a && b > c;
        let prominent = b - self.valley >= cfg.mhf_min_prominence;
        let refractory_ok = self
            .last_mhf_detect_t
            .map_or(true, |t| detect_t - t >= cfg.mhf_refractory);

        if !(is_peak && prominent && refractory_ok) {
            self.valley = self.valley.min(b);
            return None;
        }

        self.last_mhf_detect_t = Some(detect_t);
        self.valley = c;

        // Report the raw sample with the highest angle inside the lookback
        // window; with the filter on this undoes its group delay, without it
        // the window only holds the peak's neighborhood.
        let peak = *self
            .raw_ring
            .iter()
            .max_by(|p, q| p.theta_th.total_cmp(&q.theta_th))
            .expect("ring is non-empty");

        // Emitted timestamps must respect the refractory spacing too, even
        // when lookback jitter pulls a report backwards.
        if let Some(prev) = self.last_mhf_emit_t {
            if peak.t - prev < cfg.mhf_refractory {
                return None;
            }
        }
        self.last_mhf_emit_t = Some(peak.t);
        Some(GaitEvent {
            kind: GaitEventKind::Mhf,
            t: peak.t,
            theta_th: peak.theta_th,
            theta_dot_th: peak.theta_dot_th,
        })
    }

    fn step_heel_strike(&mut self, cfg: &DetectorConfig, s: GaitSample) -> Option<GaitEvent> {
        let phase = if s.load >= cfg.hs_load_threshold {
            LoadPhase::Loaded
        } else {
            LoadPhase::Unloaded
        };
        let previous = self.load_phase.replace(phase);
        // The first sample only establishes the phase.
        if previous == Some(LoadPhase::Unloaded) && phase == LoadPhase::Loaded {
            return Some(GaitEvent {
                kind: GaitEventKind::HeelStrike,
                t: s.t,
                theta_th: s.theta_th,
                theta_dot_th: s.theta_dot_th,
            });
        }
        None
    }

    fn step_band_crossing(&mut self, cfg: &DetectorConfig, s: GaitSample) -> Option<GaitEvent> {
        if cfg.use_legacy_crossing {
            let side = if s.theta_th < cfg.legacy_crossing {
                BoundarySide::Below
            } else if s.theta_th > cfg.legacy_crossing {
                BoundarySide::Above
            } else {
                BoundarySide::On
            };
            let previous = self.legacy_side.replace(side);
            let crossed = match (previous, side) {
                (None, _) => false,
                (Some(prev), cur) if prev == cur => false,
                // Leaving the exact boundary is not a new crossing.
                (Some(BoundarySide::On), _) => false,
                _ => true,
            };
            if crossed {
                return Some(GaitEvent {
                    kind: GaitEventKind::BandCrossing,
                    t: s.t,
                    theta_th: s.theta_th,
                    theta_dot_th: s.theta_dot_th,
                });
            }
            return None;
        }

        let inside = s.theta_th >= cfg.crossing_band_low && s.theta_th <= cfg.crossing_band_high;
        let entered = inside && !self.in_band;
        self.in_band = inside;
        if entered {
            return Some(GaitEvent {
                kind: GaitEventKind::BandCrossing,
                t: s.t,
                theta_th: s.theta_th,
                theta_dot_th: s.theta_dot_th,
            });
        }
        None
    }
}

impl Default for DetectorState {
    fn default() -> Self {
        Self::new()
    }
}
