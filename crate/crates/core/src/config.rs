//! Engine configuration file: one TOML document covering the detector,
//! training, replay and benchmark sections, with an environment-variable
//! override for every key.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::DetectorConfig;
use crate::latency::BenchConfig;
use crate::replay::ReplayConfig;
use crate::train::TrainingConfig;

/// Prefix for environment overrides, e.g.
/// `GAITMODE_DETECTOR_HS_LOAD_THRESHOLD=30`.
pub const ENV_PREFIX: &str = "GAITMODE_";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub detector: DetectorConfig,
    pub training: TrainingConfig,
    pub replay: ReplayConfig,
    pub bench: BenchConfig,
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        self.detector.validate()?;
        if !(self.replay.match_window > 0.0) {
            return Err(Error::Config("replay.match_window must be > 0".into()));
        }
        if self.bench.cycles < 10 {
            return Err(Error::Config("bench.cycles must be at least 10".into()));
        }
        if self.bench.batch_size == 0 {
            return Err(Error::Config("bench.batch_size must be > 0".into()));
        }
        if !(self.training.label_lookahead > 0.0) {
            return Err(Error::Config("training.label_lookahead must be > 0".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: EngineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Load the config (defaults when `path` is `None`), then apply any
    /// `GAITMODE_*` environment overrides and validate.
    pub fn resolve(path: Option<&Path>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        for (key, value) in std::env::vars() {
            if let Some(rest) = key.strip_prefix(ENV_PREFIX) {
                cfg.set_key(&rest.to_ascii_lowercase(), &value)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Apply one override; `key` is the lower-case underscore path below the
    /// prefix, e.g. `detector_hs_load_threshold`.
    pub fn set_key(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str, v: &str| Error::Config(format!("{key}: bad {what} `{v}`"));
        let f = |v: &str| v.parse::<f64>().map_err(|_| bad("number", v));
        let u = |v: &str| v.parse::<u64>().map_err(|_| bad("integer", v));
        let us = |v: &str| v.parse::<usize>().map_err(|_| bad("integer", v));
        let b = |v: &str| v.parse::<bool>().map_err(|_| bad("boolean", v));

        match key {
            "detector_mhf_min_prominence" => self.detector.mhf_min_prominence = f(value)?,
            "detector_mhf_refractory" => self.detector.mhf_refractory = f(value)?,
            "detector_mhf_filter_cutoff_hz" => self.detector.mhf_filter_cutoff_hz = f(value)?,
            "detector_hs_load_threshold" => self.detector.hs_load_threshold = f(value)?,
            "detector_crossing_band_low" => self.detector.crossing_band_low = f(value)?,
            "detector_crossing_band_high" => self.detector.crossing_band_high = f(value)?,
            "detector_legacy_crossing" => self.detector.legacy_crossing = f(value)?,
            "detector_use_legacy_crossing" => self.detector.use_legacy_crossing = b(value)?,
            "training_logistic_learning_rate" => self.training.logistic.learning_rate = f(value)?,
            "training_logistic_epochs" => self.training.logistic.epochs = us(value)?,
            "training_logistic_l2" => self.training.logistic.l2 = f(value)?,
            "training_svm_c" => self.training.svm.c = f(value)?,
            "training_svm_epochs" => self.training.svm.epochs = us(value)?,
            "training_label_lookahead" => self.training.label_lookahead = f(value)?,
            "training_split_seed" => self.training.split_seed = u(value)?,
            "replay_match_window" => self.replay.match_window = f(value)?,
            "replay_initial_mode" => self.replay.initial_mode = value.parse()?,
            "bench_cycles" => self.bench.cycles = us(value)?,
            "bench_warmup" => self.bench.warmup = us(value)?,
            "bench_batch_size" => self.bench.batch_size = us(value)?,
            "bench_fsm_cycles" => self.bench.fsm_cycles = us(value)?,
            "bench_seed" => self.bench.seed = u(value)?,
            _ => {
                return Err(Error::Config(format!(
                    "unknown config key `{ENV_PREFIX}{}`",
                    key.to_ascii_uppercase()
                )))
            }
        }
        Ok(())
    }
}
