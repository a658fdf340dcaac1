//! Trial ingestion and preparation: canonical CSV loading with validation,
//! velocity derivation, deterministic dataset splitting and the labeled
//! feature extraction that feeds training.

pub mod synth;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classify::LabeledFeature;
use crate::error::{Error, Result};
use crate::events::{DetectorConfig, DetectorState};
use crate::fsm::{route, Route};
use crate::types::{GaitSample, IcfKind, LocomotionMode, TransitionKind};

/// A ground-truth segment start: the subject is in `mode` from `t` until
/// the next annotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub t: f64,
    pub mode: LocomotionMode,
}

/// One recorded trial: samples plus optional ground-truth annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub id: String,
    pub samples: Vec<GaitSample>,
    pub annotations: Vec<Annotation>,
}

impl Trial {
    pub fn is_annotated(&self) -> bool {
        !self.annotations.is_empty()
    }

    /// Ground-truth mode at time `t` (step function over the annotations).
    pub fn mode_at(&self, t: f64) -> Option<LocomotionMode> {
        let idx = self.annotations.partition_point(|a| a.t <= t);
        if idx == 0 {
            None
        } else {
            Some(self.annotations[idx - 1].mode)
        }
    }

    /// Ground-truth transitions: every annotation boundary that is one of
    /// the six FSM edges, with the time the new mode begins.
    pub fn truth_transitions(&self) -> Vec<(f64, TransitionKind)> {
        self.annotations
            .windows(2)
            .filter_map(|pair| {
                TransitionKind::from_modes(pair[0].mode, pair[1].mode).map(|k| (pair[1].t, k))
            })
            .collect()
    }

    fn validate(&self, path: &str) -> Result<()> {
        let mut prev_t = f64::NEG_INFINITY;
        for (i, s) in self.samples.iter().enumerate() {
            let row = i + 1;
            for (value, field) in [
                (s.t, "t"),
                (s.theta_th, "theta_th"),
                (s.theta_dot_th, "theta_dot_th"),
                (s.load, "load"),
            ] {
                if !value.is_finite() {
                    return Err(Error::Data {
                        path: path.to_string(),
                        row,
                        msg: format!("non-finite `{field}`"),
                    });
                }
            }
            if s.t <= prev_t {
                return Err(Error::Data {
                    path: path.to_string(),
                    row,
                    msg: format!("non-monotonic t: {} after {}", s.t, prev_t),
                });
            }
            if s.theta_th.abs() >= 180.0 {
                return Err(Error::Data {
                    path: path.to_string(),
                    row,
                    msg: format!("theta_th {} out of range (-180, 180)", s.theta_th),
                });
            }
            prev_t = s.t;
        }
        if let (Some(first), Some(last)) = (self.samples.first(), self.samples.last()) {
            let mut prev = f64::NEG_INFINITY;
            for a in &self.annotations {
                if a.t < prev {
                    return Err(Error::Data {
                        path: path.to_string(),
                        row: 0,
                        msg: format!("annotation times decrease at t={}", a.t),
                    });
                }
                if a.t < first.t || a.t > last.t {
                    return Err(Error::Data {
                        path: path.to_string(),
                        row: 0,
                        msg: format!(
                            "annotation at t={} outside the sample range [{}, {}]",
                            a.t, first.t, last.t
                        ),
                    });
                }
                prev = a.t;
            }
        }
        Ok(())
    }
}

/// Load a canonical trial CSV (`t,theta_th,theta_dot_th,load,label`).
///
/// `theta_dot_th` may be absent as a whole column, in which case velocities
/// are derived by finite differences. `label` may be absent or empty; when
/// absent, a `<name>.labels.csv` sidecar (header `t,mode`) is consulted.
pub fn load_trial(path: &Path) -> Result<Trial> {
    let path_str = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data {
            path: path_str.clone(),
            row: 0,
            msg: e.to_string(),
        })?;

    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let t_col = col("t").ok_or_else(|| Error::MissingColumn {
        path: path_str.clone(),
        column: "t".into(),
    })?;
    let theta_col = col("theta_th").ok_or_else(|| Error::MissingColumn {
        path: path_str.clone(),
        column: "theta_th".into(),
    })?;
    let load_col = col("load").ok_or_else(|| Error::MissingColumn {
        path: path_str.clone(),
        column: "load".into(),
    })?;
    let vel_col = col("theta_dot_th");
    let label_col = col("label");

    let parse = |field: &str, row: usize, name: &str| -> Result<f64> {
        field.parse::<f64>().map_err(|_| Error::Data {
            path: path_str.clone(),
            row,
            msg: format!("cannot parse `{name}` value `{field}`"),
        })
    };

    let mut samples = Vec::new();
    let mut annotations: Vec<Annotation> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let t = parse(&record[t_col], row, "t")?;
        let theta = parse(&record[theta_col], row, "theta_th")?;
        let load = parse(&record[load_col], row, "load")?;
        let vel = match vel_col {
            Some(c) => parse(&record[c], row, "theta_dot_th")?,
            None => 0.0,
        };
        samples.push(GaitSample::new(t, theta, vel, load));

        if let Some(c) = label_col {
            let cell = &record[c];
            if !cell.is_empty() {
                let mode: LocomotionMode = cell.parse()?;
                if annotations.last().map(|a| a.mode) != Some(mode) {
                    annotations.push(Annotation { t, mode });
                }
            }
        }
    }

    if label_col.is_none() {
        let sidecar = path.with_extension("labels.csv");
        if sidecar.exists() {
            annotations = load_annotations(&sidecar)?;
        }
    }

    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path_str.clone());
    let mut trial = Trial {
        id,
        samples,
        annotations,
    };
    if vel_col.is_none() {
        trial.samples = derive_velocity(&trial.samples)?;
    }
    trial.validate(&path_str)?;
    Ok(trial)
}

/// Load an annotation sidecar (`t,mode`).
pub fn load_annotations(path: &Path) -> Result<Vec<Annotation>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut out = Vec::new();
    for record in reader.deserialize::<(f64, String)>() {
        let (t, mode) = record?;
        out.push(Annotation {
            t,
            mode: mode.parse()?,
        });
    }
    Ok(out)
}

/// Write a trial in the canonical format, annotations inline in `label`.
pub fn save_trial(trial: &Trial, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "theta_th", "theta_dot_th", "load", "label"])?;
    for s in &trial.samples {
        let label = trial
            .mode_at(s.t)
            .map(|m| m.as_str())
            .unwrap_or_default();
        w.write_record([
            s.t.to_string(),
            s.theta_th.to_string(),
            s.theta_dot_th.to_string(),
            s.load.to_string(),
            label.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Load every `*.csv` trial under a directory, sorted by file name.
pub fn load_trial_dir(dir: &Path) -> Result<Vec<Trial>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::Data {
            path: dir.display().to_string(),
            row: 0,
            msg: e.to_string(),
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == "csv")
                && !p
                    .file_name()
                    .is_some_and(|n| n.to_string_lossy().ends_with(".labels.csv"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no trial CSVs under {}",
            dir.display()
        )));
    }
    paths.iter().map(|p| load_trial(p)).collect()
}

/// Fill in velocities by finite differences: central differences in the
/// interior, one-sided at both ends. Units follow the angle (deg/s).
pub fn derive_velocity(samples: &[GaitSample]) -> Result<Vec<GaitSample>> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData(
            "velocity derivation needs at least 2 samples".into(),
        ));
    }
    let n = samples.len();
    let mut out = samples.to_vec();
    out[0].theta_dot_th =
        (samples[1].theta_th - samples[0].theta_th) / (samples[1].t - samples[0].t);
    out[n - 1].theta_dot_th =
        (samples[n - 1].theta_th - samples[n - 2].theta_th) / (samples[n - 1].t - samples[n - 2].t);
    for i in 1..n - 1 {
        out[i].theta_dot_th =
            (samples[i + 1].theta_th - samples[i - 1].theta_th) / (samples[i + 1].t - samples[i - 1].t);
    }
    Ok(out)
}

/// Trial-level train/test/validation partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub validation: Vec<String>,
    pub seed: u64,
    /// Fewer than 10 trials: everything went to train.
    pub degenerate: bool,
}

/// Deterministic 72/18/10 split by trial. Proportions are floored for test
/// and validation; the remainder goes to train. Below 10 trials the split
/// degenerates to all-train.
pub fn split_dataset(trials: &[Trial], seed: u64) -> DatasetSplit {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    let mut ids: Vec<String> = trials.iter().map(|t| t.id.clone()).collect();
    if ids.len() < 10 {
        return DatasetSplit {
            train: ids,
            test: Vec::new(),
            validation: Vec::new(),
            seed,
            degenerate: true,
        };
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);

    let n = ids.len();
    let n_test = (n as f64 * 0.18).floor() as usize;
    let n_val = (n as f64 * 0.10).floor() as usize;
    let n_train = n - n_test - n_val;

    let validation = ids.split_off(n_train + n_test);
    let test = ids.split_off(n_train);
    DatasetSplit {
        train: ids,
        test,
        validation,
        seed,
        degenerate: false,
    }
}

/// Labeled ICF features grouped by the transition classifier they train.
#[derive(Debug, Clone, Default)]
pub struct FeatureSet {
    buckets: [Vec<LabeledFeature>; 6],
}

impl FeatureSet {
    pub fn bucket(&self, kind: TransitionKind) -> &[LabeledFeature] {
        &self.buckets[kind.index()]
    }

    pub fn push(&mut self, kind: TransitionKind, feature: LabeledFeature) {
        self.buckets[kind.index()].push(feature);
    }

    pub fn merge(&mut self, other: FeatureSet) {
        for (mine, theirs) in self.buckets.iter_mut().zip(other.buckets) {
            mine.extend(theirs);
        }
    }

    pub fn total_len(&self) -> usize {
        self.buckets.iter().map(Vec::len).sum()
    }
}

/// Extract labeled training features from an annotated trial.
///
/// Runs the event detectors over the samples; each event is routed exactly
/// as the FSM would route it, except the "current mode" comes from the
/// ground-truth annotation at the event time. A feature is labeled true
/// when the annotation switches to the routed target mode within
/// `lookahead` seconds of the event.
pub fn build_training_features(
    trial: &Trial,
    cfg: &DetectorConfig,
    lookahead: f64,
) -> Result<FeatureSet> {
    if !trial.is_annotated() {
        return Err(Error::Labeling {
            trial: trial.id.clone(),
            msg: "ground-truth annotations are required to build features".into(),
        });
    }

    let mut detector = DetectorState::new();
    let mut set = FeatureSet::default();
    let mut pending_mhf: Option<f64> = None;
    let mut prev_mode: Option<LocomotionMode> = None;

    for &sample in &trial.samples {
        for event in detector.push_sample(cfg, sample)? {
            let Some(mode) = trial.mode_at(event.t) else {
                continue;
            };
            if prev_mode != Some(mode) {
                // Mirrors the engine clearing its memory on mode change.
                pending_mhf = None;
                prev_mode = Some(mode);
            }

            let (kind, value) = match route(mode, event.kind) {
                Route::QueryIcf1 { kind, arm } => {
                    if arm {
                        pending_mhf = Some(event.theta_th);
                    }
                    (kind, event.theta_th)
                }
                Route::QueryIcf3 { kind } => (kind, crate::types::icf3_sign(event.theta_dot_th)),
                Route::ConsumeIcf2 { kind } => match pending_mhf.take() {
                    Some(mhf) => (kind, mhf - event.theta_th),
                    None => continue,
                },
                Route::ArmOnly => {
                    pending_mhf = Some(event.theta_th);
                    continue;
                }
                Route::Ignore => continue,
            };

            let label = next_boundary_after(trial, event.t)
                .map(|a| a.mode == kind.target() && a.t - event.t <= lookahead)
                .unwrap_or(false);
            set.push(kind, LabeledFeature::new(value, label));
        }
    }
    Ok(set)
}

fn next_boundary_after(trial: &Trial, t: f64) -> Option<Annotation> {
    let idx = trial.annotations.partition_point(|a| a.t <= t);
    trial.annotations.get(idx).copied()
}

/// ICF kind a transition's classifier consumes, fixed by the feature table.
pub fn icf_kind_for(kind: TransitionKind) -> IcfKind {
    match kind {
        TransitionKind::WalkToSit | TransitionKind::SitToWalk => IcfKind::Icf3,
        TransitionKind::WalkToStairAscent | TransitionKind::StairAscentToWalk => IcfKind::Icf1,
        TransitionKind::WalkToStairDescent | TransitionKind::StairDescentToWalk => IcfKind::Icf2,
    }
}
