//! Streaming locomotion-transition detection.
//!
//! The pipeline detects three characteristic gait moments (maximum hip
//! flexion, heel strike, boundary-band crossing) in a thigh-angle stream,
//! computes one scalar feature per moment, and runs a four-state machine
//! whose edges are guarded by 1-D classifiers. Classifiers are trained
//! offline (logistic regression and a linear SVM) and distilled into single
//! scalar thresholds that make identical decisions at a fraction of the
//! cost; the crate ships the training, replay-evaluation and latency
//! harnesses needed to show both properties.
//!
//! Batch work (replaying trial sets, training the six classifiers) runs on
//! rayon when the default `parallel` feature is enabled, with sequential
//! fallbacks compiled in either way.

pub mod classify;
pub mod config;
pub mod data;
pub mod error;
pub mod events;
pub mod fsm;
pub mod latency;
pub mod replay;
pub mod report;
pub mod train;
pub mod types;

pub use classify::{
    classifier_accuracy, extract_threshold, fit_linear_svm_1d, fit_logistic_1d, predict_ml,
    predict_th, Algorithm, LabeledFeature, LinearModel, ThresholdModel,
};
pub use config::EngineConfig;
pub use data::synth::{generate_synthetic, ScriptSegment, SyntheticScript};
pub use data::{
    build_training_features, derive_velocity, load_trial, save_trial, split_dataset, Annotation,
    DatasetSplit, Trial,
};
pub use error::{Error, ErrorClass, Result};
pub use events::{DetectorConfig, DetectorState};
pub use fsm::{FsmEngine, ModelBank, PredictPath, TransitionLog};
pub use latency::{benchmark_classifier, run_benchmarks, BenchConfig, BenchReport, BenchResult};
pub use replay::{
    match_transitions, replay_trial, replay_trials, AccuracyReport, ReplayConfig, TrialReplay,
};
pub use train::{train_bank, train_from_trials, TrainOutcome, TrainedClassifier, TrainingConfig};
pub use types::{
    parse_mode, GaitEvent, GaitEventKind, GaitSample, IcfKind, IcfValue, LocomotionMode,
    TransitionDecision, TransitionKind,
};
