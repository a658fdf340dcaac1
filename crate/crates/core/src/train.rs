//! Training pipeline: labeled features from annotated trials, one fit per
//! algorithm per transition, selection by training accuracy, threshold
//! extraction into a model bank.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{
    classifier_accuracy, extract_threshold, fit_linear_svm_1d, fit_logistic_1d, predict_ml,
    Algorithm, LogisticParams, SvmParams, ThresholdModel,
};
use crate::data::{build_training_features, FeatureSet, Trial};
use crate::error::{Error, Result};
use crate::events::DetectorConfig;
use crate::fsm::ModelBank;
use crate::types::TransitionKind;

/// Training settings. Serializes as the `[training]` config section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub logistic: LogisticParams,
    pub svm: SvmParams,
    /// Seconds ahead of a feature moment in which an annotation change
    /// makes the feature a positive example.
    pub label_lookahead: f64,
    /// Seed for the train/test/validation shuffle.
    pub split_seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            logistic: LogisticParams::default(),
            svm: SvmParams::default(),
            label_lookahead: 0.5,
            split_seed: 7,
        }
    }
}

/// One row of the training summary table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainedClassifier {
    pub kind: TransitionKind,
    pub algorithm: Algorithm,
    pub train_accuracy: f64,
    /// Absent when no test features exist (degenerate split).
    pub test_accuracy: Option<f64>,
    pub threshold: f64,
    pub fire_above: bool,
    pub n_train: usize,
    pub n_test: usize,
}

/// Bank plus the per-transition accuracy summary.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub bank: ModelBank,
    pub summary: Vec<TrainedClassifier>,
}

/// Extract features from several trials and merge them in trial order.
pub fn features_for_trials(
    trials: &[&Trial],
    cfg: &DetectorConfig,
    lookahead: f64,
) -> Result<FeatureSet> {
    #[cfg(feature = "parallel")]
    let sets: Result<Vec<FeatureSet>> = trials
        .par_iter()
        .map(|t| build_training_features(t, cfg, lookahead))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let sets: Result<Vec<FeatureSet>> = trials
        .iter()
        .map(|t| build_training_features(t, cfg, lookahead))
        .collect();

    let mut merged = FeatureSet::default();
    for set in sets? {
        merged.merge(set);
    }
    Ok(merged)
}

fn fit_one(
    kind: TransitionKind,
    train: &FeatureSet,
    test: &FeatureSet,
    cfg: &TrainingConfig,
) -> Result<(TrainedClassifier, ThresholdModel)> {
    let data = train.bucket(kind);
    let positives = data.iter().filter(|f| f.label).count();
    if data.is_empty() || positives == 0 {
        return Err(Error::DegenerateData(format!(
            "{kind}: no positive training examples; the dataset has no such transition"
        )));
    }
    if positives == data.len() {
        return Err(Error::DegenerateData(format!(
            "{kind}: no negative training examples"
        )));
    }

    let logistic = fit_logistic_1d(data, &cfg.logistic)?;
    let svm = fit_linear_svm_1d(data, &cfg.svm)?;
    let acc_logistic = classifier_accuracy(|x| predict_ml(&logistic, x), data)?;
    let acc_svm = classifier_accuracy(|x| predict_ml(&svm, x), data)?;

    // Higher training accuracy wins; ties go to logistic regression.
    let (model, train_accuracy) = if acc_svm > acc_logistic {
        (svm, acc_svm)
    } else {
        (logistic, acc_logistic)
    };
    let threshold = extract_threshold(&model)?;

    let test_data = test.bucket(kind);
    let test_accuracy = if test_data.is_empty() {
        None
    } else {
        Some(classifier_accuracy(|x| predict_ml(&model, x), test_data)?)
    };

    Ok((
        TrainedClassifier {
            kind,
            algorithm: model.algorithm,
            train_accuracy,
            test_accuracy,
            threshold: threshold.threshold,
            fire_above: threshold.fire_above,
            n_train: data.len(),
            n_test: test_data.len(),
        },
        threshold,
    ))
}

fn assemble(fitted: Vec<(TrainedClassifier, ThresholdModel)>) -> Result<TrainOutcome> {
    let entries: Vec<(TransitionKind, ThresholdModel)> =
        fitted.iter().map(|(c, m)| (c.kind, *m)).collect();
    Ok(TrainOutcome {
        bank: ModelBank::from_entries(&entries)?,
        summary: fitted.into_iter().map(|(c, _)| c).collect(),
    })
}

/// Train all six classifiers from pre-extracted feature sets.
pub fn train_bank(
    train: &FeatureSet,
    test: &FeatureSet,
    cfg: &TrainingConfig,
) -> Result<TrainOutcome> {
    #[cfg(feature = "parallel")]
    let fitted: Result<Vec<_>> = TransitionKind::ALL
        .par_iter()
        .map(|&kind| fit_one(kind, train, test, cfg))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let fitted: Result<Vec<_>> = TransitionKind::ALL
        .iter()
        .map(|&kind| fit_one(kind, train, test, cfg))
        .collect();
    assemble(fitted?)
}

/// End-to-end: extract features from the given trials, fit, summarize.
pub fn train_from_trials(
    train_trials: &[&Trial],
    test_trials: &[&Trial],
    detector: &DetectorConfig,
    cfg: &TrainingConfig,
) -> Result<TrainOutcome> {
    let train = features_for_trials(train_trials, detector, cfg.label_lookahead)?;
    let test = features_for_trials(test_trials, detector, cfg.label_lookahead)?;
    train_bank(&train, &test, cfg)
}

/// Always-sequential variant of [`train_from_trials`], kept callable
/// regardless of features so the benchmark suite can compare the two.
pub fn train_from_trials_serial(
    train_trials: &[&Trial],
    test_trials: &[&Trial],
    detector: &DetectorConfig,
    cfg: &TrainingConfig,
) -> Result<TrainOutcome> {
    let mut train = FeatureSet::default();
    for t in train_trials {
        train.merge(build_training_features(t, detector, cfg.label_lookahead)?);
    }
    let mut test = FeatureSet::default();
    for t in test_trials {
        test.merge(build_training_features(t, detector, cfg.label_lookahead)?);
    }
    let fitted: Result<Vec<_>> = TransitionKind::ALL
        .iter()
        .map(|&kind| fit_one(kind, &train, &test, cfg))
        .collect();
    assemble(fitted?)
}

/// Render the summary as an aligned text table.
pub fn format_summary(summary: &[TrainedClassifier]) -> String {
    let mut out =
        String::from("transition  algorithm   train acc  test acc   threshold  direction\n");
    for c in summary {
        let test = c
            .test_accuracy
            .map(|a| format!("{:6.2}%", 100.0 * a))
            .unwrap_or_else(|| "   --  ".into());
        out.push_str(&format!(
            "{:<11} {:<11} {:6.2}%    {}   {:>9.3}  {}\n",
            c.kind.label(),
            c.algorithm.label(),
            100.0 * c.train_accuracy,
            test,
            c.threshold,
            if c.fire_above { ">=" } else { "<=" },
        ));
    }
    out
}
