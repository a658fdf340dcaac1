//! End-to-end pipeline tests: generate, train, replay.

use gaitmode::data::synth::{generate_synthetic, SyntheticScript};
use gaitmode::data::Trial;
use gaitmode::replay::{replay_trial, replay_trials, ReplayConfig};
use gaitmode::train::{train_from_trials, TrainingConfig};
use gaitmode::{DetectorConfig, LocomotionMode, PredictPath, TransitionKind};

fn protocol_trials(noise_sd: f64, seeds: std::ops::Range<u64>) -> Vec<Trial> {
    let script = SyntheticScript::protocol(noise_sd);
    seeds
        .map(|s| generate_synthetic(&script, s).unwrap())
        .collect()
}

fn replay_cfg() -> ReplayConfig {
    ReplayConfig {
        initial_mode: LocomotionMode::Sit,
        ..ReplayConfig::default()
    }
}

#[test]
fn noiseless_protocol_detects_all_six_transitions_in_order() {
    let train = protocol_trials(0.0, 0..8);
    let refs: Vec<&Trial> = train.iter().collect();
    let outcome = train_from_trials(
        &refs,
        &[],
        &DetectorConfig::default(),
        &TrainingConfig::default(),
    )
    .unwrap();

    for c in &outcome.summary {
        assert_eq!(
            c.train_accuracy, 1.0,
            "{} trained at {}",
            c.kind, c.train_accuracy
        );
    }

    let held_out = protocol_trials(0.0, 100..104);
    for trial in &held_out {
        let replay = replay_trial(
            trial,
            &outcome.bank,
            &DetectorConfig::default(),
            &replay_cfg(),
            PredictPath::Threshold,
        )
        .unwrap();

        let fired: Vec<TransitionKind> = replay.log.fired().map(|d| d.kind).collect();
        use TransitionKind::*;
        assert_eq!(
            fired,
            vec![
                SitToWalk,
                WalkToStairDescent,
                StairDescentToWalk,
                WalkToStairAscent,
                StairAscentToWalk,
                WalkToSit
            ],
            "trial {}",
            trial.id
        );

        let overall = replay.accuracy.overall();
        assert_eq!(overall.n_total, 6);
        assert_eq!(overall.n_correct, 6);
    }
}

#[test]
fn replaying_the_same_stream_twice_is_identical() {
    let train = protocol_trials(0.0, 0..4);
    let refs: Vec<&Trial> = train.iter().collect();
    let outcome = train_from_trials(
        &refs,
        &[],
        &DetectorConfig::default(),
        &TrainingConfig::default(),
    )
    .unwrap();

    let trial = &protocol_trials(0.0, 50..51)[0];
    let a = replay_trial(
        trial,
        &outcome.bank,
        &DetectorConfig::default(),
        &replay_cfg(),
        PredictPath::Threshold,
    )
    .unwrap();
    let b = replay_trial(
        trial,
        &outcome.bank,
        &DetectorConfig::default(),
        &replay_cfg(),
        PredictPath::Threshold,
    )
    .unwrap();
    assert_eq!(a.log, b.log);
}

#[test]
fn ml_and_th_paths_make_identical_decisions_over_a_replay() {
    let train = protocol_trials(0.0, 0..4);
    let refs: Vec<&Trial> = train.iter().collect();
    let outcome = train_from_trials(
        &refs,
        &[],
        &DetectorConfig::default(),
        &TrainingConfig::default(),
    )
    .unwrap();

    let trials = protocol_trials(1.5, 60..64);
    let (th, _) = replay_trials(
        &trials,
        &outcome.bank,
        &DetectorConfig::default(),
        &replay_cfg(),
        PredictPath::Threshold,
    )
    .unwrap();
    let (ml, _) = replay_trials(
        &trials,
        &outcome.bank,
        &DetectorConfig::default(),
        &replay_cfg(),
        PredictPath::Ml,
    )
    .unwrap();
    for (a, b) in th.iter().zip(&ml) {
        assert_eq!(a.log, b.log, "trial {}", a.trial_id);
    }
}

#[test]
fn unannotated_trials_still_produce_logs() {
    let train = protocol_trials(0.0, 0..4);
    let refs: Vec<&Trial> = train.iter().collect();
    let outcome = train_from_trials(
        &refs,
        &[],
        &DetectorConfig::default(),
        &TrainingConfig::default(),
    )
    .unwrap();

    let mut trial = protocol_trials(0.0, 70..71).pop().unwrap();
    trial.annotations.clear();
    let replay = replay_trial(
        &trial,
        &outcome.bank,
        &DetectorConfig::default(),
        &replay_cfg(),
        PredictPath::Threshold,
    )
    .unwrap();
    assert!(!replay.log.decisions.is_empty());
    assert_eq!(replay.accuracy.overall().n_total, 0);
}
