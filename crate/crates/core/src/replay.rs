//! Sample-by-sample replay of recorded trials against a trained bank, and
//! the transition recognition accuracy metric computed from the outcome.
//!
//! A ground-truth transition counts as detected when a fired decision of
//! the same kind lies within the match window of its boundary; a missed
//! transition stays missed even if the machine later settles into the
//! correct steady state.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Trial;
use crate::error::Result;
use crate::events::{DetectorConfig, DetectorState};
use crate::fsm::{FsmEngine, ModelBank, PredictPath, TransitionLog};
use crate::types::{LocomotionMode, TransitionDecision, TransitionKind};

/// Replay settings beyond the detector itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReplayConfig {
    /// Maximum |t_detected - t_truth| for a detection to count, seconds.
    /// Sized to one slow step: a one-step delay is not a misclassification.
    pub match_window: f64,
    /// Mode the engine starts in.
    pub initial_mode: LocomotionMode,
}

impl Default for ReplayConfig {
    fn default() -> Self {
        Self {
            match_window: 1.5,
            initial_mode: LocomotionMode::Walk,
        }
    }
}

/// Per-transition tally of Eq.-style recognition accuracy:
/// `A = 100 * n_correct / n_total`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionTally {
    pub n_correct: u64,
    pub n_total: u64,
}

impl TransitionTally {
    pub fn accuracy_pct(&self) -> Option<f64> {
        (self.n_total > 0).then(|| 100.0 * self.n_correct as f64 / self.n_total as f64)
    }
}

/// Recognition accuracy per transition kind plus the overall tally.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    tallies: [TransitionTally; 6],
}

impl AccuracyReport {
    pub fn tally(&self, kind: TransitionKind) -> TransitionTally {
        self.tallies[kind.index()]
    }

    pub fn record(&mut self, kind: TransitionKind, correct: bool) {
        let tally = &mut self.tallies[kind.index()];
        tally.n_total += 1;
        tally.n_correct += correct as u64;
    }

    pub fn merge(&mut self, other: &AccuracyReport) {
        for (mine, theirs) in self.tallies.iter_mut().zip(&other.tallies) {
            mine.n_correct += theirs.n_correct;
            mine.n_total += theirs.n_total;
        }
    }

    pub fn overall(&self) -> TransitionTally {
        let mut total = TransitionTally::default();
        for t in &self.tallies {
            total.n_correct += t.n_correct;
            total.n_total += t.n_total;
        }
        total
    }

    /// Rows of (kind, tally) for every transition that occurred.
    pub fn rows(&self) -> impl Iterator<Item = (TransitionKind, TransitionTally)> + '_ {
        TransitionKind::ALL
            .into_iter()
            .map(|k| (k, self.tally(k)))
            .filter(|(_, t)| t.n_total > 0)
    }
}

/// Outcome of replaying one trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialReplay {
    pub trial_id: String,
    pub log: TransitionLog,
    /// Per-transition recognition outcome; empty tallies when the trial is
    /// unannotated (the log is still produced).
    pub accuracy: AccuracyReport,
}

/// Match fired decisions against ground-truth transitions.
///
/// Each truth entry consumes at most one fired decision of the same kind,
/// the nearest in time within the window; each decision matches at most one
/// truth. This is the metric's counting rule, factored out so crafted logs
/// can exercise it directly.
pub fn match_transitions(
    truth: &[(f64, TransitionKind)],
    fired: &[TransitionDecision],
    window: f64,
) -> AccuracyReport {
    let mut report = AccuracyReport::default();
    let mut used = vec![false; fired.len()];
    for &(t_truth, kind) in truth {
        let mut best: Option<(usize, f64)> = None;
        for (i, d) in fired.iter().enumerate() {
            if used[i] || !d.fired || d.kind != kind {
                continue;
            }
            let dt = (d.t - t_truth).abs();
            if dt <= window && best.map_or(true, |(_, b)| dt < b) {
                best = Some((i, dt));
            }
        }
        if let Some((i, _)) = best {
            used[i] = true;
            report.record(kind, true);
        } else {
            report.record(kind, false);
        }
    }
    report
}

/// Replay one trial through a fresh detector and engine.
pub fn replay_trial(
    trial: &Trial,
    bank: &ModelBank,
    detector_cfg: &DetectorConfig,
    replay_cfg: &ReplayConfig,
    path: PredictPath,
) -> Result<TrialReplay> {
    let mut engine = FsmEngine::new(replay_cfg.initial_mode, bank.clone()).with_path(path);
    let mut detector = DetectorState::new();
    let log = engine.run_stream(&mut detector, detector_cfg, trial.samples.iter().copied())?;

    let accuracy = if trial.is_annotated() {
        let fired: Vec<_> = log.fired().copied().collect();
        match_transitions(&trial.truth_transitions(), &fired, replay_cfg.match_window)
    } else {
        AccuracyReport::default()
    };

    Ok(TrialReplay {
        trial_id: trial.id.clone(),
        log,
        accuracy,
    })
}

/// Replay many trials (in parallel when the `parallel` feature is on) and
/// aggregate their accuracy.
pub fn replay_trials(
    trials: &[Trial],
    bank: &ModelBank,
    detector_cfg: &DetectorConfig,
    replay_cfg: &ReplayConfig,
    path: PredictPath,
) -> Result<(Vec<TrialReplay>, AccuracyReport)> {
    #[cfg(feature = "parallel")]
    let results: Result<Vec<TrialReplay>> = trials
        .par_iter()
        .map(|t| replay_trial(t, bank, detector_cfg, replay_cfg, path))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let results: Result<Vec<TrialReplay>> = trials
        .iter()
        .map(|t| replay_trial(t, bank, detector_cfg, replay_cfg, path))
        .collect();

    let results = results?;
    let mut total = AccuracyReport::default();
    for r in &results {
        total.merge(&r.accuracy);
    }
    Ok((results, total))
}

/// Always-sequential variant, kept callable regardless of features so the
/// benchmark suite can compare it against the parallel path.
pub fn replay_trials_serial(
    trials: &[Trial],
    bank: &ModelBank,
    detector_cfg: &DetectorConfig,
    replay_cfg: &ReplayConfig,
    path: PredictPath,
) -> Result<(Vec<TrialReplay>, AccuracyReport)> {
    let results: Result<Vec<TrialReplay>> = trials
        .iter()
        .map(|t| replay_trial(t, bank, detector_cfg, replay_cfg, path))
        .collect();
    let results = results?;
    let mut total = AccuracyReport::default();
    for r in &results {
        total.merge(&r.accuracy);
    }
    Ok((results, total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{IcfKind, IcfValue};

    fn fired(kind: TransitionKind, t: f64) -> TransitionDecision {
        TransitionDecision {
            kind,
            t,
            feature: IcfValue {
                kind: IcfKind::Icf1,
                value: 0.0,
            },
            fired: true,
        }
    }

    #[test]
    fn forty_five_of_fifty_is_ninety_percent() {
        use TransitionKind::*;
        let mut truth = Vec::new();
        let mut decisions = Vec::new();
        for i in 0..50 {
            let t = 10.0 * i as f64;
            truth.push((t, WalkToStairAscent));
            if i < 45 {
                decisions.push(fired(WalkToStairAscent, t + 0.4));
            }
        }
        let report = match_transitions(&truth, &decisions, 1.5);
        let tally = report.tally(WalkToStairAscent);
        assert_eq!(tally.n_correct, 45);
        assert_eq!(tally.n_total, 50);
        assert_eq!(tally.accuracy_pct(), Some(90.0));
    }

    #[test]
    fn a_late_detection_is_not_detected_even_if_steady_state_follows() {
        use TransitionKind::*;
        // The machine reaches stair ascent eventually (a fired decision
        // exists) but outside the window of the transition moment.
        let truth = vec![(10.0, WalkToStairAscent)];
        let decisions = vec![fired(WalkToStairAscent, 14.0)];
        let report = match_transitions(&truth, &decisions, 1.5);
        assert_eq!(report.tally(WalkToStairAscent).n_correct, 0);
        assert_eq!(report.tally(WalkToStairAscent).n_total, 1);
    }

    #[test]
    fn kind_must_match_within_the_window() {
        use TransitionKind::*;
        let truth = vec![(10.0, WalkToStairAscent)];
        let decisions = vec![fired(WalkToStairDescent, 10.1)];
        let report = match_transitions(&truth, &decisions, 1.5);
        assert_eq!(report.tally(WalkToStairAscent).n_correct, 0);
    }

    #[test]
    fn one_decision_cannot_cover_two_transitions() {
        use TransitionKind::*;
        let truth = vec![(10.0, SitToWalk), (11.0, SitToWalk)];
        let decisions = vec![fired(SitToWalk, 10.5)];
        let report = match_transitions(&truth, &decisions, 1.5);
        let tally = report.tally(SitToWalk);
        assert_eq!(tally.n_correct, 1);
        assert_eq!(tally.n_total, 2);
    }

    #[test]
    fn accuracy_is_exact_arithmetic() {
        let mut report = AccuracyReport::default();
        for i in 0..8 {
            report.record(TransitionKind::WalkToSit, i < 7);
        }
        assert_eq!(
            report.tally(TransitionKind::WalkToSit).accuracy_pct(),
            Some(100.0 * 7.0 / 8.0)
        );
        assert_eq!(report.overall().n_total, 8);
    }
}
