//! The four-state gait FSM: Sit, Walk, StairAscent, StairDescent, with one
//! trained classifier per directed edge.
//!
//! Events route by (current mode, event kind). MHF events in Walk and
//! StairDescent also arm the pending-MHF memory consumed by the next heel
//! strike to form ICF-2.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classify::{predict_ml, predict_th, Algorithm, LinearModel, ThresholdModel};
use crate::error::{Error, Result};
use crate::events::{DetectorConfig, DetectorState};
use crate::types::{
    icf3_sign, GaitEvent, GaitEventKind, GaitSample, IcfKind, IcfValue, LocomotionMode,
    TransitionDecision, TransitionKind,
};

/// Which prediction path the engine queries. Decisions are identical; only
/// the work per query differs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictPath {
    Threshold,
    Ml,
}

/// What a (mode, event kind) pair means to the machine. The labeler in
/// `data` uses the same table with ground-truth modes, so training features
/// and runtime queries can never diverge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// Query with ICF-1 (the event's thigh angle); `arm` additionally
    /// stores the angle as the pending MHF for a later ICF-2.
    QueryIcf1 { kind: TransitionKind, arm: bool },
    /// Query with ICF-3 (the sign of the event's thigh velocity).
    QueryIcf3 { kind: TransitionKind },
    /// Query with ICF-2 (pending MHF minus the event's thigh angle),
    /// consuming the pending MHF. No pending MHF: no decision.
    ConsumeIcf2 { kind: TransitionKind },
    /// Store the pending MHF, query nothing.
    ArmOnly,
    /// The pair is not in the table.
    Ignore,
}

/// The routing table of the four-state machine.
pub fn route(mode: LocomotionMode, event: GaitEventKind) -> Route {
    use GaitEventKind::*;
    use LocomotionMode::*;
    match (mode, event) {
        (Walk, Mhf) => Route::QueryIcf1 {
            kind: TransitionKind::WalkToStairAscent,
            arm: true,
        },
        (Walk, HeelStrike) => Route::ConsumeIcf2 {
            kind: TransitionKind::WalkToStairDescent,
        },
        (Walk, BandCrossing) => Route::QueryIcf3 {
            kind: TransitionKind::WalkToSit,
        },
        (Sit, BandCrossing) => Route::QueryIcf3 {
            kind: TransitionKind::SitToWalk,
        },
        (StairAscent, Mhf) => Route::QueryIcf1 {
            kind: TransitionKind::StairAscentToWalk,
            arm: false,
        },
        (StairDescent, Mhf) => Route::ArmOnly,
        (StairDescent, HeelStrike) => Route::ConsumeIcf2 {
            kind: TransitionKind::StairDescentToWalk,
        },
        _ => Route::Ignore,
    }
}

/// One trained classifier per transition edge, all six present.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBank {
    models: [ThresholdModel; 6],
}

impl ModelBank {
    pub fn new(models: [ThresholdModel; 6]) -> Self {
        Self { models }
    }

    /// Build from per-kind entries; every kind must appear exactly once.
    pub fn from_entries(entries: &[(TransitionKind, ThresholdModel)]) -> Result<Self> {
        let mut slots: [Option<ThresholdModel>; 6] = [None; 6];
        for (kind, model) in entries {
            let slot = &mut slots[kind.index()];
            if slot.is_some() {
                return Err(Error::Bank(format!("duplicate entry for {kind}")));
            }
            *slot = Some(*model);
        }
        let mut models = [slots[0].ok_or_else(|| Error::Bank("missing walk_to_sit".into()))?; 6];
        for kind in TransitionKind::ALL {
            models[kind.index()] = slots[kind.index()]
                .ok_or_else(|| Error::Bank(format!("missing entry for {kind}")))?;
        }
        Ok(Self { models })
    }

    pub fn model(&self, kind: TransitionKind) -> &ThresholdModel {
        &self.models[kind.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (TransitionKind, &ThresholdModel)> {
        TransitionKind::ALL.into_iter().map(|k| (k, self.model(k)))
    }

    fn query(&self, kind: TransitionKind, x: f64, path: PredictPath) -> bool {
        let model = self.model(kind);
        match path {
            PredictPath::Threshold => predict_th(model, x),
            PredictPath::Ml => predict_ml(&model.source, x),
        }
    }

    /// A bank whose classifiers never fire (finite out-of-range thresholds).
    /// Useful as a neutral baseline in tests.
    pub fn never_firing() -> Self {
        let model = ThresholdModel {
            threshold: 1e9,
            fire_above: true,
            source: LinearModel {
                w: 1.0,
                b: -1e9,
                algorithm: Algorithm::LogisticRegression,
            },
        };
        Self { models: [model; 6] }
    }
}

/// Serialized form of the bank: a map keyed by transition name.
#[derive(Debug, Serialize, Deserialize)]
struct BankFile {
    models: BTreeMap<String, BankEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BankEntry {
    algorithm: Algorithm,
    w: f64,
    b: f64,
    threshold: f64,
    fire_above: bool,
}

const BANK_REL_TOL: f64 = 1e-9;

impl ModelBank {
    pub fn to_toml(&self) -> Result<String> {
        let mut models = BTreeMap::new();
        for (kind, m) in self.iter() {
            models.insert(
                kind.as_str().to_string(),
                BankEntry {
                    algorithm: m.source.algorithm,
                    w: m.source.w,
                    b: m.source.b,
                    threshold: m.threshold,
                    fire_above: m.fire_above,
                },
            );
        }
        toml::to_string_pretty(&BankFile { models })
            .map_err(|e| Error::Bank(format!("serialize: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: BankFile =
            toml::from_str(text).map_err(|e| Error::Bank(format!("parse: {e}")))?;
        let mut entries = Vec::with_capacity(6);
        for (name, entry) in &file.models {
            let kind: TransitionKind = name
                .parse()
                .map_err(|_| Error::Bank(format!("unknown transition `{name}`")))?;
            if entry.w.abs() <= crate::classify::WEIGHT_EPSILON {
                return Err(Error::Bank(format!("{name}: weight is degenerate")));
            }
            let expected = -entry.b / entry.w;
            let scale = expected.abs().max(1.0);
            if (entry.threshold - expected).abs() > BANK_REL_TOL * scale {
                return Err(Error::Bank(format!(
                    "{name}: threshold {} does not match -b/w = {expected}",
                    entry.threshold
                )));
            }
            if entry.fire_above != (entry.w > 0.0) {
                return Err(Error::Bank(format!(
                    "{name}: fire_above disagrees with the sign of w"
                )));
            }
            entries.push((
                kind,
                ThresholdModel {
                    threshold: entry.threshold,
                    fire_above: entry.fire_above,
                    source: LinearModel {
                        w: entry.w,
                        b: entry.b,
                        algorithm: entry.algorithm,
                    },
                },
            ));
        }
        ModelBank::from_entries(&entries)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }
}

/// The complete decision record of one stream run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionLog {
    pub decisions: Vec<TransitionDecision>,
    pub final_mode: LocomotionMode,
    /// Heel strikes that found no pending MHF (normal on the first step
    /// after entering a mode).
    pub orphan_heel_strikes: u64,
}

impl TransitionLog {
    /// Just the decisions that changed the mode.
    pub fn fired(&self) -> impl Iterator<Item = &TransitionDecision> {
        self.decisions.iter().filter(|d| d.fired)
    }

    /// Replay the fired decisions from `initial` and return the resulting
    /// mode; equals `final_mode` for any log produced by the engine.
    pub fn replay_mode(&self, initial: LocomotionMode) -> LocomotionMode {
        let mut mode = initial;
        for d in self.fired() {
            if d.kind.source() == mode {
                mode = d.kind.target();
            }
        }
        mode
    }
}

/// The streaming engine: current mode, classifier bank, pending-MHF memory
/// and the append-only decision log.
#[derive(Debug, Clone)]
pub struct FsmEngine {
    mode: LocomotionMode,
    bank: ModelBank,
    path: PredictPath,
    pending_mhf: Option<f64>,
    decisions: Vec<TransitionDecision>,
    orphan_heel_strikes: u64,
}

impl FsmEngine {
    pub fn new(initial_mode: LocomotionMode, bank: ModelBank) -> Self {
        Self {
            mode: initial_mode,
            bank,
            path: PredictPath::Threshold,
            pending_mhf: None,
            decisions: Vec::new(),
            orphan_heel_strikes: 0,
        }
    }

    pub fn with_path(mut self, path: PredictPath) -> Self {
        self.path = path;
        self
    }

    pub fn mode(&self) -> LocomotionMode {
        self.mode
    }

    pub fn decisions(&self) -> &[TransitionDecision] {
        &self.decisions
    }

    /// Drop run state (mode stays; pending and log clear) for a new trial.
    pub fn restart(&mut self, initial_mode: LocomotionMode) {
        self.mode = initial_mode;
        self.pending_mhf = None;
        self.decisions.clear();
        self.orphan_heel_strikes = 0;
    }

    fn evaluate(&mut self, kind: TransitionKind, feature: IcfValue, t: f64) -> TransitionDecision {
        let fired = self.bank.query(kind, feature.value, self.path);
        let decision = TransitionDecision {
            kind,
            t,
            feature,
            fired,
        };
        self.decisions.push(decision);
        if fired {
            self.mode = kind.target();
            self.pending_mhf = None;
        }
        decision
    }

    /// Route one event; returns the decision if a classifier was queried.
    pub fn on_event(&mut self, e: &GaitEvent) -> Option<TransitionDecision> {
        match route(self.mode, e.kind) {
            Route::QueryIcf1 { kind, arm } => {
                let feature = IcfValue {
                    kind: IcfKind::Icf1,
                    value: e.theta_th,
                };
                let decision = self.evaluate(kind, feature, e.t);
                if arm && !decision.fired {
                    self.pending_mhf = Some(e.theta_th);
                }
                Some(decision)
            }
            Route::QueryIcf3 { kind } => {
                let feature = IcfValue {
                    kind: IcfKind::Icf3,
                    value: icf3_sign(e.theta_dot_th),
                };
                Some(self.evaluate(kind, feature, e.t))
            }
            Route::ConsumeIcf2 { kind } => match self.pending_mhf.take() {
                Some(mhf) => {
                    let feature = IcfValue {
                        kind: IcfKind::Icf2,
                        value: mhf - e.theta_th,
                    };
                    Some(self.evaluate(kind, feature, e.t))
                }
                None => {
                    self.orphan_heel_strikes += 1;
                    None
                }
            },
            Route::ArmOnly => {
                self.pending_mhf = Some(e.theta_th);
                None
            }
            Route::Ignore => None,
        }
    }

    /// Feed a whole trial sample-by-sample through a detector and this
    /// engine. Both are expected freshly reset; the result is a pure
    /// function of (initial mode, bank, config, samples).
    pub fn run_stream<I>(
        &mut self,
        detector: &mut DetectorState,
        cfg: &DetectorConfig,
        samples: I,
    ) -> Result<TransitionLog>
    where
        I: IntoIterator<Item = GaitSample>,
    {
        for sample in samples {
            for event in detector.push_sample(cfg, sample)? {
                self.on_event(&event);
            }
        }
        Ok(TransitionLog {
            decisions: self.decisions.clone(),
            final_mode: self.mode,
            orphan_heel_strikes: self.orphan_heel_strikes,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::Algorithm;

    fn model(threshold: f64, fire_above: bool) -> ThresholdModel {
        let w = if fire_above { 1.0 } else { -1.0 };
        ThresholdModel {
            threshold,
            fire_above,
            source: LinearModel {
                w,
                b: -w * threshold,
                algorithm: Algorithm::LogisticRegression,
            },
        }
    }

    /// Plausible bank for the synthetic templates: walk MHF ~35, stair MHF
    /// ~85, walk ICF-2 ~3, stair-descent ICF-2 ~19+.
    fn test_bank() -> ModelBank {
        ModelBank::from_entries(&[
            (TransitionKind::WalkToSit, model(0.0, true)),
            (TransitionKind::SitToWalk, model(0.0, false)),
            (TransitionKind::WalkToStairAscent, model(60.0, true)),
            (TransitionKind::StairAscentToWalk, model(60.0, false)),
            (TransitionKind::WalkToStairDescent, model(11.0, true)),
            (TransitionKind::StairDescentToWalk, model(11.0, false)),
        ])
        .unwrap()
    }

    fn mhf(t: f64, theta: f64) -> GaitEvent {
        GaitEvent {
            kind: GaitEventKind::Mhf,
            t,
            theta_th: theta,
            theta_dot_th: 0.0,
        }
    }

    fn hs(t: f64, theta: f64) -> GaitEvent {
        GaitEvent {
            kind: GaitEventKind::HeelStrike,
            t,
            theta_th: theta,
            theta_dot_th: -20.0,
        }
    }

    fn band(t: f64, theta_dot: f64) -> GaitEvent {
        GaitEvent {
            kind: GaitEventKind::BandCrossing,
            t,
            theta_th: 71.0,
            theta_dot_th: theta_dot,
        }
    }

    #[test]
    fn high_mhf_in_walk_fires_stair_ascent() {
        let mut engine = FsmEngine::new(LocomotionMode::Walk, test_bank());
        let d = engine.on_event(&mhf(1.0, 85.0)).unwrap();
        assert!(d.fired);
        assert_eq!(d.kind, TransitionKind::WalkToStairAscent);
        assert_eq!(engine.mode(), LocomotionMode::StairAscent);
        // Mode change clears the pending MHF.
        let none = engine.on_event(&hs(1.2, 30.0));
        assert!(none.is_none());
    }

    #[test]
    fn heel_strike_without_mhf_is_not_a_decision() {
        let mut engine = FsmEngine::new(LocomotionMode::Walk, test_bank());
        assert!(engine.on_event(&hs(0.5, 30.0)).is_none());
        assert_eq!(engine.mode(), LocomotionMode::Walk);
        assert_eq!(engine.orphan_heel_strikes, 1);
    }

    #[test]
    fn mhf_in_sit_is_ignored() {
        let mut engine = FsmEngine::new(LocomotionMode::Sit, test_bank());
        assert!(engine.on_event(&mhf(0.5, 85.0)).is_none());
        assert_eq!(engine.mode(), LocomotionMode::Sit);
        assert!(engine.decisions().is_empty());
    }

    #[test]
    fn walk_icf2_route_consumes_the_pending_mhf() {
        let mut engine = FsmEngine::new(LocomotionMode::Walk, test_bank());
        let d = engine.on_event(&mhf(1.0, 37.0)).unwrap();
        assert!(!d.fired, "37 is below the stair-ascent threshold");
        let d = engine.on_event(&hs(1.3, 18.0)).unwrap();
        assert_eq!(d.kind, TransitionKind::WalkToStairDescent);
        assert!((d.feature.value - 19.0).abs() < 1e-12);
        assert!(d.fired);
        assert_eq!(engine.mode(), LocomotionMode::StairDescent);
        // Consumed: a second heel strike has no antecedent.
        assert!(engine.on_event(&hs(1.6, 18.0)).is_none());
    }

    #[test]
    fn band_crossings_drive_sit_transitions_by_velocity_sign() {
        let mut engine = FsmEngine::new(LocomotionMode::Walk, test_bank());
        let d = engine.on_event(&band(2.0, 150.0)).unwrap();
        assert!(d.fired);
        assert_eq!(engine.mode(), LocomotionMode::Sit);
        assert_eq!(d.feature.value, 1.0);

        // Rising crossings while seated do not fire the exit edge.
        let d = engine.on_event(&band(2.2, 80.0)).unwrap();
        assert!(!d.fired);
        assert_eq!(engine.mode(), LocomotionMode::Sit);

        let d = engine.on_event(&band(5.0, -120.0)).unwrap();
        assert!(d.fired);
        assert_eq!(engine.mode(), LocomotionMode::Walk);
    }

    #[test]
    fn stair_descent_mhf_only_arms_icf2() {
        let mut engine = FsmEngine::new(LocomotionMode::StairDescent, test_bank());
        assert!(engine.on_event(&mhf(1.0, 37.0)).is_none());
        assert_eq!(engine.mode(), LocomotionMode::StairDescent);
        // Walk-style step: small ICF-2 fires the exit edge.
        let d = engine.on_event(&hs(1.3, 32.0)).unwrap();
        assert!(d.fired);
        assert_eq!(engine.mode(), LocomotionMode::Walk);
    }

    #[test]
    fn empty_stream_leaves_the_engine_untouched() {
        let mut engine = FsmEngine::new(LocomotionMode::Walk, test_bank());
        let mut det = DetectorState::new();
        let log = engine
            .run_stream(&mut det, &DetectorConfig::default(), std::iter::empty())
            .unwrap();
        assert!(log.decisions.is_empty());
        assert_eq!(log.final_mode, LocomotionMode::Walk);
    }

    #[test]
    fn never_firing_bank_keeps_mode_constant() {
        let bank = ModelBank::never_firing();
        let mut engine = FsmEngine::new(LocomotionMode::Walk, bank);
        for i in 0..200 {
            let t = i as f64 * 0.1;
            engine.on_event(&mhf(t + 0.01, 85.0));
            engine.on_event(&hs(t + 0.04, 10.0));
            engine.on_event(&band(t + 0.07, 100.0));
        }
        assert_eq!(engine.mode(), LocomotionMode::Walk);
        assert!(engine.decisions().iter().all(|d| !d.fired));
    }

    #[test]
    fn log_reconstruction_matches_final_mode() {
        let mut engine = FsmEngine::new(LocomotionMode::Walk, test_bank());
        engine.on_event(&mhf(1.0, 85.0));
        engine.on_event(&mhf(2.0, 30.0));
        engine.on_event(&mhf(3.0, 30.0));
        let log = TransitionLog {
            decisions: engine.decisions().to_vec(),
            final_mode: engine.mode(),
            orphan_heel_strikes: 0,
        };
        assert_eq!(log.replay_mode(LocomotionMode::Walk), log.final_mode);
    }

    #[test]
    fn bank_file_round_trips_and_validates() {
        let bank = test_bank();
        let text = bank.to_toml().unwrap();
        let back = ModelBank::from_toml(&text).unwrap();
        assert_eq!(back, bank);

        // Corrupt the threshold: load must reject it.
        let bad = text.replace("threshold = 60.0", "threshold = 61.0");
        assert!(ModelBank::from_toml(&bad).is_err());
    }

    #[test]
    fn bank_requires_all_six_edges() {
        let m = model(1.0, true);
        let entries: Vec<_> = TransitionKind::ALL[..5].iter().map(|&k| (k, m)).collect();
        assert!(matches!(ModelBank::from_entries(&entries), Err(Error::Bank(_))));
    }
}
