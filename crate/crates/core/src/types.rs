//! Core domain vocabulary: samples, locomotion modes, transitions, gait
//! events and the instantaneous characteristic features (ICFs) computed
//! from them.
//!
//! Everything here is a plain value type; all state lives in the detector
//! and FSM modules.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One timestamped sensor frame.
///
/// Angles are thigh flexion in degrees (flexion positive), velocity in
/// degrees/second, load in newtons (or a dimensionless proxy when the
/// source dataset derives load from foot height).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitSample {
    /// Time in seconds, strictly increasing within a trial.
    pub t: f64,
    /// Thigh flexion angle, degrees.
    pub theta_th: f64,
    /// Thigh angular velocity, degrees/second.
    pub theta_dot_th: f64,
    /// Ground load, newtons (or proxy units).
    pub load: f64,
}

impl GaitSample {
    pub fn new(t: f64, theta_th: f64, theta_dot_th: f64, load: f64) -> Self {
        Self {
            t,
            theta_th,
            theta_dot_th,
            load,
        }
    }
}

/// The four FSM states. Level walking, standing and ramp walking are all
/// grouped under `Walk`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocomotionMode {
    Sit,
    Walk,
    StairAscent,
    StairDescent,
}

impl LocomotionMode {
    pub const ALL: [LocomotionMode; 4] = [
        LocomotionMode::Sit,
        LocomotionMode::Walk,
        LocomotionMode::StairAscent,
        LocomotionMode::StairDescent,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            LocomotionMode::Sit => "sit",
            LocomotionMode::Walk => "walk",
            LocomotionMode::StairAscent => "stair_ascent",
            LocomotionMode::StairDescent => "stair_descent",
        }
    }
}

impl fmt::Display for LocomotionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LocomotionMode {
    type Err = Error;

    /// Case-insensitive. `stand` and `ramp` are grouping aliases for `walk`.
    fn from_str(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "sit" => Ok(LocomotionMode::Sit),
            "walk" | "stand" | "ramp" => Ok(LocomotionMode::Walk),
            "stair_ascent" => Ok(LocomotionMode::StairAscent),
            "stair_descent" => Ok(LocomotionMode::StairDescent),
            _ => Err(Error::UnknownMode(name.to_string())),
        }
    }
}

/// Convenience wrapper over `LocomotionMode::from_str`.
pub fn parse_mode(name: &str) -> Result<LocomotionMode> {
    name.parse()
}

/// The six directed edges of the gait FSM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionKind {
    WalkToSit,
    SitToWalk,
    WalkToStairAscent,
    StairAscentToWalk,
    WalkToStairDescent,
    StairDescentToWalk,
}

impl TransitionKind {
    pub const ALL: [TransitionKind; 6] = [
        TransitionKind::WalkToSit,
        TransitionKind::SitToWalk,
        TransitionKind::WalkToStairAscent,
        TransitionKind::StairAscentToWalk,
        TransitionKind::WalkToStairDescent,
        TransitionKind::StairDescentToWalk,
    ];

    pub fn source(&self) -> LocomotionMode {
        match self {
            TransitionKind::WalkToSit
            | TransitionKind::WalkToStairAscent
            | TransitionKind::WalkToStairDescent => LocomotionMode::Walk,
            TransitionKind::SitToWalk => LocomotionMode::Sit,
            TransitionKind::StairAscentToWalk => LocomotionMode::StairAscent,
            TransitionKind::StairDescentToWalk => LocomotionMode::StairDescent,
        }
    }

    pub fn target(&self) -> LocomotionMode {
        match self {
            TransitionKind::WalkToSit => LocomotionMode::Sit,
            TransitionKind::SitToWalk
            | TransitionKind::StairAscentToWalk
            | TransitionKind::StairDescentToWalk => LocomotionMode::Walk,
            TransitionKind::WalkToStairAscent => LocomotionMode::StairAscent,
            TransitionKind::WalkToStairDescent => LocomotionMode::StairDescent,
        }
    }

    /// The edge connecting `source` to `target`, if it is one of the six.
    pub fn from_modes(source: LocomotionMode, target: LocomotionMode) -> Option<TransitionKind> {
        TransitionKind::ALL
            .into_iter()
            .find(|k| k.source() == source && k.target() == target)
    }

    /// Dense index, stable across versions: the order of [`Self::ALL`].
    pub fn index(&self) -> usize {
        match self {
            TransitionKind::WalkToSit => 0,
            TransitionKind::SitToWalk => 1,
            TransitionKind::WalkToStairAscent => 2,
            TransitionKind::StairAscentToWalk => 3,
            TransitionKind::WalkToStairDescent => 4,
            TransitionKind::StairDescentToWalk => 5,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            TransitionKind::WalkToSit => "walk_to_sit",
            TransitionKind::SitToWalk => "sit_to_walk",
            TransitionKind::WalkToStairAscent => "walk_to_stair_ascent",
            TransitionKind::StairAscentToWalk => "stair_ascent_to_walk",
            TransitionKind::WalkToStairDescent => "walk_to_stair_descent",
            TransitionKind::StairDescentToWalk => "stair_descent_to_walk",
        }
    }

    /// Compact arrow label for tables, e.g. `W->SA`.
    pub fn label(&self) -> &'static str {
        match self {
            TransitionKind::WalkToSit => "W->S",
            TransitionKind::SitToWalk => "S->W",
            TransitionKind::WalkToStairAscent => "W->SA",
            TransitionKind::StairAscentToWalk => "SA->W",
            TransitionKind::WalkToStairDescent => "W->SD",
            TransitionKind::StairDescentToWalk => "SD->W",
        }
    }
}

impl fmt::Display for TransitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TransitionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TransitionKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s || k.label() == s)
            .ok_or_else(|| Error::Config(format!("unknown transition kind `{s}`")))
    }
}

/// The three characteristic moments the detectors look for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaitEventKind
{
    /// Maximum hip flexion: the per-step peak of the thigh angle.
    Mhf,
    /// Heel strike: upward crossing of the load threshold.
    HeelStrike,
    /// Thigh angle entered the configured boundary band.
    BandCrossing,
}

/// A detected characteristic moment with the kinematics at that moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitEvent {
    pub kind: GaitEventKind,
    pub t: f64,
    pub theta_th: f64,
    pub theta_dot_th: f64,
}

/// Which ICF a feature value belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IcfKind {
    /// Thigh angle at MHF, degrees.
    Icf1,
    /// MHF angle minus heel-strike angle, degrees.
    Icf2,
    /// Sign of the thigh velocity at a band crossing, in {-1, +1}.
    Icf3,
}

/// A scalar feature computed at one characteristic moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcfValue {
    pub kind: IcfKind,
    pub value: f64,
}

/// Sign convention for ICF-3: an exactly-zero velocity counts as non-rising,
/// so the sign is -1. Keeps rest posture from reading as a sit-down.
pub fn icf3_sign(theta_dot: f64) -> f64 {
    if theta_dot > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// One evaluated classifier query, fired or not.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionDecision {
    pub kind: TransitionKind,
    pub t: f64,
    pub feature: IcfValue,
    pub fired: bool,
}

impl TransitionDecision {
    /// The FSM state the engine was in when this query was evaluated.
    pub fn state_before(&self) -> LocomotionMode {
        self.kind.source()
    }
}
