//! Synthetic gait generator: the desk-scale stand-in for motion-capture
//! recordings.
//!
//! Each locomotion mode has a closed-form thigh-angle template; a script of
//! (mode, duration) segments is compiled into a piecewise timeline whose
//! transition steps are placed just before each annotation boundary, so the
//! characteristic event of the incoming mode falls inside the labeling
//! window. Feature distributions are separable by construction; this is an
//! oracle for the pipeline, not a biomechanical model.

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{GaitSample, LocomotionMode};

use super::{Annotation, Trial};

/// Ground reaction force while standing on the instrumented leg, newtons.
const BODY_WEIGHT_N: f64 = 800.0;

/// Correlation time of the added angle noise, seconds. Sensor jitter is
/// band-limited; white noise at 100 Hz is not a realistic angle error.
const NOISE_TAU_S: f64 = 0.15;

/// Fraction of a step period taken by sit-down / stand-up blends.
const SIT_BLEND_FRAC: f64 = 0.5;
/// Fraction of a step period taken by base-level adaptation blends.
const BASE_BLEND_FRAC: f64 = 0.25;

/// Thigh angle held while seated, degrees.
const SIT_THETA: f64 = 85.0;

/// Steady-state step template: `theta(tau) = mid - half*cos(2*pi*tau/P)`,
/// one step per period, starting and ending at the base angle with zero
/// velocity. `hs_frac` places the heel strike (load onset) within the step.
#[derive(Debug, Clone, Copy)]
struct StepShape {
    base: f64,
    amp: f64,
    hs_frac: f64,
}

/// Walk: peak 35 deg, heel strike shortly after the peak (small ICF-2).
const WALK_STEP: StepShape = StepShape {
    base: 5.0,
    amp: 30.0,
    hs_frac: 0.6,
};
/// Stair ascent: peak 85 deg.
const SA_STEP: StepShape = StepShape {
    base: 5.0,
    amp: 80.0,
    hs_frac: 0.6,
};
/// First stair-ascent step out of walking: raised but still below the
/// sit-crossing band, so entering a staircase cannot read as sitting down.
const SA_ENTRY_STEP: StepShape = StepShape {
    base: 5.0,
    amp: 56.0,
    hs_frac: 0.6,
};
/// Stair descent: modest peak, late heel strike at an extended thigh, so
/// ICF-2 is far above the walking value.
const SD_STEP: StepShape = StepShape {
    base: 13.0,
    amp: 24.0,
    hs_frac: 0.85,
};
/// First stair-descent step out of walking.
const SD_ENTRY_STEP: StepShape = StepShape {
    base: 5.0,
    amp: 32.0,
    hs_frac: 0.85,
};

fn steady_base(mode: LocomotionMode) -> f64 {
    match mode {
        LocomotionMode::Walk => WALK_STEP.base,
        LocomotionMode::StairAscent => SA_STEP.base,
        LocomotionMode::StairDescent => SD_STEP.base,
        LocomotionMode::Sit => SIT_THETA,
    }
}

/// One segment of a synthetic script.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScriptSegment {
    pub mode: LocomotionMode,
    pub duration: f64,
}

impl From<(LocomotionMode, f64)> for ScriptSegment {
    fn from((mode, duration): (LocomotionMode, f64)) -> Self {
        Self { mode, duration }
    }
}

/// A synthetic trial recipe. Serializes as a TOML script file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScript {
    pub segments: Vec<ScriptSegment>,
    /// Steps per second.
    pub cadence: f64,
    /// Standard deviation of the angle noise, degrees.
    pub noise_sd: f64,
    /// Samples per second.
    pub sample_rate: f64,
}

impl Default for SyntheticScript {
    fn default() -> Self {
        Self {
            segments: Vec::new(),
            cadence: 1.25,
            noise_sd: 0.0,
            sample_rate: 100.0,
        }
    }
}

impl SyntheticScript {
    /// The six-transition evaluation protocol: sit, walk, stair descent,
    /// walk, stair ascent, walk, sit.
    pub fn protocol(noise_sd: f64) -> Self {
        use LocomotionMode::*;
        Self {
            segments: vec![
                (Sit, 4.0).into(),
                (Walk, 6.0).into(),
                (StairDescent, 6.0).into(),
                (Walk, 6.0).into(),
                (StairAscent, 6.0).into(),
                (Walk, 6.0).into(),
                (Sit, 4.0).into(),
            ],
            noise_sd,
            ..Self::default()
        }
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::Script("script has no segments".into()));
        }
        if self.segments.iter().any(|s| !(s.duration > 0.0)) {
            return Err(Error::Script("segment durations must be > 0".into()));
        }
        if !(self.sample_rate >= 50.0) {
            return Err(Error::Script(format!(
                "sample_rate {} below the 50 Hz minimum",
                self.sample_rate
            )));
        }
        if !(self.cadence > 0.2 && self.cadence < 5.0) {
            return Err(Error::Script(format!(
                "cadence {} outside the plausible (0.2, 5) steps/s",
                self.cadence
            )));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Script(format!("serialize: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let script: SyntheticScript =
            toml::from_str(text).map_err(|e| Error::Script(e.to_string()))?;
        script.validate()?;
        Ok(script)
    }
}

#[derive(Debug, Clone, Copy)]
enum Shape {
    Hold { theta: f64, load: f64 },
    Step { shape: StepShape, period: f64 },
    Blend { from: f64, to: f64, load: f64 },
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    start: f64,
    dur: f64,
    shape: Shape,
}

impl Piece {
    fn theta(&self, tau: f64) -> f64 {
        match self.shape {
            Shape::Hold { theta, .. } => theta,
            Shape::Step { shape, period } => {
                let mid = shape.base + shape.amp / 2.0;
                let half = shape.amp / 2.0;
                mid - half * (2.0 * std::f64::consts::PI * tau / period).cos()
            }
            Shape::Blend { from, to, .. } => {
                let phase = (std::f64::consts::PI * tau / self.dur).clamp(0.0, std::f64::consts::PI);
                from + (to - from) * (1.0 - phase.cos()) / 2.0
            }
        }
    }

    fn theta_dot(&self, tau: f64) -> f64 {
        match self.shape {
            Shape::Hold { .. } => 0.0,
            Shape::Step { shape, period } => {
                let half = shape.amp / 2.0;
                let w = 2.0 * std::f64::consts::PI / period;
                half * w * (w * tau).sin()
            }
            Shape::Blend { from, to, .. } => {
                let w = std::f64::consts::PI / self.dur;
                (to - from) / 2.0 * w * (w * tau).sin()
            }
        }
    }

    fn load(&self, tau: f64) -> f64 {
        match self.shape {
            Shape::Hold { load, .. } => load,
            Shape::Step { shape, period } => {
                if tau / period >= shape.hs_frac {
                    BODY_WEIGHT_N
                } else {
                    0.0
                }
            }
            Shape::Blend { load, .. } => load,
        }
    }

    fn end_theta(&self) -> f64 {
        match self.shape {
            Shape::Hold { theta, .. } => theta,
            Shape::Step { shape, .. } => shape.base,
            Shape::Blend { to, .. } => to,
        }
    }

    fn end_load(&self) -> f64 {
        match self.shape {
            Shape::Hold { load, .. } => load,
            Shape::Step { .. } => BODY_WEIGHT_N,
            Shape::Blend { load, .. } => load,
        }
    }
}

/// Tail layout planned for one segment boundary.
struct TailPlan {
    /// Laid at the end of the current segment.
    tail: Vec<Shape>,
    tail_dur: f64,
    /// Laid at the head of the next segment.
    carry: Vec<Shape>,
    carry_dur: f64,
}

impl TailPlan {
    fn none() -> Self {
        Self {
            tail: Vec::new(),
            tail_dur: 0.0,
            carry: Vec::new(),
            carry_dur: 0.0,
        }
    }
}

fn shape_dur(shape: &Shape, period: f64) -> f64 {
    match shape {
        Shape::Step { period, .. } => *period,
        Shape::Blend { from, to, .. } => {
            // Sit blends span half a period, base adaptations a quarter.
            if (*from - SIT_THETA).abs() < 1e-9 || (*to - SIT_THETA).abs() < 1e-9 {
                SIT_BLEND_FRAC * period
            } else {
                BASE_BLEND_FRAC * period
            }
        }
        Shape::Hold { .. } => 0.0,
    }
}

/// Plan the transition pieces around the boundary from `mode` to `next`.
///
/// Sit transitions alternate between placing the movement just before the
/// labeled boundary and just after it (`alpha` selects the former): an
/// observer pressing the label key is sometimes ahead of the movement and
/// sometimes behind it, and the alternation gives both crossing signs to
/// both sit classifiers during training.
fn plan_tail(mode: LocomotionMode, next: LocomotionMode, period: f64, alpha: bool) -> TailPlan {
    use LocomotionMode::*;
    let step = |shape: StepShape| Shape::Step {
        shape,
        period,
    };
    let mut plan = TailPlan::none();
    match (mode, next) {
        (Walk, StairAscent) => plan.tail.push(step(SA_ENTRY_STEP)),
        (Walk, StairDescent) => plan.tail.push(step(SD_ENTRY_STEP)),
        (StairAscent, Walk) => plan.tail.push(step(WALK_STEP)),
        (StairDescent, Walk) => {
            plan.tail.push(Shape::Blend {
                from: SD_STEP.base,
                to: WALK_STEP.base,
                load: BODY_WEIGHT_N,
            });
            plan.tail.push(step(WALK_STEP));
        }
        (Walk, Sit) => {
            let blend = Shape::Blend {
                from: WALK_STEP.base,
                to: SIT_THETA,
                load: BODY_WEIGHT_N,
            };
            if alpha {
                plan.tail.push(blend);
            } else {
                plan.carry.push(blend);
            }
        }
        (Sit, Walk) => {
            let blend = Shape::Blend {
                from: SIT_THETA,
                to: WALK_STEP.base,
                load: BODY_WEIGHT_N,
            };
            if alpha {
                plan.tail.push(blend);
            } else {
                plan.carry.push(blend);
            }
        }
        _ => {}
    }
    plan.tail_dur = plan.tail.iter().map(|s| shape_dur(s, period)).sum();
    plan.carry_dur = plan.carry.iter().map(|s| shape_dur(s, period)).sum();
    plan
}

fn is_sit_boundary(a: LocomotionMode, b: LocomotionMode) -> bool {
    matches!(
        (a, b),
        (LocomotionMode::Walk, LocomotionMode::Sit) | (LocomotionMode::Sit, LocomotionMode::Walk)
    )
}

/// Timeline under construction.
struct Layout {
    pieces: Vec<Piece>,
    cursor: f64,
    cur_theta: f64,
    cur_load: f64,
}

impl Layout {
    fn lay(&mut self, shape: Shape, dur: f64) {
        if dur <= 1e-9 {
            return;
        }
        let piece = Piece {
            start: self.cursor,
            dur,
            shape,
        };
        self.cursor += dur;
        self.cur_theta = piece.end_theta();
        self.cur_load = piece.end_load();
        self.pieces.push(piece);
    }
}

fn compile(script: &SyntheticScript, seed: u64) -> Result<(Vec<Piece>, Vec<Annotation>)> {
    let period = 1.0 / script.cadence;
    let mut annotations: Vec<Annotation> = Vec::new();

    let first_mode = script.segments[0].mode;
    let mut layout = Layout {
        pieces: Vec::new(),
        cursor: 0.0,
        cur_theta: steady_base(first_mode),
        cur_load: if first_mode == LocomotionMode::Sit {
            0.0
        } else {
            BODY_WEIGHT_N
        },
    };
    let mut carry: Vec<Shape> = Vec::new();
    let mut sit_boundaries: u64 = 0;

    let mut seg_start = 0.0;
    for (k, seg) in script.segments.iter().enumerate() {
        let seg_end = seg_start + seg.duration;
        if annotations.last().map(|a| a.mode) != Some(seg.mode) {
            annotations.push(Annotation {
                t: seg_start,
                mode: seg.mode,
            });
        }

        // Head: transition movement spilling over from the previous boundary.
        for shape in std::mem::take(&mut carry) {
            let dur = shape_dur(&shape, period);
            layout.lay(shape, dur);
        }

        // Head: settle onto this mode's base level if the entry pose differs.
        let base = steady_base(seg.mode);
        if (layout.cur_theta - base).abs() > 1e-9 {
            let shape = Shape::Blend {
                from: layout.cur_theta,
                to: base,
                load: BODY_WEIGHT_N,
            };
            let dur = shape_dur(&shape, period);
            layout.lay(shape, dur);
        }

        // Tail: transition into the next segment, if any.
        let plan = match script.segments.get(k + 1) {
            Some(next) if next.mode != seg.mode => {
                let alpha = if is_sit_boundary(seg.mode, next.mode) {
                    let style = (seed.wrapping_add(sit_boundaries)) % 2 == 0;
                    sit_boundaries += 1;
                    style
                } else {
                    true
                };
                plan_tail(seg.mode, next.mode, period, alpha)
            }
            _ => TailPlan::none(),
        };

        let fill = seg_end - layout.cursor - plan.tail_dur;
        if fill < -1e-9 {
            return Err(Error::Script(format!(
                "segment {k} ({}, {}s) is too short for its transitions; needs at least {:.2}s",
                seg.mode,
                seg.duration,
                (layout.cursor - seg_start) + plan.tail_dur
            )));
        }
        let fill = fill.max(0.0);

        // Steady body of the segment.
        match seg.mode {
            LocomotionMode::Sit => {
                layout.lay(
                    Shape::Hold {
                        theta: SIT_THETA,
                        load: 0.0,
                    },
                    fill,
                );
            }
            mode => {
                let shape = match mode {
                    LocomotionMode::Walk => WALK_STEP,
                    LocomotionMode::StairAscent => SA_STEP,
                    LocomotionMode::StairDescent => SD_STEP,
                    LocomotionMode::Sit => unreachable!(),
                };
                let steps = (fill / period + 1e-9).floor() as usize;
                let filler = fill - steps as f64 * period;
                layout.lay(
                    Shape::Hold {
                        theta: shape.base,
                        load: layout.cur_load,
                    },
                    filler,
                );
                for _ in 0..steps {
                    layout.lay(Shape::Step { shape, period }, period);
                }
            }
        }

        for shape in plan.tail {
            let dur = shape_dur(&shape, period);
            layout.lay(shape, dur);
        }
        carry = plan.carry;

        seg_start = seg_end;
    }

    Ok((layout.pieces, annotations))
}

/// Generate a deterministic synthetic trial from a script and a seed.
///
/// The seed drives the angle noise (first-order Gauss-Markov, stationary
/// standard deviation `noise_sd`) and the sit-boundary timing styles.
/// Velocities are the templates' analytic derivatives; annotations are the
/// script boundaries verbatim.
pub fn generate_synthetic(script: &SyntheticScript, seed: u64) -> Result<Trial> {
    script.validate()?;
    let (pieces, annotations) = compile(script, seed)?;

    let fs = script.sample_rate;
    let total = script.total_duration();
    let n = (total * fs).floor() as usize;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let rho = (-1.0 / (fs * NOISE_TAU_S)).exp();
    let innovation = script.noise_sd * (1.0 - rho * rho).sqrt();
    let mut noise_state = 0.0_f64;

    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / fs;
        let idx = pieces.partition_point(|p| p.start <= t).saturating_sub(1);
        let piece = &pieces[idx];
        let tau = t - piece.start;

        let noise = if script.noise_sd > 0.0 {
            let eps: f64 = StandardNormal.sample(&mut rng);
            noise_state = if i == 0 {
                script.noise_sd * eps
            } else {
                rho * noise_state + innovation * eps
            };
            noise_state
        } else {
            0.0
        };

        samples.push(GaitSample::new(
            t,
            piece.theta(tau) + noise,
            piece.theta_dot(tau),
            piece.load(tau),
        ));
    }

    Ok(Trial {
        id: format!("synth_{seed:05}"),
        samples,
        annotations,
    })
}
