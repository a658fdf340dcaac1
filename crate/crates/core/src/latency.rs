//! TH-vs-ML latency measurement.
//!
//! Per cycle, both prediction paths run over the same pre-generated inputs,
//! interleaved (TH, ML, TH, ML, ...) so they share thermal and clock
//! conditions; input generation is outside the timed region. The harness is
//! deliberately single-threaded and does not touch scheduler policy.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::classify::{predict_ml, predict_th};
use crate::data::Trial;
use crate::error::Result;
use crate::events::{DetectorConfig, DetectorState};
use crate::fsm::{FsmEngine, ModelBank, PredictPath};
use crate::types::{LocomotionMode, TransitionKind};

/// Benchmark settings. Serializes as the `[bench]` config section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    /// Recorded cycles per method per classifier.
    pub cycles: usize,
    /// Discarded warm-up cycles.
    pub warmup: usize,
    /// Predictions per cycle; one cycle's elapsed time is divided by this.
    pub batch_size: usize,
    /// Recorded cycles for the end-to-end FSM rows.
    pub fsm_cycles: usize,
    /// Seed for the pre-generated feature inputs.
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            cycles: 100,
            warmup: 10,
            batch_size: 10_000,
            fsm_cycles: 20,
            seed: 42,
        }
    }
}

/// What a benchmark row measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchTarget {
    /// One classifier, per-prediction latency.
    Classifier(TransitionKind),
    /// The full pipeline (detectors + FSM + classifier), per-sample latency.
    Fsm,
}

impl BenchTarget {
    pub fn label(&self) -> String {
        match self {
            BenchTarget::Classifier(kind) => kind.as_str().to_string(),
            BenchTarget::Fsm => "fsm".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Th,
    Ml,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Th => "TH",
            Method::Ml => "ML",
        }
    }
}

/// Latency distribution of one (target, method) pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchResult {
    pub target: BenchTarget,
    pub method: Method,
    pub cycles: usize,
    /// Per-evaluation latencies, seconds, one per cycle.
    pub latencies: Vec<f64>,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl BenchResult {
    fn from_latencies(target: BenchTarget, method: Method, latencies: Vec<f64>) -> Self {
        let mut sorted = latencies.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        Self {
            target,
            method,
            cycles: n,
            median: sorted[n / 2],
            q1: sorted[n / 4],
            q3: sorted[(3 * n) / 4],
            latencies,
        }
    }
}

/// A full benchmark run: all classifier rows, the FSM rows, and the clock
/// sanity check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub results: Vec<BenchResult>,
    /// Smallest observable clock increment, seconds.
    pub clock_resolution: f64,
    /// Set when the clock is too coarse (> 1 us) for per-cycle timing.
    pub clock_warning: bool,
}

impl BenchReport {
    pub fn result(&self, target: BenchTarget, method: Method) -> Option<&BenchResult> {
        self.results
            .iter()
            .find(|r| r.target == target && r.method == method)
    }

    /// ML median over TH median per target.
    pub fn speedup(&self, target: BenchTarget) -> Option<f64> {
        let th = self.result(target, Method::Th)?.median;
        let ml = self.result(target, Method::Ml)?.median;
        (th > 0.0).then(|| ml / th)
    }
}

/// Smallest nonzero `Instant` delta observed over a burst of reads.
pub fn clock_resolution() -> f64 {
    let mut best = f64::INFINITY;
    for _ in 0..64 {
        let start = Instant::now();
        let mut next = Instant::now();
        while next == start {
            next = Instant::now();
        }
        best = best.min((next - start).as_secs_f64());
    }
    best
}

fn time_batch<F: FnMut(f64) -> bool>(inputs: &[f64], mut predict: F) -> f64 {
    let start = Instant::now();
    let mut fired = 0usize;
    for &x in inputs {
        fired += predict(std::hint::black_box(x)) as usize;
    }
    std::hint::black_box(fired);
    start.elapsed().as_secs_f64() / inputs.len() as f64
}

/// Benchmark one classifier, both methods, interleaved per cycle.
pub fn benchmark_classifier(
    kind: TransitionKind,
    bank: &ModelBank,
    cfg: &BenchConfig,
) -> (BenchResult, BenchResult) {
    let model = bank.model(kind);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed ^ kind.index() as u64);

    // Inputs straddle the decision boundary so branches stay unpredictable.
    let span = model.threshold.abs().max(10.0);
    let inputs: Vec<f64> = (0..cfg.batch_size)
        .map(|_| model.threshold + rng.gen_range(-span..span))
        .collect();

    let mut th = Vec::with_capacity(cfg.cycles);
    let mut ml = Vec::with_capacity(cfg.cycles);
    for cycle in 0..cfg.cycles + cfg.warmup {
        let th_model = std::hint::black_box(*model);
        let t = time_batch(&inputs, |x| predict_th(&th_model, x));
        let ml_model = std::hint::black_box(model.source);
        let m = time_batch(&inputs, |x| predict_ml(&ml_model, x));
        if cycle >= cfg.warmup {
            th.push(t);
            ml.push(m);
        }
    }

    (
        BenchResult::from_latencies(BenchTarget::Classifier(kind), Method::Th, th),
        BenchResult::from_latencies(BenchTarget::Classifier(kind), Method::Ml, ml),
    )
}

/// Benchmark the full pipeline over one trial: detectors, routing and the
/// classifier query path, per sample.
pub fn benchmark_fsm(
    trial: &Trial,
    bank: &ModelBank,
    detector_cfg: &DetectorConfig,
    initial_mode: LocomotionMode,
    cfg: &BenchConfig,
) -> Result<(BenchResult, BenchResult)> {
    let n = trial.samples.len().max(1);
    let mut th = Vec::with_capacity(cfg.fsm_cycles);
    let mut ml = Vec::with_capacity(cfg.fsm_cycles);

    let warmup = (cfg.warmup / 2).max(2);
    for cycle in 0..cfg.fsm_cycles + warmup {
        for (method, out) in [(PredictPath::Threshold, &mut th), (PredictPath::Ml, &mut ml)] {
            let mut engine = FsmEngine::new(initial_mode, bank.clone()).with_path(method);
            let mut detector = DetectorState::new();
            let start = Instant::now();
            engine.run_stream(&mut detector, detector_cfg, trial.samples.iter().copied())?;
            let elapsed = start.elapsed().as_secs_f64() / n as f64;
            if cycle >= warmup {
                out.push(elapsed);
            }
        }
    }

    Ok((
        BenchResult::from_latencies(BenchTarget::Fsm, Method::Th, th),
        BenchResult::from_latencies(BenchTarget::Fsm, Method::Ml, ml),
    ))
}

/// Run the whole suite: six classifiers plus the end-to-end FSM rows.
pub fn run_benchmarks(
    bank: &ModelBank,
    fsm_trial: &Trial,
    detector_cfg: &DetectorConfig,
    initial_mode: LocomotionMode,
    cfg: &BenchConfig,
) -> Result<BenchReport> {
    let resolution = clock_resolution();
    let mut results = Vec::with_capacity(14);
    for kind in TransitionKind::ALL {
        let (th, ml) = benchmark_classifier(kind, bank, cfg);
        results.push(th);
        results.push(ml);
    }
    let (th, ml) = benchmark_fsm(fsm_trial, bank, detector_cfg, initial_mode, cfg)?;
    results.push(th);
    results.push(ml);

    Ok(BenchReport {
        results,
        clock_resolution: resolution,
        clock_warning: resolution > 1e-6,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_cfg() -> BenchConfig {
        BenchConfig {
            cycles: 30,
            warmup: 3,
            batch_size: 2_000,
            fsm_cycles: 4,
            seed: 1,
        }
    }

    #[test]
    fn cycle_counts_match_the_request() {
        let bank = ModelBank::never_firing();
        let cfg = BenchConfig {
            cycles: 100,
            warmup: 5,
            batch_size: 500,
            ..quick_cfg()
        };
        let (th, ml) = benchmark_classifier(TransitionKind::WalkToSit, &bank, &cfg);
        assert_eq!(th.latencies.len(), 100);
        assert_eq!(ml.latencies.len(), 100);
        assert_eq!(th.cycles, 100);
        assert_eq!(ml.cycles, 100);
    }

    #[test]
    fn quartiles_are_ordered() {
        let bank = ModelBank::never_firing();
        let (th, ml) = benchmark_classifier(TransitionKind::SitToWalk, &bank, &quick_cfg());
        for r in [th, ml] {
            assert!(r.q1 <= r.median && r.median <= r.q3);
            assert!(r.median > 0.0);
        }
    }

    #[test]
    fn repeated_runs_are_stable_within_3x() {
        let bank = ModelBank::never_firing();
        let cfg = quick_cfg();
        let (a, _) = benchmark_classifier(TransitionKind::WalkToStairAscent, &bank, &cfg);
        let (b, _) = benchmark_classifier(TransitionKind::WalkToStairAscent, &bank, &cfg);
        let ratio = a.median.max(b.median) / a.median.min(b.median).max(1e-12);
        assert!(ratio < 3.0, "medians {} vs {} drifted {ratio}x", a.median, b.median);
    }

    #[test]
    fn clock_is_sane() {
        let res = clock_resolution();
        assert!(res > 0.0);
        assert!(res < 0.01, "clock resolution {res}s is unusable");
    }
}
