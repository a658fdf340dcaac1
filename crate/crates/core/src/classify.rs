//! 1-D binary classifiers over ICF features and the scalar thresholds
//! distilled from them.
//!
//! The runtime carries two prediction paths for the same trained model: the
//! "ML path" evaluates the model score at call time, the "TH path" is the
//! single comparison extracted from it. Both make identical decisions; the
//! latency harness exists to show how much cheaper the comparison is.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this weight magnitude a model is considered constant and has no
/// decision boundary.
pub const WEIGHT_EPSILON: f64 = 1e-9;

/// One training observation: a feature value and whether the transition
/// fired at that moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledFeature {
    pub value: f64,
    pub label: bool,
}

impl LabeledFeature {
    pub fn new(value: f64, label: bool) -> Self {
        Self { value, label }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    LogisticRegression,
    LinearSvm,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::LogisticRegression => "logistic_regression",
            Algorithm::LinearSvm => "linear_svm",
        }
    }

    /// Short name as printed in accuracy tables.
    pub fn label(&self) -> &'static str {
        match self {
            Algorithm::LogisticRegression => "LR",
            Algorithm::LinearSvm => "Linear SVM",
        }
    }
}

/// A trained 1-D linear decision function `w * x + b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub w: f64,
    pub b: f64,
    pub algorithm: Algorithm,
}

/// The distilled if/else form of a [`LinearModel`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdModel {
    pub threshold: f64,
    /// `true`: fire when `x >= threshold`; `false`: fire when `x <= threshold`.
    pub fire_above: bool,
    pub source: LinearModel,
}

/// Hyperparameters for logistic regression. The defaults are the fixed
/// values used throughout; training is deterministic given them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 2000,
            l2: 1e-4,
        }
    }
}

/// Hyperparameters for the linear SVM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    /// Violation penalty; the regularization strength is `1 / (c * n)` and
    /// the subgradient step at epoch `t` is `1 / (c * t)`.
    pub c: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self { c: 1.0, epochs: 2000 }
    }
}

fn check_two_classes(data: &[LabeledFeature]) -> Result<()> {
    if data.len() < 2 {
        return Err(Error::DegenerateData(format!(
            "need at least 2 observations, got {}",
            data.len()
        )));
    }
    for f in data {
        if !f.value.is_finite() {
            return Err(Error::DegenerateData("non-finite feature value".into()));
        }
    }
    let positives = data.iter().filter(|f| f.label).count();
    if positives == 0 || positives == data.len() {
        return Err(Error::DegenerateData(format!(
            "all {} observations carry the same label",
            data.len()
        )));
    }
    Ok(())
}

/// Mean and standard deviation used to precondition the optimizer. The
/// returned model is always mapped back to raw feature units, so thresholds
/// stay in degrees (or sign units) regardless.
fn moments(data: &[LabeledFeature]) -> (f64, f64) {
    let n = data.len() as f64;
    let mean = data.iter().map(|f| f.value).sum::<f64>() / n;
    let var = data.iter().map(|f| (f.value - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    (mean, if sd < 1e-12 { 1.0 } else { sd })
}

/// Fit a 1-D logistic regression by full-batch gradient descent.
///
/// Deterministic: zero initialization, fixed epoch count, data order only
/// affects floating-point summation order.
pub fn fit_logistic_1d(data: &[LabeledFeature], params: &LogisticParams) -> Result<LinearModel> {
    check_two_classes(data)?;
    let (mean, sd) = moments(data);
    let n = data.len() as f64;

    let mut w = 0.0_f64;
    let mut b = 0.0_f64;
    for epoch in 0..params.epochs {
        let mut gw = 0.0;
        let mut gb = 0.0;
        for f in data {
            let z = (f.value - mean) / sd;
            let p = 1.0 / (1.0 + (-(w * z + b)).exp());
            let y = if f.label { 1.0 } else { 0.0 };
            gw += (p - y) * z;
            gb += p - y;
        }
        gw = gw / n + 2.0 * params.l2 * w;
        gb /= n;
        w -= params.learning_rate * gw;
        b -= params.learning_rate * gb;
        if !(w.is_finite() && b.is_finite()) {
            return Err(Error::Divergence { epoch });
        }
    }

    Ok(LinearModel {
        w: w / sd,
        b: b - w * mean / sd,
        algorithm: Algorithm::LogisticRegression,
    })
}

/// Fit a 1-D linear SVM by deterministic subgradient descent on the
/// hinge loss with L2 regularization `1/(c*n) * w^2 / 2`, step `1/(c*t)`.
pub fn fit_linear_svm_1d(data: &[LabeledFeature], params: &SvmParams) -> Result<LinearModel> {
    check_two_classes(data)?;
    if !(params.c > 0.0) {
        return Err(Error::Config("svm penalty c must be > 0".into()));
    }
    let (mean, sd) = moments(data);
    let n = data.len() as f64;
    let lambda = 1.0 / (params.c * n);

    let mut w = 0.0_f64;
    let mut b = 0.0_f64;
    for t in 1..=params.epochs {
        let mut gw = lambda * w;
        let mut gb = 0.0;
        for f in data {
            let z = (f.value - mean) / sd;
            let y = if f.label { 1.0 } else { -1.0 };
            if y * (w * z + b) < 1.0 {
                gw -= y * z / n;
                gb -= y / n;
            }
        }
        let step = 1.0 / (params.c * t as f64);
        w -= step * gw;
        b -= step * gb;
        if !(w.is_finite() && b.is_finite()) {
            return Err(Error::Divergence { epoch: t });
        }
    }

    Ok(LinearModel {
        w: w / sd,
        b: b - w * mean / sd,
        algorithm: Algorithm::LinearSvm,
    })
}

/// Distill the scalar threshold that makes an if/else check equivalent to
/// the model: `threshold = -b/w`, firing above when `w > 0`.
pub fn extract_threshold(m: &LinearModel) -> Result<ThresholdModel> {
    if m.w.abs() <= WEIGHT_EPSILON {
        return Err(Error::NoBoundary { w_abs: m.w.abs() });
    }
    Ok(ThresholdModel {
        threshold: -m.b / m.w,
        fire_above: m.w > 0.0,
        source: *m,
    })
}

/// The ML prediction path: evaluate the model at call time. Logistic
/// regression computes its probability and fires at p >= 0.5; the SVM fires
/// on a non-negative decision score. Both rules fire exactly when
/// `w*x + b >= 0`.
#[inline]
pub fn predict_ml(m: &LinearModel, x: f64) -> bool {
    let score = m.w * x + m.b;
    match m.algorithm {
        Algorithm::LogisticRegression => {
            let p = 1.0 / (1.0 + (-score).exp());
            p >= 0.5
        }
        Algorithm::LinearSvm => score >= 0.0,
    }
}

/// The TH prediction path: a single comparison, no score computation.
#[inline]
pub fn predict_th(m: &ThresholdModel, x: f64) -> bool {
    if m.fire_above {
        x >= m.threshold
    } else {
        x <= m.threshold
    }
}

/// Fraction of observations a predictor gets right.
pub fn classifier_accuracy<P>(predict: P, data: &[LabeledFeature]) -> Result<f64>
where
    P: Fn(f64) -> bool,
{
    if data.is_empty() {
        return Err(Error::EmptyInput("classifier_accuracy on no data".into()));
    }
    let correct = data
        .iter()
        .filter(|f| predict(f.value) == f.label)
        .count();
    Ok(correct as f64 / data.len() as f64)
}

/// Brute-force 1-D threshold oracle: scans every candidate boundary
/// (midpoints of adjacent sorted values, plus outer sentinels) in both
/// directions and returns the accuracy-maximizing `(threshold, fire_above)`.
///
/// Independent of the gradient-descent path; used by tests to validate the
/// trained boundaries.
pub fn best_threshold_by_scan(data: &[LabeledFeature]) -> Result<(f64, bool, f64)> {
    if data.is_empty() {
        return Err(Error::EmptyInput("threshold scan on no data".into()));
    }
    let mut values: Vec<f64> = data.iter().map(|f| f.value).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();

    let mut candidates = Vec::with_capacity(values.len() + 1);
    candidates.push(values[0] - 1.0);
    for pair in values.windows(2) {
        candidates.push(0.5 * (pair[0] + pair[1]));
    }
    candidates.push(values[values.len() - 1] + 1.0);

    let mut best = (candidates[0], true, -1.0);
    for &thr in &candidates {
        for fire_above in [true, false] {
            let acc = classifier_accuracy(
                |x| if fire_above { x >= thr } else { x <= thr },
                data,
            )?;
            if acc > best.2 {
                best = (thr, fire_above, acc);
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lf(pairs: &[(f64, bool)]) -> Vec<LabeledFeature> {
        pairs.iter().map(|&(v, l)| LabeledFeature::new(v, l)).collect()
    }

    #[test]
    fn symmetric_pair_puts_the_boundary_at_zero() {
        let data = lf(&[(-1.0, false), (1.0, true)]);
        let m = fit_logistic_1d(&data, &LogisticParams::default()).unwrap();
        let th = extract_threshold(&m).unwrap();
        assert!(th.threshold.abs() < 1e-6, "LR threshold {}", th.threshold);
        assert!(th.fire_above);

        let m = fit_linear_svm_1d(&data, &SvmParams::default()).unwrap();
        let th = extract_threshold(&m).unwrap();
        assert!(th.threshold.abs() < 0.1, "SVM threshold {}", th.threshold);
        assert!(th.fire_above);
    }

    #[test]
    fn logistic_separates_1379_inside_the_gap() {
        let data = lf(&[(1.0, false), (3.0, false), (7.0, true), (9.0, true)]);
        let m = fit_logistic_1d(&data, &LogisticParams::default()).unwrap();
        let th = extract_threshold(&m).unwrap();
        assert!(
            th.threshold > 3.0 && th.threshold < 7.0,
            "threshold {} not in (3, 7)",
            th.threshold
        );
        let acc = classifier_accuracy(|x| predict_ml(&m, x), &data).unwrap();
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn svm_lands_on_the_max_margin_midpoint() {
        let data = lf(&[(1.0, false), (3.0, false), (7.0, true), (9.0, true)]);
        let m = fit_linear_svm_1d(&data, &SvmParams::default()).unwrap();
        let th = extract_threshold(&m).unwrap();
        assert!(
            (th.threshold - 5.0).abs() <= 1.0,
            "threshold {} not within 5 +/- 1",
            th.threshold
        );
    }

    #[test]
    fn single_class_data_is_degenerate() {
        let data = lf(&[(1.0, true), (2.0, true)]);
        assert!(matches!(
            fit_linear_svm_1d(&data, &SvmParams::default()),
            Err(Error::DegenerateData(_))
        ));
        assert!(matches!(
            fit_logistic_1d(&data, &LogisticParams::default()),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn extract_threshold_trivials() {
        let m = LinearModel {
            w: 2.0,
            b: -10.0,
            algorithm: Algorithm::LogisticRegression,
        };
        let th = extract_threshold(&m).unwrap();
        assert_eq!(th.threshold, 5.0);
        assert!(th.fire_above);

        let m = LinearModel {
            w: -1.0,
            b: 5.0,
            algorithm: Algorithm::LinearSvm,
        };
        let th = extract_threshold(&m).unwrap();
        assert_eq!(th.threshold, 5.0);
        assert!(!th.fire_above);

        let m = LinearModel {
            w: 0.0,
            b: 1.0,
            algorithm: Algorithm::LinearSvm,
        };
        assert!(matches!(extract_threshold(&m), Err(Error::NoBoundary { .. })));
    }

    #[test]
    fn predict_ml_boundary_is_inclusive() {
        let m = LinearModel {
            w: 2.0,
            b: -10.0,
            algorithm: Algorithm::LogisticRegression,
        };
        assert!(predict_ml(&m, 6.0));
        assert!(predict_ml(&m, 5.0), "score 0 fires");
        assert!(!predict_ml(&m, 4.0));
    }

    #[test]
    fn predict_th_boundary_is_inclusive() {
        let th = ThresholdModel {
            threshold: 5.0,
            fire_above: true,
            source: LinearModel {
                w: 2.0,
                b: -10.0,
                algorithm: Algorithm::LinearSvm,
            },
        };
        assert!(predict_th(&th, 6.0));
        assert!(predict_th(&th, 5.0));
        assert!(!predict_th(&th, 4.999));
    }

    #[test]
    fn th_and_ml_agree_on_a_grid() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let w: f64 = loop {
                let w: f64 = rng.gen_range(-10.0..10.0);
                if w.abs() > WEIGHT_EPSILON {
                    break w;
                }
            };
            let b: f64 = rng.gen_range(-100.0..100.0);
            for algorithm in [Algorithm::LogisticRegression, Algorithm::LinearSvm] {
                let m = LinearModel { w, b, algorithm };
                let th = extract_threshold(&m).unwrap();
                for i in 0..=1000 {
                    let x = -200.0 + 0.4 * i as f64;
                    assert_eq!(
                        predict_th(&th, x),
                        predict_ml(&m, x),
                        "mismatch at x={x} for w={w} b={b}"
                    );
                }
            }
        }
    }

    #[test]
    fn boundary_is_scale_invariant() {
        let base = LinearModel {
            w: 1.7,
            b: -6.3,
            algorithm: Algorithm::LinearSvm,
        };
        let reference = extract_threshold(&base).unwrap();
        for lambda in [0.001, 0.5, 3.0, 1e6] {
            let scaled = LinearModel {
                w: base.w * lambda,
                b: base.b * lambda,
                algorithm: base.algorithm,
            };
            let th = extract_threshold(&scaled).unwrap();
            assert!((th.threshold - reference.threshold).abs() < 1e-9);
            assert_eq!(th.fire_above, reference.fire_above);
        }
    }

    #[test]
    fn label_flip_inverts_direction_on_symmetric_data() {
        let data = lf(&[(-2.0, false), (-1.0, false), (1.0, true), (2.0, true)]);
        let flipped: Vec<_> = data
            .iter()
            .map(|f| LabeledFeature::new(f.value, !f.label))
            .collect();

        let th = extract_threshold(&fit_logistic_1d(&data, &LogisticParams::default()).unwrap())
            .unwrap();
        let thf =
            extract_threshold(&fit_logistic_1d(&flipped, &LogisticParams::default()).unwrap())
                .unwrap();
        assert!((th.threshold - thf.threshold).abs() < 0.2);
        assert_ne!(th.fire_above, thf.fire_above);

        let th = extract_threshold(&fit_linear_svm_1d(&data, &SvmParams::default()).unwrap())
            .unwrap();
        let thf = extract_threshold(&fit_linear_svm_1d(&flipped, &SvmParams::default()).unwrap())
            .unwrap();
        assert!((th.threshold - thf.threshold).abs() < 0.2);
        assert_ne!(th.fire_above, thf.fire_above);
    }

    #[test]
    fn fire_above_prediction_is_monotone() {
        let th = ThresholdModel {
            threshold: 12.0,
            fire_above: true,
            source: LinearModel {
                w: 1.0,
                b: -12.0,
                algorithm: Algorithm::LinearSvm,
            },
        };
        let mut fired = false;
        for i in 0..400 {
            let x = -20.0 + 0.2 * i as f64;
            let p = predict_th(&th, x);
            assert!(!(fired && !p), "prediction flipped back off at x={x}");
            fired = p;
        }
    }

    #[test]
    fn icf3_style_data_puts_the_threshold_between_the_signs() {
        let mut data = Vec::new();
        for _ in 0..25 {
            data.push(LabeledFeature::new(-1.0, false));
            data.push(LabeledFeature::new(1.0, true));
        }
        for (thr, above) in [
            {
                let m = fit_logistic_1d(&data, &LogisticParams::default()).unwrap();
                let t = extract_threshold(&m).unwrap();
                (t.threshold, t.fire_above)
            },
            {
                let m = fit_linear_svm_1d(&data, &SvmParams::default()).unwrap();
                let t = extract_threshold(&m).unwrap();
                (t.threshold, t.fire_above)
            },
        ] {
            assert!(thr > -1.0 && thr < 1.0, "threshold {thr} outside (-1, 1)");
            assert!(above);
        }
    }

    #[test]
    fn imbalanced_separable_bucket_still_separates() {
        // 5 transition steps against 50 steady steps, degree-scale values.
        let mut data = vec![LabeledFeature::new(61.0, true); 5];
        data.extend(vec![LabeledFeature::new(35.0, false); 50]);
        for (name, m) in [
            ("lr", fit_logistic_1d(&data, &LogisticParams::default()).unwrap()),
            ("svm", fit_linear_svm_1d(&data, &SvmParams::default()).unwrap()),
        ] {
            let th = extract_threshold(&m).unwrap();
            assert!(
                th.threshold > 35.0 && th.threshold < 61.0,
                "{name} threshold {} outside (35, 61)",
                th.threshold
            );
            let acc = classifier_accuracy(|x| predict_th(&th, x), &data).unwrap();
            assert_eq!(acc, 1.0, "{name}");
        }
    }

    #[test]
    fn accuracy_trivials() {
        let data = lf(&[(0.0, false), (1.0, true), (2.0, true), (3.0, false)]);
        assert_eq!(classifier_accuracy(|_| true, &data).unwrap(), 0.5);
        assert!(classifier_accuracy(|_| true, &[]).is_err());
    }

    #[test]
    fn scan_oracle_finds_the_separating_band() {
        let data = lf(&[(1.0, false), (3.0, false), (7.0, true), (9.0, true)]);
        let (thr, above, acc) = best_threshold_by_scan(&data).unwrap();
        assert_eq!(acc, 1.0);
        assert!(above);
        assert_eq!(thr, 5.0);
    }
}
