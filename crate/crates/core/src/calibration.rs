//! Monte Carlo calibration of the leading constants.
//!
//! Each of `K` null streams of length `N` is scored by the largest
//! constant-free score over `t in [2, N]` and the grid (see
//! [`Decision::score`](crate::detectors::Decision)). The constant is the
//! `ceil((1 - alpha) K)`-th order statistic of these maxima, so a detector
//! using it alarms on roughly a fraction `alpha` of null streams.
//!
//! The sparse mean test in calibrated mode has two constants. Each branch gets
//! half the budget and its constant is the `ceil((1 - alpha/2) K)`-th order
//! statistic of its own maxima.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::detectors::{Detector, DetectorConfig, DetectorKind, Mode};
use crate::error::{Error, Result};
use crate::simharness::{run_indexed, stream_iter, StreamSpec};

pub const MIN_REPLICATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSpec {
    /// Detector skeleton; its constants are ignored.
    pub detector: DetectorConfig,
    /// Stream without a changepoint; its length is replaced by `horizon`.
    pub null_model: StreamSpec,
    pub horizon: usize,
    pub replications: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool. Results do not depend on it.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl CalibrationSpec {
    pub fn new(detector: DetectorConfig, horizon: usize, replications: usize, alpha: f64, seed: u64) -> Self {
        let null_model = StreamSpec::null_for(&detector, horizon);
        Self { detector, null_model, horizon, replications, alpha, seed, threads: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < MIN_REPLICATIONS {
            return Err(Error::config(format!(
                "at least {MIN_REPLICATIONS} replications required, got {}",
                self.replications
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.horizon < 2 {
            return Err(Error::config("horizon must be at least 2"));
        }
        if self.null_model.tau.is_some() {
            return Err(Error::config("null model must not contain a changepoint"));
        }
        self.detector.validate()?;
        self.null_model.with_horizon(self.horizon).validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleSummary {
    pub min: f64,
    pub median: f64,
    pub max: f64,
    pub mean: f64,
}

impl SampleSummary {
    fn of(samples: &[f64]) -> Self {
        let mut v = samples.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
        Self { min: v[0], median, max: v[n - 1], mean: v.iter().sum::<f64>() / n as f64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub kind: DetectorKind,
    pub lambda: f64,
    /// Sparse-branch constant of the calibrated sparse mean test.
    pub lambda_sparse: Option<f64>,
    pub alpha: f64,
    /// One-based order statistic used for each constant.
    pub quantile_index: usize,
    pub samples: Vec<f64>,
    pub sparse_samples: Option<Vec<f64>>,
    pub summary: SampleSummary,
    pub sparse_summary: Option<SampleSummary>,
    pub warnings: Vec<String>,
    pub seed: u64,
    pub runtime_secs: f64,
    pub spec: CalibrationSpec,
}

impl CalibrationReport {
    /// `config` with the calibrated constants filled in.
    pub fn apply(&self, mut config: DetectorConfig) -> DetectorConfig {
        config.lambda = self.lambda;
        if self.lambda_sparse.is_some() {
            config.lambda_sparse = self.lambda_sparse;
        }
        config
    }
}

/// One-based index `ceil(level K)`, guarded against rounding in `level K`.
pub fn order_index(level: f64, k: usize) -> usize {
    ((level * k as f64 - 1e-9).ceil() as usize).clamp(1, k)
}

fn order_statistic(samples: &[f64], index: usize) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    v[index - 1]
}

fn positive_constant(value: f64, what: &str) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Numeric { message: format!("{what} quantile is not positive"), estimate: value })
    }
}

fn degenerate_warning(samples: &[f64], what: &str) -> Option<String> {
    let first = samples[0];
    samples
        .iter()
        .all(|&x| x == first)
        .then(|| format!("all {what} samples equal {first}"))
}

/// Per-stream maxima of the dense (primary) and sparse scores.
fn stream_maxima(spec: &CalibrationSpec) -> Result<Vec<(f64, Option<f64>)>> {
    spec.validate()?;
    let null = spec.null_model.with_horizon(spec.horizon);
    run_indexed(spec.replications, spec.threads, |i| {
        let mut det = Detector::new(spec.detector.clone())?;
        let mut dense = f64::NEG_INFINITY;
        let mut sparse: Option<f64> = None;
        for y in stream_iter(&null, spec.seed, i as u64)? {
            let d = det.observe(&y)?;
            dense = dense.max(d.score);
            if let Some(s) = d.sparse_score {
                sparse = Some(sparse.map_or(s, |m: f64| m.max(s)));
            }
        }
        Ok((dense, sparse))
    })
}

/// Single-constant calibration; the calibrated sparse mean test is routed to
/// [`calibrate_chad`].
pub fn calibrate(spec: &CalibrationSpec) -> Result<CalibrationReport> {
    if spec.detector.kind == DetectorKind::ChadMean && spec.detector.mode == Mode::Calibrated {
        return calibrate_chad(spec);
    }
    let start = Instant::now();
    let maxima = stream_maxima(spec)?;
    let samples: Vec<f64> = maxima.iter().map(|m| m.0).collect();
    let index = order_index(1.0 - spec.alpha, spec.replications);
    let lambda = positive_constant(order_statistic(&samples, index), "score")?;
    Ok(CalibrationReport {
        kind: spec.detector.kind,
        lambda,
        lambda_sparse: None,
        alpha: spec.alpha,
        quantile_index: index,
        summary: SampleSummary::of(&samples),
        warnings: degenerate_warning(&samples, "score").into_iter().collect(),
        samples,
        sparse_samples: None,
        sparse_summary: None,
        seed: spec.seed,
        runtime_secs: start.elapsed().as_secs_f64(),
        spec: spec.clone(),
    })
}

/// Two-constant calibration of the sparse mean test with an equal split of
/// `alpha`. When the sparse branch is empty (`p = 1`) the dense constant takes
/// the whole budget.
pub fn calibrate_chad(spec: &CalibrationSpec) -> Result<CalibrationReport> {
    if spec.detector.kind != DetectorKind::ChadMean || spec.detector.mode != Mode::Calibrated {
        return Err(Error::config("calibrate_chad requires chad_mean in calibrated mode"));
    }
    let start = Instant::now();
    let maxima = stream_maxima(spec)?;
    let dense: Vec<f64> = maxima.iter().map(|m| m.0).collect();
    let sparse: Option<Vec<f64>> = maxima.iter().map(|m| m.1).collect();
    let mut warnings: Vec<String> = degenerate_warning(&dense, "dense").into_iter().collect();

    let (index, lambda_sparse) = match &sparse {
        Some(s) => {
            let index = order_index(1.0 - spec.alpha / 2.0, spec.replications);
            warnings.extend(degenerate_warning(s, "sparse"));
            (index, Some(positive_constant(order_statistic(s, index), "sparse score")?))
        }
        None => {
            warnings.push("sparse branch is empty; the dense constant carries all of alpha".into());
            (order_index(1.0 - spec.alpha, spec.replications), None)
        }
    };
    let lambda = positive_constant(order_statistic(&dense, index), "dense score")?;
    Ok(CalibrationReport {
        kind: spec.detector.kind,
        lambda,
        lambda_sparse,
        alpha: spec.alpha,
        quantile_index: index,
        summary: SampleSummary::of(&dense),
        sparse_summary: sparse.as_deref().map(SampleSummary::of),
        samples: dense,
        sparse_samples: sparse,
        warnings,
        seed: spec.seed,
        runtime_secs: start.elapsed().as_secs_f64(),
        spec: spec.clone(),
    })
}
