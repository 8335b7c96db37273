//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export is a thin wrapper over a plain function of the same name
//! without the `_js` suffix; native tests call those directly.

use std::collections::BTreeMap;

use gridcpd::detectors::{Detector, DetectorConfig, DetectorKind, Mode};
use gridcpd::grid::{dynamic_grid, static_grid, GridKind};
use gridcpd::simharness::{gen_stream, StreamSpec};
use gridcpd::summaries::Store;
use gridcpd::{Error, Result};
use wasm_bindgen::prelude::*;

fn js<T>(r: Result<T>) -> std::result::Result<T, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

fn to_u32(v: Vec<usize>) -> Vec<u32> {
    v.into_iter().map(|x| x as u32).collect()
}

pub fn dynamic_lags(t: u32) -> Result<Vec<u32>> {
    dynamic_grid(t as usize).map(to_u32)
}

pub fn static_lags(t: u32) -> Result<Vec<u32>> {
    static_grid(t as usize).map(to_u32)
}

/// Prefix-sum indices `t - g` that must be held at time `t`, ascending.
pub fn stored_indices(t: u32) -> Result<Vec<u32>> {
    let t = t as usize;
    let mut idx: Vec<usize> = dynamic_grid(t)?.iter().map(|g| t - g).collect();
    idx.sort_unstable();
    Ok(to_u32(idx))
}

/// A univariate mean-change stream and the detector's response to it.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Trace {
    values: Vec<f64>,
    ratios: Vec<f64>,
    lags: Vec<u32>,
    alarm: Option<usize>,
}

#[wasm_bindgen]
impl Trace {
    /// Observations, one per time step.
    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    /// Best statistic over threshold at each step (0 before `t = 2`).
    #[wasm_bindgen(getter)]
    pub fn ratios(&self) -> Vec<f64> {
        self.ratios.clone()
    }

    /// Lag attaining the best ratio at each step (0 before `t = 2`).
    #[wasm_bindgen(getter)]
    pub fn lags(&self) -> Vec<u32> {
        self.lags.clone()
    }

    /// First alarm time, or -1 when the stream ended quietly.
    #[wasm_bindgen(getter)]
    pub fn alarm(&self) -> i32 {
        self.alarm.map_or(-1, |t| t as i32)
    }
}

/// Runs the calibrated-form univariate detector with constant `lambda` over
/// a seeded unit-variance Gaussian stream of length `n` whose mean moves by
/// `phi` after observation `tau` (no change when `tau >= n`). The trace
/// continues past the first alarm.
pub fn detector_trace(n: u32, tau: u32, phi: f64, lambda: f64, seed: u64) -> Result<Trace> {
    let (n, tau) = (n as usize, tau as usize);
    let spec = StreamSpec::gauss_mean(1, n, (tau < n).then_some(tau), phi, 1, 1.0);
    let ys = gen_stream(&spec, seed)?;
    let cfg = DetectorConfig::new(DetectorKind::UniMean, 1).with_mode(Mode::Calibrated).with_lambda(lambda);
    let mut det = Detector::new(cfg)?;
    let mut trace = Trace { values: Vec::with_capacity(n), ratios: Vec::with_capacity(n), lags: Vec::new(), alarm: None };
    for y in &ys {
        let d = det.observe(y)?;
        trace.values.push(y[0]);
        trace.ratios.push(if d.threshold.is_finite() { d.statistic / d.threshold } else { 0.0 });
        trace.lags.push(d.best_g.unwrap_or(0) as u32);
        if d.alarmed && trace.alarm.is_none() {
            trace.alarm = Some(d.t);
        }
    }
    Ok(trace)
}

/// Largest checkpoint accepted by [`storage_comparison`].
pub const MAX_CHECKPOINT: u32 = 1_000_000;

/// Stored scalars of a `dim`-dimensional summary at each checkpoint, as
/// interleaved pairs `(dynamic grid, full scan)`.
pub fn storage_comparison(dim: u32, checkpoints: &[u32]) -> Result<Vec<f64>> {
    let dim = dim as usize;
    let last = checkpoints.iter().copied().max().unwrap_or(0);
    if last > MAX_CHECKPOINT {
        return Err(Error::Domain(format!("checkpoints are limited to {MAX_CHECKPOINT}, got {last}")));
    }
    let last = last as usize;
    let mut ring = Store::new(GridKind::Dynamic, dim, None)?;
    let mut full = Store::new(GridKind::Full, dim, Some(last.max(1)))?;
    let wanted: BTreeMap<usize, ()> = checkpoints.iter().map(|&c| (c as usize, ())).collect();
    let mut counts = BTreeMap::new();
    let zero = vec![0.0; dim];
    for t in 1..=last {
        ring.push(&zero)?;
        full.push(&zero)?;
        if wanted.contains_key(&t) {
            counts.insert(t, (ring.stored_scalars(), full.stored_scalars()));
        }
    }
    Ok(checkpoints
        .iter()
        .flat_map(|&c| {
            let (a, b) = counts.get(&(c as usize)).copied().unwrap_or((0, 0));
            [a as f64, b as f64]
        })
        .collect())
}

#[wasm_bindgen(js_name = dynamicLags)]
pub fn dynamic_lags_js(t: u32) -> std::result::Result<Vec<u32>, JsError> {
    js(dynamic_lags(t))
}

#[wasm_bindgen(js_name = staticLags)]
pub fn static_lags_js(t: u32) -> std::result::Result<Vec<u32>, JsError> {
    js(static_lags(t))
}

#[wasm_bindgen(js_name = storedIndices)]
pub fn stored_indices_js(t: u32) -> std::result::Result<Vec<u32>, JsError> {
    js(stored_indices(t))
}

#[wasm_bindgen(js_name = detectorTrace)]
pub fn detector_trace_js(n: u32, tau: u32, phi: f64, lambda: f64, seed: u32) -> std::result::Result<Trace, JsError> {
    js(detector_trace(n, tau, phi, lambda, seed.into()))
}

#[wasm_bindgen(js_name = storageComparison)]
pub fn storage_comparison_js(dim: u32, checkpoints: Vec<u32>) -> std::result::Result<Vec<f64>, JsError> {
    js(storage_comparison(dim, &checkpoints))
}
