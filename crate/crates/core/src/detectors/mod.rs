//! Online detectors over a grid of candidate lags.
//!
//! Every detector pushes a summary `h(y)` of each observation into a
//! [`Store`](crate::summaries::Store) and, from `t = 2` on, evaluates a
//! per-lag statistic for each lag on the grid. The step alarms when the
//! statistic exceeds its critical value at some lag; the reported lag is the
//! one with the largest statistic-to-critical-value ratio.
//!
//! | kind | `h(y)` | statistic | critical value |
//! |---|---|---|---|
//! | `uni_mean` | `y` | `C^2` | `lambda sigma^2 log(t/delta)`, or `sigma^2 (1 + lambda (L + sqrt L))` with `L = log(t/delta)` |
//! | `chad_mean` | `y` | `max_s A_s / xi_s` | `1` |
//! | `cov_opnorm` | `vec(y y^T)` | `||S1 - S2||_op / sigma2` | `lambda max(r, sqrt r)` |
//! | `poisson_rate` | `y` | likelihood ratio | `lambda` |
//! | `expfam_lr` | model statistic | likelihood ratio | `lambda` |
//!
//! Alongside the decision each step reports a `score`, the largest value over
//! lags of the statistic with the leading constant divided out. The detector
//! alarms exactly when the score exceeds `lambda`, which is what calibration
//! records.

mod config;
mod expfam;
pub mod stats;

use std::sync::Arc;

use serde::Serialize;

pub use crate::grid::GridKind;
pub use config::{DetectorConfig, DetectorKind, Mode, FULL_GRID_MAX_HORIZON};
pub use expfam::{ExpFamKind, ExpFamModel, GaussianModel, PoissonModel};
use stats::SparsityTerm;

use crate::error::{Error, Result};
use crate::kernels::{self, SymMatrix};
use crate::summaries::Store;

/// Outcome of one step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decision {
    pub t: usize,
    pub alarmed: bool,
    /// The lag that fired, present iff `alarmed`.
    pub trigger_g: Option<usize>,
    /// Lag with the largest statistic-to-threshold ratio (`None` before `t = 2`).
    pub best_g: Option<usize>,
    pub statistic: f64,
    pub threshold: f64,
    /// Maximising sparsity at `best_g` (sparse mean test only).
    pub s_star: Option<usize>,
    /// Largest constant-free score over lags; for the calibrated sparse mean
    /// test, the dense branch.
    pub score: f64,
    /// Sparse-branch score of the calibrated sparse mean test.
    pub sparse_score: Option<f64>,
    pub detector_id: String,
}

#[derive(Debug, Clone, Copy)]
struct Best {
    g: usize,
    stat: f64,
    thr: f64,
    ratio: f64,
    s_star: Option<usize>,
}

fn consider(best: &mut Option<Best>, g: usize, stat: f64, thr: f64, s_star: Option<usize>) {
    let ratio = stat / thr;
    let better = match best {
        None => true,
        Some(b) => ratio > b.ratio || (ratio == b.ratio && g < b.g),
    };
    if better {
        *best = Some(Best { g, stat, thr, ratio, s_star });
    }
}

#[derive(Debug, Clone)]
pub struct Detector {
    config: DetectorConfig,
    model: Option<Arc<dyn ExpFamModel>>,
    store: Store,
    input_dim: usize,
    alarmed_at: Option<usize>,
    h: Vec<f64>,
    scratch: Vec<f64>,
    fixed_terms: Vec<SparsityTerm>,
    /// `(j, ||S_j / j||_op)` for the indices currently on the grid.
    sigma_cache: Vec<(usize, f64)>,
}

impl Detector {
    pub fn new(config: DetectorConfig) -> Result<Self> {
        config.validate()?;
        let model: Option<Arc<dyn ExpFamModel>> = if config.kind == DetectorKind::ExpfamLr {
            let kind = config
                .expfam
                .ok_or_else(|| Error::config("expfam_lr requires a model (expfam)"))?;
            Some(Arc::from(kind.build(config.p)?))
        } else {
            None
        };
        Self::assemble(config, model)
    }

    /// An `expfam_lr` detector with a user-supplied model.
    pub fn with_model(config: DetectorConfig, model: Arc<dyn ExpFamModel>) -> Result<Self> {
        config.validate()?;
        if config.kind != DetectorKind::ExpfamLr {
            return Err(Error::config("custom models require kind expfam_lr"));
        }
        if model.input_dim() != config.p {
            return Err(Error::DimensionMismatch { expected: config.p, got: model.input_dim() });
        }
        Self::assemble(config, Some(model))
    }

    fn assemble(config: DetectorConfig, model: Option<Arc<dyn ExpFamModel>>) -> Result<Self> {
        let p = config.p;
        let (input_dim, h_dim) = match config.kind {
            DetectorKind::UniMean | DetectorKind::ChadMean | DetectorKind::PoissonRate => (p, p),
            DetectorKind::CovOpnorm => (p, p * p),
            DetectorKind::ExpfamLr => {
                let m = model.as_ref().expect("model present for expfam_lr");
                (m.input_dim(), m.stat_dim())
            }
        };
        let fixed_terms = if config.kind == DetectorKind::ChadMean && config.mode == Mode::Calibrated {
            stats::calibrated_terms(p, config.lambda, config.lambda_sparse())?
        } else {
            Vec::new()
        };
        Ok(Self {
            store: Store::new(config.grid_kind, h_dim, config.horizon_cap)?,
            config,
            model,
            input_dim,
            alarmed_at: None,
            h: vec![0.0; h_dim],
            scratch: vec![0.0; p],
            fixed_terms,
            sigma_cache: Vec::new(),
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn t(&self) -> usize {
        self.store.t()
    }

    pub fn alarmed_at(&self) -> Option<usize> {
        self.alarmed_at
    }

    /// Lags tested at the current time.
    pub fn lags(&self) -> Vec<usize> {
        self.store.lags()
    }

    /// Scalars held by the summary store and per-lag caches.
    pub fn stored_scalars(&self) -> usize {
        self.store.stored_scalars() + self.sigma_cache.len()
    }

    /// Clears all data; the configuration is kept.
    pub fn reset(&mut self) {
        self.store.clear();
        self.alarmed_at = None;
        self.sigma_cache.clear();
    }

    /// Processes one observation. After an alarm, further steps are rejected
    /// until [`Detector::reset`].
    pub fn step(&mut self, y: &[f64]) -> Result<Decision> {
        if let Some(at) = self.alarmed_at {
            return Err(Error::StepAfterAlarm { at });
        }
        let decision = self.observe(y)?;
        if decision.alarmed {
            self.alarmed_at = Some(decision.t);
        }
        Ok(decision)
    }

    /// Like [`Detector::step`] but never latches an alarm, so a whole stream
    /// can be scored.
    pub fn observe(&mut self, y: &[f64]) -> Result<Decision> {
        self.load(y)?;
        self.store.push(&self.h)?;
        let t = self.store.t();
        if t < 2 {
            return Ok(self.empty_decision(t));
        }
        self.evaluate(t)
    }

    fn load(&mut self, y: &[f64]) -> Result<()> {
        if y.len() != self.input_dim {
            return Err(Error::DimensionMismatch { expected: self.input_dim, got: y.len() });
        }
        if let Some(index) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        match self.config.kind {
            DetectorKind::UniMean | DetectorKind::ChadMean => self.h.copy_from_slice(y),
            DetectorKind::PoissonRate => {
                for (i, &v) in y.iter().enumerate() {
                    if v < 0.0 || v.fract() != 0.0 {
                        return Err(Error::domain(format!(
                            "coordinate {i}: {v} is not a nonnegative integer count"
                        )));
                    }
                }
                self.h.copy_from_slice(y);
            }
            DetectorKind::CovOpnorm => {
                let p = y.len();
                for i in 0..p {
                    for k in 0..p {
                        self.h[i * p + k] = y[i] * y[k];
                    }
                }
            }
            DetectorKind::ExpfamLr => {
                let model = self.model.as_ref().expect("model present");
                model.sufficient(y, &mut self.h)?;
            }
        }
        Ok(())
    }

    fn empty_decision(&self, t: usize) -> Decision {
        Decision {
            t,
            alarmed: false,
            trigger_g: None,
            best_g: None,
            statistic: 0.0,
            threshold: f64::INFINITY,
            s_star: None,
            score: f64::NEG_INFINITY,
            sparse_score: None,
            detector_id: self.config.id.clone(),
        }
    }

    fn evaluate(&mut self, t: usize) -> Result<Decision> {
        let lags = self.store.lags();
        let mut best: Option<Best> = None;
        let mut score = f64::NEG_INFINITY;
        let mut sparse_score = None;
        let cfg = &self.config;
        let lambda = cfg.lambda;

        match cfg.kind {
            DetectorKind::UniMean => {
                let s2 = cfg.sigma * cfg.sigma;
                let lt = (t as f64 / cfg.delta).ln();
                let (thr, shape) = match cfg.mode {
                    Mode::Theory => (lambda * s2 * lt, lt),
                    Mode::Calibrated => {
                        let h = lt + lt.sqrt();
                        (s2 * (1.0 + lambda * h), h)
                    }
                };
                let total = self.store.total()[0];
                for &g in &lags {
                    let c = stats::uni_cusum(self.store.prefix(g)?[0], total, t, g, cfg.known_pre_mean)?;
                    let stat = c * c;
                    let sc = match cfg.mode {
                        Mode::Theory => stat / (s2 * shape),
                        Mode::Calibrated => (stat / s2 - 1.0) / shape,
                    };
                    score = score.max(sc);
                    consider(&mut best, g, stat, thr, None);
                }
            }
            DetectorKind::ChadMean => {
                let theory;
                let terms: &[SparsityTerm] = match cfg.mode {
                    Mode::Theory => {
                        theory = stats::theory_terms(cfg.p, t as f64, lambda)?;
                        &theory
                    }
                    Mode::Calibrated => &self.fixed_terms,
                };
                let mut sparse = f64::NEG_INFINITY;
                for &g in &lags {
                    let prefix = self.store.prefix(g)?;
                    stats::mean_cusum(prefix, self.store.total(), t, g, cfg.known_pre_mean, &mut self.scratch)?;
                    let mut top = f64::NEG_INFINITY;
                    let mut top_s = 0;
                    for term in terms {
                        let a = stats::sparsity_sum(&self.scratch, cfg.sigma, term.a, term.nu);
                        let v = a / term.critical();
                        if v > top {
                            top = v;
                            top_s = term.s;
                        }
                        let sc = a / term.shape;
                        if term.sparse {
                            sparse = sparse.max(sc);
                        } else {
                            score = score.max(sc);
                        }
                    }
                    consider(&mut best, g, top, 1.0, Some(top_s));
                }
                if terms.iter().any(|t| t.sparse) {
                    sparse_score = Some(sparse);
                }
            }
            DetectorKind::CovOpnorm => {
                let p = cfg.p;
                let total = self.store.total();
                let mut cands = Vec::with_capacity(lags.len());
                for &g in &lags {
                    let j = t - g;
                    let prefix = self.store.prefix(g)?;
                    let sigma2 = match cfg.sigma_cov_fixed {
                        Some(s) => s,
                        None => cached_sigma2(&mut self.sigma_cache, j, p, prefix)?,
                    };
                    let diff = difference(prefix, total, p, j, g);
                    let bound = diff.frobenius().min(row_sum_norm(&diff));
                    let shape = kernels::xi_cov(g, t, p, 1.0)?;
                    cands.push((g, sigma2, shape, bound / (sigma2 * lambda * shape)));
                }
                cands.sort_by(|a, b| b.3.total_cmp(&a.3).then(a.0.cmp(&b.0)));
                for &(g, sigma2, shape, bound) in &cands {
                    if let Some(b) = best {
                        if bound < b.ratio {
                            break;
                        }
                    }
                    let diff = difference(self.store.prefix(g)?, total, p, t - g, g);
                    let stat = kernels::sym_opnorm(&diff)? / sigma2;
                    score = score.max(stat / shape);
                    consider(&mut best, g, stat, lambda * shape, None);
                }
                if cfg.sigma_cov_fixed.is_none() {
                    self.sigma_cache.retain(|(j, _)| lags.iter().any(|&g| t - g == *j));
                }
            }
            DetectorKind::PoissonRate => {
                let total = self.store.total()[0];
                for &g in &lags {
                    let stat = stats::poisson_stat(self.store.prefix(g)?[0], total, t, g)?;
                    score = score.max(stat);
                    consider(&mut best, g, stat, lambda, None);
                }
            }
            DetectorKind::ExpfamLr => {
                let model = self.model.as_ref().expect("model present");
                for &g in &lags {
                    let stat = stats::expfam_lr_stat(
                        model.as_ref(),
                        self.store.prefix(g)?,
                        self.store.total(),
                        t,
                        g,
                    )?;
                    score = score.max(stat);
                    consider(&mut best, g, stat, lambda, None);
                }
            }
        }

        let b = best.expect("grid is nonempty for t >= 2");
        let alarmed = b.stat > b.thr;
        Ok(Decision {
            t,
            alarmed,
            trigger_g: alarmed.then_some(b.g),
            best_g: Some(b.g),
            statistic: b.stat,
            threshold: b.thr,
            s_star: b.s_star,
            score,
            sparse_score,
            detector_id: self.config.id.clone(),
        })
    }
}

fn cached_sigma2(cache: &mut Vec<(usize, f64)>, j: usize, p: usize, prefix: &[f64]) -> Result<f64> {
    match cache.binary_search_by_key(&j, |(k, _)| *k) {
        Ok(pos) => Ok(cache[pos].1),
        Err(pos) => {
            let first = SymMatrix::from_upper(p, prefix, 1.0 / j as f64)?;
            let value = kernels::sym_opnorm(&first)?;
            if value == 0.0 {
                return Err(Error::Degenerate(format!(
                    "second moment of the first {j} observations is zero"
                )));
            }
            cache.insert(pos, (j, value));
            Ok(value)
        }
    }
}

/// `S_j / j - (S_t - S_j) / g` as a symmetric matrix.
fn difference(prefix: &[f64], total: &[f64], p: usize, j: usize, g: usize) -> SymMatrix {
    let (a, b) = (1.0 / j as f64, 1.0 / g as f64);
    SymMatrix::from_fn(p, |i, k| {
        let pre = prefix[i * p + k];
        pre * a - (total[i * p + k] - pre) * b
    })
}

fn row_sum_norm(m: &SymMatrix) -> f64 {
    let p = m.dim();
    (0..p).map(|i| (0..p).map(|k| m.get(i, k).abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Feeds up to `horizon` observations and returns the first alarm time.
pub fn run_to_alarm<I, T>(detector: &mut Detector, stream: I, horizon: usize) -> Result<Option<usize>>
where
    I: IntoIterator<Item = T>,
    T: AsRef<[f64]>,
{
    if horizon < 2 {
        return Ok(None);
    }
    for y in stream.into_iter().take(horizon) {
        let d = detector.step(y.as_ref())?;
        if d.alarmed {
            return Ok(Some(d.t));
        }
    }
    Ok(None)
}
