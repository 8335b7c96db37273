//! Synthetic streams, detection-delay estimation and cost measurement.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`). A run is identified by a
//! master seed and a replication index: the generator is seeded with
//! `seed_from_u64(seed)` and then switched to stream number `replication`, so
//! replications are independent and the results do not depend on how runs
//! are scheduled across threads. Normal draws use `rand_distr`'s ziggurat
//! sampler and Poisson draws its `Poisson` distribution.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detectors::{run_to_alarm, Detector, DetectorConfig, DetectorKind, ExpFamKind};
use crate::error::{Error, Result};

/// Distribution of a stream before and after its changepoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StreamModel {
    /// `N(mu1, sigma^2 I)` changing to mean `mu1 + phi k^{-1/2} (1_k, 0)`.
    GaussMean {
        #[serde(default)]
        mu1: Option<Vec<f64>>,
        phi: f64,
        k: usize,
        sigma: f64,
    },
    /// `N(0, sigma1)` changing to `N(0, sigma2)`, where `sigma2` is given
    /// either directly or as `scale * sigma1`. Matrices are row-major `p x p`;
    /// `sigma1` defaults to the identity.
    GaussCov {
        #[serde(default)]
        sigma1: Option<Vec<f64>>,
        #[serde(default)]
        scale: Option<f64>,
        #[serde(default)]
        sigma2: Option<Vec<f64>>,
    },
    /// Independent Poisson counts in every coordinate.
    Poisson { rate1: f64, rate2: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub model: StreamModel,
    pub p: usize,
    /// Index of the last pre-change observation; `None` for no change.
    pub tau: Option<usize>,
    /// Stream length.
    pub n: usize,
}

impl StreamSpec {
    pub fn gauss_mean(p: usize, n: usize, tau: Option<usize>, phi: f64, k: usize, sigma: f64) -> Self {
        Self { model: StreamModel::GaussMean { mu1: None, phi, k, sigma }, p, tau, n }
    }

    pub fn gauss_cov_scaled(p: usize, n: usize, tau: Option<usize>, scale: f64) -> Self {
        let model = StreamModel::GaussCov { sigma1: None, scale: Some(scale), sigma2: None };
        Self { model, p, tau, n }
    }

    pub fn poisson(n: usize, tau: Option<usize>, rate1: f64, rate2: f64) -> Self {
        Self { model: StreamModel::Poisson { rate1, rate2 }, p: 1, tau, n }
    }

    /// Standard null stream for a detector kind.
    pub fn null_for(config: &DetectorConfig, n: usize) -> Self {
        match config.kind {
            DetectorKind::PoissonRate => Self::poisson(n, None, 1.0, 1.0),
            DetectorKind::ExpfamLr if config.expfam == Some(ExpFamKind::Poisson) => Self {
                model: StreamModel::Poisson { rate1: 1.0, rate2: 1.0 },
                p: config.p,
                tau: None,
                n,
            },
            DetectorKind::CovOpnorm => Self::gauss_cov_scaled(config.p, n, None, 1.0),
            _ => Self::gauss_mean(config.p, n, None, 0.0, 1, config.sigma),
        }
    }

    pub fn with_horizon(&self, n: usize) -> Self {
        Self { n, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::domain("p must be positive"));
        }
        if let Some(tau) = self.tau {
            if tau >= self.n {
                return Err(Error::domain(format!("tau={tau} must be below n={}", self.n)));
            }
        }
        Sampler::new(self).map(|_| ())
    }
}

#[derive(Debug, Clone)]
enum Regime {
    Gauss { mean: Vec<f64>, sd: f64 },
    Correlated { chol: Vec<f64> },
    Poisson { dist: Option<Poisson<f64>> },
}

impl Regime {
    fn sample(&self, p: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self {
            Regime::Gauss { mean, sd } => mean
                .iter()
                .map(|m| {
                    let z: f64 = rng.sample(StandardNormal);
                    m + sd * z
                })
                .collect(),
            Regime::Correlated { chol } => {
                let z: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
                (0..p).map(|i| (0..=i).map(|k| chol[i * p + k] * z[k]).sum()).collect()
            }
            Regime::Poisson { dist } => {
                (0..p).map(|_| dist.as_ref().map_or(0.0, |d| d.sample(rng))).collect()
            }
        }
    }
}

/// Lower Cholesky factor of a positive semidefinite matrix; zero pivots give
/// zero columns.
fn psd_cholesky(a: &[f64], p: usize) -> Result<Vec<f64>> {
    if a.len() != p * p {
        return Err(Error::DimensionMismatch { expected: p * p, got: a.len() });
    }
    let scale = (0..p).fold(0.0f64, |m, i| m.max(a[i * p + i].abs())).max(f64::MIN_POSITIVE);
    for i in 0..p {
        for k in 0..i {
            if (a[i * p + k] - a[k * p + i]).abs() > 1e-12 * scale {
                return Err(Error::domain("covariance matrix is not symmetric"));
            }
        }
    }
    let tol = 1e-12 * scale;
    let mut l = vec![0.0; p * p];
    for j in 0..p {
        let d = a[j * p + j] - (0..j).map(|k| l[j * p + k] * l[j * p + k]).sum::<f64>();
        if d < -tol {
            return Err(Error::domain("covariance matrix is not positive semidefinite"));
        }
        let pivot = if d > tol { d.sqrt() } else { 0.0 };
        l[j * p + j] = pivot;
        for i in j + 1..p {
            let v = a[i * p + j] - (0..j).map(|k| l[i * p + k] * l[j * p + k]).sum::<f64>();
            if pivot == 0.0 {
                if v.abs() > 1e-8 * scale {
                    return Err(Error::domain("covariance matrix is not positive semidefinite"));
                }
            } else {
                l[i * p + j] = v / pivot;
            }
        }
    }
    Ok(l)
}

fn poisson_regime(rate: f64) -> Result<Regime> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::domain(format!("Poisson rate must be finite and >= 0, got {rate}")));
    }
    let dist = if rate == 0.0 {
        None
    } else {
        Some(Poisson::new(rate).map_err(|e| Error::domain(e.to_string()))?)
    };
    Ok(Regime::Poisson { dist })
}

#[derive(Debug, Clone)]
struct Sampler {
    p: usize,
    tau: Option<usize>,
    pre: Regime,
    post: Regime,
}

impl Sampler {
    fn new(spec: &StreamSpec) -> Result<Self> {
        let p = spec.p;
        let (pre, post) = match &spec.model {
            StreamModel::GaussMean { mu1, phi, k, sigma } => {
                if *k == 0 || *k > p {
                    return Err(Error::domain(format!("sparsity k={k} outside [1, {p}]")));
                }
                if !(*phi >= 0.0) || !(*sigma >= 0.0) {
                    return Err(Error::domain("phi and sigma must be nonnegative"));
                }
                let mu1 = mu1.clone().unwrap_or_else(|| vec![0.0; p]);
                if mu1.len() != p {
                    return Err(Error::DimensionMismatch { expected: p, got: mu1.len() });
                }
                let step = phi / (*k as f64).sqrt();
                let mu2: Vec<f64> =
                    mu1.iter().enumerate().map(|(i, m)| if i < *k { m + step } else { *m }).collect();
                (Regime::Gauss { mean: mu1, sd: *sigma }, Regime::Gauss { mean: mu2, sd: *sigma })
            }
            StreamModel::GaussCov { sigma1, scale, sigma2 } => {
                let s1 = sigma1.clone().unwrap_or_else(|| {
                    (0..p * p).map(|i| if i / p == i % p { 1.0 } else { 0.0 }).collect()
                });
                let s2 = match (sigma2, scale) {
                    (Some(m), None) => m.clone(),
                    (None, Some(c)) => {
                        if !(*c >= 0.0) {
                            return Err(Error::domain("covariance scale must be nonnegative"));
                        }
                        s1.iter().map(|x| x * c).collect()
                    }
                    (None, None) => s1.clone(),
                    (Some(_), Some(_)) => {
                        return Err(Error::domain("give either sigma2 or scale, not both"));
                    }
                };
                (
                    Regime::Correlated { chol: psd_cholesky(&s1, p)? },
                    Regime::Correlated { chol: psd_cholesky(&s2, p)? },
                )
            }
            StreamModel::Poisson { rate1, rate2 } => (poisson_regime(*rate1)?, poisson_regime(*rate2)?),
        };
        Ok(Self { p, tau: spec.tau, pre, post })
    }
}

/// The generator for replication `replication` under master seed `seed`.
pub fn replication_rng(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

/// Lazy stream of observations.
#[derive(Debug, Clone)]
pub struct StreamIter {
    sampler: Sampler,
    rng: ChaCha8Rng,
    i: usize,
    n: usize,
}

impl Iterator for StreamIter {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        if self.i >= self.n {
            return None;
        }
        self.i += 1;
        let regime = match self.sampler.tau {
            Some(tau) if self.i > tau => &self.sampler.post,
            _ => &self.sampler.pre,
        };
        Some(regime.sample(self.sampler.p, &mut self.rng))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.n - self.i;
        (left, Some(left))
    }
}

pub fn stream_iter(spec: &StreamSpec, seed: u64, replication: u64) -> Result<StreamIter> {
    spec.validate()?;
    Ok(StreamIter { sampler: Sampler::new(spec)?, rng: replication_rng(seed, replication), i: 0, n: spec.n })
}

/// The full stream for `seed` (replication 0).
pub fn gen_stream(spec: &StreamSpec, seed: u64) -> Result<Vec<Vec<f64>>> {
    Ok(stream_iter(spec, seed, 0)?.collect())
}

/// Runs `f(0..n)` in parallel and returns the results in index order.
pub(crate) fn run_indexed<T, F>(n: usize, threads: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let work = || (0..n).into_par_iter().map(&f).collect::<Result<Vec<T>>>();
    match threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| Error::config(e.to_string()))?
            .install(work),
        None => work(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayReport {
    pub spec: StreamSpec,
    pub detector: String,
    pub runs: usize,
    pub seed: u64,
    /// Alarm time of each run, `None` when the horizon passed silently.
    pub alarm_times: Vec<Option<usize>>,
    /// Runs alarming at or before the changepoint (all alarms for a null stream).
    pub premature: usize,
    /// Runs alarming strictly after the changepoint.
    pub detected: usize,
    /// Runs without any alarm.
    pub undetected: usize,
    /// `premature / runs`.
    pub false_alarm_rate: f64,
    /// `detected / (runs - premature)`.
    pub detection_rate: Option<f64>,
    /// Mean of `min(alarm, n) - tau` over runs without a premature alarm.
    pub mean_delay: Option<f64>,
    pub delay_std_error: Option<f64>,
}

/// Monte Carlo estimate of the conditional detection delay.
pub fn estimate_delay(
    config: &DetectorConfig,
    spec: &StreamSpec,
    runs: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<DelayReport> {
    if runs < 50 {
        return Err(Error::config(format!("at least 50 runs required, got {runs}")));
    }
    spec.validate()?;
    Detector::new(config.clone())?;
    let n = spec.n;
    let alarm_times = run_indexed(runs, threads, |i| {
        let mut det = Detector::new(config.clone())?;
        run_to_alarm(&mut det, stream_iter(spec, seed, i as u64)?, n)
    })?;

    let cut = spec.tau.unwrap_or(n);
    let premature = alarm_times.iter().filter(|a| matches!(a, Some(t) if *t <= cut)).count();
    let undetected = alarm_times.iter().filter(|a| a.is_none()).count();
    let detected = runs - premature - undetected;
    let (mut detection_rate, mut mean_delay, mut delay_std_error) = (None, None, None);
    if let Some(tau) = spec.tau {
        let delays: Vec<f64> = alarm_times
            .iter()
            .filter(|a| !matches!(a, Some(t) if *t <= tau))
            .map(|a| (a.unwrap_or(n).min(n) - tau) as f64)
            .collect();
        if !delays.is_empty() {
            let m = delays.len() as f64;
            let mean = delays.iter().sum::<f64>() / m;
            detection_rate = Some(detected as f64 / m);
            mean_delay = Some(mean);
            if delays.len() > 1 {
                let var = delays.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (m - 1.0);
                delay_std_error = Some((var / m).sqrt());
            }
        }
    }
    Ok(DelayReport {
        spec: spec.clone(),
        detector: config.id.clone(),
        runs,
        seed,
        alarm_times,
        premature,
        detected,
        undetected,
        false_alarm_rate: premature as f64 / runs as f64,
        detection_rate,
        mean_delay,
        delay_std_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostPoint {
    pub t: usize,
    pub stored_scalars: usize,
    /// Median over repetitions of the mean update time over the trailing window.
    pub update_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostReport {
    pub detector: String,
    pub grid: String,
    pub window: usize,
    pub repetitions: usize,
    pub points: Vec<CostPoint>,
}

/// Trailing window length for update-time averages.
pub const COST_WINDOW: usize = 200;

/// Update time and storage of a detector fed a null stream, at each checkpoint.
pub fn benchmark_costs(
    config: &DetectorConfig,
    checkpoints: &[usize],
    repetitions: usize,
    seed: u64,
) -> Result<CostReport> {
    if checkpoints.is_empty() || checkpoints.windows(2).any(|w| w[0] >= w[1]) || checkpoints[0] < 2 {
        return Err(Error::config("checkpoints must be strictly increasing and at least 2"));
    }
    if repetitions == 0 {
        return Err(Error::config("repetitions must be positive"));
    }
    let last = *checkpoints.last().expect("nonempty");
    let spec = StreamSpec::null_for(config, last);
    let mut times = vec![Vec::with_capacity(repetitions); checkpoints.len()];
    let mut stored = vec![0; checkpoints.len()];
    for rep in 0..repetitions {
        let mut det = Detector::new(config.clone())?;
        let mut stream = stream_iter(&spec, seed, rep as u64)?;
        let mut next = 0;
        let mut window_ns = 0u128;
        for t in 1..=last {
            let y = stream.next().expect("stream has `last` observations");
            let start = Instant::now();
            det.observe(&y)?;
            let elapsed = start.elapsed().as_nanos();
            let cp = checkpoints[next];
            let window = COST_WINDOW.min(cp);
            if t + window > cp {
                window_ns += elapsed;
            }
            if t == cp {
                times[next].push(window_ns as f64 / window as f64);
                stored[next] = det.stored_scalars();
                window_ns = 0;
                next += 1;
            }
        }
    }
    let points = checkpoints
        .iter()
        .zip(times)
        .zip(stored)
        .map(|((&t, mut v), s)| {
            v.sort_by(f64::total_cmp);
            let mid = v.len() / 2;
            let median = if v.len() % 2 == 1 { v[mid] } else { 0.5 * (v[mid - 1] + v[mid]) };
            CostPoint { t, stored_scalars: s, update_ns: median }
        })
        .collect();
    Ok(CostReport {
        detector: config.id.clone(),
        grid: config.grid_kind.name().to_string(),
        window: COST_WINDOW,
        repetitions,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_streams() {
        let spec = StreamSpec::gauss_mean(3, 50, Some(20), 1.0, 2, 1.0);
        assert_eq!(gen_stream(&spec, 7).unwrap(), gen_stream(&spec, 7).unwrap());
        assert_ne!(gen_stream(&spec, 7).unwrap(), gen_stream(&spec, 8).unwrap());
    }

    #[test]
    fn noise_free_step() {
        let spec = StreamSpec::gauss_mean(2, 6, Some(3), 1.0, 1, 0.0);
        let s = gen_stream(&spec, 1).unwrap();
        let first: Vec<f64> = s.iter().map(|y| y[0]).collect();
        assert_eq!(first, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        assert!(s.iter().all(|y| y[1] == 0.0));
    }

    #[test]
    fn invalid_specs() {
        assert!(StreamSpec::gauss_mean(2, 10, Some(10), 1.0, 1, 1.0).validate().is_err());
        assert!(StreamSpec::gauss_mean(2, 10, None, 1.0, 3, 1.0).validate().is_err());
        let bad = StreamSpec {
            model: StreamModel::GaussCov { sigma1: Some(vec![1.0, 2.0, 2.0, 1.0]), scale: None, sigma2: None },
            p: 2,
            tau: None,
            n: 5,
        };
        assert!(matches!(bad.validate(), Err(Error::Domain(_))));
        let singular = StreamSpec {
            model: StreamModel::GaussCov { sigma1: Some(vec![1.0, 1.0, 1.0, 1.0]), scale: None, sigma2: None },
            p: 2,
            tau: None,
            n: 5,
        };
        assert!(singular.validate().is_ok());
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = [4.0, 2.0, 0.4, 2.0, 3.0, 0.5, 0.4, 0.5, 1.0];
        let l = psd_cholesky(&a, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| l[i * 3 + k] * l[j * 3 + k]).sum();
                assert!((v - a[i * 3 + j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn delay_needs_enough_runs() {
        let cfg = DetectorConfig::new(DetectorKind::UniMean, 1);
        let spec = StreamSpec::gauss_mean(1, 100, Some(50), 1.0, 1, 1.0);
        assert!(estimate_delay(&cfg, &spec, 10, 0, None).is_err());
    }

    #[test]
    fn deterministic_jump_has_single_delay() {
        let cfg = DetectorConfig::new(DetectorKind::UniMean, 1).with_lambda(1.0);
        let spec = StreamSpec::gauss_mean(1, 200, Some(100), 10.0, 1, 0.0);
        let r = estimate_delay(&cfg, &spec, 50, 3, Some(2)).unwrap();
        assert_eq!(r.detected, 50);
        let first = r.alarm_times[0];
        assert!(r.alarm_times.iter().all(|a| *a == first));
        assert_eq!(r.delay_std_error, Some(0.0));
    }

    #[test]
    fn parallel_matches_serial() {
        let cfg = DetectorConfig::new(DetectorKind::UniMean, 1).with_lambda(0.5);
        let spec = StreamSpec::gauss_mean(1, 300, Some(150), 1.0, 1, 1.0);
        let a = estimate_delay(&cfg, &spec, 60, 11, Some(1)).unwrap();
        let b = estimate_delay(&cfg, &spec, 60, 11, Some(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn benchmark_shape() {
        let cfg = DetectorConfig::new(DetectorKind::UniMean, 1).with_lambda(1e6);
        let r = benchmark_costs(&cfg, &[100, 1000], 2, 0).unwrap();
        assert_eq!(r.points.len(), 2);
        assert!(r.points[1].stored_scalars >= r.points[0].stored_scalars);
        assert!(benchmark_costs(&cfg, &[100, 50], 1, 0).is_err());
    }
}
