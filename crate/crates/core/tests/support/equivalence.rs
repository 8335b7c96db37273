//! Streaming decisions against the batch reference, one stream at a time.
#![allow(dead_code)]

use gridcpd::detectors::{Detector, DetectorConfig, DetectorKind, ExpFamKind, Mode};
use gridcpd::simharness::{gen_stream, StreamModel, StreamSpec};

use super::oracle::batch_best;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-12)
}

/// Runs `cfg` over `ys` and compares every step with the batch reference.
pub fn check_stream(cfg: &DetectorConfig, ys: &[Vec<f64>]) -> Result<(), String> {
    let exact = cfg.kind == DetectorKind::UniMean;
    let mut det = Detector::new(cfg.clone()).map_err(|e| e.to_string())?;
    for t in 1..=ys.len() {
        let d = det.observe(&ys[t - 1]).map_err(|e| format!("t={t}: {e}"))?;
        if t < 2 {
            continue;
        }
        let lags = det.lags();
        let (g, stat, thr) = batch_best(cfg, &ys[..t], &lags);
        let ctx = format!("{} t={t}", cfg.id);
        if exact {
            if d.best_g != Some(g) || d.statistic != stat || d.threshold != thr {
                return Err(format!(
                    "{ctx}: streaming ({:?}, {}, {}) vs batch ({g}, {stat}, {thr})",
                    d.best_g, d.statistic, d.threshold
                ));
            }
        } else {
            let ratio = stat / thr;
            let got = d.statistic / d.threshold;
            if !rel_close(got, ratio, 1e-8) {
                return Err(format!("{ctx}: ratio {got} vs batch {ratio}"));
            }
            if d.best_g == Some(g) && (!rel_close(d.statistic, stat, 1e-8) || !rel_close(d.threshold, thr, 1e-8)) {
                return Err(format!(
                    "{ctx}: g={g} statistic {} vs {stat}, threshold {} vs {thr}",
                    d.statistic, d.threshold
                ));
            }
        }
        let batch_alarm = stat > thr;
        let margin = (stat / thr - 1.0).abs();
        if d.alarmed != batch_alarm && (exact || margin > 1e-8) {
            return Err(format!("{ctx}: alarm {} vs batch {batch_alarm}", d.alarmed));
        }
    }
    Ok(())
}

/// One configuration and data generator per detector kind.
pub fn kind_cases() -> Vec<(DetectorConfig, StreamSpec)> {
    let n = 300;
    let mut uni = DetectorConfig::new(DetectorKind::UniMean, 1).with_mode(Mode::Calibrated).with_lambda(1.2);
    uni.id = "uni".into();

    let mut chad = DetectorConfig::new(DetectorKind::ChadMean, 5).with_mode(Mode::Calibrated).with_lambda(2.0);
    chad.lambda_sparse = Some(3.0);
    chad.id = "chad".into();

    let mut cov = DetectorConfig::new(DetectorKind::CovOpnorm, 3).with_lambda(1.0);
    cov.id = "cov".into();

    let mut pois = DetectorConfig::new(DetectorKind::PoissonRate, 1).with_lambda(8.0);
    pois.id = "poisson".into();

    let mut ef = DetectorConfig::new(DetectorKind::ExpfamLr, 2).with_lambda(10.0);
    ef.expfam = Some(ExpFamKind::Poisson);
    ef.id = "expfam".into();

    vec![
        (uni, StreamSpec::gauss_mean(1, n, Some(150), 1.0, 1, 1.0)),
        (chad, StreamSpec::gauss_mean(5, n, Some(150), 1.5, 2, 1.0)),
        (cov, StreamSpec::gauss_cov_scaled(3, n, Some(150), 2.5)),
        (pois, StreamSpec::poisson(n, Some(150), 1.0, 2.0)),
        (
            ef,
            StreamSpec { model: StreamModel::Poisson { rate1: 2.0, rate2: 3.0 }, p: 2, tau: Some(150), n },
        ),
    ]
}

/// Checks `streams` seeded streams for every detector kind.
pub fn check_all_kinds(streams: u64) -> Result<(), String> {
    for (cfg, spec) in kind_cases() {
        for seed in 0..streams {
            let ys = gen_stream(&spec, 1000 + seed).map_err(|e| e.to_string())?;
            check_stream(&cfg, &ys)?;
        }
    }
    Ok(())
}
