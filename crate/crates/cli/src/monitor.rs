//! Online monitoring of a delimited stream.

use std::io::{Read, Write};

use gridcpd::detectors::{Detector, DetectorConfig, DetectorKind};
use gridcpd::kernels::{sym_opnorm, SymMatrix};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::input::{parse_delimiter, parse_rows, parse_steps, Pipeline};
use crate::settings::Settings;

/// One alarm, written as a JSON line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlarmRecord {
    /// Detector time since the last reset.
    pub t: usize,
    /// Input row that triggered the alarm.
    pub row: usize,
    pub g: usize,
    pub stat: f64,
    pub threshold: f64,
    pub detector: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

/// Largest eigenvalue of the centred sample covariance of `rows`.
pub fn noise_level(rows: &[Vec<f64>]) -> CliResult<f64> {
    let n = rows.len();
    if n < 2 {
        return Err(CliError::input("training prefix needs at least 2 rows"));
    }
    let p = rows[0].len();
    let mean: Vec<f64> = (0..p).map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / n as f64).collect();
    let cov = SymMatrix::from_fn(p, |i, k| {
        rows.iter().map(|r| (r[i] - mean[i]) * (r[k] - mean[k])).sum::<f64>() / (n - 1) as f64
    });
    let level = sym_opnorm(&cov)?;
    if level > 0.0 {
        Ok(level)
    } else {
        Err(CliError::input("training prefix has zero variance"))
    }
}

fn with_row(e: gridcpd::Error, row: usize) -> CliError {
    match CliError::from(e) {
        CliError::Input(m) => CliError::Input(format!("row {row}: {m}")),
        CliError::Internal(m) => CliError::Internal(format!("row {row}: {m}")),
    }
}

/// Applies the training-prefix noise estimate to settings the user left unset.
fn calibrate_noise(cfg: &mut DetectorConfig, settings: &Settings, level: f64) {
    match cfg.kind {
        DetectorKind::CovOpnorm if settings.raw("sigma_cov_fixed").is_none() => cfg.sigma_cov_fixed = Some(level),
        DetectorKind::UniMean | DetectorKind::ChadMean if settings.raw("sigma").is_none() => {
            cfg.sigma = level.sqrt()
        }
        _ => {}
    }
}

/// Streams rows from `input` into the detector and writes alarm lines to
/// `out`. Returns the number of alarms.
pub fn monitor<R: Read, W: Write + ?Sized>(settings: &Settings, input: R, out: &mut W) -> CliResult<usize> {
    let delimiter = parse_delimiter(settings.raw("delimiter").unwrap_or(","))?;
    let steps = parse_steps(settings.raw("preprocess").unwrap_or(""))?;
    let training: usize = settings.get("training_prefix")?.unwrap_or(0);
    let auto_reset = settings.bool("auto_reset")?;
    settings.detector(Some(1))?;
    let rows = parse_rows(input, delimiter, settings.bool("header")?, settings.bool("id_col")?);

    let mut pipeline = Pipeline::new(&steps);
    let mut train_rows: Vec<Vec<f64>> = Vec::new();
    let mut detector: Option<Detector> = None;
    let mut alarms = 0;

    for row in rows {
        let row = row?;
        let Some(values) = pipeline.apply(row.values)? else { continue };
        if detector.is_none() {
            if train_rows.len() < training {
                train_rows.push(values);
                continue;
            }
            let mut cfg = settings.detector(Some(values.len()))?;
            if training > 0 {
                let level = noise_level(&train_rows)?;
                calibrate_noise(&mut cfg, settings, level);
            }
            detector = Some(Detector::new(cfg)?);
        }
        let det = detector.as_mut().expect("detector built");
        let d = det.step(&values).map_err(|e| with_row(e, row.number))?;
        if d.alarmed {
            alarms += 1;
            let record = AlarmRecord {
                t: d.t,
                row: row.number,
                g: d.trigger_g.expect("alarm carries its lag"),
                stat: d.statistic,
                threshold: d.threshold,
                detector: d.detector_id,
                id: row.id,
            };
            writeln!(out, "{}", serde_json::to_string(&record)?)?;
            if !auto_reset {
                break;
            }
            det.reset();
        }
    }
    if detector.is_none() && training > 0 {
        return Err(CliError::input(format!(
            "training_prefix = {training} is not shorter than the stream"
        )));
    }
    out.flush()?;
    Ok(alarms)
}
