//! Flat `key = value` settings. Values from flags replace values from files.

use std::collections::BTreeMap;
use std::str::FromStr;

use gridcpd::detectors::{DetectorConfig, DetectorKind, ExpFamKind, GridKind, Mode};

use crate::error::{CliError, CliResult};

const KNOWN_KEYS: &[&str] = &[
    "kind",
    "p",
    "delta",
    "lambda",
    "lambda_sparse",
    "sigma",
    "mode",
    "known_pre_mean",
    "grid",
    "horizon_cap",
    "sigma_cov_fixed",
    "expfam",
    "expfam_sigma",
    "id",
    "input",
    "output",
    "delimiter",
    "header",
    "id_col",
    "preprocess",
    "training_prefix",
    "auto_reset",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut s = Settings::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::input(format!("config line {}: expected key = value", n + 1)))?;
            let key = k.trim().replace('-', "_");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::input(format!("config line {}: unknown key `{key}`", n + 1)));
            }
            s.values.insert(key, v.trim().to_string());
        }
        Ok(s)
    }

    pub fn load(path: Option<&str>) -> CliResult<Self> {
        match path {
            None => Ok(Settings::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::input(format!("cannot read config `{p}`: {e}")))?;
                Settings::parse(&text)
            }
        }
    }

    pub fn set(&mut self, key: &str, value: Option<impl ToString>) {
        if let Some(v) = value {
            self.values.insert(key.to_string(), v.to_string());
        }
    }

    pub fn flag(&mut self, key: &str, on: bool) {
        if on {
            self.values.insert(key.to_string(), "true".to_string());
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|e| CliError::input(format!("invalid `{key}` = `{v}`: {e}"))))
            .transpose()
    }

    pub fn bool(&self, key: &str) -> CliResult<bool> {
        match self.raw(key) {
            None => Ok(false),
            Some("true" | "1" | "yes") => Ok(true),
            Some("false" | "0" | "no") => Ok(false),
            Some(v) => Err(CliError::input(format!("invalid `{key}` = `{v}`: expected true or false"))),
        }
    }

    /// Detector configuration; `p` falls back to `default_p` when unset, and
    /// to 1 for the scalar detectors.
    pub fn detector(&self, default_p: Option<usize>) -> CliResult<DetectorConfig> {
        let kind: DetectorKind = self.get("kind")?.ok_or_else(|| CliError::input("detector `kind` is required"))?;
        let p = self
            .get::<usize>("p")?
            .or(default_p)
            .or(matches!(kind, DetectorKind::UniMean | DetectorKind::PoissonRate).then_some(1))
            .ok_or_else(|| CliError::input("dimension `p` is required"))?;
        let mut cfg = DetectorConfig::new(kind, p);
        if let Some(v) = self.get("delta")? {
            cfg.delta = v;
        }
        if let Some(v) = self.get("lambda")? {
            cfg.lambda = v;
        }
        cfg.lambda_sparse = self.get("lambda_sparse")?;
        if let Some(v) = self.get("sigma")? {
            cfg.sigma = v;
        }
        if let Some(v) = self.get::<Mode>("mode")? {
            cfg.mode = v;
        }
        cfg.known_pre_mean = self.bool("known_pre_mean")?;
        if let Some(v) = self.get::<GridKind>("grid")? {
            cfg.grid_kind = v;
        }
        cfg.horizon_cap = self.get("horizon_cap")?;
        cfg.sigma_cov_fixed = self.get("sigma_cov_fixed")?;
        cfg.expfam = match self.raw("expfam") {
            None => None,
            Some("poisson") => Some(ExpFamKind::Poisson),
            Some("gaussian") => Some(ExpFamKind::Gaussian { sigma: self.get("expfam_sigma")?.unwrap_or(1.0) }),
            Some(other) => return Err(CliError::input(format!("unknown exponential family `{other}`"))),
        };
        if let Some(id) = self.raw("id") {
            cfg.id = id.to_string();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
