use serde::{Deserialize, Serialize};

use super::expfam::ExpFamKind;
use crate::error::{Error, Result};
use crate::grid::GridKind;

/// Largest horizon allowed for the full-scan reference grid.
pub const FULL_GRID_MAX_HORIZON: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    UniMean,
    ChadMean,
    CovOpnorm,
    PoissonRate,
    ExpfamLr,
}

impl DetectorKind {
    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::UniMean => "uni_mean",
            DetectorKind::ChadMean => "chad_mean",
            DetectorKind::CovOpnorm => "cov_opnorm",
            DetectorKind::PoissonRate => "poisson_rate",
            DetectorKind::ExpfamLr => "expfam_lr",
        }
    }
}

impl std::str::FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uni_mean" => Ok(DetectorKind::UniMean),
            "chad_mean" => Ok(DetectorKind::ChadMean),
            "cov_opnorm" => Ok(DetectorKind::CovOpnorm),
            "poisson_rate" => Ok(DetectorKind::PoissonRate),
            "expfam_lr" => Ok(DetectorKind::ExpfamLr),
            other => Err(Error::config(format!("unknown detector kind `{other}`"))),
        }
    }
}

/// How the critical values depend on time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Threshold shapes with guaranteed false-alarm control for large `lambda`.
    #[default]
    Theory,
    /// Finite-horizon shapes whose constants are set by Monte Carlo.
    Calibrated,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theory" => Ok(Mode::Theory),
            "calibrated" => Ok(Mode::Calibrated),
            other => Err(Error::config(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub kind: DetectorKind,
    /// Observation dimension.
    pub p: usize,
    /// Target false-alarm probability, used by the mean thresholds.
    pub delta: f64,
    /// Leading constant; the dense-branch constant for the calibrated
    /// sparse mean test.
    pub lambda: f64,
    /// Sparse-branch constant for the calibrated sparse mean test. Defaults
    /// to `lambda`.
    pub lambda_sparse: Option<f64>,
    /// Known noise standard deviation (mean detectors).
    pub sigma: f64,
    pub mode: Mode,
    /// Test against a known zero pre-change mean.
    pub known_pre_mean: bool,
    pub grid_kind: GridKind,
    /// Maximum stream length for grids that keep every prefix sum.
    pub horizon_cap: Option<usize>,
    /// Fixed squared noise level replacing the per-lag estimate in the
    /// covariance detector.
    pub sigma_cov_fixed: Option<f64>,
    /// Built-in model for `expfam_lr`.
    pub expfam: Option<ExpFamKind>,
    pub id: String,
}

impl DetectorConfig {
    pub fn new(kind: DetectorKind, p: usize) -> Self {
        Self {
            kind,
            p,
            delta: 0.05,
            lambda: 1.0,
            lambda_sparse: None,
            sigma: 1.0,
            mode: Mode::Theory,
            known_pre_mean: false,
            grid_kind: GridKind::Dynamic,
            horizon_cap: None,
            sigma_cov_fixed: None,
            expfam: None,
            id: kind.name().to_string(),
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_grid(mut self, grid: GridKind, horizon_cap: Option<usize>) -> Self {
        self.grid_kind = grid;
        self.horizon_cap = horizon_cap;
        self
    }

    pub fn lambda_sparse(&self) -> f64 {
        self.lambda_sparse.unwrap_or(self.lambda)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::config("p must be positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::config(format!("lambda must be positive, got {}", self.lambda)));
        }
        if let Some(l) = self.lambda_sparse {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::config(format!("lambda_sparse must be positive, got {l}")));
            }
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::config(format!("sigma must be positive, got {}", self.sigma)));
        }
        if let Some(s) = self.sigma_cov_fixed {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::config(format!("sigma_cov_fixed must be positive, got {s}")));
            }
        }
        match self.kind {
            DetectorKind::UniMean | DetectorKind::PoissonRate if self.p != 1 => {
                return Err(Error::config(format!("{} requires p = 1", self.kind.name())));
            }
            _ => {}
        }
        match (self.grid_kind, self.horizon_cap) {
            (GridKind::Dynamic, _) => {}
            (kind, None) => {
                return Err(Error::config(format!("grid `{}` requires horizon_cap", kind.name())));
            }
            (GridKind::Full, Some(cap)) if cap > FULL_GRID_MAX_HORIZON => {
                return Err(Error::config(format!(
                    "full grid horizon_cap {cap} exceeds {FULL_GRID_MAX_HORIZON}"
                )));
            }
            _ => {}
        }
        Ok(())
    }
}
