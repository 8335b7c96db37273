//! Exponential-family likelihood-ratio models.
//!
//! For a model with sufficient statistic `h`, log-partition `A` and a segment
//! of `n` observations with `Lambda = sum h(Y_i)`, the profile log-likelihood
//! is `M(Lambda, n) = max_theta theta . Lambda - n A(theta)`. The changepoint
//! statistic at `(t, g)` is `M(S_{t-g}, t-g) + M(S_t - S_{t-g}, g) - M(S_t, t)`.

use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub trait ExpFamModel: Debug + Send + Sync {
    /// Length of one observation.
    fn input_dim(&self) -> usize;

    /// Length of the sufficient statistic.
    fn stat_dim(&self) -> usize;

    /// Writes `h(y)` into `out`.
    fn sufficient(&self, y: &[f64], out: &mut [f64]) -> Result<()>;

    fn log_partition(&self, theta: &[f64]) -> f64;

    /// Natural parameter maximising `theta . m - A(theta)` for mean
    /// sufficient statistic `m`.
    fn mle(&self, mean: &[f64]) -> Result<Vec<f64>>;

    /// `M(Lambda, n)`. The default evaluates the objective at [`Self::mle`];
    /// override it when the closed form handles boundary cases.
    fn max_value(&self, lambda: &[f64], n: f64) -> Result<f64> {
        let mean: Vec<f64> = lambda.iter().map(|x| x / n).collect();
        let theta = self.mle(&mean)?;
        let value = theta.iter().zip(lambda).map(|(a, b)| a * b).sum::<f64>()
            - n * self.log_partition(&theta);
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::Numeric { message: "profile likelihood is not finite".into(), estimate: value })
        }
    }

    /// `M(before, n_before) + M(after, n_after) - M(before + after, n_before + n_after)`.
    /// Closed-form models should override this to cancel per coordinate.
    fn split_value(&self, before: &[f64], n_before: f64, after: &[f64], n_after: f64) -> Result<f64> {
        let all: Vec<f64> = before.iter().zip(after).map(|(a, b)| a + b).collect();
        Ok(self.max_value(before, n_before)? + self.max_value(after, n_after)? - self.max_value(&all, n_before + n_after)?)
    }
}

/// Built-in models selectable from configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum ExpFamKind {
    /// Independent Poisson counts in each coordinate.
    Poisson,
    /// Independent Gaussians with known standard deviation.
    Gaussian { sigma: f64 },
}

impl ExpFamKind {
    pub fn build(self, p: usize) -> Result<Box<dyn ExpFamModel>> {
        match self {
            ExpFamKind::Poisson => Ok(Box::new(PoissonModel { p })),
            ExpFamKind::Gaussian { sigma } => {
                if !(sigma > 0.0) {
                    return Err(Error::config("gaussian sigma must be positive"));
                }
                Ok(Box::new(GaussianModel { p, sigma }))
            }
        }
    }
}

/// `x log(x / n)` with `0 log 0 = 0`.
pub(crate) fn xlogx_over(x: f64, n: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (x / n).ln()
    }
}

/// `x ln(x num / den)`, zero at `x = 0`.
pub(crate) fn xlog_ratio(x: f64, num: f64, den: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (x * num / den).ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonModel {
    pub p: usize,
}

impl ExpFamModel for PoissonModel {
    fn input_dim(&self) -> usize {
        self.p
    }

    fn stat_dim(&self) -> usize {
        self.p
    }

    fn sufficient(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        for (i, (&v, o)) in y.iter().zip(out.iter_mut()).enumerate() {
            if v < 0.0 || v.fract() != 0.0 {
                return Err(Error::domain(format!("coordinate {i}: {v} is not a count")));
            }
            *o = v;
        }
        Ok(())
    }

    fn log_partition(&self, theta: &[f64]) -> f64 {
        theta.iter().map(|t| t.exp()).sum()
    }

    fn mle(&self, mean: &[f64]) -> Result<Vec<f64>> {
        Ok(mean.iter().map(|m| m.ln()).collect())
    }

    fn max_value(&self, lambda: &[f64], n: f64) -> Result<f64> {
        Ok(lambda.iter().map(|&l| xlogx_over(l, n) - l).sum())
    }

    fn split_value(&self, before: &[f64], n_before: f64, after: &[f64], n_after: f64) -> Result<f64> {
        let n = n_before + n_after;
        Ok(before
            .iter()
            .zip(after)
            .map(|(&a, &b)| {
                let all = a + b;
                xlog_ratio(a, n, n_before * all) + xlog_ratio(b, n, n_after * all)
            })
            .sum())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianModel {
    pub p: usize,
    pub sigma: f64,
}

impl ExpFamModel for GaussianModel {
    fn input_dim(&self) -> usize {
        self.p
    }

    fn stat_dim(&self) -> usize {
        self.p
    }

    fn sufficient(&self, y: &[f64], out: &mut [f64]) -> Result<()> {
        for (o, v) in out.iter_mut().zip(y) {
            *o = v / self.sigma;
        }
        Ok(())
    }

    fn log_partition(&self, theta: &[f64]) -> f64 {
        0.5 * theta.iter().map(|t| t * t).sum::<f64>()
    }

    fn mle(&self, mean: &[f64]) -> Result<Vec<f64>> {
        Ok(mean.to_vec())
    }

    fn split_value(&self, before: &[f64], n_before: f64, after: &[f64], n_after: f64) -> Result<f64> {
        let n = n_before + n_after;
        Ok(before
            .iter()
            .zip(after)
            .map(|(&a, &b)| {
                let gap = a / n_before - b / n_after;
                n_before * n_after / (2.0 * n) * gap * gap
            })
            .sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_closed_form_matches_generic() {
        let m = PoissonModel { p: 2 };
        let lambda = [3.0, 7.0];
        let closed = m.max_value(&lambda, 4.0).unwrap();
        let theta = m.mle(&[0.75, 1.75]).unwrap();
        let generic = theta[0] * 3.0 + theta[1] * 7.0 - 4.0 * m.log_partition(&theta);
        assert!((closed - generic).abs() < 1e-12);
        assert_eq!(m.max_value(&[0.0, 0.0], 3.0).unwrap(), 0.0);
    }

    #[test]
    fn poisson_rejects_non_counts() {
        let m = PoissonModel { p: 1 };
        let mut out = [0.0];
        assert!(m.sufficient(&[1.5], &mut out).is_err());
        assert!(m.sufficient(&[-1.0], &mut out).is_err());
        assert!(m.sufficient(&[2.0], &mut out).is_ok());
    }

    #[test]
    fn split_matches_profile_difference() {
        let models: [&dyn ExpFamModel; 2] = [&PoissonModel { p: 2 }, &GaussianModel { p: 2, sigma: 1.0 }];
        for m in models {
            let generic = m.max_value(&[3.0, 1.0], 4.0).unwrap() + m.max_value(&[9.0, 0.0], 5.0).unwrap()
                - m.max_value(&[12.0, 1.0], 9.0).unwrap();
            let split = m.split_value(&[3.0, 1.0], 4.0, &[9.0, 0.0], 5.0).unwrap();
            assert!((split - generic).abs() < 1e-12);
        }
        let m = PoissonModel { p: 1 };
        assert_eq!(m.split_value(&[2.0], 4.0, &[3.0], 6.0).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_profile() {
        let m = GaussianModel { p: 1, sigma: 1.0 };
        assert!((m.max_value(&[6.0], 3.0).unwrap() - 6.0).abs() < 1e-12);
    }
}
