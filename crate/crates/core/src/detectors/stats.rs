//! Per-lag statistics computed from a prefix sum `S_{t-g}` and the total `S_t`.

use super::expfam::{xlog_ratio, ExpFamModel};
use crate::error::{Error, Result};
use crate::kernels::{self, SymMatrix};

/// Scalar CUSUM, or `suffix / sqrt(g)` against a known zero pre-change mean.
pub fn uni_cusum(prefix: f64, total: f64, t: usize, g: usize, known_pre_mean: bool) -> Result<f64> {
    if known_pre_mean {
        if g == 0 || g >= t {
            return Err(Error::domain(format!("lag g={g} outside [1, {}]", t.saturating_sub(1))));
        }
        return Ok((total - prefix) / (g as f64).sqrt());
    }
    let mut out = [0.0];
    kernels::cusum_into(&[prefix], &[total], t, g, &mut out)?;
    Ok(out[0])
}

/// CUSUM vector for the mean detectors.
pub fn mean_cusum(
    prefix: &[f64],
    total: &[f64],
    t: usize,
    g: usize,
    known_pre_mean: bool,
    out: &mut [f64],
) -> Result<()> {
    if known_pre_mean {
        if g == 0 || g >= t {
            return Err(Error::domain(format!("lag g={g} outside [1, {}]", t.saturating_sub(1))));
        }
        let scale = 1.0 / (g as f64).sqrt();
        for ((o, p), s) in out.iter_mut().zip(prefix).zip(total) {
            *o = (s - p) * scale;
        }
        return Ok(());
    }
    kernels::cusum_into(prefix, total, t, g, out)
}

/// Poisson rate likelihood ratio with `0 log 0 = 0`, clamped at zero.
pub fn poisson_stat(prefix: f64, total: f64, t: usize, g: usize) -> Result<f64> {
    if g == 0 || g >= t {
        return Err(Error::domain(format!("lag g={g} outside [1, {}]", t.saturating_sub(1))));
    }
    if prefix < 0.0 || total < prefix {
        return Err(Error::domain("Poisson sums must be nonnegative"));
    }
    let suffix = total - prefix;
    let tf = t as f64;
    let lr = xlog_ratio(prefix, tf, (t - g) as f64 * total) + xlog_ratio(suffix, tf, g as f64 * total);
    Ok(lr.max(0.0))
}

/// Generic exponential-family likelihood ratio.
pub fn expfam_lr_stat(
    model: &dyn ExpFamModel,
    prefix: &[f64],
    total: &[f64],
    t: usize,
    g: usize,
) -> Result<f64> {
    if g == 0 || g >= t {
        return Err(Error::domain(format!("lag g={g} outside [1, {}]", t.saturating_sub(1))));
    }
    let suffix: Vec<f64> = total.iter().zip(prefix).map(|(s, p)| s - p).collect();
    let lr = model.split_value(prefix, (t - g) as f64, &suffix, g as f64)?;
    Ok(lr.max(0.0))
}

/// Thresholded, centred sum `sum_j (c_j^2 / sigma^2 - nu) 1{|c_j| / sigma > a}`.
pub fn sparsity_sum(c: &[f64], sigma: f64, a: f64, nu: f64) -> f64 {
    let mut acc = 0.0;
    for &x in c {
        let z = x.abs() / sigma;
        if z > a {
            acc += z * z - nu;
        }
    }
    acc
}

/// One candidate sparsity of the thresholded mean test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsityTerm {
    pub s: usize,
    pub a: f64,
    pub nu: f64,
    /// Shape of the critical value; the critical value is `constant * shape`.
    pub shape: f64,
    pub constant: f64,
    pub sparse: bool,
}

impl SparsityTerm {
    pub fn critical(&self) -> f64 {
        self.constant * self.shape
    }
}

/// Terms at time `t` with shapes `z(s, p, t)`.
pub fn theory_terms(p: usize, t: f64, lambda: f64) -> Result<Vec<SparsityTerm>> {
    kernels::mean_test_constants(p, t, 1.0)?
        .into_iter()
        .map(|c| {
            Ok(SparsityTerm { s: c.s, a: c.a, nu: c.nu, shape: c.xi, constant: lambda, sparse: false })
        })
        .collect()
}

/// Time-invariant terms evaluated at `t = 2` with shapes `z~(s, p, 2)`;
/// sparsities up to `sqrt(p log 2)` use `lambda_sparse`.
pub fn calibrated_terms(p: usize, lambda_dense: f64, lambda_sparse: f64) -> Result<Vec<SparsityTerm>> {
    let boundary = (p as f64 * 2f64.ln()).sqrt();
    kernels::sparsity_grid(p, 2.0)?
        .into_iter()
        .map(|s| {
            let a = kernels::threshold_a(s, p, 2.0)?;
            let sparse = (s as f64) <= boundary;
            Ok(SparsityTerm {
                s,
                a,
                nu: kernels::nu(a)?,
                shape: kernels::rate_z_tilde(s, p, 2.0)?,
                constant: if sparse { lambda_sparse } else { lambda_dense },
                sparse,
            })
        })
        .collect()
}

/// Pre- and post-split second-moment matrices from flattened `y y^T` sums.
pub fn cov_segments(
    prefix: &[f64],
    total: &[f64],
    p: usize,
    t: usize,
    g: usize,
) -> Result<(SymMatrix, SymMatrix)> {
    if g == 0 || g >= t {
        return Err(Error::domain(format!("lag g={g} outside [1, {}]", t.saturating_sub(1))));
    }
    let suffix: Vec<f64> = total.iter().zip(prefix).map(|(s, q)| s - q).collect();
    let first = SymMatrix::from_upper(p, prefix, 1.0 / (t - g) as f64)?;
    let second = SymMatrix::from_upper(p, &suffix, 1.0 / g as f64)?;
    Ok((first, second))
}

/// `||S1 - S2||_op / sigma2` with `sigma2 = ||S1||_op` unless fixed.
pub fn cov_stat(
    prefix: &[f64],
    total: &[f64],
    p: usize,
    t: usize,
    g: usize,
    sigma_cov_fixed: Option<f64>,
) -> Result<f64> {
    let (first, second) = cov_segments(prefix, total, p, t, g)?;
    let sigma2 = match sigma_cov_fixed {
        Some(s) => s,
        None => kernels::sym_opnorm(&first)?,
    };
    if sigma2 == 0.0 {
        return Err(Error::Degenerate(format!(
            "pre-change second moment is zero at t={t}, g={g}"
        )));
    }
    Ok(kernels::sym_opnorm(&first.sub(&second)?)? / sigma2)
}
