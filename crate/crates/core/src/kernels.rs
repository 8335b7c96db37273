//! Numeric kernels shared by the detectors.
//!
//! All logarithms are natural. Functions whose argument is named `t` take it
//! as `f64` so that they can be evaluated off the integers (the sparsity
//! constants are commonly tabulated at `log t = 1`).

use std::f64::consts::{E, FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

fn check_lag(t: usize, g: usize) -> Result<()> {
    if g == 0 || g >= t {
        return Err(Error::domain(format!("lag g={g} outside [1, {}]", t.saturating_sub(1))));
    }
    Ok(())
}

fn check_sparsity(s: usize, p: usize, t: f64) -> Result<()> {
    if p == 0 || s == 0 || s > p {
        return Err(Error::domain(format!("sparsity s={s} outside [1, p={p}]")));
    }
    if !(t >= 2.0) || !t.is_finite() {
        return Err(Error::domain(format!("t must be finite and >= 2, got {t}")));
    }
    Ok(())
}

/// Two-sample CUSUM of the split at `t - g`, written into `out`.
///
/// `sqrt(g / (t (t-g))) * prefix - sqrt((t-g) / (t g)) * (total - prefix)`
pub fn cusum_into(prefix: &[f64], total: &[f64], t: usize, g: usize, out: &mut [f64]) -> Result<()> {
    check_lag(t, g)?;
    if prefix.len() != total.len() || out.len() != total.len() {
        return Err(Error::DimensionMismatch { expected: total.len(), got: prefix.len() });
    }
    let (tf, gf) = (t as f64, g as f64);
    let left = (gf / (tf * (tf - gf))).sqrt();
    let right = ((tf - gf) / (tf * gf)).sqrt();
    for ((o, &pre), &tot) in out.iter_mut().zip(prefix).zip(total) {
        *o = left * pre - right * (tot - pre);
    }
    Ok(())
}

pub fn cusum(prefix: &[f64], total: &[f64], t: usize, g: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; total.len()];
    cusum_into(prefix, total, t, g, &mut out)?;
    Ok(out)
}

/// CUSUM against a known zero pre-change mean: `suffix / sqrt(g)`.
pub fn cusum_known_mean(suffix: &[f64], g: usize) -> Result<Vec<f64>> {
    if g == 0 {
        return Err(Error::domain("lag must be positive"));
    }
    let scale = 1.0 / (g as f64).sqrt();
    Ok(suffix.iter().map(|x| x * scale).collect())
}

/// Upper tail `P(Z > x)` of the standard normal.
///
/// Uses `erfc` from `libm`, a port of the fdlibm/musl implementation
/// (Sun Microsystems rational approximations on five sub-intervals), whose
/// error is below 1 ulp. The only additional rounding is the argument scaling
/// by `1/sqrt(2)`, which keeps the relative error under 1e-14 on `|x| <= 8`.
pub fn normal_tail(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::domain("normal_tail of NaN"));
    }
    if x == f64::INFINITY {
        return Ok(0.0);
    }
    if x == f64::NEG_INFINITY {
        return Ok(1.0);
    }
    Ok(0.5 * libm::erfc(x * FRAC_1_SQRT_2))
}

pub fn normal_density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Mills ratio `P(Z > a) / phi(a)` by its continued fraction, for large `a`.
fn mills_ratio_cf(a: f64) -> f64 {
    // R(a) = 1 / (a + 1 / (a + 2 / (a + 3 / (a + ...)))), evaluated backwards.
    let mut tail = a;
    for k in (1..=120).rev() {
        tail = a + k as f64 / tail;
    }
    1.0 / tail
}

/// `E[Z^2 | |Z| > a]` for standard normal `Z`, equal to `1 + a phi(a) / P(Z > a)`.
pub fn nu(a: f64) -> Result<f64> {
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::domain(format!("nu requires finite a >= 0, got {a}")));
    }
    if a == 0.0 {
        return Ok(1.0);
    }
    if a > 8.0 {
        return Ok(1.0 + a / mills_ratio_cf(a));
    }
    Ok(1.0 + a * normal_density(a) / normal_tail(a)?)
}

/// Truncation level `a(s, t)`:
/// `a^2 = 4 log(e p log t / s^2)` when `s <= sqrt(p log t)`, else `0`.
/// The square is clamped at zero.
pub fn threshold_a(s: usize, p: usize, t: f64) -> Result<f64> {
    check_sparsity(s, p, t)?;
    let (sf, pf, lt) = (s as f64, p as f64, t.ln());
    if sf > (pf * lt).sqrt() {
        return Ok(0.0);
    }
    let sq = 4.0 * (E * pf * lt / (sf * sf)).ln();
    Ok(sq.max(0.0).sqrt())
}

/// Rate function `z(s, p, t)`.
pub fn rate_z(s: usize, p: usize, t: f64) -> Result<f64> {
    check_sparsity(s, p, t)?;
    let (sf, pf, lt) = (s as f64, p as f64, t.ln());
    let dense = (pf * lt).sqrt();
    if sf > dense {
        Ok(dense)
    } else {
        Ok((sf * (E * pf * lt / (sf * sf)).ln()).max(lt))
    }
}

/// Monotone variant `s log(1 + sqrt(p log t) / s) + log t`.
pub fn rate_z_tilde(s: usize, p: usize, t: f64) -> Result<f64> {
    check_sparsity(s, p, t)?;
    let (sf, pf, lt) = (s as f64, p as f64, t.ln());
    Ok(sf * (1.0 + (pf * lt).sqrt() / sf).ln() + lt)
}

/// Candidate sparsities: powers of two up to `min(sqrt(p log t), p)`, plus `p`.
pub fn sparsity_grid(p: usize, t: f64) -> Result<Vec<usize>> {
    check_sparsity(1, p, t)?;
    let cap = (p as f64 * t.ln()).sqrt().min(p as f64);
    let mut out = Vec::new();
    let mut s = 1usize;
    while (s as f64) <= cap {
        out.push(s);
        s *= 2;
    }
    if out.last() != Some(&p) {
        out.push(p);
    }
    Ok(out)
}

/// Covariance critical value `lambda * max(r, sqrt(r))`,
/// `r = max(p, log t) / min(g, t - g)`.
pub fn xi_cov(g: usize, t: usize, p: usize, lambda: f64) -> Result<f64> {
    check_lag(t, g)?;
    if !(lambda > 0.0) {
        return Err(Error::domain("lambda must be positive"));
    }
    let r = (p as f64).max((t as f64).ln()) / g.min(t - g) as f64;
    Ok(lambda * r.max(r.sqrt()))
}

/// Constants for one candidate sparsity of the thresholded mean statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanTestConstants {
    pub s: usize,
    /// Truncation level `a(s, t)`.
    pub a: f64,
    /// Centring `E[Z^2 | |Z| > a]`.
    pub nu: f64,
    /// Critical value for this sparsity.
    pub xi: f64,
}

/// Constants at time `t` with `xi_s = lambda * z(s, p, t)`.
pub fn mean_test_constants(p: usize, t: f64, lambda: f64) -> Result<Vec<MeanTestConstants>> {
    sparsity_grid(p, t)?
        .into_iter()
        .map(|s| {
            let a = threshold_a(s, p, t)?;
            Ok(MeanTestConstants { s, a, nu: nu(a)?, xi: lambda * rate_z(s, p, t)? })
        })
        .collect()
}

/// Dense symmetric matrix, stored in full row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    p: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(p: usize) -> Self {
        Self { p, data: vec![0.0; p * p] }
    }

    pub fn identity(p: usize) -> Self {
        Self::diagonal(&vec![1.0; p])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &x) in d.iter().enumerate() {
            m.data[i * d.len() + i] = x;
        }
        m
    }

    /// Reads the upper triangle (`i <= j`) of a row-major `p x p` array and
    /// mirrors it, scaling every entry by `scale`.
    pub fn from_upper(p: usize, flat: &[f64], scale: f64) -> Result<Self> {
        if flat.len() != p * p {
            return Err(Error::DimensionMismatch { expected: p * p, got: flat.len() });
        }
        let mut m = Self::zeros(p);
        m.fill_from_upper(flat, scale);
        Ok(m)
    }

    pub(crate) fn fill_from_upper(&mut self, flat: &[f64], scale: f64) {
        let p = self.p;
        for i in 0..p {
            for j in i..p {
                let v = flat[i * p + j] * scale;
                self.data[i * p + j] = v;
                self.data[j * p + i] = v;
            }
        }
    }

    pub fn from_fn(p: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(p);
        for i in 0..p {
            for j in i..p {
                let v = f(i, j);
                m.data[i * p + j] = v;
                m.data[j * p + i] = v;
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.p + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { p: self.p, data: self.data.iter().map(|x| x * c).collect() }
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<Self> {
        if self.p != other.p {
            return Err(Error::DimensionMismatch { expected: self.p, got: other.p });
        }
        Ok(Self {
            p: self.p,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.p).map(|i| self.get(i, i)).sum()
    }

    fn mul_vec(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.p..(i + 1) * self.p];
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    /// Whether `shift * I + sign * self` is positive definite (Cholesky).
    fn shifted_is_pd(&self, shift: f64, sign: f64) -> bool {
        let p = self.p;
        let mut l = vec![0.0; p * p];
        for j in 0..p {
            let mut d = shift + sign * self.get(j, j);
            for k in 0..j {
                d -= l[j * p + k] * l[j * p + k];
            }
            if !(d > 0.0) {
                return false;
            }
            let d = d.sqrt();
            l[j * p + j] = d;
            for i in j + 1..p {
                let mut v = sign * self.get(i, j);
                for k in 0..j {
                    v -= l[i * p + k] * l[j * p + k];
                }
                l[i * p + j] = v / d;
            }
        }
        true
    }
}

const POWER_REL_CHANGE: f64 = 1e-12;
const OPNORM_REL_TOL: f64 = 1e-9;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Largest absolute eigenvalue of a symmetric matrix.
///
/// Power iteration from the normalised all-ones vector, stopped once the
/// Rayleigh quotient `mu` changes by less than 1e-12 relatively. The result is
/// then certified: `|mu|` never exceeds the operator norm, and if both
/// `c I - A` and `c I + A` are positive definite for `c = |mu| (1 + 1e-9)` the
/// norm is below `c`. When the iteration stalls (near-tied eigenvalues of
/// opposite sign) or the start vector misses the dominant eigenspace, the
/// certificate fails and cyclic Jacobi sweeps give the answer instead.
pub fn sym_opnorm(a: &SymMatrix) -> Result<f64> {
    let p = a.p;
    if a.data.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("sym_opnorm of a matrix with non-finite entries"));
    }
    let max_abs = a.data.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if p == 0 || max_abs == 0.0 {
        return Ok(0.0);
    }

    let cap = 10 * p * 100;
    let mut v = vec![1.0 / (p as f64).sqrt(); p];
    let mut w = vec![0.0; p];
    let mut mu_prev = f64::NAN;
    let mut mu = 0.0;
    let mut converged = false;
    for _ in 0..cap {
        a.mul_vec(&v, &mut w);
        mu = v.iter().zip(&w).map(|(x, y)| x * y).sum::<f64>();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
        if (mu - mu_prev).abs() <= POWER_REL_CHANGE * mu.abs() {
            converged = true;
            break;
        }
        mu_prev = mu;
    }

    if converged && mu != 0.0 {
        let c = mu.abs() * (1.0 + OPNORM_REL_TOL);
        if a.shifted_is_pd(c, -1.0) && a.shifted_is_pd(c, 1.0) {
            return Ok(mu.abs());
        }
    }
    jacobi_opnorm(a)
}

/// Cyclic Jacobi eigenvalue sweeps; returns the largest absolute eigenvalue.
fn jacobi_opnorm(a: &SymMatrix) -> Result<f64> {
    let p = a.p;
    let mut m = a.data.clone();
    let scale = a.frobenius();
    let off = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..p {
            for j in 0..p {
                if i != j {
                    s += m[i * p + j] * m[i * p + j];
                }
            }
        }
        s.sqrt()
    };
    let diag_max = |m: &[f64]| (0..p).fold(0.0f64, |acc, i| acc.max(m[i * p + i].abs()));

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off(&m) <= 1e-15 * scale {
            return Ok(diag_max(&m));
        }
        for i in 0..p {
            for j in i + 1..p {
                let aij = m[i * p + j];
                if aij == 0.0 {
                    continue;
                }
                let (aii, ajj) = (m[i * p + i], m[j * p + j]);
                let theta = (ajj - aii) / (2.0 * aij);
                let tan = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let tan = if theta == 0.0 { 1.0 } else { tan };
                let cos = 1.0 / (tan * tan + 1.0).sqrt();
                let sin = tan * cos;
                for k in 0..p {
                    let (mki, mkj) = (m[k * p + i], m[k * p + j]);
                    m[k * p + i] = cos * mki - sin * mkj;
                    m[k * p + j] = sin * mki + cos * mkj;
                }
                for k in 0..p {
                    let (mik, mjk) = (m[i * p + k], m[j * p + k]);
                    m[i * p + k] = cos * mik - sin * mjk;
                    m[j * p + k] = sin * mik + cos * mjk;
                }
            }
        }
    }
    if off(&m) <= 1e-12 * scale {
        return Ok(diag_max(&m));
    }
    Err(Error::Numeric {
        message: "Jacobi sweeps did not converge".into(),
        estimate: diag_max(&m),
    })
}
