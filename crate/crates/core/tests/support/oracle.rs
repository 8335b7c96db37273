//! Reference implementations that recompute everything from raw data.
#![allow(dead_code)]

use gridcpd::detectors::{DetectorConfig, DetectorKind, ExpFamKind, Mode};
use gridcpd::kernels;

/// Eigenvalues of a symmetric matrix by classical (largest pivot) Jacobi.
pub fn jacobi_eigenvalues(a: &[f64], p: usize) -> Vec<f64> {
    let mut m = a.to_vec();
    for _ in 0..(100 * p * p).max(10) {
        let (mut bi, mut bj, mut big) = (0, 0, 0.0f64);
        for i in 0..p {
            for j in i + 1..p {
                if m[i * p + j].abs() > big {
                    big = m[i * p + j].abs();
                    bi = i;
                    bj = j;
                }
            }
        }
        let norm: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
        if big <= 1e-300 || big <= 1e-17 * norm {
            break;
        }
        let (i, j) = (bi, bj);
        let phi = 0.5 * (2.0 * m[i * p + j]).atan2(m[j * p + j] - m[i * p + i]);
        let (s, c) = phi.sin_cos();
        for k in 0..p {
            let (a_ki, a_kj) = (m[k * p + i], m[k * p + j]);
            m[k * p + i] = c * a_ki - s * a_kj;
            m[k * p + j] = s * a_ki + c * a_kj;
        }
        for k in 0..p {
            let (a_ik, a_jk) = (m[i * p + k], m[j * p + k]);
            m[i * p + k] = c * a_ik - s * a_jk;
            m[j * p + k] = s * a_ik + c * a_jk;
        }
    }
    (0..p).map(|i| m[i * p + i]).collect()
}

pub fn jacobi_opnorm(a: &[f64], p: usize) -> f64 {
    jacobi_eigenvalues(a, p).into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn ln_e_ratio(p: f64, lt: f64, s: f64) -> f64 {
    1.0 + (p * lt).ln() - 2.0 * s.ln()
}

fn oracle_sparsities(p: usize, lt: f64) -> Vec<usize> {
    let cap = (p as f64 * lt).sqrt().min(p as f64);
    let mut v: Vec<usize> = (0..64).map(|k| 1usize << k).take_while(|&s| s as f64 <= cap).collect();
    v.push(p);
    v.sort();
    v.dedup();
    v
}

fn oracle_a(s: usize, p: usize, lt: f64) -> f64 {
    if s as f64 > (p as f64 * lt).sqrt() {
        0.0
    } else {
        (4.0 * ln_e_ratio(p as f64, lt, s as f64)).max(0.0).sqrt()
    }
}

fn oracle_z(s: usize, p: usize, lt: f64) -> f64 {
    let dense = (p as f64 * lt).sqrt();
    if s as f64 > dense {
        dense
    } else {
        (s as f64 * ln_e_ratio(p as f64, lt, s as f64)).max(lt)
    }
}

fn oracle_z_tilde(s: usize, p: usize, lt: f64) -> f64 {
    s as f64 * (1.0 + (p as f64 * lt).sqrt() / s as f64).ln() + lt
}

fn column_sum(rows: &[Vec<f64>], k: usize) -> f64 {
    rows.iter().map(|r| r[k]).sum()
}

fn xlogx_ratio(x: f64, num: f64, den: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (x * num / den).ln()
    }
}

/// `(g, statistic, threshold)` of the best lag at time `t = ys.len()`,
/// recomputed from the raw observations over `lags`.
pub fn batch_best(cfg: &DetectorConfig, ys: &[Vec<f64>], lags: &[usize]) -> (usize, f64, f64) {
    let t = ys.len();
    let tf = t as f64;
    let p = cfg.p;
    let mut best: Option<(usize, f64, f64, f64)> = None;
    let mut take = |g: usize, stat: f64, thr: f64| {
        let r = stat / thr;
        if best.is_none_or(|b| r > b.3 || (r == b.3 && g < b.0)) {
            best = Some((g, stat, thr, r));
        }
    };
    for &g in lags {
        let n1 = t - g;
        let (left, right) = ys.split_at(n1);
        let gf = g as f64;
        match cfg.kind {
            DetectorKind::UniMean => {
                // Same accumulation order as the streaming store: left to right.
                let mut pre = 0.0;
                for y in left {
                    pre += y[0];
                }
                let mut tot = pre;
                for y in right {
                    tot += y[0];
                }
                let c = if cfg.known_pre_mean {
                    (tot - pre) / gf.sqrt()
                } else {
                    (gf / (tf * (tf - gf))).sqrt() * pre - ((tf - gf) / (tf * gf)).sqrt() * (tot - pre)
                };
                let s2 = cfg.sigma * cfg.sigma;
                let lt = (tf / cfg.delta).ln();
                let thr = match cfg.mode {
                    Mode::Theory => cfg.lambda * s2 * lt,
                    Mode::Calibrated => s2 * (1.0 + cfg.lambda * (lt + lt.sqrt())),
                };
                take(g, c * c, thr);
            }
            DetectorKind::ChadMean => {
                let c: Vec<f64> = (0..p)
                    .map(|k| {
                        let m1 = column_sum(left, k) / n1 as f64;
                        let m2 = column_sum(right, k) / gf;
                        if cfg.known_pre_mean {
                            column_sum(right, k) / gf.sqrt()
                        } else {
                            (gf * n1 as f64 / tf).sqrt() * (m1 - m2)
                        }
                    })
                    .collect();
                let (lt, calibrated) = match cfg.mode {
                    Mode::Theory => (tf.ln(), false),
                    Mode::Calibrated => (2f64.ln(), true),
                };
                let mut top = f64::NEG_INFINITY;
                for s in oracle_sparsities(p, lt) {
                    let a = oracle_a(s, p, lt);
                    let nu = kernels::nu(a).unwrap();
                    let mut score = 0.0;
                    for &cj in &c {
                        if (cj / cfg.sigma).abs() > a {
                            score += (cj / cfg.sigma).powi(2) - nu;
                        }
                    }
                    let xi = if calibrated {
                        let sparse = s as f64 <= (p as f64 * lt).sqrt();
                        let lam = if sparse { cfg.lambda_sparse() } else { cfg.lambda };
                        lam * oracle_z_tilde(s, p, lt)
                    } else {
                        cfg.lambda * oracle_z(s, p, lt)
                    };
                    top = top.max(score / xi);
                }
                take(g, top, 1.0);
            }
            DetectorKind::CovOpnorm => {
                let mut s1 = vec![0.0; p * p];
                let mut s2 = vec![0.0; p * p];
                for (rows, acc, n) in [(left, &mut s1, n1 as f64), (right, &mut s2, gf)] {
                    for y in rows {
                        for i in 0..p {
                            for k in 0..p {
                                acc[i * p + k] += y[i] * y[k] / n;
                            }
                        }
                    }
                }
                let sigma2 = cfg.sigma_cov_fixed.unwrap_or_else(|| jacobi_opnorm(&s1, p));
                let diff: Vec<f64> = s1.iter().zip(&s2).map(|(a, b)| a - b).collect();
                let stat = jacobi_opnorm(&diff, p) / sigma2;
                let r = (p as f64).max(tf.ln()) / (g.min(t - g) as f64);
                take(g, stat, cfg.lambda * r.max(r.sqrt()));
            }
            DetectorKind::PoissonRate | DetectorKind::ExpfamLr => {
                let mut lr = 0.0;
                for k in 0..p {
                    let (sl, sr) = (column_sum(left, k), column_sum(right, k));
                    lr += match cfg.expfam {
                        Some(ExpFamKind::Gaussian { sigma }) => {
                            let gap = (sl / n1 as f64 - sr / gf) / sigma;
                            n1 as f64 * gf / (2.0 * tf) * gap * gap
                        }
                        _ => xlogx_ratio(sl, tf, n1 as f64 * (sl + sr)) + xlogx_ratio(sr, tf, gf * (sl + sr)),
                    };
                }
                take(g, lr.max(0.0), cfg.lambda);
            }
        }
    }
    let b = best.expect("at least one lag");
    (b.0, b.1, b.2)
}
