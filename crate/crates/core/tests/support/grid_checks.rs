//! Checks of the three grid properties at a single time.
#![allow(dead_code)]

use gridcpd::grid::dynamic_grid;

/// Every `d <= t/2` has a grid element in `[d/2, d]`.
pub fn spacing(t: usize, grid: &[usize]) -> Result<(), String> {
    let mut k = 0;
    for d in 1..=t / 2 {
        while k + 1 < grid.len() && grid[k + 1] <= d {
            k += 1;
        }
        let g = grid[k];
        if !(g <= d && 2 * g >= d) {
            return Err(format!("t={t}: no element in [{}/2, {d}]", d));
        }
    }
    Ok(())
}

pub fn cardinality(t: usize, grid: &[usize]) -> Result<(), String> {
    if (grid.len() as f64) < 3.0 * (t as f64).ln() {
        Ok(())
    } else {
        Err(format!("t={t}: |G| = {} not below 3 ln t", grid.len()))
    }
}

/// `(t+1) - G(t+1)` is contained in `(t - G(t))` together with `t`.
pub fn recycling(t: usize, now: &[usize], next: &[usize]) -> Result<(), String> {
    let have: Vec<usize> = now.iter().map(|g| t - g).chain(std::iter::once(t)).collect();
    for g in next {
        let j = t + 1 - g;
        if !have.contains(&j) {
            return Err(format!("t={t}: index {j} needed at t+1 was not kept"));
        }
    }
    Ok(())
}

pub fn all_properties(t: usize) -> Result<(), String> {
    let now = dynamic_grid(t).map_err(|e| e.to_string())?;
    let next = dynamic_grid(t + 1).map_err(|e| e.to_string())?;
    if now.first() != Some(&1) || now.windows(2).any(|w| w[0] >= w[1]) || *now.last().unwrap() >= t {
        return Err(format!("t={t}: malformed grid {now:?}"));
    }
    spacing(t, &now)?;
    cardinality(t, &now)?;
    recycling(t, &now, &next)
}
