//! Geometric grids of candidate lags.
//!
//! A lag `g` at time `t` is a candidate changepoint `t - g` steps back, i.e.
//! the test at `(t, g)` compares `Y_1..Y_{t-g}` against `Y_{t-g+1}..Y_t`.
//!
//! The dynamic grid splits `[2, t-1]` into dyadic blocks `[2^j, 2^{j+1} - 1]`
//! and takes (at most) two elements per block, one from each half:
//!
//! ```text
//! left_j  = 2^j + ((t - 1) mod 2^(j-1))      j = 1 ..= floor(log2((t-1)/3)) + 1
//! right_j = left_j + 2^(j-1)                 j = 1 ..= floor(log2(t-1)) - 1
//! ```
//!
//! together with the lag `1`. As `t` increments each element either shifts up
//! by one or disappears, so the reversed grid `t - G(t)` never needs an index
//! that was dropped earlier. Everything here is exact integer arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    /// The recycling dynamic geometric grid.
    #[default]
    Dynamic,
    /// Powers of two up to `t - 1`; needs every prefix sum.
    Static,
    /// Every lag `1..t-1`; the full-scan reference.
    Full,
}

impl GridKind {
    pub fn name(self) -> &'static str {
        match self {
            GridKind::Dynamic => "dynamic",
            GridKind::Static => "static",
            GridKind::Full => "full",
        }
    }

    /// Candidate lags at time `t`, ascending.
    pub fn lags(self, t: usize) -> Result<Vec<usize>> {
        match self {
            GridKind::Dynamic => dynamic_grid(t),
            GridKind::Static => static_grid(t),
            GridKind::Full => {
                check_t(t)?;
                Ok((1..t).collect())
            }
        }
    }
}

impl std::str::FromStr for GridKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dynamic" => Ok(GridKind::Dynamic),
            "static" => Ok(GridKind::Static),
            "full" => Ok(GridKind::Full),
            other => Err(Error::config(format!("unknown grid kind `{other}`"))),
        }
    }
}

fn check_t(t: usize) -> Result<()> {
    if t < 2 {
        return Err(Error::domain(format!("grids are defined for t >= 2, got t={t}")));
    }
    Ok(())
}

#[inline]
fn floor_log2(x: usize) -> u32 {
    debug_assert!(x >= 1);
    usize::BITS - 1 - x.leading_zeros()
}

/// Number of left-half elements, `floor(log2((t-1)/3)) + 1`, or zero when the
/// range is empty.
#[inline]
fn left_count(t: usize) -> u32 {
    let third = (t - 1) / 3;
    if third == 0 {
        0
    } else {
        floor_log2(third) + 1
    }
}

/// Number of right-half elements, `floor(log2(t-1)) - 1`, or zero.
#[inline]
fn right_count(t: usize) -> u32 {
    floor_log2(t - 1).saturating_sub(1)
}

/// The dynamic geometric grid at time `t >= 2`, sorted ascending.
pub fn dynamic_grid(t: usize) -> Result<Vec<usize>> {
    check_t(t)?;
    let left = left_count(t);
    let right = right_count(t);
    let mut out = Vec::with_capacity(1 + (left + right) as usize);
    out.push(1);
    // Block j holds left_j, and right_j when j <= right. left >= right always,
    // and blocks are disjoint and increasing, so pushing in j order is sorted.
    for j in 1..=left {
        let half = 1usize << (j - 1);
        let l = (1usize << j) + (t - 1) % half;
        out.push(l);
        if j <= right {
            out.push(l + half);
        }
    }
    debug_assert!(out.windows(2).all(|w| w[0] < w[1]));
    Ok(out)
}

/// The static geometric grid `{1, 2, 4, ..., 2^floor(log2(t-1))}`.
pub fn static_grid(t: usize) -> Result<Vec<usize>> {
    check_t(t)?;
    Ok((0..=floor_log2(t - 1)).map(|k| 1usize << k).collect())
}

/// The dynamic grid at a fixed time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridState {
    t: usize,
    elements: Vec<usize>,
}

/// Bookkeeping for the summary indices `j = t - g` when moving from `t` to `t + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GridDelta {
    /// Indices of `t - G(t)` still needed at `t + 1`, ascending.
    pub retained: Vec<usize>,
    /// Indices of `t - G(t)` no future grid will reference, ascending.
    pub evicted: Vec<usize>,
    /// The newly required index, always the old time `t`.
    pub added: usize,
}

impl GridState {
    pub fn new(t: usize) -> Result<Self> {
        Ok(Self { t, elements: dynamic_grid(t)? })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Lags, ascending.
    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, g: usize) -> bool {
        self.elements.binary_search(&g).is_ok()
    }

    /// Summary indices `t - g`, ascending.
    pub fn indices(&self) -> Vec<usize> {
        self.elements.iter().rev().map(|g| self.t - g).collect()
    }

    /// Move to `t + 1`.
    pub fn advance(&self) -> (GridState, GridDelta) {
        let next = GridState::new(self.t + 1).expect("t + 1 >= 3");
        let prev_idx = self.indices();
        let next_idx = next.indices();

        let mut retained = Vec::with_capacity(prev_idx.len());
        let mut evicted = Vec::new();
        let mut k = 0;
        for &j in &prev_idx {
            while k < next_idx.len() && next_idx[k] < j {
                k += 1;
            }
            if k < next_idx.len() && next_idx[k] == j {
                retained.push(j);
            } else {
                evicted.push(j);
            }
        }
        let delta = GridDelta { retained, evicted, added: self.t };
        (next, delta)
    }
}
