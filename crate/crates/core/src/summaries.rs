//! Cumulative summary stores.
//!
//! Every detector here tests `(t, g)` from two vectors: the prefix sum
//! `S_{t-g} = sum_{i <= t-g} h(Y_i)` and the running total `S_t`. The
//! [`SummaryRing`] keeps exactly `{S_j : j in t - G(t)}` plus `S_t`, evicting
//! slots as directed by [`GridDelta`](crate::grid::GridDelta). The
//! [`PrefixStore`] keeps every prefix sum and backs the static and full-scan
//! reference grids.

use crate::error::{Error, Result};
use crate::grid::{GridKind, GridState};

/// Prefix and suffix sums for one candidate lag.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSums {
    pub t: usize,
    pub g: usize,
    /// `sum_{i=1}^{t-g} h(Y_i)`
    pub prefix: Vec<f64>,
    /// `sum_{i=t-g+1}^{t} h(Y_i)`, computed as `total - prefix`.
    pub suffix: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SummaryRing {
    dim: usize,
    t: usize,
    /// `(j, S_j)` ascending in `j`.
    slots: Vec<(usize, Box<[f64]>)>,
    total: Vec<f64>,
    grid: Option<GridState>,
}

impl SummaryRing {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("summary dimension must be positive"));
        }
        Ok(Self { dim, t: 0, slots: Vec::new(), total: vec![0.0; dim], grid: None })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn total(&self) -> &[f64] {
        &self.total
    }

    /// The current dynamic grid, present once `t >= 2`.
    pub fn grid(&self) -> Option<&GridState> {
        self.grid.as_ref()
    }

    /// Indices `j` with a stored `S_j`, ascending.
    pub fn slot_indices(&self) -> Vec<usize> {
        self.slots.iter().map(|(j, _)| *j).collect()
    }

    /// Scalars held: the stored prefix sums plus the running total.
    pub fn stored_scalars(&self) -> usize {
        self.dim * (self.slots.len() + 1)
    }

    pub fn push(&mut self, h_value: &[f64]) -> Result<()> {
        if h_value.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: h_value.len() });
        }
        let previous = self.t;
        match previous {
            0 => {}
            1 => {
                self.grid = Some(GridState::new(2)?);
                self.slots.push((1, self.total.clone().into_boxed_slice()));
            }
            _ => {
                let grid = self.grid.as_ref().expect("grid exists once t >= 2");
                let (next, delta) = grid.advance();
                for j in &delta.evicted {
                    if let Ok(pos) = self.slots.binary_search_by_key(j, |(k, _)| *k) {
                        self.slots.remove(pos);
                    }
                }
                self.slots.push((delta.added, self.total.clone().into_boxed_slice()));
                self.grid = Some(next);
            }
        }
        for (acc, x) in self.total.iter_mut().zip(h_value) {
            *acc += x;
        }
        self.t = previous + 1;
        Ok(())
    }

    /// Borrow `S_{t-g}`.
    pub fn prefix(&self, g: usize) -> Result<&[f64]> {
        let lookup = Error::Lookup { t: self.t, g };
        if g == 0 || g >= self.t {
            return Err(lookup);
        }
        let j = self.t - g;
        match self.slots.binary_search_by_key(&j, |(k, _)| *k) {
            Ok(pos) => Ok(&self.slots[pos].1),
            Err(_) => Err(lookup),
        }
    }

    pub fn segment_sums(&self, g: usize) -> Result<SegmentSums> {
        let prefix = self.prefix(g)?.to_vec();
        let suffix = self.total.iter().zip(&prefix).map(|(s, p)| s - p).collect();
        Ok(SegmentSums { t: self.t, g, prefix, suffix })
    }

    pub fn clear(&mut self) {
        self.t = 0;
        self.slots.clear();
        self.total.iter_mut().for_each(|x| *x = 0.0);
        self.grid = None;
    }
}

/// Every prefix sum `S_0..S_t`, for the static and full-scan grids.
#[derive(Debug, Clone)]
pub struct PrefixStore {
    dim: usize,
    t: usize,
    /// `S_0, S_1, ..., S_t` flattened, `S_0 = 0`.
    sums: Vec<f64>,
    cap: usize,
}

impl PrefixStore {
    pub fn new(dim: usize, cap: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("summary dimension must be positive"));
        }
        Ok(Self { dim, t: 0, sums: vec![0.0; dim], cap })
    }

    pub fn push(&mut self, h_value: &[f64]) -> Result<()> {
        if h_value.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: h_value.len() });
        }
        if self.t >= self.cap {
            return Err(Error::config(format!(
                "prefix store horizon cap {} reached",
                self.cap
            )));
        }
        let start = self.t * self.dim;
        for (i, h) in h_value.iter().enumerate() {
            let next = self.sums[start + i] + h;
            self.sums.push(next);
        }
        self.t += 1;
        Ok(())
    }

    fn at(&self, j: usize) -> &[f64] {
        &self.sums[j * self.dim..(j + 1) * self.dim]
    }

    pub fn prefix(&self, g: usize) -> Result<&[f64]> {
        if g == 0 || g >= self.t {
            return Err(Error::Lookup { t: self.t, g });
        }
        Ok(self.at(self.t - g))
    }

    pub fn total(&self) -> &[f64] {
        self.at(self.t)
    }

    pub fn stored_scalars(&self) -> usize {
        self.sums.len()
    }

    pub fn clear(&mut self) {
        self.t = 0;
        self.sums.truncate(self.dim);
        self.sums.iter_mut().for_each(|x| *x = 0.0);
    }
}

/// The store a detector uses, chosen by its grid kind.
#[derive(Debug, Clone)]
pub enum Store {
    Ring(SummaryRing),
    Prefix { kind: GridKind, store: PrefixStore },
}

impl Store {
    pub fn new(kind: GridKind, dim: usize, horizon_cap: Option<usize>) -> Result<Self> {
        match kind {
            GridKind::Dynamic => Ok(Store::Ring(SummaryRing::new(dim)?)),
            GridKind::Static | GridKind::Full => {
                let cap = horizon_cap.ok_or_else(|| {
                    Error::config(format!("grid `{}` requires a horizon cap", kind.name()))
                })?;
                Ok(Store::Prefix { kind, store: PrefixStore::new(dim, cap)? })
            }
        }
    }

    pub fn t(&self) -> usize {
        match self {
            Store::Ring(r) => r.t(),
            Store::Prefix { store, .. } => store.t,
        }
    }

    pub fn push(&mut self, h_value: &[f64]) -> Result<()> {
        match self {
            Store::Ring(r) => r.push(h_value),
            Store::Prefix { store, .. } => store.push(h_value),
        }
    }

    /// Lags to test at the current time; empty before `t = 2`.
    pub fn lags(&self) -> Vec<usize> {
        match self {
            Store::Ring(r) => r.grid().map(|g| g.elements().to_vec()).unwrap_or_default(),
            Store::Prefix { kind, store } => {
                if store.t < 2 {
                    Vec::new()
                } else {
                    kind.lags(store.t).expect("t >= 2")
                }
            }
        }
    }

    pub fn prefix(&self, g: usize) -> Result<&[f64]> {
        match self {
            Store::Ring(r) => r.prefix(g),
            Store::Prefix { store, .. } => store.prefix(g),
        }
    }

    pub fn total(&self) -> &[f64] {
        match self {
            Store::Ring(r) => r.total(),
            Store::Prefix { store, .. } => store.total(),
        }
    }

    pub fn stored_scalars(&self) -> usize {
        match self {
            Store::Ring(r) => r.stored_scalars(),
            Store::Prefix { store, .. } => store.stored_scalars(),
        }
    }

    pub fn clear(&mut self) {
        match self {
            Store::Ring(r) => r.clear(),
            Store::Prefix { store, .. } => store.clear(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_and_first_push() {
        assert!(matches!(SummaryRing::new(0), Err(Error::Domain(_))));
        let ring = SummaryRing::new(3).unwrap();
        assert_eq!(ring.slot_indices().len(), 0);
        assert_eq!(ring.total(), &[0.0, 0.0, 0.0]);

        let mut ring = SummaryRing::new(1).unwrap();
        ring.push(&[3.0]).unwrap();
        assert_eq!(ring.t(), 1);
        assert_eq!(ring.total(), &[3.0]);
    }

    #[test]
    fn totals_accumulate() {
        let mut ring = SummaryRing::new(1).unwrap();
        for _ in 0..4 {
            ring.push(&[1.0]).unwrap();
        }
        assert_eq!(ring.total(), &[4.0]);

        let mut ring = SummaryRing::new(1).unwrap();
        for x in [1.0, 2.0, 3.0, 4.0] {
            ring.push(&[x]).unwrap();
        }
        assert_eq!(ring.total(), &[10.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let mut ring = SummaryRing::new(2).unwrap();
        assert_eq!(
            ring.push(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        );
    }

    #[test]
    fn segment_sums_small() {
        let mut ring = SummaryRing::new(1).unwrap();
        for x in [1.0, 2.0, 3.0, 4.0] {
            ring.push(&[x]).unwrap();
        }
        let s = ring.segment_sums(2).unwrap();
        assert_eq!(s.prefix, vec![3.0]);
        assert_eq!(s.suffix, vec![7.0]);
        assert!(matches!(ring.segment_sums(4), Err(Error::Lookup { .. })));
    }

    #[test]
    fn constant_stream_segments() {
        let c = 2.5;
        let mut ring = SummaryRing::new(1).unwrap();
        for t in 1..=200usize {
            ring.push(&[c]).unwrap();
            if let Some(grid) = ring.grid() {
                for &g in grid.elements() {
                    let s = ring.segment_sums(g).unwrap();
                    assert_eq!(s.prefix[0], (t - g) as f64 * c);
                    assert_eq!(s.suffix[0], g as f64 * c);
                }
            }
        }
    }

    #[test]
    fn slot_three_gone_after_eleven() {
        let mut ring = SummaryRing::new(1).unwrap();
        for i in 1..=10 {
            ring.push(&[i as f64]).unwrap();
        }
        assert!(ring.slot_indices().contains(&3));
        ring.push(&[11.0]).unwrap();
        assert!(!ring.slot_indices().contains(&3));
    }

    #[test]
    fn slot_keys_track_reversed_grid() {
        let mut ring = SummaryRing::new(2).unwrap();
        for i in 0..2000 {
            ring.push(&[i as f64, -(i as f64)]).unwrap();
            if ring.t() >= 2 {
                assert_eq!(ring.slot_indices(), ring.grid().unwrap().indices());
            }
        }
    }

    #[test]
    fn clear_resets() {
        let mut ring = SummaryRing::new(1).unwrap();
        for _ in 0..10 {
            ring.push(&[1.0]).unwrap();
        }
        ring.clear();
        assert_eq!(ring.t(), 0);
        assert_eq!(ring.stored_scalars(), 1);
        assert!(ring.grid().is_none());
    }

    #[test]
    fn prefix_store_cap() {
        let mut store = Store::new(GridKind::Full, 1, Some(3)).unwrap();
        for _ in 0..3 {
            store.push(&[1.0]).unwrap();
        }
        assert!(matches!(store.push(&[1.0]), Err(Error::Config(_))));
        assert_eq!(store.lags(), vec![1, 2]);
        assert!(Store::new(GridKind::Full, 1, None).is_err());
    }
}
