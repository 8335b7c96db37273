//! Online changepoint detection over a dynamic geometric grid of candidate
//! change locations.
//!
//! At time `t` a detector only tests lags `g` from a grid of size
//! `O(log t)`. The grid is built so that the prefix sums it needs at `t + 1`
//! are a subset of those it needed at `t` plus the newest one, which keeps
//! both the update cost and the storage cost logarithmic in `t`.
//!
//! Module map:
//! - [`grid`]: dynamic and static geometric grids and their step-to-step recycling.
//! - [`summaries`]: the recyclable store of cumulative summary statistics.
//! - [`kernels`]: CUSUM, Gaussian tail helpers, sparsity constants, operator norms.
//! - [`detectors`]: the online detectors and their shared step/reset interface.
//! - [`calibration`]: Monte Carlo selection of threshold constants.
//! - [`simharness`]: stream generators, delay estimation and cost benchmarks.

pub mod calibration;
pub mod detectors;
pub mod error;
pub mod grid;
pub mod kernels;
pub mod simharness;
pub mod summaries;

pub use calibration::{calibrate, calibrate_chad, CalibrationReport, CalibrationSpec};
pub use detectors::{
    run_to_alarm, Decision, Detector, DetectorConfig, DetectorKind, ExpFamKind, ExpFamModel,
    GridKind, Mode,
};
pub use error::{Error, Result};
pub use grid::{dynamic_grid, static_grid, GridDelta, GridState};
pub use simharness::{benchmark_costs, estimate_delay, gen_stream, DelayReport, StreamModel, StreamSpec};
pub use summaries::{SegmentSums, SummaryRing};
