//! Synthetic price-like panel with two planted covariance regime shifts.

use std::fmt::Write;

use gridcpd::simharness::{gen_stream, StreamSpec};

pub const COLUMNS: usize = 10;
pub const TRAINING: usize = 250;
/// Last increment of the first regime and of the quiet regime.
pub const SHIFTS: [usize; 2] = [700, 1300];
pub const ROWS: usize = 1900;

/// Config used by the end-to-end monitor runs.
pub const MONITOR_CONFIG: &str = "\
kind = cov_opnorm
lambda = 4.0
preprocess = baseline_normalize, first_difference
training_prefix = 250
auto_reset = true
header = true
id_col = true
";

/// Increments drawn with variance 1, then 0.1 after the first shift, then 1
/// again after the second. Levels are `20 + cumulative sum`, so normalising
/// and differencing recovers increments scaled by 1/20.
pub fn increments(seed: u64) -> Vec<Vec<f64>> {
    let [a, b] = SHIFTS;
    let first = gen_stream(&StreamSpec::gauss_cov_scaled(COLUMNS, b, Some(a), 0.1), seed).unwrap();
    let rest = gen_stream(&StreamSpec::gauss_cov_scaled(COLUMNS, ROWS - b, None, 1.0), seed + 1).unwrap();
    first.into_iter().chain(rest).collect()
}

/// CSV text with a header and a date-like identifier column. Data row `k`
/// holds the level after increment `k`; row 1 is the baseline.
pub fn panel_csv(seed: u64) -> String {
    let mut out = String::from("day");
    for c in 0..COLUMNS {
        write!(out, ",s{c}").unwrap();
    }
    out.push('\n');
    let mut level = vec![20.0; COLUMNS];
    for (k, inc) in increments(seed).iter().enumerate() {
        if k > 0 {
            for (l, x) in level.iter_mut().zip(inc) {
                *l += x;
            }
        }
        write!(out, "d{:04}", k + 1).unwrap();
        for l in &level {
            write!(out, ",{l:.10}").unwrap();
        }
        out.push('\n');
    }
    out
}
