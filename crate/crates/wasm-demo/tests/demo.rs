use gridcpd_wasm::{detector_trace, dynamic_lags, static_lags, storage_comparison, stored_indices};

#[test]
fn lags_match_the_core_grids() {
    assert_eq!(dynamic_lags(17).unwrap(), [1, 2, 3, 4, 6, 8, 12]);
    assert_eq!(static_lags(17).unwrap(), [1, 2, 4, 8, 16]);
    assert!(dynamic_lags(1).is_err());
}

#[test]
fn stored_indices_are_reversed_lags() {
    assert_eq!(stored_indices(9).unwrap(), [3, 5, 6, 7, 8]);
    assert_eq!(stored_indices(12).unwrap(), [5, 7, 9, 10, 11]);
}

#[test]
fn trace_alarms_after_a_large_shift() {
    let trace = detector_trace(300, 150, 3.0, 1.7, 4).unwrap();
    assert_eq!(trace.values().len(), 300);
    assert_eq!(trace.ratios().len(), 300);
    assert_eq!(trace.ratios()[0], 0.0);
    let alarm = trace.alarm();
    assert!(alarm > 150 && alarm < 200, "alarm at {alarm}");
    let lags = trace.lags();
    assert!(lags[1..].iter().all(|&g| g >= 1));
}

#[test]
fn trace_is_reproducible() {
    let a = detector_trace(200, 200, 0.0, 1.7, 9).unwrap();
    let b = detector_trace(200, 200, 0.0, 1.7, 9).unwrap();
    assert_eq!(a.values(), b.values());
    assert_eq!(a.ratios(), b.ratios());
}

#[test]
fn storage_grows_logarithmically_against_linearly() {
    let out = storage_comparison(3, &[1000, 100, 10_000]).unwrap();
    assert_eq!(out.len(), 6);
    let (ring_1k, full_1k) = (out[0], out[1]);
    let (ring_10k, full_10k) = (out[4], out[5]);
    assert_eq!(full_1k, 3.0 * 1001.0);
    assert_eq!(full_10k, 3.0 * 10_001.0);
    assert!(ring_1k <= 3.0 * (3.0 * 1000f64.ln() + 2.0));
    assert!(ring_10k - ring_1k <= 3.0 * 3.0 * 10f64.ln() + 3.0);
    assert!(storage_comparison(1, &[2_000_000]).is_err());
}
