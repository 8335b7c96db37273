use gridcpd::simharness::{gen_stream, stream_iter, StreamModel, StreamSpec};

/// Mean and unbiased variance.
fn moments(xs: impl Iterator<Item = f64>) -> (f64, f64, f64) {
    let v: Vec<f64> = xs.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var, n)
}

fn within(got: f64, want: f64, se: f64, what: &str) {
    assert!((got - want).abs() <= 4.0 * se, "{what}: {got} vs {want} (se {se})");
}

/// Coordinate `k` of observations `range` (zero-based) pooled over `runs` replications.
fn pooled(spec: &StreamSpec, runs: u64, range: std::ops::Range<usize>, k: usize) -> Vec<f64> {
    (0..runs)
        .flat_map(|r| {
            let it = stream_iter(spec, 5, r).unwrap();
            it.skip(range.start).take(range.len()).map(move |y| y[k])
        })
        .collect()
}

#[test]
fn gaussian_mean_shift_moments() {
    let spec = StreamSpec::gauss_mean(4, 400, Some(200), 2.0, 4, 1.5);
    let post = pooled(&spec, 500, 200..400, 0);
    let (mean, var, n) = moments(post.into_iter());
    within(mean, 1.0, (2.25 / n).sqrt(), "post mean");
    within(var, 2.25, 2.25 * (2.0 / n).sqrt(), "post variance");
    let (mean, _, n) = moments(pooled(&spec, 500, 0..200, 3).into_iter());
    within(mean, 0.0, (2.25 / n).sqrt(), "pre mean");
}

#[test]
fn sparse_shift_leaves_other_coordinates() {
    let spec = StreamSpec::gauss_mean(3, 300, Some(0), 3.0, 1, 1.0);
    let (mean, _, n) = moments(pooled(&spec, 400, 0..300, 0).into_iter());
    within(mean, 3.0, (1.0 / n).sqrt(), "changed coordinate");
    let (mean, _, n) = moments(pooled(&spec, 400, 0..300, 2).into_iter());
    within(mean, 0.0, (1.0 / n).sqrt(), "unchanged coordinate");
}

#[test]
fn covariance_scaling_moments() {
    let spec = StreamSpec::gauss_cov_scaled(2, 400, Some(200), 2.0);
    let (_, var, n) = moments(pooled(&spec, 500, 200..400, 1).into_iter());
    within(var, 2.0, 2.0 * (2.0 / n).sqrt(), "post variance");
    let (_, var, n) = moments(pooled(&spec, 500, 0..200, 0).into_iter());
    within(var, 1.0, (2.0 / n).sqrt(), "pre variance");
}

#[test]
fn correlated_covariance_moments() {
    let sigma1 = vec![1.0, 0.6, 0.6, 2.0];
    let spec = StreamSpec {
        model: StreamModel::GaussCov { sigma1: Some(sigma1), scale: None, sigma2: None },
        p: 2,
        tau: None,
        n: 200,
    };
    let rows: Vec<Vec<f64>> = (0..600).flat_map(|r| stream_iter(&spec, 6, r).unwrap()).collect();
    let n = rows.len() as f64;
    let cross = rows.iter().map(|y| y[0] * y[1]).sum::<f64>() / n;
    // Var(XY) = s11 s22 + s12^2 for centred Gaussians.
    within(cross, 0.6, ((2.0 + 0.36) / n).sqrt(), "covariance");
}

#[test]
fn poisson_rate_moments() {
    let spec = StreamSpec::poisson(400, Some(100), 1.0, 3.0);
    let (mean, var, n) = moments(pooled(&spec, 400, 100..400, 0).into_iter());
    within(mean, 3.0, (3.0 / n).sqrt(), "post mean");
    // Fourth central moment of Poisson(r) is r + 3r^2.
    within(var, 3.0, ((3.0 + 27.0 - 9.0) / n).sqrt(), "post variance");
    let (mean, _, n) = moments(pooled(&spec, 1000, 0..100, 0).into_iter());
    assert!(n >= 1e5);
    within(mean, 1.0, (1.0 / n).sqrt(), "pre mean");
}

#[test]
fn noise_free_step() {
    let spec = StreamSpec::gauss_mean(1, 6, Some(3), 1.0, 1, 0.0);
    let ys: Vec<f64> = gen_stream(&spec, 1).unwrap().into_iter().map(|y| y[0]).collect();
    assert_eq!(ys, [0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
}
