//! Small statistical helpers: order-independent summation, KS statistics,
//! and log-linear growth fits.

/// Pairwise (cascade) summation. Order-independent reduction used for all
/// mass totals so results do not depend on worker count or chunking.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Mean and standard error of a sample.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(values) / n as f64;
    if n == 1 {
        return (mean, f64::INFINITY);
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// One-sample Kolmogorov-Smirnov statistic against a reference CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut xs: Vec<f64> = sample.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, x) in xs.iter().enumerate() {
        let f = cdf(*x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    d
}

/// Two-sample KS statistic for weighted samples: sup-distance between the
/// two weighted empirical CDFs. Weights need not be normalized.
pub fn ks_two_sample_weighted(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let norm = |s: &[(f64, f64)]| -> f64 { s.iter().map(|(_, w)| *w).sum() };
    let (wa, wb) = (norm(a), norm(b));
    if wa <= 0.0 || wb <= 0.0 {
        return f64::NAN;
    }
    let mut events: Vec<(f64, f64, f64)> = Vec::with_capacity(a.len() + b.len());
    for &(x, w) in a {
        events.push((x, w / wa, 0.0));
    }
    for &(x, w) in b {
        events.push((x, 0.0, w / wb));
    }
    events.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    let (mut fa, mut fb, mut d) = (0.0f64, 0.0f64, 0.0f64);
    let mut i = 0;
    while i < events.len() {
        let x = events[i].0;
        // absorb ties across both samples before comparing
        while i < events.len() && events[i].0 == x {
            fa += events[i].1;
            fb += events[i].2;
            i += 1;
        }
        d = d.max((fa - fb).abs());
    }
    d
}

/// Least-squares fit of `ln y ≈ a + rate · x`. Returns `(rate, residual)`
/// where residual is the RMS misfit of `ln y`. Entries with `y <= floor`
/// are dropped; fewer than two usable points yields `None`.
pub fn fit_log_linear(points: &[(f64, f64)], floor: f64) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, y)| *y > floor)
        .map(|&(x, y)| (x, y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let det = n * sxx - sx * sx;
    if det.abs() < 1e-300 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / n;
    let rss: f64 = pts
        .iter()
        .map(|&(x, ly)| {
            let e = ly - intercept - slope * x;
            e * e
        })
        .sum();
    Some((slope, (rss / n).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = v.iter().sum();
        assert!((pairwise_sum(&v) - naive).abs() < 1e-9);
    }

    #[test]
    fn ks_uniform_self() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        assert!(d < 1e-3, "d = {d}");
    }

    #[test]
    fn ks_two_sample_identical() {
        let a: Vec<(f64, f64)> = (0..100).map(|i| (i as f64, 1.0)).collect();
        let d = ks_two_sample_weighted(&a, &a);
        assert!(d < 1e-12);
    }

    #[test]
    fn log_fit_recovers_rate() {
        let pts: Vec<(f64, f64)> = (0..20).map(|n| (n as f64, 3.0 * (0.4 * n as f64).exp())).collect();
        let (rate, res) = fit_log_linear(&pts, 0.0).unwrap();
        assert!((rate - 0.4).abs() < 1e-10);
        assert!(res < 1e-10);
    }
}
