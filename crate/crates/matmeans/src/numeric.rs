//! Shared numeric helpers: log-sum-exp accumulation, jackknife standard
//! errors, simple grids and 1-D quadrature.

/// log(sum exp(x_i)), stable.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = xs.iter().map(|x| (x - m).exp()).sum();
    m + s.ln()
}

/// Mean in log domain: log((1/n) sum exp(x_i)).
pub fn log_mean_exp(xs: &[f64]) -> f64 {
    log_sum_exp(xs) - (xs.len() as f64).ln()
}

/// Delete-one jackknife standard error of `log_mean_exp` over the terms.
pub fn jackknife_se_log_mean_exp(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::INFINITY;
    }
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return f64::INFINITY;
    }
    let terms: Vec<f64> = xs.iter().map(|x| (x - m).exp()).collect();
    let total: f64 = terms.iter().sum();
    let loo: Vec<f64> = terms
        .iter()
        .map(|t| m + ((total - t).max(f64::MIN_POSITIVE)).ln() - ((n - 1) as f64).ln())
        .collect();
    let mean = loo.iter().sum::<f64>() / n as f64;
    let var: f64 = loo.iter().map(|x| (x - mean).powi(2)).sum::<f64>() * (n - 1) as f64 / n as f64;
    var.sqrt()
}

/// Plain mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Standard error of a (possibly autocorrelated) chain mean by batch means.
pub fn batch_means_se(xs: &[f64], n_batches: usize) -> f64 {
    let n = xs.len();
    let b = n_batches.max(2).min(n);
    let len = n / b;
    if len == 0 {
        return f64::INFINITY;
    }
    let means: Vec<f64> = (0..b)
        .map(|i| xs[i * len..(i + 1) * len].iter().sum::<f64>() / len as f64)
        .collect();
    let (_, se) = mean_se(&means);
    se
}

/// n log-spaced points on [lo, hi] (inclusive ends).
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Trapezoid weights for integrating f(d) dd on a log-spaced grid, i.e. the
/// d-space weights of the substitution d = e^t with uniform t.
pub fn log_trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let dt = (grid[n - 1].ln() - grid[0].ln()) / (n - 1) as f64;
    grid.iter()
        .enumerate()
        .map(|(i, &d)| {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            w * dt * d
        })
        .collect()
}

/// Least-squares slope of y against x.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        num += (xi - mx) * (yi - my);
        den += (xi - mx) * (xi - mx);
    }
    num / den
}

/// 16-point Gauss-Legendre nodes/weights on [-1, 1].
const GL16_X: [f64; 8] = [
    0.0950125098376374,
    0.2816035507792589,
    0.4580167776572274,
    0.6178762444026438,
    0.7554044083550030,
    0.8656312023878318,
    0.9445750230732326,
    0.9894009349916499,
];
const GL16_W: [f64; 8] = [
    0.1894506104550685,
    0.1826034150449236,
    0.1691565193950025,
    0.1495959888165767,
    0.1246289712555339,
    0.0951585116824928,
    0.0622535239386479,
    0.0271524594117541,
];

/// Gauss-Legendre 16 on [a, b].
pub fn gauss_legendre_16(a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for i in 0..8 {
        s += GL16_W[i] * (f(c + h * GL16_X[i]) + f(c - h * GL16_X[i]));
    }
    s * h
}

/// Composite Gauss-Legendre over n panels.
pub fn composite_gl(a: f64, b: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| gauss_legendre_16(a + i as f64 * h, a + (i + 1) as f64 * h, &mut f))
        .sum()
}
