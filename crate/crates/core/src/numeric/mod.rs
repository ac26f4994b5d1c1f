//! Numerical building blocks: quadrature, scalar search, special functions.

pub mod bessel;
pub mod optimize;
pub mod quadrature;

pub use optimize::{golden_max, golden_min, Extremum};
pub use quadrature::{integrate, Integral, QuadConfig};

/// Kahan–Babuška compensated summation in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Mean and batch-means standard error of a sample, using `batches`
/// contiguous batches. Falls back to the plain standard error when there are
/// fewer samples than batches.
pub fn mean_and_batch_se(samples: &[f64], batches: usize) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::INFINITY);
    }
    let mean = compensated_sum(samples.iter().copied()) / n as f64;
    if n < 2 {
        return (mean, f64::INFINITY);
    }
    let b = batches.max(2);
    if n < 2 * b {
        let var = compensated_sum(samples.iter().map(|x| (x - mean).powi(2))) / (n - 1) as f64;
        return (mean, (var / n as f64).sqrt());
    }
    let size = n / b;
    let means: Vec<f64> = (0..b)
        .map(|j| {
            let chunk = &samples[j * size..(j + 1) * size];
            compensated_sum(chunk.iter().copied()) / size as f64
        })
        .collect();
    let grand = compensated_sum(means.iter().copied()) / b as f64;
    let var = compensated_sum(means.iter().map(|m| (m - grand).powi(2))) / (b - 1) as f64;
    (mean, (var / b as f64).sqrt())
}

/// `ln(exp(a) + exp(b))` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `⌊alpha·k⌋`, tolerant of representation error such as `0.29 * 100 = 28.999…`.
pub fn floor_alpha_k(alpha: f64, k: usize) -> usize {
    let x = alpha * k as f64;
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r.max(0.0) as usize
    } else {
        x.floor().max(0.0) as usize
    }
}
