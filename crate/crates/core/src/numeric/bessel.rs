//! Exponentially scaled modified Bessel function of the first kind, order 0.

/// Arguments below this use the power series, above it the asymptotic expansion.
pub const SERIES_CUTOFF: f64 = 12.0;

/// `exp(-|x|) * I0(x)`.
pub fn i0_scaled(x: f64) -> f64 {
    let x = x.abs();
    if x.is_nan() {
        return f64::NAN;
    }
    if x < SERIES_CUTOFF {
        // I0(x) = sum_k (x^2/4)^k / (k!)^2, all terms positive.
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k: f64 = 1.0;
        loop {
            term *= q / (k * k);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
            k += 1.0;
        }
        sum * (-x).exp()
    } else {
        // I0(x) e^{-x} ~ (2 pi x)^{-1/2} sum_k ((2k-1)!!)^2 / (k! 8^k x^k)
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k: f64 = 1.0;
        loop {
            let next = term * (2.0 * k - 1.0).powi(2) / (8.0 * k * x);
            if next >= term || next < 1e-17 * sum {
                break;
            }
            term = next;
            sum += term;
            k += 1.0;
        }
        sum / (2.0 * std::f64::consts::PI * x).sqrt()
    }
}

/// `ln(exp(-|x|) I0(x))`.
pub fn ln_i0_scaled(x: f64) -> f64 {
    i0_scaled(x).ln()
}
