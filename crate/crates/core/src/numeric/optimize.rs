//! Golden-section search for unimodal scalar functions.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub x: f64,
    pub value: f64,
}

/// Maximize a unimodal `f` on `[lo, hi]`. Stops when the bracket is narrower
/// than `x_tol` or after `max_iter` shrink steps. The endpoints are compared
/// too, so monotone functions return their boundary maximum.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, x_tol: f64, max_iter: usize) -> Extremum {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let fa_end = f(a);
    let fb_end = f(b);
    let mut best = if fb_end > fa_end {
        Extremum { x: b, value: fb_end }
    } else {
        Extremum { x: a, value: fa_end }
    };
    if b - a <= x_tol {
        return best;
    }

    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iter = 0;
    while (b - a) > x_tol && iter < max_iter {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iter += 1;
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v > best.value {
            best = Extremum { x, value: v };
        }
    }
    best
}

/// Minimize a unimodal `f` on `[lo, hi]`.
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, x_tol: f64, max_iter: usize) -> Extremum {
    let e = golden_max(|x| -f(x), lo, hi, x_tol, max_iter);
    Extremum {
        x: e.x,
        value: -e.value,
    }
}
