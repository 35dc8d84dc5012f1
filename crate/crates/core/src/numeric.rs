//! Small numerical helpers shared by the solvers.

/// `|x|^e` for `e > 0`, with `0^e = 0`.
#[inline]
pub fn apow(x: f64, e: f64) -> f64 {
    let a = x.abs();
    if a == 0.0 {
        0.0
    } else {
        a.powf(e)
    }
}

/// `|x|^e · x`, the odd extension of a power.
#[inline]
pub fn spow(x: f64, e: f64) -> f64 {
    apow(x, e) * x
}

/// Pairwise summation; result is independent of thread scheduling.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Least-squares slope through the origin.
pub fn slope_through_origin(xs: &[f64], ys: &[f64]) -> f64 {
    let xy: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| x * y).collect();
    let xx: Vec<f64> = xs.iter().map(|x| x * x).collect();
    pairwise_sum(&xy) / pairwise_sum(&xx)
}

/// Least-squares line `y = a + b x`; returns `(a, b)`.
pub fn affine_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let mx = mean(xs);
    let my = mean(ys);
    let sxy: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let sxx: Vec<f64> = xs.iter().map(|x| (x - mx) * (x - mx)).collect();
    let b = pairwise_sum(&sxy) / pairwise_sum(&sxx);
    (my - b * mx, b)
}

/// Cubic Hermite interpolation on one interval.
#[inline]
pub fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * d0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * d1
}

/// Fritsch–Carlson limiting of end slopes so the cubic on `[x0, x1]`
/// stays monotone. Slopes already inside the monotone region pass through.
pub fn monotone_slopes(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64) -> (f64, f64) {
    let delta = (y1 - y0) / (x1 - x0);
    if delta == 0.0 {
        return (0.0, 0.0);
    }
    let mut d0 = if d0 * delta < 0.0 { 0.0 } else { d0 };
    let mut d1 = if d1 * delta < 0.0 { 0.0 } else { d1 };
    let a = d0 / delta;
    let b = d1 / delta;
    let s = a * a + b * b;
    if s > 9.0 {
        let tau = 3.0 / s.sqrt();
        d0 = tau * a * delta;
        d1 = tau * b * delta;
    }
    (d0, d1)
}

/// Index `i` with `xs[i] <= x <= xs[i+1]` for sorted `xs`, clamped to valid intervals.
pub fn bracket(xs: &[f64], x: f64) -> usize {
    let i = xs.partition_point(|&v| v <= x);
    i.saturating_sub(1).min(xs.len().saturating_sub(2))
}
