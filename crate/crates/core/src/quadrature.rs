//! Composite quadrature on uniform samples.

use alloc::vec::Vec;

use crate::error::Result;
use crate::math;

/// Composite Simpson rule over uniformly spaced samples `f[0..=n]`.
///
/// An odd number of intervals closes with the 3/8 rule on the last three;
/// a single interval falls back to the trapezoid rule.
pub fn simpson(f: &[f64], h: f64) -> f64 {
    let n = f.len().saturating_sub(1);
    match n {
        0 => 0.0,
        1 => 0.5 * h * (f[0] + f[1]),
        2 => h / 3.0 * (f[0] + 4.0 * f[1] + f[2]),
        3 => 3.0 * h / 8.0 * (f[0] + 3.0 * f[1] + 3.0 * f[2] + f[3]),
        _ => {
            let m = if n % 2 == 0 { n } else { n - 3 };
            let mut s = f[0] + f[m];
            for (i, v) in f[1..m].iter().enumerate() {
                s += if i % 2 == 0 { 4.0 * v } else { 2.0 * v };
            }
            let mut total = h / 3.0 * s;
            if m < n {
                total += 3.0 * h / 8.0 * (f[m] + 3.0 * f[m + 1] + 3.0 * f[m + 2] + f[m + 3]);
            }
            total
        }
    }
}

/// Running integrals `F[k] = int_0^{k h} f`, third order per interval
/// (local quadratic through three neighbouring samples).
pub fn cumulative(f: &[f64], h: f64) -> Vec<f64> {
    let inc = interval_increments(f, h, &[]);
    let mut out = Vec::with_capacity(f.len());
    if f.is_empty() {
        return out;
    }
    let mut acc = 0.0;
    out.push(acc);
    for v in inc {
        acc += v;
        out.push(acc);
    }
    out
}

/// Integrals of `f` over each interval `[k h, (k+1) h]`, third order.
///
/// Intervals flagged in `skip` are treated as non-smooth: their increment is
/// zero (for the caller to fill) and no quadratic reaches across them.
pub fn interval_increments(f: &[f64], h: f64, skip: &[bool]) -> Vec<f64> {
    let n = f.len().saturating_sub(1);
    let skipped = |k: usize| skip.get(k).copied().unwrap_or(false);
    (0..n)
        .map(|k| {
            if skipped(k) {
                0.0
            } else if k >= 1 && !skipped(k - 1) {
                h / 12.0 * (-f[k - 1] + 8.0 * f[k] + 5.0 * f[k + 1])
            } else if k + 2 <= n && !skipped(k + 1) {
                h / 12.0 * (5.0 * f[k] + 8.0 * f[k + 1] - f[k + 2])
            } else {
                0.5 * h * (f[k] + f[k + 1])
            }
        })
        .collect()
}

/// Nodes and weights of 3-point Gauss-Legendre on `[-1, 1]`.
const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// Points and weights of 3-point Gauss-Legendre on `[lo, hi]` (exact for
/// quintics, never evaluates the endpoints).
pub fn gauss3(lo: f64, hi: f64) -> [(f64, f64); 3] {
    let (c, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    GAUSS3.map(|(x, w)| (c + r * x, r * w))
}

/// Integral of a fallible function over `[lo, hi]` by composite Simpson with
/// an even number of panels no wider than `max_step`.
pub fn integrate<F>(mut f: F, lo: f64, hi: f64, max_step: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if hi == lo {
        return Ok(0.0);
    }
    let mut n = math::ceil(((hi - lo) / max_step).abs()).max(2.0) as usize;
    if n % 2 == 1 {
        n += 1;
    }
    let h = (hi - lo) / n as f64;
    let mut s = f(lo)? + f(hi)?;
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(lo + k as f64 * h)?;
    }
    Ok(h / 3.0 * s)
}
