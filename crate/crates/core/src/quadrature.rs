//! Deterministic reductions and power-weighted time quadrature.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Size below which pairwise summation falls back to a simple loop.
const PAIRWISE_LEAF: usize = 128;

/// Pairwise (tree) summation of `f(i)` for `i` in `0..n`.
///
/// The reduction tree depends only on `n`, so results are bitwise
/// reproducible regardless of thread count, and the rounding error grows
/// like O(eps·log n) instead of O(eps·n).
pub fn pairwise_sum<T: Scalar>(n: usize, f: &impl Fn(usize) -> T) -> T {
    fn go<T: Scalar>(lo: usize, hi: usize, f: &impl Fn(usize) -> T) -> T {
        if hi - lo <= PAIRWISE_LEAF {
            let mut s = T::zero();
            for i in lo..hi {
                s += f(i);
            }
            s
        } else {
            let mid = lo + (hi - lo) / 2;
            go(lo, mid, f) + go(mid, hi, f)
        }
    }
    if n == 0 {
        T::zero()
    } else {
        go(0, n, f)
    }
}

/// Pairwise sum of a slice.
pub fn pairwise_sum_slice<T: Scalar>(v: &[T]) -> T {
    pairwise_sum(v.len(), &|i| v[i])
}

/// ∫_{t0}^{t1} s^{−a} (f0 + (f1 − f0)(s − t0)/(t1 − t0)) ds, in closed form.
///
/// Exact for integrands of the form s^{−a}·(affine in s), including
/// intervals starting at t0 = 0 (the weight is integrable for a < 1).
pub fn power_weighted_interval<T: Scalar>(a: T, t0: T, t1: T, f0: T, f1: T) -> T {
    debug_assert!(t1 > t0 && t0 >= T::zero());
    let one = T::one();
    // moments m0 = ∫ s^{-a} ds, m1 = ∫ s^{1-a} ds over [t0, t1]
    let m0 = (t1.powf(one - a) - t0.powf(one - a)) / (one - a);
    let m1 = (t1.powf(T::two() - a) - t0.powf(T::two() - a)) / (T::two() - a);
    let slope = (f1 - f0) / (t1 - t0);
    let intercept = f0 - slope * t0;
    intercept * m0 + slope * m1
}

/// Power-weighted trapezoid rule: ∫_{t[0]}^{t[last]} s^{−a} f(s) ds with f
/// affine on each interval of the node grid.
pub fn power_weighted_trapezoid<T: Scalar>(a: T, times: &[T], values: &[T]) -> Result<T> {
    if times.len() != values.len() {
        return Err(Error::InvalidInput(
            "times and values must have equal length".into(),
        ));
    }
    if times.len() < 2 {
        return Ok(T::zero());
    }
    Ok(pairwise_sum(times.len() - 1, &|i| {
        power_weighted_interval(a, times[i], times[i + 1], values[i], values[i + 1])
    }))
}

/// Plain trapezoid rule on a node grid.
pub fn trapezoid<T: Scalar>(times: &[T], values: &[T]) -> T {
    pairwise_sum(times.len().saturating_sub(1), &|i| {
        (values[i] + values[i + 1]) * T::half() * (times[i + 1] - times[i])
    })
}
