//! Exact one-dimensional ballot combinatorics in log domain, plus the
//! Gaussian and Chernoff bounds used to truncate the semi-analytic sums.

use std::f64::consts::PI;

const LN_2: f64 = std::f64::consts::LN_2;

// 0! .. 20!, all exactly representable in f64.
const SMALL_FACTORIAL: [f64; 21] = [
    1.0,
    1.0,
    2.0,
    6.0,
    24.0,
    120.0,
    720.0,
    5040.0,
    40320.0,
    362880.0,
    3628800.0,
    39916800.0,
    479001600.0,
    6227020800.0,
    87178291200.0,
    1307674368000.0,
    20922789888000.0,
    355687428096000.0,
    6402373705728000.0,
    121645100408832000.0,
    2432902008176640000.0,
];

/// ln Gamma(x) for x > 0: exact small factorials, upward argument shift, and
/// the Stirling series (accurate to a few ulps for the integer arguments the
/// binomial routines use).
pub fn ln_gamma(mut x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let mut shift = 0.0f64;
    while x < 21.0 {
        shift -= x.ln();
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 12.0
            + inv2 * (-1.0 / 360.0 + inv2 * (1.0 / 1260.0 + inv2 * (-1.0 / 1680.0 + inv2 / 1188.0))));
    shift + (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + series
}

/// ln(n!).
pub fn ln_factorial(n: u64) -> f64 {
    if n <= 20 {
        SMALL_FACTORIAL[n as usize].ln()
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// ln C(k, m); minus infinity outside 0 <= m <= k.
///
/// Below k = 1020 the coefficient still fits in f64, and the direct product
/// C = prod_i (k-m+i)/i carries ~m ulps of relative error — an order better
/// than differencing three large log-factorials. Above, Stirling.
pub fn ln_binomial(k: u64, m: i64) -> f64 {
    if m < 0 || m as u64 > k {
        return f64::NEG_INFINITY;
    }
    let m = (m as u64).min(k - m as u64);
    if k <= 1020 {
        let mut prod = 1.0f64;
        for i in 1..=m {
            prod *= (k - m + i) as f64 / i as f64;
        }
        prod.ln()
    } else {
        ln_factorial(k) - ln_factorial(m) - ln_factorial(k - m)
    }
}

/// P_0(Z_k = x) for the 1D symmetric walk, exactly and with its Gaussian
/// approximation sqrt(2/(pi k)) exp(-x^2/(2k)). The exact value is 0 on a
/// parity mismatch or when |x| > k.
pub fn binomial_point(k: u64, x: i64) -> (f64, f64) {
    let gaussian = (2.0 / (PI * k as f64)).sqrt() * (-(x * x) as f64 / (2.0 * k as f64)).exp();
    if x.unsigned_abs() > k || (k as i64 - x) % 2 != 0 {
        return (0.0, gaussian);
    }
    let m = (k as i64 - x) / 2;
    let exact = (ln_binomial(k, m) - k as f64 * LN_2).exp();
    (exact, gaussian)
}

/// P_x(min Z > 0, Z_k = y) for x, y >= 1: the reflection-principle difference
/// 2^{-k} [ C(k,(k-(x-y))/2) - C(k,(k-(x+y))/2) ], computed with the larger
/// binomial factored out for stability.
pub fn reflection_stay_positive(x: i64, y: i64, k: u64) -> f64 {
    debug_assert!(x >= 1 && y >= 1);
    let kk = k as i64;
    if (kk - (x - y)) % 2 != 0 || (x - y).abs() > kk {
        return 0.0;
    }
    let l1 = ln_binomial(k, (kk - (x - y)) / 2);
    let l2 = ln_binomial(k, (kk - (x + y)) / 2);
    // |x - y| <= x + y, so the first binomial dominates.
    (l1 - k as f64 * LN_2).exp() * (1.0 - (l2 - l1).exp())
}

/// P_u(min Z > 0 over k <= m): the reflection identities summed over every
/// parity-feasible endpoint.
pub fn stay_positive(u: i64, m: u64) -> f64 {
    debug_assert!(u >= 1 && m >= 1);
    let mut total = 0.0;
    let start = if (u + m as i64) % 2 == 0 { 2 } else { 1 };
    let mut y = start;
    while y <= u + m as i64 {
        total += reflection_stay_positive(u, y, m);
        y += 2;
    }
    total
}

/// Same probability by the complementary route: never hitting 0 means the
/// free walk from 0 stays in (-u, u], so the answer is one window sum of
/// point masses rather than a sum of differences.
pub fn stay_positive_window(u: i64, m: u64) -> f64 {
    debug_assert!(u >= 1 && m >= 1);
    let mut total = 0.0;
    for d in (1 - u)..=u {
        total += binomial_point(m, d).0;
    }
    total
}

/// P_0(Z_steps >= threshold), exact binomial upper tail.
pub fn srw_upper_tail(steps: u64, threshold: i64) -> f64 {
    let mut total = 0.0;
    let mut d = threshold;
    while d <= steps as i64 {
        total += binomial_point(steps, d).0;
        d += 1;
    }
    total
}

/// The Chernoff bound exp(-eps^2 k / 6) on the probability that the number
/// of horizontal steps among k-1 leaves the window
/// B = [(k-1)(1-eps)/2, (k-1)(1+eps)/2], and the window itself (inclusive
/// integer bounds).
pub fn chernoff_window_bound(k: u64, eps: f64) -> (f64, (i64, i64)) {
    debug_assert!(k >= 1 && eps > 0.0 && eps < 1.0);
    let bound = (-eps * eps * k as f64 / 6.0).exp();
    let half = (k - 1) as f64 / 2.0;
    let lo = (half * (1.0 - eps)).ceil() as i64;
    let hi = (half * (1.0 + eps)).floor() as i64;
    (bound, (lo, hi))
}
