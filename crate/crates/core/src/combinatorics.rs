//! Binomial coefficients and the pair-counting weights used by the
//! degeneracy-accelerated bounds.

/// `C(n, k)`, exact up to `n = 64`; zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step.
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

pub fn binomial_f64(n: usize, k: usize) -> f64 {
    binomial(n, k) as f64
}

/// Number of ordered pattern pairs `(a, b)` over `n` positions with
/// `|a| = v`, `|b| = u` and `|supp(a) ∪ supp(b)| = t`.
///
/// The pair is at Hamming distance `2t - v - u`.
pub fn pair_count(n: usize, v: usize, u: usize, t: usize) -> u128 {
    if t > n || t < v.max(u) || t > v + u {
        return 0;
    }
    binomial(n, t) * binomial(t, u) * binomial(u, v + u - t)
}

/// Range of union sizes `t` with non-zero [`pair_count`].
pub fn union_range(n: usize, v: usize, u: usize) -> core::ops::RangeInclusive<usize> {
    v.max(u)..=(v + u).min(n)
}
