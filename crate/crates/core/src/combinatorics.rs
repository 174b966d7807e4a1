//! Exact binomials and the lexicographic combinatorial number system.
//!
//! The seed-to-schedule map needs a bijection between `[0, C(m, k))` and the
//! k-subsets of `{0, …, m−1}`. Subsets are ranked in lexicographic order of
//! their sorted element lists, so index 0 is `{0, 1, …, k−1}`.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::special::ln_gamma;
use crate::{Error, Result};

/// Below this `m` the seed length is always computed with exact integers.
pub const EXACT_BINOMIAL_LIMIT: u64 = 1_000_000;

/// Exact `C(n, k)`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `⌈log2 x⌉` for a positive integer (0 for x = 1).
pub fn ceil_log2(x: &BigUint) -> u64 {
    debug_assert!(!x.is_zero());
    (x - 1u32).bits()
}

/// `⌈log2 C(n, k)⌉`, bit-exact.
///
/// Exact big-integer evaluation for `n ≤ EXACT_BINOMIAL_LIMIT`; above that a
/// log-domain evaluation with an explicit error interval is used, falling back
/// to exact integers whenever the interval straddles an integer.
pub fn ceil_log2_binomial(n: u64, k: u64) -> u64 {
    ceil_log2_binomial_with_limit(n, k, EXACT_BINOMIAL_LIMIT)
}

pub(crate) fn ceil_log2_binomial_with_limit(n: u64, k: u64, exact_limit: u64) -> u64 {
    assert!(k <= n, "C({n}, {k}) is zero");
    if n <= exact_limit {
        return ceil_log2(&binomial(n, k));
    }
    match log2_binomial_interval(n, k) {
        (lo, hi) if lo.ceil() == hi.ceil() && lo > 0.0 => hi.ceil() as u64,
        _ => ceil_log2(&binomial(n, k)),
    }
}

/// Bracketing interval `[lo, hi]` for `log2 C(n, k)`.
fn log2_binomial_interval(n: u64, k: u64) -> (f64, f64) {
    let k = k.min(n - k);
    // Σ ln(n−i) − ln k!, summed directly so that no two large magnitudes cancel.
    let mut sum = 0.0f64;
    for i in 0..k {
        sum += ((n - i) as f64).ln();
    }
    let lnk = ln_gamma(k as f64 + 1.0);
    let ln_c = sum - lnk;
    let err = 8.0 * f64::EPSILON * (k as f64 + 2.0) * (sum + lnk) + 1e-9;
    let l2 = std::f64::consts::LN_2;
    ((ln_c - err) / l2, (ln_c + err) / l2)
}

/// Maps a lexicographic rank in `[0, C(m, k))` to the sorted k-subset.
pub fn unrank_combination(index: &BigUint, m: u64, k: u64) -> Result<Vec<u64>> {
    if k > m {
        return Err(Error::OutOfRange(format!("k = {k} exceeds m = {m}")));
    }
    let total = binomial(m, k);
    if index >= &total {
        return Err(Error::OutOfRange(format!("rank must be below C({m}, {k})")));
    }
    let mut rest = index.clone();
    let mut out = Vec::with_capacity(k as usize);
    if k == 0 {
        return Ok(out);
    }
    // count = C(m − c − 1, r − 1): subsets whose next element is c.
    let mut count = binomial(m - 1, k - 1);
    let mut remaining = k;
    let mut c = 0u64;
    loop {
        if rest < count {
            out.push(c);
            remaining -= 1;
            if remaining == 0 {
                break;
            }
            count *= remaining;
            count /= m - c - 1;
        } else {
            rest -= &count;
            count *= m - c - remaining;
            count /= m - c - 1;
        }
        c += 1;
    }
    Ok(out)
}

/// Inverse of [`unrank_combination`].
pub fn rank_combination(subset: &[u64], m: u64) -> Result<BigUint> {
    let k = subset.len() as u64;
    if k > m {
        return Err(Error::OutOfRange(format!("{k} elements from {m}")));
    }
    if subset.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::OutOfRange("subset must be strictly increasing".into()));
    }
    if subset.last().is_some_and(|&last| last >= m) {
        return Err(Error::OutOfRange(format!("element beyond m = {m}")));
    }
    let mut rank = BigUint::zero();
    if k == 0 {
        return Ok(rank);
    }
    let mut count = binomial(m - 1, k - 1);
    let mut remaining = k;
    let mut c = 0u64;
    for &next in subset {
        while c < next {
            rank += &count;
            count *= m - c - remaining;
            count /= m - c - 1;
            c += 1;
        }
        remaining -= 1;
        if remaining == 0 {
            break;
        }
        count *= remaining;
        count /= m - c - 1;
        c += 1;
    }
    Ok(rank)
}
