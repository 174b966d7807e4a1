//! Log-Gamma helpers.
//!
//! Every Gamma ratio in the estimators is evaluated in the log domain. The
//! half-step ratio `ln Γ(x+½) − ln Γ(x)` gets its own Stirling-difference
//! evaluation for large `x`, where subtracting two ~x·ln x magnitudes would
//! otherwise lose most of the significant digits.

use statrs::function::gamma::ln_gamma as statrs_ln_gamma;

/// Natural log of Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    statrs_ln_gamma(x)
}

// B_{2k} / (2k (2k-1)) for k = 1..7
const STIRLING: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
];

const HALF_RATIO_SERIES_MIN: f64 = 10.0;

fn stirling_tail(z: f64) -> f64 {
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    // Horner in 1/z^2, then one extra factor of 1/z.
    let mut acc = 0.0;
    for c in STIRLING.iter().rev() {
        acc = acc * inv2 + c;
    }
    acc * inv
}

/// `ln Γ(x + ½) − ln Γ(x)` for x > 0.
pub fn ln_gamma_half_ratio(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < HALF_RATIO_SERIES_MIN {
        return ln_gamma(x + 0.5) - ln_gamma(x);
    }
    let lead = x * (0.5 / x).ln_1p() - 0.5;
    0.5 * x.ln() + lead + stirling_tail(x + 0.5) - stirling_tail(x)
}

/// `ln C(n, k)` via log-Gamma; `-inf` when k > n.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if k == 0 || k == n {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Numerically stable `ln Σ exp(v)`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
