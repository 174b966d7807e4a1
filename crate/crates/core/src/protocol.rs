//! The certification protocol: control-measurement scheduling, seed
//! accounting, the min-entropy bound and the resulting bit budget.
//!
//! Out of `m` measurements, `n_X = ⌈√m⌉` go to the control basis at positions
//! chosen by a uniform seed of `t(m) = ⌈log2 C(m, n_X)⌉` bits. With `H̃` the
//! Bayesian Rényi-½ estimate of the control outcomes,
//!
//! ```text
//! b_sec = (m − n_X)(q − H̃) − t(m),    rate = b_sec / m
//! ```
//!
//! Negative budgets are reported as-is: such a run certifies nothing.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigUint;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::bits::BitString;
use crate::combinatorics::{binomial, ceil_log2_binomial, unrank_combination};
use crate::entropy::{bayesian_h_half, max_entropy_half, CountsVector, ProbVector};
use crate::simulate::{sample_counts, stream_rng};
use crate::special::ln_gamma;
use crate::{Error, Result};

/// Largest composition count the exact expected-rate mode will enumerate.
pub const EXACT_COMPOSITION_BUDGET: u128 = 1_000_000;

/// `⌈√m⌉`.
pub fn ceil_sqrt(m: u64) -> u64 {
    if m == 0 {
        0
    } else {
        (m - 1).isqrt() + 1
    }
}

/// `(n_X, n_Z) = (⌈√m⌉, m − ⌈√m⌉)`.
pub fn schedule_sizes(m: u64) -> Result<(u64, u64)> {
    if m < 2 {
        return Err(Error::Domain(format!("need at least 2 measurements, got {m}")));
    }
    let n_x = ceil_sqrt(m);
    Ok((n_x, m - n_x))
}

/// Seed bits `t(m) = ⌈log2 C(m, ⌈√m⌉)⌉` needed to place the control slots.
pub fn seed_length(m: u64) -> Result<u64> {
    let (n_x, _) = schedule_sizes(m)?;
    Ok(ceil_log2_binomial(m, n_x))
}

/// Which of the `m` slots are control (X) measurements.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Schedule {
    m: u64,
    x_positions: Vec<u64>,
}

impl Schedule {
    pub fn new(m: u64, x_positions: Vec<u64>) -> Result<Self> {
        let (n_x, _) = schedule_sizes(m)?;
        if x_positions.len() as u64 != n_x {
            return Err(Error::Inconsistent(format!(
                "{} control slots, expected ⌈√{m}⌉ = {n_x}",
                x_positions.len()
            )));
        }
        if x_positions.windows(2).any(|w| w[0] >= w[1]) || x_positions.last().is_some_and(|&p| p >= m) {
            return Err(Error::Inconsistent("control slots must be strictly increasing and below m".into()));
        }
        Ok(Self { m, x_positions })
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn n_x(&self) -> u64 {
        self.x_positions.len() as u64
    }

    pub fn n_z(&self) -> u64 {
        self.m - self.n_x()
    }

    pub fn x_positions(&self) -> &[u64] {
        &self.x_positions
    }
}

/// Reads `width` bits starting at `start` as a big-endian integer (first bit
/// most significant).
fn read_block(seed: &BitString, start: usize, width: usize) -> BigUint {
    let nbytes = width.div_ceil(8);
    let mut be = vec![0u8; nbytes];
    for i in 0..width {
        if seed.get(start + i) {
            let pos = width - 1 - i;
            be[nbytes - 1 - pos / 8] |= 1 << (pos % 8);
        }
    }
    BigUint::from_bytes_be(&be)
}

/// Turns uniform seed bits into a uniformly random schedule.
///
/// Consecutive `t(m)`-bit blocks are read as integers until one falls below
/// `C(m, n_X)` (rejection sampling); it is then unranked into the control
/// positions. Returns the schedule and the number of seed bits consumed.
pub fn seed_to_schedule(seed: &BitString, m: u64) -> Result<(Schedule, usize)> {
    let (n_x, _) = schedule_sizes(m)?;
    let width = seed_length(m)? as usize;
    let total = binomial(m, n_x);
    let mut start = 0usize;
    loop {
        if start + width > seed.len() {
            return Err(Error::InsufficientSeed { available: seed.len() });
        }
        let candidate = read_block(seed, start, width);
        start += width;
        if candidate < total {
            let positions = unrank_combination(&candidate, m, n_x)?;
            return Ok((Schedule::new(m, positions)?, start));
        }
    }
}

/// The certified output of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub m: u64,
    pub n_x: u64,
    /// Measurement incompatibility log2(1/c), in bits.
    pub q: f64,
    pub h_half_estimate: f64,
    /// `q − h_half_estimate`; may be negative.
    pub min_entropy_bound: f64,
    pub seed_cost: u64,
    pub b_sec: f64,
    pub rate: f64,
}

impl Certificate {
    /// Builds a certificate from an entropy estimate, deriving the bound,
    /// bit budget and rate.
    pub fn from_estimate(m: u64, n_x: u64, q: f64, h_half_estimate: f64, seed_cost: u64) -> Self {
        let min_entropy_bound = q - h_half_estimate;
        let b_sec = (m - n_x) as f64 * min_entropy_bound - seed_cost as f64;
        Self {
            m,
            n_x,
            q,
            h_half_estimate,
            min_entropy_bound,
            seed_cost,
            b_sec,
            rate: b_sec / m as f64,
        }
    }

    pub fn certifies_anything(&self) -> bool {
        self.b_sec > 0.0
    }

    /// One `key=value` per line; floats use the shortest round-trip form.
    pub fn to_text(&self) -> String {
        let mut s = String::from("# upqrng certificate v1\n");
        for (k, v) in self.fields() {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    fn fields(&self) -> [(&'static str, String); 8] {
        [
            ("m", self.m.to_string()),
            ("n_x", self.n_x.to_string()),
            ("q", self.q.to_string()),
            ("h_half_estimate", self.h_half_estimate.to_string()),
            ("min_entropy_bound", self.min_entropy_bound.to_string()),
            ("seed_cost", self.seed_cost.to_string()),
            ("b_sec", self.b_sec.to_string()),
            ("rate", self.rate.to_string()),
        ]
    }

    /// Parses [`Certificate::to_text`] output. Unknown keys and `#` comments
    /// are ignored; derived fields must match their recomputation exactly.
    pub fn from_text(text: &str) -> Result<Self> {
        let map = parse_key_values(text)?;
        let get = |k: &str| -> Result<&str> {
            map.get(k)
                .map(String::as_str)
                .ok_or_else(|| Error::Malformed(format!("certificate missing `{k}`")))
        };
        let int = |k: &str| -> Result<u64> {
            get(k)?.parse().map_err(|e| Error::Malformed(format!("`{k}`: {e}")))
        };
        let float = |k: &str| -> Result<f64> {
            get(k)?.parse().map_err(|e| Error::Malformed(format!("`{k}`: {e}")))
        };
        let (m, n_x) = (int("m")?, int("n_x")?);
        if n_x > m {
            return Err(Error::Malformed(format!("n_x = {n_x} exceeds m = {m}")));
        }
        let cert = Self::from_estimate(m, n_x, float("q")?, float("h_half_estimate")?, int("seed_cost")?);
        for (key, value) in [
            ("min_entropy_bound", cert.min_entropy_bound),
            ("b_sec", cert.b_sec),
            ("rate", cert.rate),
        ] {
            if float(key)?.to_bits() != value.to_bits() {
                return Err(Error::Malformed(format!("`{key}` inconsistent with the other fields")));
            }
        }
        Ok(cert)
    }
}

pub(crate) fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Malformed(format!("line {}: expected key=value", lineno + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// Certifies a run of `m` measurements from its control counts.
pub fn certify(m: u64, counts: &CountsVector, q: f64) -> Result<Certificate> {
    let (n_x, _) = schedule_sizes(m)?;
    if counts.total() != n_x {
        return Err(Error::Inconsistent(format!(
            "counts total {} but the schedule has {n_x} control slots",
            counts.total()
        )));
    }
    if !(q > 0.0) {
        return Err(Error::Domain(format!("incompatibility q = {q} must be positive")));
    }
    Ok(Certificate::from_estimate(m, n_x, q, bayesian_h_half(counts), seed_length(m)?))
}

/// Closed-form qubit single-shot rate as a function of the error count n_1.
///
/// The Gamma ratios are built from the product Γ(n+3/2)/Γ(n+1) =
/// (√π/2)·Π_{k≤n}(1 + 1/(2k)), independently of the log-Gamma code path used
/// by [`certify`].
pub fn single_shot_rate_qubit(n_1: u64, m: u64) -> Result<f64> {
    let (n_x, n_z) = schedule_sizes(m)?;
    if n_1 > n_x {
        return Err(Error::OutOfRange(format!("n_1 = {n_1} exceeds n_X = {n_x}")));
    }
    // ln Γ(n+3/2)/Γ(n+1) for n = 0..=n_x+1
    let mut ln_ratio = Vec::with_capacity(n_x as usize + 2);
    let mut acc = (std::f64::consts::PI.sqrt() / 2.0).ln();
    ln_ratio.push(acc);
    for k in 1..=n_x + 1 {
        acc += (0.5 / k as f64).ln_1p();
        ln_ratio.push(acc);
    }
    let (a, b) = (ln_ratio[(n_x - n_1) as usize], ln_ratio[n_1 as usize]);
    let ln_sum = a.max(b) + (-(a - b).abs()).exp().ln_1p();
    let h = 2.0 * (ln_sum - ln_ratio[n_x as usize + 1]) / std::f64::consts::LN_2;
    let bits = n_z as f64 * (1.0 - h) - ceil_log2_binomial(m, n_x) as f64;
    Ok(bits / m as f64)
}

/// Binomial law of the qubit error count: Π(n_1) = C(n_X, n_1) p₀^{n_X−n_1} p₁^{n_1}.
///
/// Built by the ratio recurrence outward from the mode and normalized, so the
/// weights sum to one to rounding.
pub fn error_distribution(n_x: u64, p: &ProbVector) -> Result<Vec<f64>> {
    if p.len() != 2 {
        return Err(Error::InvalidDimension(p.len()));
    }
    let n = n_x as usize;
    let mut w = vec![0.0; n + 1];
    if p[1] == 0.0 || p[0] == 0.0 {
        w[if p[1] == 0.0 { 0 } else { n }] = 1.0;
        return Ok(w);
    }
    let odds = p[1] / p[0];
    let mode = (((n_x + 1) as f64 * p[1]).floor() as usize).min(n);
    w[mode] = 1.0;
    for k in mode..n {
        w[k + 1] = w[k] * (n - k) as f64 / (k + 1) as f64 * odds;
    }
    for k in (0..mode).rev() {
        w[k] = w[k + 1] * (k + 1) as f64 / ((n - k) as f64 * odds);
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    Ok(w)
}

/// `n · ln p` with `0 · ln 0 = 0`.
fn xlogy(n: f64, p: f64) -> f64 {
    if n == 0.0 {
        0.0
    } else {
        n * p.ln()
    }
}

/// How [`expected_rate`] averages over the multinomial law of the counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateMode {
    /// Enumerate every composition of n_X with its multinomial weight.
    Exact,
    /// Sample `reps` count vectors; repetition `i` draws from stream `i` of
    /// the generator seeded with `seed`, so results do not depend on `workers`.
    MonteCarlo { reps: usize, seed: u64, workers: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateStats {
    pub mean: f64,
    pub std: f64,
    /// Number of Monte Carlo samples, or `None` for exact enumeration.
    pub samples: Option<usize>,
}

impl RateStats {
    /// Standard error of the mean (0 for exact values).
    pub fn std_error(&self) -> f64 {
        match self.samples {
            Some(n) if n > 0 => self.std / (n as f64).sqrt(),
            _ => 0.0,
        }
    }
}

/// Number of compositions of `n` into `d` nonnegative parts.
pub fn composition_count(n: u64, d: usize) -> u128 {
    let (mut acc, k) = (1u128, d as u128 - 1);
    for i in 0..k {
        acc = acc * (n as u128 + k - i) / (i + 1);
    }
    acc
}

fn for_each_composition(n: u64, d: usize, f: &mut impl FnMut(&[u64])) {
    fn rec(rest: u64, slot: usize, buf: &mut [u64], f: &mut impl FnMut(&[u64])) {
        if slot + 1 == buf.len() {
            buf[slot] = rest;
            f(buf);
            return;
        }
        for v in 0..=rest {
            buf[slot] = v;
            rec(rest - v, slot + 1, buf, f);
        }
    }
    let mut buf = vec![0u64; d];
    rec(n, 0, &mut buf, f);
}

/// Mean and standard deviation of the single-run rate under
/// counts ~ Multinomial(⌈√m⌉, p).
pub fn expected_rate(m: u64, p: &ProbVector, q: f64, mode: RateMode) -> Result<RateStats> {
    let (n_x, n_z) = schedule_sizes(m)?;
    let t = seed_length(m)? as f64;
    let rate_of = |h: f64| (n_z as f64 * (q - h) - t) / m as f64;
    match mode {
        RateMode::Exact => {
            let compositions = composition_count(n_x, p.len());
            if compositions > EXACT_COMPOSITION_BUDGET {
                return Err(Error::OverBudget { compositions, budget: EXACT_COMPOSITION_BUDGET });
            }
            let ln_nx_fact = ln_gamma(n_x as f64 + 1.0);
            let mut weighted = Vec::with_capacity(compositions as usize);
            for_each_composition(n_x, p.len(), &mut |c| {
                let mut ln_w = ln_nx_fact;
                for (&n, &pi) in c.iter().zip(p.as_slice()) {
                    if n > 0 && pi == 0.0 {
                        return;
                    }
                    ln_w += xlogy(n as f64, pi) - ln_gamma(n as f64 + 1.0);
                }
                let counts = CountsVector::new(c.to_vec()).expect("d ≥ 2");
                weighted.push((ln_w.exp(), rate_of(bayesian_h_half(&counts))));
            });
            let norm: f64 = weighted.iter().map(|(w, _)| w).sum();
            let mean = weighted.iter().map(|(w, r)| w * r).sum::<f64>() / norm;
            let var = weighted.iter().map(|(w, r)| w * (r - mean).powi(2)).sum::<f64>() / norm;
            Ok(RateStats { mean, std: var.sqrt(), samples: None })
        }
        RateMode::MonteCarlo { reps, seed, workers } => {
            if reps == 0 {
                return Err(Error::Domain("Monte Carlo needs at least one repetition".into()));
            }
            let rates = parallel_map(reps, workers, |i| {
                let mut rng: ChaCha20Rng = stream_rng(seed, i as u64);
                rate_of(bayesian_h_half(&sample_counts(p, n_x, &mut rng)))
            });
            let (mean, std) = mean_std(&rates);
            Ok(RateStats { mean, std, samples: Some(reps) })
        }
    }
}

/// Evaluates `f(0..n)` on a pool of `workers` threads, preserving order.
pub(crate) fn parallel_map<T: Send>(n: usize, workers: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    if workers <= 1 {
        return (0..n).map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
        Err(_) => (0..n).map(f).collect(),
    }
}

/// Mean and sample standard deviation (Welford, in index order).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let (mut mean, mut m2) = (0.0, 0.0);
    for (i, &v) in values.iter().enumerate() {
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let var = if values.len() > 1 { m2 / (values.len() - 1) as f64 } else { 0.0 };
    (mean, var.sqrt())
}

/// Infinite-size limit of the rate: q − H_{1/2}(p).
pub fn asymptotic_rate(p: &ProbVector, q: f64) -> f64 {
    q - max_entropy_half(p)
}

/// Smallest m whose exact expected rate is positive.
pub fn min_m_positive(p: &ProbVector, q: f64) -> Result<u64> {
    let asymptote = asymptotic_rate(p, q);
    if asymptote <= 0.0 {
        return Err(Error::NoPositiveRate(asymptote));
    }
    let mut m = 2u64;
    loop {
        if expected_rate(m, p, q, RateMode::Exact)?.mean > 0.0 {
            return Ok(m);
        }
        m += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv(n: &[u64]) -> CountsVector {
        CountsVector::new(n.to_vec()).unwrap()
    }

    fn qubit() -> ProbVector {
        ProbVector::new(vec![0.9973, 0.0027]).unwrap()
    }

    #[test]
    fn schedule_sizes_examples() {
        assert_eq!(schedule_sizes(4).unwrap(), (2, 2));
        assert_eq!(schedule_sizes(1_000_000).unwrap(), (1000, 999_000));
        assert_eq!(schedule_sizes(35_605_089).unwrap(), (5967, 35_599_122));
        assert_eq!(schedule_sizes(5).unwrap(), (3, 2));
        assert!(schedule_sizes(1).is_err());
    }

    #[test]
    fn ceil_sqrt_matches_float_definition_near_squares() {
        for k in 1u64..2000 {
            for m in [k * k - 1, k * k, k * k + 1] {
                if m == 0 {
                    continue;
                }
                assert_eq!(ceil_sqrt(m), (m as f64).sqrt().ceil() as u64, "m={m}");
            }
        }
    }

    #[test]
    fn seed_length_examples() {
        assert_eq!(seed_length(4).unwrap(), 3);
        assert_eq!(seed_length(150).unwrap(), 61);
        assert!(seed_length(1).is_err());
    }

    #[test]
    fn seed_length_grows_like_sqrt_m_log_sqrt_m() {
        // The ratio tends to 1 from above with a log2(e)/log2(√m) correction.
        let mut prev = f64::INFINITY;
        for m in [10_000u64, 1_000_000, 100_000_000] {
            let t = seed_length(m).unwrap() as f64;
            let half_log = (m as f64).sqrt().log2();
            let ratio = t / ((m as f64).sqrt() * half_log);
            assert!(ratio < prev && ratio > 1.0);
            assert!(((ratio - 1.0) * half_log - std::f64::consts::LOG2_E).abs() < 0.25, "m={m}");
            prev = ratio;
        }
    }

    #[test]
    fn seed_to_schedule_accepts_first_block() {
        let seed: BitString = "000".parse().unwrap();
        let (s, used) = seed_to_schedule(&seed, 4).unwrap();
        assert_eq!(s.x_positions(), &[0, 1]);
        assert_eq!(used, 3);
    }

    #[test]
    fn seed_to_schedule_rejects_out_of_range_block() {
        let seed: BitString = "111 000".parse().unwrap();
        let (s, used) = seed_to_schedule(&seed, 4).unwrap();
        assert_eq!(s.x_positions(), &[0, 1]);
        assert_eq!(used, 6);
    }

    #[test]
    fn seed_to_schedule_reads_blocks_most_significant_first() {
        // "101" = 5, the last pair in lexicographic order.
        let (s, _) = seed_to_schedule(&"101".parse().unwrap(), 4).unwrap();
        assert_eq!(s.x_positions(), &[2, 3]);
        let (s, _) = seed_to_schedule(&"001".parse().unwrap(), 4).unwrap();
        assert_eq!(s.x_positions(), &[0, 2]);
    }

    #[test]
    fn seed_to_schedule_exhausted() {
        let seed: BitString = "111 110 11".parse().unwrap();
        assert!(matches!(
            seed_to_schedule(&seed, 4),
            Err(Error::InsufficientSeed { available: 8 })
        ));
    }

    #[test]
    fn seed_to_schedule_exactly_uniform_over_all_seeds() {
        // Every 6-bit seed: accepted ones must hit each pair equally often.
        let mut tally = BTreeMap::new();
        let mut rejected = 0;
        for s in 0u32..64 {
            let seed = BitString::from_bools((0..6).map(|i| s >> i & 1 == 1));
            match seed_to_schedule(&seed, 4) {
                Ok((sched, _)) => *tally.entry(sched.x_positions().to_vec()).or_insert(0) += 1,
                Err(Error::InsufficientSeed { .. }) => rejected += 1,
                Err(e) => panic!("{e}"),
            }
        }
        assert_eq!(tally.len(), 6);
        let counts: Vec<_> = tally.values().copied().collect();
        assert!(counts.iter().all(|&c| c == counts[0]));
        assert_eq!(rejected, 4);
    }

    #[test]
    fn certify_large_run_budget() {
        let m = 5967u64 * 5967;
        let t = seed_length(m).unwrap();
        assert_eq!(t, 83_444);
        let cert = Certificate::from_estimate(m, 5967, 1.0, 1.0 - 0.8437, t);
        assert!((cert.b_sec - 29_951_535.2314).abs() < 1e-3);
        assert!((cert.b_sec / 29.951e6 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn certify_uniform_counts_certifies_nothing() {
        for m in [100u64, 10_000, 1_000_000] {
            let n = ceil_sqrt(m);
            let cert = certify(m, &cv(&[n / 2, n - n / 2]), 1.0).unwrap();
            // The estimator sits slightly below 1 on balanced counts; the seed
            // cost still makes the budget negative.
            assert!(cert.min_entropy_bound < 0.031);
            assert!(cert.b_sec < 0.0 && !cert.certifies_anything());
        }
    }

    #[test]
    fn certify_small_positive_run() {
        // Frozen from the exact oracle: H̃(13,0) = 0.5170487471, t(150) = 61.
        let cert = certify(150, &cv(&[13, 0]), 1.0).unwrap();
        assert_eq!(cert.seed_cost, 61);
        assert!((cert.b_sec - 5.164_321_641_41).abs() < 1e-9);
        assert!(cert.certifies_anything());
        assert_eq!(cert.rate, cert.b_sec / 150.0);
    }

    #[test]
    fn certify_rejects_mismatched_counts() {
        assert!(matches!(certify(150, &cv(&[12, 0]), 1.0), Err(Error::Inconsistent(_))));
        assert!(certify(150, &cv(&[13, 0]), 0.0).is_err());
    }

    #[test]
    fn certify_is_deterministic() {
        let a = certify(10_000, &cv(&[97, 3]), 1.0).unwrap();
        let b = certify(10_000, &cv(&[97, 3]), 1.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn certificate_text_round_trip() {
        let cert = certify(10_000, &cv(&[97, 3]), 1.0).unwrap();
        assert_eq!(Certificate::from_text(&cert.to_text()).unwrap(), cert);
        let tampered = cert.to_text().replace("seed_cost=804", "seed_cost=805");
        assert!(Certificate::from_text(&tampered).is_err());
        assert!(Certificate::from_text("m=4\n").is_err());
        assert!(Certificate::from_text("garbage").is_err());
    }

    #[test]
    fn single_shot_matches_certify() {
        for m in (2u64..=10_000).step_by(37).chain([4, 9, 100, 10_000]) {
            let n_x = ceil_sqrt(m);
            for n1 in 0..=n_x {
                let direct = single_shot_rate_qubit(n1, m).unwrap();
                let via = certify(m, &cv(&[n_x - n1, n1]), 1.0).unwrap().rate;
                assert!((direct - via).abs() < 1e-12, "m={m} n1={n1}: {direct} vs {via}");
            }
        }
    }

    #[test]
    fn single_shot_zero_errors_at_one_million() {
        // Exact evaluation; the zero-error run sits above the asymptote 0.8575.
        let r = single_shot_rate_qubit(0, 1_000_000).unwrap();
        assert!((r - 0.909_396_080_959_983_9).abs() < 1e-11);
    }

    #[test]
    fn single_shot_rates_are_quantized() {
        let m = 1000;
        let n_x = ceil_sqrt(m);
        let mut rates: Vec<f64> = (0..=n_x).map(|n1| single_shot_rate_qubit(n1, m).unwrap()).collect();
        rates.sort_by(f64::total_cmp);
        rates.dedup();
        assert!(rates.len() as u64 <= n_x + 1);
        assert!(single_shot_rate_qubit(n_x + 1, m).is_err());
    }

    #[test]
    fn error_distribution_examples() {
        let point = error_distribution(50, &ProbVector::new(vec![1.0, 0.0]).unwrap()).unwrap();
        assert_eq!(point[0], 1.0);
        assert!(point[1..].iter().all(|&w| w == 0.0));

        let pi = error_distribution(100, &qubit()).unwrap();
        let low: f64 = pi[..3].iter().sum();
        assert!(low > 0.99, "mass on n_1 ≤ 2 is {low}");
        let argmax = pi.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!(argmax <= 1);

        for n_x in [1u64, 10, 1000, 10_000] {
            let s: f64 = error_distribution(n_x, &qubit()).unwrap().iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "n_x={n_x} sum={s}");
        }
    }

    #[test]
    fn expected_rate_degenerate_source() {
        let p = ProbVector::new(vec![1.0, 0.0]).unwrap();
        let r = expected_rate(400, &p, 1.0, RateMode::Exact).unwrap();
        assert!((r.mean - single_shot_rate_qubit(0, 400).unwrap()).abs() < 1e-12);
        assert_eq!(r.std, 0.0);
    }

    #[test]
    fn expected_rate_exact_matches_oracle() {
        // mpmath enumeration of the multinomial average.
        let cases = [
            (100u64, -0.050_434_783_493_520_09),
            (1000, 0.394_416_319_027_945_6),
            (10_000, 0.655_802_804_152_722_2),
        ];
        for (m, expected) in cases {
            let r = expected_rate(m, &qubit(), 1.0, RateMode::Exact).unwrap();
            assert!((r.mean - expected).abs() < 1e-12, "m={m}: {}", r.mean);
        }
    }

    #[test]
    fn expected_rate_exact_vs_monte_carlo() {
        let exact = expected_rate(400, &qubit(), 1.0, RateMode::Exact).unwrap();
        let mc = expected_rate(
            400,
            &qubit(),
            1.0,
            RateMode::MonteCarlo { reps: 100_000, seed: 2024, workers: 4 },
        )
        .unwrap();
        assert!((exact.mean - mc.mean).abs() < 3.0 * mc.std_error(), "{exact:?} vs {mc:?}");
        assert!((exact.std / mc.std - 1.0).abs() < 0.02);
    }

    #[test]
    fn monte_carlo_is_independent_of_worker_count() {
        let mode = |workers| RateMode::MonteCarlo { reps: 300, seed: 9, workers };
        let a = expected_rate(2500, &qubit(), 1.0, mode(1)).unwrap();
        let b = expected_rate(2500, &qubit(), 1.0, mode(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exact_mode_budget() {
        let p = ProbVector::uniform(4).unwrap();
        assert!(matches!(
            expected_rate(1_000_000, &p, 2.0, RateMode::Exact),
            Err(Error::OverBudget { .. })
        ));
        assert_eq!(composition_count(1000, 2), 1001);
        assert_eq!(composition_count(9, 4), 220);
    }

    #[test]
    fn asymptotic_rate_examples() {
        assert!((asymptotic_rate(&qubit(), 1.0) - 0.857_543_876_616_085_9).abs() < 1e-13);
        assert!(asymptotic_rate(&ProbVector::uniform(4).unwrap(), 2.0).abs() < 1e-14);
    }

    #[test]
    fn min_m_positive_examples() {
        let m = min_m_positive(&qubit(), 1.0).unwrap();
        assert_eq!(m, 131);
        assert!(matches!(
            min_m_positive(&ProbVector::uniform(2).unwrap(), 1.0),
            Err(Error::NoPositiveRate(_))
        ));
    }

    #[test]
    fn min_m_positive_deterministic_source_by_direct_scan() {
        let p = ProbVector::new(vec![1.0, 0.0]).unwrap();
        let direct = (2u64..)
            .find(|&m| {
                let n_x = ceil_sqrt(m);
                let h = bayesian_h_half(&cv(&[n_x, 0]));
                (m - n_x) as f64 * (1.0 - h) > seed_length(m).unwrap() as f64
            })
            .unwrap();
        assert_eq!(min_m_positive(&p, 1.0).unwrap(), direct);
    }

    #[test]
    fn expansion_beats_seed_from_ten_thousand() {
        for m in [10_000u64, 30_000, 100_000, 1_000_000] {
            let r = expected_rate(m, &qubit(), 1.0, RateMode::Exact).unwrap();
            assert!(r.mean * m as f64 > seed_length(m).unwrap() as f64, "m={m}");
        }
    }

    #[test]
    fn gap_to_asymptote_shrinks() {
        let asym = asymptotic_rate(&qubit(), 1.0);
        let gaps: Vec<f64> = [1_000u64, 10_000, 100_000, 1_000_000]
            .iter()
            .map(|&m| asym - expected_rate(m, &qubit(), 1.0, RateMode::Exact).unwrap().mean)
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
        assert!(gaps.iter().all(|&g| g > 0.0));
    }

    #[test]
    fn seed_cost_alone_exceeds_a_thousandth_at_1e8() {
        // Lower bound on asymptote − E[rate] at m = 1e8: the seed fraction t/m.
        let m = 100_000_000u64;
        let t = seed_length(m).unwrap();
        assert_eq!(t, 147_296);
        assert!(t as f64 / m as f64 > 1e-3);
    }
}
