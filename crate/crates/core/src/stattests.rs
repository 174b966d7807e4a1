//! A small statistical battery for bit strings: frequency, runs, block
//! frequency and a byte-level chi-square, plus a Kolmogorov–Smirnov check for
//! the uniformity of p-values across many strings.
//!
//! Passing these tests says the string looks random to a classical observer.
//! It says nothing about side information held by an adversary; only the
//! certificate does.

use std::fmt::{self, Write as _};

use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

use crate::bits::BitString;
use crate::{Error, Result};

pub const ALPHA_WARN: f64 = 0.01;
pub const ALPHA_FAIL: f64 = 0.001;
pub const MIN_BITS: usize = 100;
pub const MIN_BLOCK_LEN: usize = 20;
pub const MIN_CHI_SQUARE_BYTES: usize = 5 * 256;
pub const MIN_BATTERY_BITS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub p_value: f64,
}

impl TestReport {
    fn new(name: &str, statistic: f64, p_value: f64) -> Self {
        Self { name: name.to_string(), statistic, p_value: p_value.clamp(0.0, 1.0) }
    }

    /// Passes at significance 0.01.
    pub fn pass_01(&self) -> bool {
        self.p_value >= ALPHA_WARN
    }

    /// Passes at significance 0.001.
    pub fn pass_001(&self) -> bool {
        self.p_value >= ALPHA_FAIL
    }

    pub fn csv_row(&self) -> String {
        let verdict = |ok: bool| if ok { "pass" } else { "fail" };
        format!(
            "{},{:.6},{:.6e},{},{}",
            self.name,
            self.statistic,
            self.p_value,
            verdict(self.pass_01()),
            verdict(self.pass_001())
        )
    }
}

fn require(bits: usize, needed: usize) -> Result<()> {
    if bits < needed {
        Err(Error::TooShort { needed, got: bits })
    } else {
        Ok(())
    }
}

/// Frequency test: `erfc(|Σ(2b−1)| / √(2n))`. Needs at least 100 bits.
pub fn monobit(bits: &BitString) -> Result<TestReport> {
    let n = bits.len();
    require(n, MIN_BITS)?;
    let s = 2.0 * bits.count_ones() as f64 - n as f64;
    let s_obs = s.abs() / (n as f64).sqrt();
    Ok(TestReport::new("monobit", s_obs, erfc(s_obs / std::f64::consts::SQRT_2)))
}

/// Runs test. A string failing the frequency prerequisite
/// `|π − ½| ≥ 2/√n` gets p = 0. Needs at least 100 bits.
pub fn runs_test(bits: &BitString) -> Result<TestReport> {
    let n = bits.len();
    require(n, MIN_BITS)?;
    let nf = n as f64;
    let pi = bits.count_ones() as f64 / nf;
    let words = bits.to_words();
    let mut runs = 1u64;
    for (k, &w) in words.iter().enumerate() {
        // transitions between bit i and i+1 inside the word and across the boundary
        let next = words.get(k + 1).copied().unwrap_or(0);
        let shifted = (w >> 1) | (next << 63);
        let mut diff = w ^ shifted;
        let valid = n.saturating_sub(1).saturating_sub(64 * k).min(64);
        if valid < 64 {
            diff &= (1u64 << valid) - 1;
        }
        runs += diff.count_ones() as u64;
    }
    let v = runs as f64;
    if (pi - 0.5).abs() >= 2.0 / nf.sqrt() {
        return Ok(TestReport::new("runs", v, 0.0));
    }
    let spread = 2.0 * (2.0 * nf).sqrt() * pi * (1.0 - pi);
    let p = erfc((v - 2.0 * nf * pi * (1.0 - pi)).abs() / spread);
    Ok(TestReport::new("runs", v, p))
}

/// Frequency within blocks of `block_len` bits; trailing bits are dropped.
/// Needs `block_len ≥ 20`, at least one block and 100 bits in total.
pub fn block_frequency(bits: &BitString, block_len: usize) -> Result<TestReport> {
    require(bits.len(), MIN_BITS)?;
    if block_len < MIN_BLOCK_LEN {
        return Err(Error::Domain(format!("block length {block_len} below {MIN_BLOCK_LEN}")));
    }
    let blocks = bits.len() / block_len;
    require(blocks, 1)?;
    let mut chi2 = 0.0;
    for b in 0..blocks {
        let ones = (b * block_len..(b + 1) * block_len).filter(|&i| bits.get(i)).count();
        let dev = ones as f64 / block_len as f64 - 0.5;
        chi2 += dev * dev;
    }
    chi2 *= 4.0 * block_len as f64;
    Ok(TestReport::new("block_frequency", chi2, chi2_sf(blocks as f64, chi2)))
}

/// Chi-square of byte values over 256 bins (255 degrees of freedom). Only
/// whole bytes are used; needs at least 5 expected counts per bin.
pub fn chi_square_bytes(bits: &BitString) -> Result<TestReport> {
    let nbytes = bits.len() / 8;
    require(nbytes, MIN_CHI_SQUARE_BYTES)?;
    let mut hist = [0u64; 256];
    for &b in &bits.as_bytes()[..nbytes] {
        hist[b as usize] += 1;
    }
    let expected = nbytes as f64 / 256.0;
    let chi2: f64 = hist.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
    Ok(TestReport::new("chi_square_bytes", chi2, chi2_sf(255.0, chi2)))
}

/// Upper tail of the chi-square distribution with `df` degrees of freedom.
fn chi2_sf(df: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        gamma_ur(df / 2.0, x / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    /// Some p-value below 0.01 but none below 0.001.
    Warn,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Warn => "warn",
            Verdict::Fail => "fail",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatteryReport {
    pub reports: Vec<TestReport>,
    pub verdict: Verdict,
}

pub const CSV_HEADER: &str = "test,statistic,p_value,verdict01,verdict001";

impl BatteryReport {
    pub fn to_csv(&self) -> String {
        let mut s = format!("{CSV_HEADER}\n");
        for r in &self.reports {
            let _ = writeln!(s, "{}", r.csv_row());
        }
        s
    }
}

/// Block length used by the battery: at most 99 blocks, each ≥ 20 bits.
pub fn battery_block_len(n: usize) -> usize {
    n.div_ceil(99).max(MIN_BLOCK_LEN)
}

/// Runs all four tests. Needs at least 10⁶ bits.
pub fn battery(bits: &BitString) -> Result<BatteryReport> {
    require(bits.len(), MIN_BATTERY_BITS)?;
    battery_unchecked(bits)
}

/// The battery without the length floor, for shorter strings in meta tests.
pub fn battery_unchecked(bits: &BitString) -> Result<BatteryReport> {
    let reports = vec![
        monobit(bits)?,
        runs_test(bits)?,
        block_frequency(bits, battery_block_len(bits.len()))?,
        chi_square_bytes(bits)?,
    ];
    let verdict = if reports.iter().any(|r| !r.pass_001()) {
        Verdict::Fail
    } else if reports.iter().any(|r| !r.pass_01()) {
        Verdict::Warn
    } else {
        Verdict::Pass
    };
    Ok(BatteryReport { reports, verdict })
}

/// One-sample Kolmogorov–Smirnov test of `samples` against U(0, 1).
/// Returns `(D, p)` with the asymptotic Kolmogorov distribution and
/// Stephens' small-sample correction.
pub fn ks_uniform(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            ((i + 1) as f64 / n - x).max(x - i as f64 / n)
        })
        .fold(0.0, f64::max);
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    Ok((d, kolmogorov_q(lambda)))
}

/// `Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} exp(−2k²λ²)`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
