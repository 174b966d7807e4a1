//! Tomographic comparator for qubit sources.
//!
//! Instead of bounding the generation-basis min-entropy with the Rényi-½
//! entropy of one control basis, the tomographic approach estimates the two
//! Bloch components transverse to the generation axis and uses
//!
//! ```text
//! H_min(Z|E) ≥ 1 − log2(1 + √(1 − r_x² − r_y²))
//! ```
//!
//! Frame: Z is the generation basis and X the control basis, so for the
//! experimental qubit r_x is the large component (≈ 0.9946) and r_z the small
//! one (≈ 0.004). The third axis Y is only measured by the tomographic
//! protocol. With `r_y = 0` the two bounds coincide.

use std::fmt::Write as _;

use rand::Rng;

use crate::combinatorics::ceil_log2_binomial;
use crate::entropy::{bayesian_h_half, ProbVector};
use crate::protocol::{mean_std, parallel_map, schedule_sizes, seed_length, Certificate};
use crate::quantum::BlochVector;
use crate::simulate::{sample_counts, stream_rng, SourceModel};
use crate::{Error, Result};

/// Radius that unphysical estimates are pulled back to.
pub const RESCALE_NORM: f64 = 1.0 - 1e-12;

/// `1 − log2(1 + √(1 − r_x² − r_y²))`.
pub fn fiorentino_bound(r_x: f64, r_y: f64) -> Result<f64> {
    let s = r_x * r_x + r_y * r_y;
    if !(s <= 1.0 + 1e-15) {
        return Err(Error::Domain(format!("r_x² + r_y² = {s} exceeds 1")));
    }
    Ok(1.0 - (1.0 + (1.0 - s).max(0.0).sqrt()).log2())
}

/// The control-basis bound expressed through the Bloch component along X.
pub fn up_bound_rx(r_x: f64) -> Result<f64> {
    if !(r_x.abs() <= 1.0) {
        return Err(Error::Domain(format!("|r_x| = {} exceeds 1", r_x.abs())));
    }
    Ok(1.0 - (1.0 + (1.0 - r_x * r_x).sqrt()).log2())
}

/// Bayesian (Laplace) estimate of a Bloch component from its outcome counts.
pub fn estimate_r(n_0: u64, n_1: u64) -> f64 {
    (n_0 as f64 - n_1 as f64) / (n_0 as f64 + n_1 as f64 + 2.0)
}

/// Slot allocation of the tomographic protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TomoSchedule {
    pub m: u64,
    /// Slots per transverse axis, ⌈√m/2⌉.
    pub n_x: u64,
    pub n_z: u64,
    pub seed_cost: u64,
}

impl TomoSchedule {
    pub fn new(m: u64) -> Result<Self> {
        if m < 4 {
            return Err(Error::Domain(format!("tomographic schedule needs m ≥ 4, got {m}")));
        }
        let n_x = half_sqrt_ceil(m);
        Ok(Self { m, n_x, n_z: m - 2 * n_x, seed_cost: 2 * ceil_log2_binomial(m, 2 * n_x) })
    }

    pub fn n_y(&self) -> u64 {
        self.n_x
    }
}

/// ⌈√m / 2⌉ in integer arithmetic: the least k with 4k² ≥ m.
fn half_sqrt_ceil(m: u64) -> u64 {
    let mut k = ((m as f64).sqrt() / 2.0).ceil() as u64;
    while k > 0 && 4 * (k - 1) * (k - 1) >= m {
        k -= 1;
    }
    while 4 * k * k < m {
        k += 1;
    }
    k
}

/// Seed bits t*(m) consumed by the tomographic protocol.
pub fn tomo_seed_length(m: u64) -> Result<u64> {
    Ok(TomoSchedule::new(m)?.seed_cost)
}

/// Outcome counts of the two transverse axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TomoCounts {
    pub n_0x: u64,
    pub n_1x: u64,
    pub n_0y: u64,
    pub n_1y: u64,
}

impl TomoCounts {
    pub fn estimates(&self) -> (f64, f64) {
        let r_x = estimate_r(self.n_0x, self.n_1x);
        let r_y = estimate_r(self.n_0y, self.n_1y);
        let norm = r_x.hypot(r_y);
        if norm > RESCALE_NORM {
            (r_x * RESCALE_NORM / norm, r_y * RESCALE_NORM / norm)
        } else {
            (r_x, r_y)
        }
    }
}

/// Finite-m rate of the tomographic protocol.
pub fn tomo_rate(m: u64, counts: &TomoCounts) -> Result<f64> {
    let sched = TomoSchedule::new(m)?;
    if counts.n_0x + counts.n_1x != sched.n_x || counts.n_0y + counts.n_1y != sched.n_y() {
        return Err(Error::Inconsistent(format!(
            "tomographic counts ({}, {}) do not match {} slots per axis",
            counts.n_0x + counts.n_1x,
            counts.n_0y + counts.n_1y,
            sched.n_x
        )));
    }
    let (r_x, r_y) = counts.estimates();
    let bound = fiorentino_bound(r_x, r_y)?;
    Ok((sched.n_z as f64 * bound - sched.seed_cost as f64) / m as f64)
}

/// Qubit source given by its Bloch vector in the comparison frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TomoSource {
    pub bloch: BlochVector,
}

impl TomoSource {
    pub fn new(bloch: BlochVector) -> Self {
        Self { bloch }
    }

    pub fn from_model(model: &SourceModel) -> Result<Self> {
        if model.dim() != 2 {
            return Err(Error::Unsupported(format!(
                "tomographic comparison needs a qubit, got d = {}",
                model.dim()
            )));
        }
        Ok(Self::new(model.bloch()?))
    }

    /// Pure state with the given control and generation components; r_y ≥ 0
    /// takes up the remaining length.
    pub fn pure(r_x: f64, r_z: f64) -> Result<Self> {
        let rest = 1.0 - r_x * r_x - r_z * r_z;
        if rest < -1e-12 {
            return Err(Error::InvalidState(format!("r_x² + r_z² = {} exceeds 1", 1.0 - rest)));
        }
        Ok(Self::new(BlochVector::new(r_x, rest.max(0.0).sqrt(), r_z)?))
    }

    pub fn purity(&self) -> f64 {
        (1.0 + self.bloch.norm().powi(2)) / 2.0
    }

    fn axis_probs(r: f64) -> ProbVector {
        let p0 = ((1.0 + r) / 2.0).clamp(0.0, 1.0);
        ProbVector::new(vec![p0, 1.0 - p0]).expect("valid binary distribution")
    }

    pub fn x_probs(&self) -> ProbVector {
        Self::axis_probs(self.bloch.x)
    }

    pub fn y_probs(&self) -> ProbVector {
        Self::axis_probs(self.bloch.y)
    }

    pub fn up_asymptote(&self) -> f64 {
        up_bound_rx(self.bloch.x.clamp(-1.0, 1.0)).expect("clamped")
    }

    pub fn tomo_asymptote(&self) -> f64 {
        let (x, y) = (self.bloch.x, self.bloch.y);
        let norm = x.hypot(y);
        let scale = if norm > 1.0 { 1.0 / norm } else { 1.0 };
        fiorentino_bound(x * scale, y * scale).expect("clamped")
    }
}

/// One row of a comparison sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareRow {
    pub m: u64,
    pub up_mean: f64,
    pub up_std: f64,
    pub tomo_mean: f64,
    pub tomo_std: f64,
}

/// Draws one repetition of both protocols at size m.
fn compare_once<R: Rng + ?Sized>(source: &TomoSource, m: u64, rng: &mut R) -> Result<(f64, f64)> {
    let (n_x, _) = schedule_sizes(m)?;
    let up_counts = sample_counts(&source.x_probs(), n_x, rng);
    let up = Certificate::from_estimate(m, n_x, 1.0, bayesian_h_half(&up_counts), seed_length(m)?).rate;

    let sched = TomoSchedule::new(m)?;
    let cx = sample_counts(&source.x_probs(), sched.n_x, rng);
    let cy = sample_counts(&source.y_probs(), sched.n_y(), rng);
    let counts = TomoCounts { n_0x: cx[0], n_1x: cx[1], n_0y: cy[0], n_1y: cy[1] };
    Ok((up, tomo_rate(m, &counts)?))
}

/// Monte Carlo rate curves of both protocols on the same source.
///
/// Repetition `i` at grid index `g` uses stream `(g << 32) | i` of `seed`,
/// so the table does not depend on `workers`.
pub fn compare_sweep(source: &TomoSource, m_grid: &[u64], reps: usize, seed: u64, workers: usize) -> Result<Vec<CompareRow>> {
    if reps == 0 {
        return Err(Error::Domain("comparison needs at least one repetition".into()));
    }
    m_grid
        .iter()
        .enumerate()
        .map(|(g, &m)| {
            TomoSchedule::new(m)?;
            let draws = parallel_map(reps, workers, |i| {
                compare_once(source, m, &mut stream_rng(seed, ((g as u64) << 32) | i as u64))
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            let (up_mean, up_std) = mean_std(&draws.iter().map(|d| d.0).collect::<Vec<_>>());
            let (tomo_mean, tomo_std) = mean_std(&draws.iter().map(|d| d.1).collect::<Vec<_>>());
            Ok(CompareRow { m, up_mean, up_std, tomo_mean, tomo_std })
        })
        .collect()
}

/// Formats a value with 9 significant digits.
pub fn sig9(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.8e}")
    }
}

pub const COMPARE_CSV_HEADER: &str = "m,up_mean,up_std,tomo_mean,tomo_std";

pub fn compare_csv(rows: &[CompareRow]) -> String {
    let mut s = format!("{COMPARE_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.m,
            sig9(r.up_mean),
            sig9(r.up_std),
            sig9(r.tomo_mean),
            sig9(r.tomo_std)
        );
    }
    s
}
