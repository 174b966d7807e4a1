//! Classical entropies and the Rényi-½ estimators.
//!
//! Conventions: logarithms are base 2, `0·log 0 = 0`, `√0 = 0`.

use std::ops::Index;

use crate::special::{ln_gamma_half_ratio, log_sum_exp};
use crate::{Error, Result};

pub const PROB_SUM_TOL: f64 = 1e-12;

/// A probability distribution over `d` outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidProbabilities("empty".into()));
        }
        if let Some(bad) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidProbabilities(format!("entry {bad} outside [0, 1]")));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidProbabilities(format!("sums to {total}")));
        }
        Ok(Self(p))
    }

    pub fn uniform(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension(d));
        }
        Self::new(vec![1.0 / d as f64; d])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for ProbVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Outcome tallies `{n_x}` from the control basis.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CountsVector(Vec<u64>);

impl CountsVector {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::InvalidDimension(counts.len()));
        }
        Ok(Self(counts))
    }

    pub fn zeros(d: usize) -> Result<Self> {
        Self::new(vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub(crate) fn increment(&mut self, outcome: usize) {
        self.0[outcome] += 1;
    }
}

impl Index<usize> for CountsVector {
    type Output = u64;

    fn index(&self, i: usize) -> &u64 {
        &self.0[i]
    }
}

/// Rényi entropy of order α (α > 0, α ≠ 1).
pub fn renyi(alpha: f64, p: &ProbVector) -> Result<f64> {
    if !(alpha > 0.0) || alpha == 1.0 || !alpha.is_finite() {
        return Err(Error::Domain(format!("Rényi order α = {alpha}")));
    }
    let s: f64 = p.as_slice().iter().filter(|&&v| v > 0.0).map(|v| v.powf(alpha)).sum();
    Ok((s.log2() / (1.0 - alpha)).max(0.0))
}

/// H_{1/2}(p) = 2 log2 Σ √p_x, the max-entropy of a classical distribution.
pub fn max_entropy_half(p: &ProbVector) -> f64 {
    let s: f64 = p.as_slice().iter().map(|v| v.sqrt()).sum();
    (2.0 * s.log2()).max(0.0)
}

/// H_∞(p) = −log2 max_x p_x.
pub fn classical_min_entropy(p: &ProbVector) -> f64 {
    let top = p.as_slice().iter().copied().fold(0.0, f64::max);
    -top.log2()
}

/// Bayesian (uniform Dirichlet prior) estimate of H_{1/2} from counts:
///
/// ```text
/// 2 log2[ Γ(N+d)/Γ(N+d+½) · Σ_x Γ(n_x+3/2)/Γ(n_x+1) ]
/// ```
///
/// N = 0 is allowed and returns the prior expectation.
pub fn bayesian_h_half(counts: &CountsVector) -> f64 {
    let d = counts.dim() as f64;
    let total = counts.total() as f64;
    let terms: Vec<f64> = counts
        .as_slice()
        .iter()
        .map(|&n| ln_gamma_half_ratio(n as f64 + 1.0))
        .collect();
    let ln_inner = log_sum_exp(&terms) - ln_gamma_half_ratio(total + d);
    2.0 * ln_inner / std::f64::consts::LN_2
}

/// Plug-in estimate 2 log2 Σ √(n_x / N).
pub fn frequentist_h_half(counts: &CountsVector) -> Result<f64> {
    let total = counts.total();
    if total == 0 {
        return Err(Error::InvalidCounts("frequentist estimate undefined for zero counts".into()));
    }
    let s: f64 = counts
        .as_slice()
        .iter()
        .map(|&n| (n as f64 / total as f64).sqrt())
        .sum();
    Ok(2.0 * s.log2())
}

/// Numerical max-entropy through the min-/max-entropy duality.
///
/// For the purification |Ψ⟩ = Σ √p_x |x⟩|v_x⟩, H_max(X) = −H_min(A|C) =
/// log2 min_σ Σ_x p_x/σ_x over diagonal states σ on C. The minimization runs
/// pairwise golden-section coordinate descent from the uniform σ, so it never
/// consults the closed-form optimum.
pub fn min_entropy_pure_oracle(p: &ProbVector) -> Result<f64> {
    if p.len() > 8 {
        return Err(Error::Unsupported(format!("oracle limited to d ≤ 8, got {}", p.len())));
    }
    let support: Vec<f64> = p.as_slice().iter().copied().filter(|&v| v > 0.0).collect();
    let k = support.len();
    let mut sigma = vec![1.0 / k as f64; k];
    let objective = |s: &[f64]| support.iter().zip(s).map(|(p, s)| p / s).sum::<f64>();
    let mut value = objective(&sigma);
    for _ in 0..100_000 {
        for i in 0..k {
            for j in (i + 1)..k {
                let budget = sigma[i] + sigma[j];
                let (pi, pj) = (support[i], support[j]);
                let a = golden_section_min(|a| pi / a + pj / (budget - a), 0.0, budget);
                sigma[i] = a;
                sigma[j] = budget - a;
            }
        }
        let next = objective(&sigma);
        let done = (value - next).abs() <= 1e-15 * value;
        value = next;
        if done {
            break;
        }
    }
    Ok(value.log2().max(0.0))
}

fn golden_section_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if b - a <= 1e-15 * hi {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}
