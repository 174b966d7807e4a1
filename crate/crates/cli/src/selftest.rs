//! Built-in invariant checks.

use std::time::Instant;

use num_bigint::BigUint;
use num_traits::Zero;
use upqrng::combinatorics::{binomial, rank_combination, unrank_combination};
use upqrng::entropy::{bayesian_h_half, max_entropy_half};
use upqrng::extract::{toeplitz_hash, ToeplitzSeed};
use upqrng::protocol::{certify, seed_length};
use upqrng::quantum::{computational_basis_povm, fourier_basis_povm, overlap_c};
use upqrng::simulate::{qubit_experiment_model, sample_counts, stream_rng};
use upqrng::{BitString, Certificate, CountsVector};

use crate::CliError;

type CheckResult = Result<String, String>;

fn mub_overlaps() -> CheckResult {
    let mut worst = 0.0f64;
    for d in 2..=16 {
        let z = computational_basis_povm(d).map_err(|e| e.to_string())?;
        let x = fourier_basis_povm(d).map_err(|e| e.to_string())?;
        let (c, q) = overlap_c(&z, &x).map_err(|e| e.to_string())?;
        worst = worst.max((c - 1.0 / d as f64).abs()).max((q - (d as f64).log2()).abs());
    }
    if worst <= 1e-12 {
        Ok(format!("d = 2..16, max error {worst:.1e}"))
    } else {
        Err(format!("overlap off by {worst:.3e}"))
    }
}

fn gamma_ratio_fixture() -> CheckResult {
    let counts = CountsVector::new(vec![0, 0]).map_err(|e| e.to_string())?;
    let h = bayesian_h_half(&counts);
    let expected = 0.830_074_998_557_687_6;
    if (h - expected).abs() < 1e-12 {
        Ok(format!("H~(0,0) = {h:.12}"))
    } else {
        Err(format!("H~(0,0) = {h}, expected {expected}"))
    }
}

fn estimator_convergence() -> CheckResult {
    let p = qubit_experiment_model().x_probs;
    let truth = max_entropy_half(&p);
    let hits = (0..20u64)
        .filter(|&i| {
            let c = sample_counts(&p, 100_000, &mut stream_rng(42, i));
            (bayesian_h_half(&c) - truth).abs() < 0.01
        })
        .count();
    if hits >= 18 {
        Ok(format!("{hits}/20 estimates within 0.01 at n_X = 1e5"))
    } else {
        Err(format!("only {hits}/20 estimates within 0.01"))
    }
}

fn extractor_exhaustive() -> CheckResult {
    let bits_of = |v: u64, len: usize| BitString::from_bools((0..len).map(|k| v >> k & 1 == 1));
    for n in 1..=8usize {
        for ell in 1..=3usize.min(n) {
            let seeds = 1u64 << (n + ell - 1);
            let mut kernel = vec![0u64; 1 << n];
            for s in 0..seeds {
                let seed = ToeplitzSeed::new(n, ell, bits_of(s, n + ell - 1)).map_err(|e| e.to_string())?;
                for x in 1..(1u64 << n) {
                    let h = toeplitz_hash(&bits_of(x, n), ell, &seed).map_err(|e| e.to_string())?;
                    if h.count_ones() == 0 {
                        kernel[x as usize] += 1;
                    }
                }
            }
            if let Some(x) = (1..kernel.len()).find(|&x| kernel[x] << ell > seeds) {
                return Err(format!("n={n} ell={ell}: difference {x} collides on {}/{seeds} seeds", kernel[x]));
            }
        }
    }
    Ok("collision probability ≤ 2^-ℓ for all n ≤ 8, ℓ ≤ 3".into())
}

fn unranking_bijection() -> CheckResult {
    for m in 1..=14u64 {
        for k in 0..=m {
            let total = binomial(m, k);
            let mut prev: Option<Vec<u64>> = None;
            let mut i = BigUint::zero();
            while i < total {
                let subset = unrank_combination(&i, m, k).map_err(|e| e.to_string())?;
                if rank_combination(&subset, m).map_err(|e| e.to_string())? != i {
                    return Err(format!("rank(unrank({i})) differs for m={m}, k={k}"));
                }
                if prev.as_ref().is_some_and(|p| p >= &subset) {
                    return Err(format!("order broken at index {i} for m={m}, k={k}"));
                }
                prev = Some(subset);
                i += 1u32;
            }
        }
    }
    Ok("rank ∘ unrank = id, lexicographic, m ≤ 14".into())
}

fn certificate_fixture() -> CheckResult {
    let t = seed_length(150).map_err(|e| e.to_string())?;
    let counts = CountsVector::new(vec![13, 0]).map_err(|e| e.to_string())?;
    let cert = certify(150, &counts, 1.0).map_err(|e| e.to_string())?;
    let back = Certificate::from_text(&cert.to_text()).map_err(|e| e.to_string())?;
    if t == 61 && (cert.b_sec - 5.164_321_641_41).abs() < 1e-9 && back == cert {
        Ok(format!("t(150) = {t}, b_sec = {:.6}", cert.b_sec))
    } else {
        Err(format!("t(150) = {t}, b_sec = {}", cert.b_sec))
    }
}

pub fn run() -> Result<(), CliError> {
    let checks: [(&str, fn() -> CheckResult); 6] = [
        ("mub-overlap", mub_overlaps),
        ("gamma-ratio", gamma_ratio_fixture),
        ("estimator-convergence", estimator_convergence),
        ("extractor-two-universal", extractor_exhaustive),
        ("unranking-bijection", unranking_bijection),
        ("certificate", certificate_fixture),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        match check() {
            Ok(detail) => println!("ok    {name:<24} {detail} ({:.2} s)", start.elapsed().as_secs_f64()),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name:<24} {detail}");
            }
        }
    }
    if failed > 0 {
        return Err(CliError::Selftest(failed));
    }
    Ok(())
}
