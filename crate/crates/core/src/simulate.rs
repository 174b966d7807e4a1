//! Stochastic source simulator.
//!
//! A source is described by the Born distributions of its two bases; each
//! slot of a seeded schedule draws one outcome from the appropriate one. All
//! randomness comes from ChaCha20 (`rand_chacha`), seeded from a 64-bit value,
//! with independent streams selected through the ChaCha stream id.
//!
//! # Run container (v1)
//!
//! Little-endian throughout.
//!
//! | offset | size | field |
//! |---|---|---|
//! | 0 | 8 | magic `UPQRRUN\0` |
//! | 8 | 2 | version (1) |
//! | 10 | 2 | dimension d |
//! | 12 | 1 | bits per outcome ⌈log2 d⌉ |
//! | 13 | 3 | reserved, zero |
//! | 16 | 8 | m |
//! | 24 | 8 | n_X |
//! | 32 | 8 | rng seed |
//! | 40 | 8 | seed bits consumed |
//! | 48 | 8 | q (f64 bits) |
//! | 56 | 4+n | model label (u32 length + UTF-8) |
//! | … | 4+n | PRNG identifier |
//! | … | 4+n | free-form metadata (tool version, config hash) |
//! | … | 8·n_X | control positions |
//! | … | 8·d | control counts |
//! | … | 8 | n_Z |
//! | … | ⌈n_Z·b/8⌉ | Z outcomes, b bits each, LSB-first |

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};

use crate::bits::BitString;
use crate::entropy::{classical_min_entropy, CountsVector, ProbVector};
use crate::protocol::{
    asymptotic_rate, certify, composition_count, expected_rate, mean_std, parallel_map, schedule_sizes,
    seed_length, seed_to_schedule, RateMode, Schedule, EXACT_COMPOSITION_BUDGET,
};
use crate::quantum::{
    born_probabilities, computational_basis_povm, fourier_basis_povm, overlap_c, BlochVector, DensityMatrix,
};
use crate::{Error, Result};

/// Identity of the pinned generator, recorded in every run.
pub const PRNG_ID: &str = "chacha20/rand_chacha-0.9/stream";

pub const RUN_MAGIC: [u8; 8] = *b"UPQRRUN\0";
pub const RUN_VERSION: u16 = 1;

/// Generator for stream `stream` of seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A source described by its control (X) and generation (Z) Born vectors.
#[derive(Debug, Clone)]
pub struct SourceModel {
    pub label: String,
    pub x_probs: ProbVector,
    pub z_probs: ProbVector,
    /// log2(1/c) of the measurement pair.
    pub q: f64,
    pub rho: Option<DensityMatrix>,
}

impl SourceModel {
    /// Model from Born vectors of a mutually unbiased pair (q = log2 d).
    pub fn from_probs(label: impl Into<String>, x_probs: ProbVector, z_probs: ProbVector) -> Result<Self> {
        if x_probs.len() != z_probs.len() {
            return Err(Error::DimensionMismatch(x_probs.len(), z_probs.len()));
        }
        if x_probs.len() < 2 {
            return Err(Error::InvalidDimension(x_probs.len()));
        }
        let q = (x_probs.len() as f64).log2();
        Ok(Self { label: label.into(), x_probs, z_probs, q, rho: None })
    }

    /// Model from a state measured in the computational (Z) and Fourier (X) bases.
    pub fn from_density(label: impl Into<String>, rho: DensityMatrix) -> Result<Self> {
        let d = rho.dim();
        let z = computational_basis_povm(d)?;
        let x = fourier_basis_povm(d)?;
        let (_, q) = overlap_c(&z, &x)?;
        Ok(Self {
            label: label.into(),
            x_probs: born_probabilities(&rho, &x)?,
            z_probs: born_probabilities(&rho, &z)?,
            q,
            rho: Some(rho),
        })
    }

    pub fn dim(&self) -> usize {
        self.x_probs.len()
    }

    /// Qubit Bloch vector consistent with the two Born vectors. The unmeasured
    /// component is set to zero unless a density matrix was given.
    pub fn bloch(&self) -> Result<BlochVector> {
        if self.dim() != 2 {
            return Err(Error::InvalidDimension(self.dim()));
        }
        if let Some(rho) = &self.rho {
            return crate::quantum::density_to_bloch(rho);
        }
        BlochVector::new(self.x_probs[0] - self.x_probs[1], 0.0, self.z_probs[0] - self.z_probs[1])
    }
}

/// The qubit source of the experiment: near-pure along the control basis.
pub fn qubit_experiment_model() -> SourceModel {
    SourceModel::from_probs(
        "qubit",
        ProbVector::new(vec![0.9973, 0.0027]).unwrap(),
        ProbVector::new(vec![0.5020, 0.4980]).unwrap(),
    )
    .unwrap()
}

/// The two-photon ququart source of the experiment.
pub fn ququart_experiment_model() -> SourceModel {
    let p3 = 1.0 - 0.9937 - 0.00359 - 0.00266;
    SourceModel::from_probs(
        "ququart",
        ProbVector::new(vec![0.9937, 0.00359, 0.00266, p3]).unwrap(),
        ProbVector::new(vec![0.2527, 0.2412, 0.2608, 0.2453]).unwrap(),
    )
    .unwrap()
}

/// Multinomial(n, p) draw, as a chain of conditional binomials.
pub fn sample_counts<R: Rng + ?Sized>(p: &ProbVector, n: u64, rng: &mut R) -> CountsVector {
    let mut counts = vec![0u64; p.len().max(2)];
    let mut remaining = n;
    let mut mass = 1.0f64;
    for (i, &pi) in p.as_slice().iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == p.len() {
            counts[i] = remaining;
            break;
        }
        let cond = if mass > 0.0 { (pi / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = Binomial::new(remaining, cond).expect("probability in [0, 1]").sample(rng);
        counts[i] = k;
        remaining -= k;
        mass -= pi;
    }
    CountsVector::new(counts).expect("at least two bins")
}

fn sample_outcome<R: Rng + ?Sized>(p: &ProbVector, rng: &mut R) -> u8 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let last = p.len() - 1;
    for (i, &pi) in p.as_slice()[..last].iter().enumerate() {
        acc += pi;
        if u < acc {
            return i as u8;
        }
    }
    last as u8
}

/// Uniform seed bits for a run, drawn from a dedicated stream of `rng_seed`.
/// Long enough that rejection sampling fails with probability below 2^-64.
pub fn derive_seed_bits(rng_seed: u64, m: u64) -> Result<BitString> {
    let t = seed_length(m)? as usize;
    let mut rng = stream_rng(rng_seed, u64::MAX);
    let len = (t * 64).max(64);
    let mut bits = BitString::with_capacity(len);
    for _ in 0..len.div_ceil(64) {
        bits.push_bits(rng.random::<u64>(), 64);
    }
    Ok(bits.slice(0, len))
}

/// One simulated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub label: String,
    pub dim: usize,
    pub q: f64,
    pub schedule: Schedule,
    pub z_outcomes: Vec<u8>,
    pub x_counts: CountsVector,
    pub rng_seed: u64,
    pub prng: String,
    pub seed_bits_consumed: u64,
    pub meta: String,
}

/// Simulates `m` measurements: the seed places the control slots, each slot
/// draws from the X or Z Born vector in schedule order.
pub fn sample_run(model: &SourceModel, m: u64, seed_bits: &BitString, rng_seed: u64) -> Result<RunRecord> {
    if model.dim() > 256 {
        return Err(Error::Unsupported(format!("dimension {} exceeds 256", model.dim())));
    }
    let (schedule, consumed) = seed_to_schedule(seed_bits, m)?;
    let mut rng = stream_rng(rng_seed, 0);
    let mut z_outcomes = Vec::with_capacity(schedule.n_z() as usize);
    let mut x_counts = CountsVector::zeros(model.dim())?;
    let mut controls = schedule.x_positions().iter().peekable();
    for slot in 0..m {
        if controls.next_if_eq(&&slot).is_some() {
            x_counts.increment(sample_outcome(&model.x_probs, &mut rng) as usize);
        } else {
            z_outcomes.push(sample_outcome(&model.z_probs, &mut rng));
        }
    }
    Ok(RunRecord {
        label: model.label.clone(),
        dim: model.dim(),
        q: model.q,
        schedule,
        z_outcomes,
        x_counts,
        rng_seed,
        prng: PRNG_ID.to_string(),
        seed_bits_consumed: consumed as u64,
        meta: String::new(),
    })
}

/// Bits used per stored outcome.
pub fn bits_per_outcome(dim: usize) -> u32 {
    (dim.max(2) as u64).next_power_of_two().trailing_zeros()
}

fn put_u16(w: &mut impl Write, v: u16) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_u32(w: &mut impl Write, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_u64(w: &mut impl Write, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_str(w: &mut impl Write, s: &str) -> std::io::Result<()> {
    put_u32(w, s.len() as u32)?;
    w.write_all(s.as_bytes())
}

pub(crate) fn get_array<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| Error::Malformed(format!("truncated container: {e}")))?;
    Ok(buf)
}

pub(crate) fn get_u64(r: &mut impl Read) -> Result<u64> {
    Ok(u64::from_le_bytes(get_array(r)?))
}

pub(crate) fn get_u32(r: &mut impl Read) -> Result<u32> {
    Ok(u32::from_le_bytes(get_array(r)?))
}

pub(crate) fn get_vec(r: &mut impl Read, len: usize) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    r.take(len as u64).read_to_end(&mut buf)?;
    if buf.len() != len {
        return Err(Error::Malformed(format!("expected {len} bytes, found {}", buf.len())));
    }
    Ok(buf)
}

pub(crate) fn get_str(r: &mut impl Read) -> Result<String> {
    let len = get_u32(r)? as usize;
    String::from_utf8(get_vec(r, len)?).map_err(|e| Error::Malformed(format!("invalid UTF-8: {e}")))
}

impl RunRecord {
    pub fn n_x(&self) -> u64 {
        self.schedule.n_x()
    }

    pub fn m(&self) -> u64 {
        self.schedule.m()
    }

    /// Z outcomes packed `bits_per_outcome(dim)` bits each, LSB-first.
    pub fn z_bits(&self) -> BitString {
        let width = bits_per_outcome(self.dim);
        let mut bits = BitString::with_capacity(self.z_outcomes.len() * width as usize);
        for &z in &self.z_outcomes {
            bits.push_bits(z as u64, width);
        }
        bits
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(&RUN_MAGIC)?;
        put_u16(w, RUN_VERSION)?;
        put_u16(w, self.dim as u16)?;
        w.write_all(&[bits_per_outcome(self.dim) as u8, 0, 0, 0])?;
        put_u64(w, self.m())?;
        put_u64(w, self.n_x())?;
        put_u64(w, self.rng_seed)?;
        put_u64(w, self.seed_bits_consumed)?;
        put_u64(w, self.q.to_bits())?;
        put_str(w, &self.label)?;
        put_str(w, &self.prng)?;
        put_str(w, &self.meta)?;
        for &p in self.schedule.x_positions() {
            put_u64(w, p)?;
        }
        for &c in self.x_counts.as_slice() {
            put_u64(w, c)?;
        }
        put_u64(w, self.z_outcomes.len() as u64)?;
        w.write_all(self.z_bits().as_bytes())?;
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        if get_array::<8>(r)? != RUN_MAGIC {
            return Err(Error::Malformed("not a run container (bad magic)".into()));
        }
        let version = u16::from_le_bytes(get_array(r)?);
        if version != RUN_VERSION {
            return Err(Error::Malformed(format!("unsupported run container version {version}")));
        }
        let dim = u16::from_le_bytes(get_array(r)?) as usize;
        let [width, ..] = get_array::<4>(r)?;
        if !(2..=256).contains(&dim) || width as u32 != bits_per_outcome(dim) {
            return Err(Error::Malformed(format!("dimension {dim} with {width}-bit outcomes")));
        }
        let m = get_u64(r)?;
        let n_x = get_u64(r)?;
        let rng_seed = get_u64(r)?;
        let seed_bits_consumed = get_u64(r)?;
        let q = f64::from_bits(get_u64(r)?);
        let label = get_str(r)?;
        let prng = get_str(r)?;
        let meta = get_str(r)?;
        let (expected_nx, expected_nz) = schedule_sizes(m)?;
        if n_x != expected_nx {
            return Err(Error::Malformed(format!("n_X = {n_x} but ⌈√{m}⌉ = {expected_nx}")));
        }
        let positions = (0..n_x).map(|_| get_u64(r)).collect::<Result<Vec<_>>>()?;
        let schedule = Schedule::new(m, positions).map_err(|e| Error::Malformed(e.to_string()))?;
        let counts = (0..dim).map(|_| get_u64(r)).collect::<Result<Vec<_>>>()?;
        let x_counts = CountsVector::new(counts)?;
        if x_counts.total() != n_x {
            return Err(Error::Malformed("control counts do not add up to n_X".into()));
        }
        let n_z = get_u64(r)?;
        if n_z != expected_nz {
            return Err(Error::Malformed(format!("n_Z = {n_z}, schedule implies {expected_nz}")));
        }
        let nbits = n_z as usize * width as usize;
        let payload = BitString::from_bytes(get_vec(r, nbits.div_ceil(8))?, nbits)?;
        let mut z_outcomes = Vec::with_capacity(n_z as usize);
        for i in 0..n_z as usize {
            let mut v = 0u8;
            for k in 0..width as usize {
                v |= (payload.get(i * width as usize + k) as u8) << k;
            }
            if v as usize >= dim {
                return Err(Error::Malformed(format!("outcome {v} outside dimension {dim}")));
            }
            z_outcomes.push(v);
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::Malformed("trailing bytes after run payload".into()));
        }
        Ok(Self { label, dim, q, schedule, z_outcomes, x_counts, rng_seed, prng, seed_bits_consumed, meta })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }
}

/// One row of a rate sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub m: u64,
    pub mean: f64,
    pub std: f64,
    pub reps: usize,
    /// Exact multinomial mean and std, when within the enumeration budget.
    pub exact: Option<(f64, f64)>,
    pub asymptote: f64,
    /// Mean plug-in H_∞ of the simulated Z counts (n_Z draws per repetition).
    pub classical_min_entropy: f64,
}

/// Monte Carlo rate curve over `m_grid`: each repetition draws fresh control
/// counts (and Z counts for the classical min-entropy) from its own stream.
pub fn rate_sweep(model: &SourceModel, m_grid: &[u64], reps: usize, seed: u64, workers: usize) -> Result<Vec<SweepRow>> {
    if reps == 0 {
        return Err(Error::Domain("sweep needs at least one repetition".into()));
    }
    let mut rows = Vec::with_capacity(m_grid.len());
    for (gi, &m) in m_grid.iter().enumerate() {
        let (n_x, n_z) = schedule_sizes(m)?;
        seed_length(m)?;
        let samples = parallel_map(reps, workers, |i| {
            let mut rng = stream_rng(seed, ((gi as u64) << 32) | i as u64);
            let counts = sample_counts(&model.x_probs, n_x, &mut rng);
            let rate = certify(m, &counts, model.q).map(|c| c.rate);
            let z = sample_counts(&model.z_probs, n_z, &mut rng);
            let top = z.as_slice().iter().copied().max().unwrap_or(0) as f64 / n_z as f64;
            (rate, -top.log2())
        });
        let hmin = samples.iter().map(|(_, h)| h).sum::<f64>() / reps as f64;
        let rates = samples.into_iter().map(|(r, _)| r).collect::<Result<Vec<_>>>()?;
        let (mean, std) = mean_std(&rates);
        let exact = if composition_count(n_x, model.dim()) <= EXACT_COMPOSITION_BUDGET {
            let e = expected_rate(m, &model.x_probs, model.q, RateMode::Exact)?;
            Some((e.mean, e.std))
        } else {
            None
        };
        rows.push(SweepRow {
            m,
            mean,
            std,
            reps,
            exact,
            asymptote: asymptotic_rate(&model.x_probs, model.q),
            classical_min_entropy: hmin,
        });
    }
    Ok(rows)
}

/// H_∞ of the model's Z distribution.
pub fn model_classical_min_entropy(model: &SourceModel) -> f64 {
    classical_min_entropy(&model.z_probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn qubit_model_values() {
        let m = qubit_experiment_model();
        assert!((asymptotic_rate(&m.x_probs, 1.0) - 0.8575).abs() < 1e-4);
        assert!((model_classical_min_entropy(&m) - 0.99424).abs() < 1e-5);
        let r = m.bloch().unwrap();
        assert!((r.x - 0.9946).abs() < 1e-12 && (r.z - 0.0040).abs() < 1e-12 && r.y == 0.0);
        assert!(r.norm() <= 1.0);
        assert_eq!(m.q, 1.0);
    }

    #[test]
    fn ququart_model_values() {
        let m = ququart_experiment_model();
        assert!((m.x_probs[3] - 0.00005).abs() < 1e-15);
        assert!((asymptotic_rate(&m.x_probs, 2.0) - 1.685).abs() < 0.002);
        let total: f64 = m.z_probs.as_slice().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(m.q, 2.0);
    }

    #[test]
    fn density_model_uses_mub_pair() {
        let rho = crate::quantum::bloch_to_density(&BlochVector::new(0.6, 0.3, -0.2).unwrap()).unwrap();
        let m = SourceModel::from_density("custom", rho).unwrap();
        assert!((m.q - 1.0).abs() < 1e-12);
        assert!((m.x_probs[0] - 0.8).abs() < 1e-12);
        assert!((m.z_probs[0] - 0.4).abs() < 1e-12);
        assert!((m.bloch().unwrap().y - 0.3).abs() < 1e-12);
    }

    #[test]
    fn sample_counts_edge_cases() {
        let mut rng = stream_rng(1, 0);
        let p = ProbVector::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(sample_counts(&p, 100, &mut rng).as_slice(), &[100, 0]);
        let q = ProbVector::uniform(4).unwrap();
        assert_eq!(sample_counts(&q, 0, &mut rng).as_slice(), &[0, 0, 0, 0]);
        let z = ProbVector::new(vec![0.0, 0.5, 0.0, 0.5]).unwrap();
        let c = sample_counts(&z, 1000, &mut rng);
        assert_eq!(c[0] + c[2], 0);
        assert_eq!(c.total(), 1000);
    }

    #[test]
    fn sample_counts_goodness_of_fit() {
        // 1e5 draws of Bin(1000, 0.0027): chi-square of the n_1 histogram
        // against the exact binomial law, pooling sparse tail cells.
        let p = ProbVector::new(vec![0.9973, 0.0027]).unwrap();
        let mut rng = stream_rng(314, 0);
        let draws = 100_000usize;
        let mut hist = vec![0usize; 1001];
        for _ in 0..draws {
            hist[sample_counts(&p, 1000, &mut rng)[1] as usize] += 1;
        }
        let law = crate::protocol::error_distribution(1000, &p).unwrap();
        let (mut chi2, mut cells, mut pooled_obs, mut pooled_exp) = (0.0, 0usize, 0.0, 0.0);
        for (k, &w) in law.iter().enumerate() {
            let e = w * draws as f64;
            if e >= 5.0 && pooled_exp == 0.0 {
                chi2 += (hist[k] as f64 - e).powi(2) / e;
                cells += 1;
            } else {
                pooled_obs += hist[k] as f64;
                pooled_exp += e;
            }
        }
        chi2 += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        cells += 1;
        let pval = 1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(chi2);
        assert!(pval > 0.001, "chi2={chi2} cells={cells} p={pval}");
    }

    #[test]
    fn z_frequencies_converge() {
        let model = ququart_experiment_model();
        let mut rng = stream_rng(99, 3);
        let n = 400_000u64;
        let c = sample_counts(&model.z_probs, n, &mut rng);
        let chi2: f64 = (0..4)
            .map(|i| {
                let e = model.z_probs[i] * n as f64;
                (c[i] as f64 - e).powi(2) / e
            })
            .sum();
        let pval = 1.0 - ChiSquared::new(3.0).unwrap().cdf(chi2);
        assert!(pval > 0.001);
    }

    #[test]
    fn deterministic_source_run() {
        let model = SourceModel::from_probs(
            "pure",
            ProbVector::new(vec![1.0, 0.0]).unwrap(),
            ProbVector::new(vec![1.0, 0.0]).unwrap(),
        )
        .unwrap();
        let seed = derive_seed_bits(5, 400).unwrap();
        let run = sample_run(&model, 400, &seed, 5).unwrap();
        assert!(run.z_outcomes.iter().all(|&z| z == 0));
        assert_eq!(run.z_outcomes.len(), 380);
        assert_eq!(run.x_counts.as_slice(), &[20, 0]);
    }

    #[test]
    fn runs_are_reproducible() {
        let model = qubit_experiment_model();
        let seed = derive_seed_bits(77, 10_000).unwrap();
        let a = sample_run(&model, 10_000, &seed, 77).unwrap();
        let b = sample_run(&model, 10_000, &seed, 77).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_bytes(), b.to_bytes());
        let c = sample_run(&model, 10_000, &seed, 78).unwrap();
        assert_ne!(a.z_outcomes, c.z_outcomes);
    }

    #[test]
    fn x_counts_total_is_ceil_sqrt() {
        let model = ququart_experiment_model();
        for m in [2u64, 3, 17, 99, 100, 101, 5000] {
            let seed = derive_seed_bits(m, m).unwrap();
            let run = sample_run(&model, m, &seed, m).unwrap();
            assert_eq!(run.x_counts.total(), crate::protocol::ceil_sqrt(m));
            assert_eq!(run.z_outcomes.len() as u64 + run.x_counts.total(), m);
        }
    }

    #[test]
    fn insufficient_seed_propagates() {
        let model = qubit_experiment_model();
        let short: BitString = "0101".parse().unwrap();
        assert!(matches!(sample_run(&model, 10_000, &short, 1), Err(Error::InsufficientSeed { .. })));
    }

    #[test]
    fn container_round_trip_and_layout() {
        let model = ququart_experiment_model();
        let seed = derive_seed_bits(3, 2000).unwrap();
        let mut run = sample_run(&model, 2000, &seed, 3).unwrap();
        run.meta = "tool=test".into();
        let bytes = run.to_bytes();
        assert_eq!(&bytes[..8], b"UPQRRUN\0");
        assert_eq!(u16::from_le_bytes([bytes[8], bytes[9]]), 1);
        assert_eq!(u16::from_le_bytes([bytes[10], bytes[11]]), 4);
        assert_eq!(bytes[12], 2);
        assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 2000);
        let n_z = run.z_outcomes.len();
        assert!(bytes.ends_with(run.z_bits().as_bytes()));
        assert_eq!(run.z_bits().len(), 2 * n_z);
        let back = RunRecord::read_from(&mut bytes.as_slice()).unwrap();
        assert_eq!(back, run);
    }

    #[test]
    fn container_rejects_corruption() {
        let model = qubit_experiment_model();
        let seed = derive_seed_bits(3, 500).unwrap();
        let bytes = sample_run(&model, 500, &seed, 3).unwrap().to_bytes();
        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(RunRecord::read_from(&mut bad_magic.as_slice()).is_err());
        let truncated = &bytes[..bytes.len() - 1];
        assert!(RunRecord::read_from(&mut &truncated[..]).is_err());
        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(RunRecord::read_from(&mut trailing.as_slice()).is_err());
    }

    #[test]
    fn qubit_payload_is_one_bit_per_outcome() {
        let model = qubit_experiment_model();
        let seed = derive_seed_bits(8, 1000).unwrap();
        let run = sample_run(&model, 1000, &seed, 8).unwrap();
        let bits = run.z_bits();
        assert_eq!(bits.len(), run.z_outcomes.len());
        for (i, &z) in run.z_outcomes.iter().enumerate() {
            assert_eq!(bits.get(i), z == 1);
        }
    }

    #[test]
    fn bits_per_outcome_values() {
        assert_eq!(bits_per_outcome(2), 1);
        assert_eq!(bits_per_outcome(3), 2);
        assert_eq!(bits_per_outcome(4), 2);
        assert_eq!(bits_per_outcome(16), 4);
    }
}
