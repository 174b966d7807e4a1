//! Toeplitz two-universal hashing.
//!
//! A seed `s` of `n + ℓ − 1` bits defines the ℓ×n Toeplitz matrix
//! `T[i][j] = s[i − j + n − 1]`. The hash `T·x` over GF(2) equals the
//! coefficients `n − 1 .. n + ℓ − 2` of the polynomial product `S(z)·X(z)`,
//! which is computed by word-level Karatsuba multiplication without ever
//! forming `T`.
//!
//! # Bit file container (v1)
//!
//! `UPQRBITS` magic, u16 version, 6 reserved bytes, u64 bit length, a
//! length-prefixed UTF-8 metadata string, then the payload packed LSB-first.
//!
//! Extractor seed files are raw: u64 little-endian bit length followed by the
//! packed bits.

use std::io::{Read, Write};

use rand::Rng;

use crate::bits::BitString;
use crate::protocol::certify;
use crate::simulate::{get_array, get_str, get_u64, get_vec, RunRecord};
use crate::{Certificate, Error, Result};

pub const BITS_MAGIC: [u8; 8] = *b"UPQRBITS";
pub const BITS_VERSION: u16 = 1;

/// Number of output bits for a certified budget: `floor(bits − 2·eps)`, at
/// least zero.
pub fn output_length(certified_bits: f64, epsilon_exponent: u32) -> u64 {
    let l = (certified_bits - 2.0 * epsilon_exponent as f64).floor();
    if l.is_nan() || l <= 0.0 {
        0
    } else {
        l as u64
    }
}

/// Seed of a Toeplitz matrix with `ell` rows and `n` columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToeplitzSeed {
    n: usize,
    ell: usize,
    bits: BitString,
}

impl ToeplitzSeed {
    pub fn new(n: usize, ell: usize, bits: BitString) -> Result<Self> {
        if n == 0 || ell == 0 {
            return Err(Error::Domain(format!("Toeplitz shape {ell}x{n}")));
        }
        if bits.len() != n + ell - 1 {
            return Err(Error::DimensionMismatch(bits.len(), n + ell - 1));
        }
        Ok(Self { n, ell, bits })
    }

    pub fn random<R: Rng + ?Sized>(n: usize, ell: usize, rng: &mut R) -> Result<Self> {
        let len = n + ell.max(1) - 1;
        let words: Vec<u64> = (0..len.div_ceil(64)).map(|_| rng.random()).collect();
        Self::new(n, ell, BitString::from_words(&words, len))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn bits(&self) -> &BitString {
        &self.bits
    }

    /// Matrix entry `T[i][j]`.
    pub fn entry(&self, i: usize, j: usize) -> bool {
        self.bits.get(i + self.n - 1 - j)
    }
}

/// Carry-less 64×64 → 128 bit product.
fn clmul(a: u64, b: u64) -> u128 {
    let mut table = [0u128; 16];
    let b = b as u128;
    for k in 1..16 {
        table[k] = if k & 1 == 1 { table[k - 1] ^ b } else { table[k >> 1] << 1 };
    }
    let mut r = 0u128;
    for nib in 0..16 {
        r ^= table[((a >> (4 * nib)) & 15) as usize] << (4 * nib);
    }
    r
}

const KARATSUBA_THRESHOLD: usize = 24;
const PARALLEL_THRESHOLD: usize = 4096;

fn schoolbook(a: &[u64], b: &[u64], out: &mut [u64]) {
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            let p = clmul(x, y);
            out[i + j] ^= p as u64;
            out[i + j + 1] ^= (p >> 64) as u64;
        }
    }
}

fn xor_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

/// GF(2)[z] product of two equal-length word slices; `out` has length 2·len.
fn karatsuba(a: &[u64], b: &[u64], out: &mut [u64]) {
    let n = a.len();
    debug_assert_eq!(n, b.len());
    if n <= KARATSUBA_THRESHOLD {
        schoolbook(a, b, out);
        return;
    }
    let h = n / 2;
    let hi = n - h;
    let (a0, a1) = a.split_at(h);
    let (b0, b1) = b.split_at(h);
    let mut sa = a1.to_vec();
    xor_into(&mut sa, a0);
    let mut sb = b1.to_vec();
    xor_into(&mut sb, b0);
    let mut a0p = a0.to_vec();
    a0p.resize(hi, 0);
    let mut b0p = b0.to_vec();
    b0p.resize(hi, 0);

    let mut p0 = vec![0u64; 2 * hi];
    let mut p1 = vec![0u64; 2 * hi];
    let mut p2 = vec![0u64; 2 * hi];
    if n >= PARALLEL_THRESHOLD {
        rayon::join(
            || karatsuba(&a0p, &b0p, &mut p0),
            || rayon::join(|| karatsuba(&sa, &sb, &mut p1), || karatsuba(a1, b1, &mut p2)),
        );
    } else {
        karatsuba(&a0p, &b0p, &mut p0);
        karatsuba(&sa, &sb, &mut p1);
        karatsuba(a1, b1, &mut p2);
    }
    xor_into(&mut p1, &p0);
    xor_into(&mut p1, &p2);
    xor_into(&mut out[..2 * hi], &p0);
    xor_into(&mut out[h..h + 2 * hi], &p1);
    xor_into(&mut out[2 * h..], &p2[..2 * n - 2 * h]);
}

/// Carry-less product of two bit strings as polynomials over GF(2).
pub fn gf2_poly_mul(a: &BitString, b: &BitString) -> BitString {
    if a.is_empty() || b.is_empty() {
        return BitString::new();
    }
    let mut wa = a.to_words();
    let mut wb = b.to_words();
    let n = wa.len().max(wb.len());
    wa.resize(n, 0);
    wb.resize(n, 0);
    let mut out = vec![0u64; 2 * n];
    karatsuba(&wa, &wb, &mut out);
    BitString::from_words(&out, a.len() + b.len() - 1)
}

/// Toeplitz hash `T·input` over GF(2).
pub fn toeplitz_hash(input: &BitString, ell: usize, seed: &ToeplitzSeed) -> Result<BitString> {
    let n = input.len();
    if ell > n {
        return Err(Error::Domain(format!("output length {ell} exceeds input length {n}")));
    }
    if seed.n != n || seed.ell != ell {
        return Err(Error::Inconsistent(format!(
            "seed is for a {}x{} matrix, input needs {ell}x{n}",
            seed.ell, seed.n
        )));
    }
    let product = gf2_poly_mul(&seed.bits, input);
    let words = product.to_words();
    Ok(shift_down(&words, n - 1, ell))
}

/// Bits `[start, start + len)` of a word vector.
fn shift_down(words: &[u64], start: usize, len: usize) -> BitString {
    let (w, s) = (start / 64, start % 64);
    let out: Vec<u64> = (0..len.div_ceil(64))
        .map(|k| {
            let lo = words.get(w + k).copied().unwrap_or(0);
            if s == 0 {
                lo
            } else {
                let hi = words.get(w + k + 1).copied().unwrap_or(0);
                (lo >> s) | (hi << (64 - s))
            }
        })
        .collect();
    BitString::from_words(&out, len)
}

/// Hashes the Z outcomes of a run down to the certified length.
///
/// The certificate must be the one the run's own control counts produce, and
/// must certify a positive number of bits. Outcomes are serialized with
/// log2(d) bits each, so only power-of-two dimensions are accepted.
pub fn extract_run(run: &RunRecord, cert: &Certificate, seed: &ToeplitzSeed, epsilon_exponent: u32) -> Result<BitString> {
    if !run.dim.is_power_of_two() {
        return Err(Error::Unsupported(format!("bit serialization of dimension {}", run.dim)));
    }
    if cert.m != run.m() || cert.n_x != run.n_x() {
        return Err(Error::Inconsistent(format!(
            "certificate for m={}, n_X={}; run has m={}, n_X={}",
            cert.m,
            cert.n_x,
            run.m(),
            run.n_x()
        )));
    }
    let expected = certify(run.m(), &run.x_counts, run.q)?;
    if expected != *cert {
        return Err(Error::Inconsistent("certificate does not match the run's control counts".into()));
    }
    if cert.b_sec <= 0.0 {
        return Err(Error::NothingCertified(cert.b_sec));
    }
    let ell = output_length(cert.b_sec, epsilon_exponent) as usize;
    if ell == 0 {
        return Err(Error::NothingCertified(cert.b_sec - 2.0 * epsilon_exponent as f64));
    }
    toeplitz_hash(&run.z_bits(), ell, seed)
}

/// Seed length needed to extract from `run` under `cert`.
pub fn required_seed_shape(run: &RunRecord, cert: &Certificate, epsilon_exponent: u32) -> (usize, usize) {
    let n = run.z_outcomes.len() * crate::simulate::bits_per_outcome(run.dim) as usize;
    (n, output_length(cert.b_sec, epsilon_exponent) as usize)
}

pub fn write_bits(w: &mut impl Write, bits: &BitString, meta: &str) -> Result<()> {
    w.write_all(&BITS_MAGIC)?;
    w.write_all(&BITS_VERSION.to_le_bytes())?;
    w.write_all(&[0u8; 6])?;
    w.write_all(&(bits.len() as u64).to_le_bytes())?;
    w.write_all(&(meta.len() as u32).to_le_bytes())?;
    w.write_all(meta.as_bytes())?;
    w.write_all(bits.as_bytes())?;
    Ok(())
}

/// Reads a bit container, returning the bits and the metadata string.
pub fn read_bits(r: &mut impl Read) -> Result<(BitString, String)> {
    if get_array::<8>(r)? != BITS_MAGIC {
        return Err(Error::Malformed("not a bit container (bad magic)".into()));
    }
    let version = u16::from_le_bytes(get_array(r)?);
    if version != BITS_VERSION {
        return Err(Error::Malformed(format!("unsupported bit container version {version}")));
    }
    get_array::<6>(r)?;
    let len = get_u64(r)? as usize;
    let meta = get_str(r)?;
    let bits = BitString::from_bytes(get_vec(r, len.div_ceil(8))?, len)?;
    Ok((bits, meta))
}

pub fn write_seed(w: &mut impl Write, bits: &BitString) -> Result<()> {
    w.write_all(&(bits.len() as u64).to_le_bytes())?;
    w.write_all(bits.as_bytes())?;
    Ok(())
}

pub fn read_seed(r: &mut impl Read) -> Result<BitString> {
    let len = get_u64(r)? as usize;
    let bits = BitString::from_bytes(get_vec(r, len.div_ceil(8))?, len)?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Malformed("trailing bytes after seed payload".into()));
    }
    Ok(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{derive_seed_bits, qubit_experiment_model, ququart_experiment_model, sample_run, stream_rng};
    use proptest::prelude::*;
    use rand::Rng;

    fn naive_hash(input: &BitString, ell: usize, seed: &ToeplitzSeed) -> BitString {
        BitString::from_bools((0..ell).map(|i| {
            (0..input.len()).fold(false, |acc, j| acc ^ (seed.entry(i, j) & input.get(j)))
        }))
    }

    fn bits_of(v: u64, len: usize) -> BitString {
        BitString::from_bools((0..len).map(|k| v >> k & 1 == 1))
    }

    #[test]
    fn output_length_examples() {
        assert_eq!(output_length(29_951_536.0, 0), 29_951_536);
        assert_eq!(output_length(100.0, 32), 36);
        assert_eq!(output_length(100.9, 0), 100);
        assert_eq!(output_length(0.0, 0), 0);
        assert_eq!(output_length(-5.0, 0), 0);
        assert_eq!(output_length(10.0, 64), 0);
    }

    #[test]
    fn clmul_matches_bitwise() {
        let mut rng = stream_rng(1, 1);
        for _ in 0..200 {
            let (a, b): (u64, u64) = (rng.random(), rng.random());
            let mut r = 0u128;
            for i in 0..64 {
                if a >> i & 1 == 1 {
                    r ^= (b as u128) << i;
                }
            }
            assert_eq!(clmul(a, b), r);
        }
    }

    #[test]
    fn karatsuba_matches_schoolbook() {
        let mut rng = stream_rng(2, 0);
        for n in [1usize, 5, 24, 25, 31, 64, 100, 257] {
            let a: Vec<u64> = (0..n).map(|_| rng.random()).collect();
            let b: Vec<u64> = (0..n).map(|_| rng.random()).collect();
            let mut k = vec![0; 2 * n];
            let mut s = vec![0; 2 * n];
            karatsuba(&a, &b, &mut k);
            schoolbook(&a, &b, &mut s);
            assert_eq!(k, s, "n = {n}");
        }
    }

    #[test]
    fn unit_vectors_read_off_columns() {
        let seed = ToeplitzSeed::new(3, 2, "1011".parse().unwrap()).unwrap();
        for j in 0..3 {
            let mut e = BitString::zeros(3);
            e.set(j, true);
            let col = toeplitz_hash(&e, 2, &seed).unwrap();
            for i in 0..2 {
                assert_eq!(col.get(i), seed.bits().get(i + 2 - j));
            }
        }
        // columns of T: s2 s1 s0 over s3 s2 s1
        let e0: BitString = "100".parse().unwrap();
        assert_eq!(toeplitz_hash(&e0, 2, &seed).unwrap(), "11".parse().unwrap());
    }

    #[test]
    fn zero_input_hashes_to_zero() {
        let mut rng = stream_rng(3, 0);
        for _ in 0..20 {
            let seed = ToeplitzSeed::random(300, 70, &mut rng).unwrap();
            assert_eq!(toeplitz_hash(&BitString::zeros(300), 70, &seed).unwrap(), BitString::zeros(70));
        }
    }

    #[test]
    fn shape_errors() {
        let seed = ToeplitzSeed::new(4, 2, BitString::zeros(5)).unwrap();
        assert!(toeplitz_hash(&BitString::zeros(5), 2, &seed).is_err());
        assert!(toeplitz_hash(&BitString::zeros(4), 3, &seed).is_err());
        assert!(toeplitz_hash(&BitString::zeros(2), 3, &seed).is_err());
        assert!(ToeplitzSeed::new(4, 2, BitString::zeros(6)).is_err());
        assert!(ToeplitzSeed::new(0, 2, BitString::zeros(1)).is_err());
    }

    #[test]
    fn two_universal_exhaustive() {
        for n in 1..=10usize {
            for ell in 1..=4usize.min(n) {
                let seeds = 1u64 << (n + ell - 1);
                // T(x) = T(x') iff T(x ^ x') = 0, so count kernels per nonzero difference.
                let mut zero_hits = vec![0u64; 1 << n];
                for s in 0..seeds {
                    let seed = ToeplitzSeed::new(n, ell, bits_of(s, n + ell - 1)).unwrap();
                    for x in 1..(1u64 << n) {
                        if toeplitz_hash(&bits_of(x, n), ell, &seed).unwrap().count_ones() == 0 {
                            zero_hits[x as usize] += 1;
                        }
                    }
                }
                for (x, &hits) in zero_hits.iter().enumerate().skip(1) {
                    assert!(hits << ell <= seeds, "n={n} ell={ell} diff={x}: {hits}/{seeds}");
                }
            }
        }
    }

    #[test]
    fn exhaustive_pairs_n6_l3() {
        let (n, ell) = (6usize, 3usize);
        let hashes: Vec<Vec<u64>> = (0..256u64)
            .map(|s| {
                let seed = ToeplitzSeed::new(n, ell, bits_of(s, 8)).unwrap();
                (0..64u64)
                    .map(|x| toeplitz_hash(&bits_of(x, n), ell, &seed).unwrap().to_words()[0])
                    .collect()
            })
            .collect();
        for x in 0..64usize {
            for y in x + 1..64 {
                let coll = hashes.iter().filter(|h| h[x] == h[y]).count();
                assert!(coll * 8 <= 256);
            }
        }
    }

    proptest! {
        #[test]
        fn matches_naive_matrix(n in 1usize..300, frac in 0.0f64..1.0, s in any::<u64>()) {
            let ell = ((n as f64 * frac) as usize).max(1);
            let mut rng = stream_rng(s, 0);
            let seed = ToeplitzSeed::random(n, ell, &mut rng).unwrap();
            let input = BitString::from_words(&(0..n.div_ceil(64)).map(|_| rng.random()).collect::<Vec<u64>>(), n);
            prop_assert_eq!(toeplitz_hash(&input, ell, &seed).unwrap(), naive_hash(&input, ell, &seed));
        }

        #[test]
        fn linear(n in 1usize..2000, s in any::<u64>()) {
            let ell = n / 2 + 1;
            let mut rng = stream_rng(s, 0);
            let seed = ToeplitzSeed::random(n, ell, &mut rng).unwrap();
            let mut draw = || BitString::from_words(&(0..n.div_ceil(64)).map(|_| rng.random()).collect::<Vec<u64>>(), n);
            let (x, y) = (draw(), draw());
            let hx = toeplitz_hash(&x, ell, &seed).unwrap();
            let hy = toeplitz_hash(&y, ell, &seed).unwrap();
            let hxy = toeplitz_hash(&x.xor(&y).unwrap(), ell, &seed).unwrap();
            prop_assert_eq!(hxy, hx.xor(&hy).unwrap());
        }
    }

    #[test]
    fn large_hash_matches_naive_rows() {
        let n = 200_000;
        let ell = 150_000;
        let mut rng = stream_rng(4, 0);
        let seed = ToeplitzSeed::random(n, ell, &mut rng).unwrap();
        let input = BitString::from_words(&(0..n.div_ceil(64)).map(|_| rng.random()).collect::<Vec<u64>>(), n);
        let out = toeplitz_hash(&input, ell, &seed).unwrap();
        for i in [0, 1, 63, 64, 777, ell / 2, ell - 1] {
            let expected = (0..n).fold(false, |acc, j| acc ^ (seed.entry(i, j) & input.get(j)));
            assert_eq!(out.get(i), expected, "row {i}");
        }
    }

    #[test]
    fn extract_run_lengths_and_determinism() {
        let model = ququart_experiment_model();
        let seed_bits = derive_seed_bits(11, 20_000).unwrap();
        let run = sample_run(&model, 20_000, &seed_bits, 11).unwrap();
        let cert = certify(run.m(), &run.x_counts, run.q).unwrap();
        assert!(cert.b_sec > 0.0);
        let (n, ell) = required_seed_shape(&run, &cert, 0);
        assert_eq!(n, 2 * run.z_outcomes.len());
        let tseed = ToeplitzSeed::random(n, ell, &mut stream_rng(11, 5)).unwrap();
        let y = extract_run(&run, &cert, &tseed, 0).unwrap();
        assert_eq!(y.len() as u64, output_length(cert.b_sec, 0));
        assert_eq!(extract_run(&run, &cert, &tseed, 0).unwrap(), y);
    }

    #[test]
    fn extract_refuses_bad_inputs() {
        let qubit = qubit_experiment_model();
        let seed_bits = derive_seed_bits(12, 10_000).unwrap();
        let run = sample_run(&qubit, 10_000, &seed_bits, 12).unwrap();
        let cert = certify(run.m(), &run.x_counts, run.q).unwrap();
        let (n, ell) = required_seed_shape(&run, &cert, 0);
        let tseed = ToeplitzSeed::random(n, ell, &mut stream_rng(1, 1)).unwrap();

        let mut other = cert.clone();
        other.m += 1;
        assert!(matches!(extract_run(&run, &other, &tseed, 0), Err(Error::Inconsistent(_))));

        let mixed = crate::SourceModel::from_probs(
            "mixed",
            crate::ProbVector::uniform(2).unwrap(),
            crate::ProbVector::uniform(2).unwrap(),
        )
        .unwrap();
        let bad_run = sample_run(&mixed, 10_000, &seed_bits, 12).unwrap();
        let bad_cert = certify(bad_run.m(), &bad_run.x_counts, bad_run.q).unwrap();
        assert!(matches!(extract_run(&bad_run, &bad_cert, &tseed, 0), Err(Error::NothingCertified(_))));
    }

    #[test]
    fn containers_round_trip() {
        let bits = BitString::from_bools((0..1001).map(|i| i % 5 == 2));
        let mut buf = Vec::new();
        write_bits(&mut buf, &bits, "meta=1").unwrap();
        assert_eq!(&buf[..8], b"UPQRBITS");
        let (back, meta) = read_bits(&mut buf.as_slice()).unwrap();
        assert_eq!((back, meta.as_str()), (bits.clone(), "meta=1"));

        let mut sbuf = Vec::new();
        write_seed(&mut sbuf, &bits).unwrap();
        assert_eq!(u64::from_le_bytes(sbuf[..8].try_into().unwrap()), 1001);
        assert_eq!(sbuf.len(), 8 + 126);
        assert_eq!(read_seed(&mut sbuf.as_slice()).unwrap(), bits);
        sbuf.pop();
        assert!(read_seed(&mut sbuf.as_slice()).is_err());
    }
}
