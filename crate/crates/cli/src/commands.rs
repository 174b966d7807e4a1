use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use upqrng::extract::{
    extract_run, output_length, read_bits, read_seed, required_seed_shape, write_bits, write_seed, ToeplitzSeed,
    BITS_MAGIC,
};
use upqrng::protocol::certify as certify_counts;
use upqrng::simulate::{derive_seed_bits, rate_sweep, sample_run, stream_rng, RunRecord, RUN_MAGIC};
use upqrng::stattests::{battery, Verdict};
use upqrng::tomo::{compare_csv, compare_sweep, sig9, TomoSource};
use upqrng::{BitString, Certificate};

use crate::config::{config_hash, digest_hex, stamp, Settings};
use crate::CliError;

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", path.display())))
}

fn write_all(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> upqrng::Result<()>) -> Result<(), CliError> {
    let mut w = create(path)?;
    f(&mut w)?;
    w.flush().map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

/// Writes text to `--out`, or to stdout when no path is set.
fn emit_text(settings: &Settings, text: &str) -> Result<(), CliError> {
    match &settings.out {
        Some(path) => write_all(path, |w| Ok(w.write_all(text.as_bytes())?)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_run(path: &Path) -> Result<(RunRecord, Vec<u8>), CliError> {
    let bytes = read_file(path)?;
    let run = RunRecord::read_from(&mut bytes.as_slice())
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok((run, bytes))
}

pub fn simulate(s: &Settings) -> Result<(), CliError> {
    let m = s.require_m()?;
    let out = s.require_out()?;
    let model = s.model.source()?;
    let (seed_bits, seed_desc) = match &s.seed_file {
        Some(path) => {
            let bytes = read_file(path)?;
            let bits = read_seed(&mut bytes.as_slice())
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            (bits, format!("file:{}", digest_hex(&bytes)))
        }
        None => (derive_seed_bits(s.rng_seed, m)?, "derived".to_string()),
    };
    let mut run = sample_run(&model, m, &seed_bits, s.rng_seed)?;
    let hash = config_hash(&[
        ("command", "simulate".into()),
        ("model", s.model.canonical()),
        ("m", m.to_string()),
        ("rng_seed", s.rng_seed.to_string()),
        ("seed", seed_desc),
    ]);
    run.meta = stamp(&hash);
    write_all(out, |w| run.write_to(w))?;
    println!(
        "simulated {} run: m={}, n_X={}, control counts {:?}, seed bits consumed {}, wrote {}",
        run.label,
        run.m(),
        run.n_x(),
        run.x_counts.as_slice(),
        run.seed_bits_consumed,
        out.display()
    );
    Ok(())
}

fn certificate_text(cert: &Certificate, hash: &str) -> String {
    let text = cert.to_text();
    let (first, rest) = text.split_once('\n').unwrap_or((&text, ""));
    format!("{first}\n# {}\n{rest}", stamp(hash))
}

pub fn certify(s: &Settings, run_path: &Path) -> Result<(), CliError> {
    let (run, bytes) = load_run(run_path)?;
    let cert = certify_counts(run.m(), &run.x_counts, run.q)?;
    let hash = config_hash(&[("command", "certify".into()), ("run", digest_hex(&bytes))]);
    emit_text(s, &certificate_text(&cert, &hash))?;
    eprintln!(
        "m={} n_X={} H~={:.6} bound={:.6} bits/outcome, seed cost {} bits, b_sec={:.3}, rate={:.6}",
        cert.m, cert.n_x, cert.h_half_estimate, cert.min_entropy_bound, cert.seed_cost, cert.b_sec, cert.rate
    );
    if !cert.certifies_anything() {
        return Err(CliError::NothingCertified(format!(
            "run certifies nothing: b_sec = {:.3} ≤ 0, no true random bits can be extracted",
            cert.b_sec
        )));
    }
    Ok(())
}

pub fn extract(s: &Settings, run_path: &Path, cert_path: &Path) -> Result<(), CliError> {
    let out = s.require_out()?;
    let (run, run_bytes) = load_run(run_path)?;
    let cert_bytes = read_file(cert_path)?;
    let cert_text = String::from_utf8(cert_bytes.clone())
        .map_err(|_| CliError::Input(format!("{}: not UTF-8", cert_path.display())))?;
    let cert = Certificate::from_text(&cert_text)
        .map_err(|e| CliError::Input(format!("{}: {e}", cert_path.display())))?;
    if output_length(cert.b_sec, s.epsilon_exp) == 0 {
        return Err(CliError::NothingCertified(format!(
            "refusing to extract: b_sec = {:.3} leaves no output bits at epsilon exponent {}",
            cert.b_sec, s.epsilon_exp
        )));
    }
    let (n, ell) = required_seed_shape(&run, &cert, s.epsilon_exp);
    let (seed, seed_desc) = match &s.seed_file {
        Some(path) => {
            let bytes = read_file(path)?;
            let bits = read_seed(&mut bytes.as_slice())
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            let seed = ToeplitzSeed::new(n, ell, bits).map_err(|e| {
                CliError::Input(format!("{}: need {} seed bits: {e}", path.display(), n + ell - 1))
            })?;
            (seed, format!("file:{}", digest_hex(&bytes)))
        }
        None => {
            let seed = ToeplitzSeed::random(n, ell, &mut stream_rng(s.rng_seed, 2))?;
            let mut seed_path = PathBuf::from(out);
            seed_path.as_mut_os_string().push(".seed");
            write_all(&seed_path, |w| write_seed(w, seed.bits()))?;
            eprintln!("generated Toeplitz seed ({} bits) at {}", seed.bits().len(), seed_path.display());
            (seed, format!("derived:{}", s.rng_seed))
        }
    };
    let y = extract_run(&run, &cert, &seed, s.epsilon_exp)?;
    let hash = config_hash(&[
        ("command", "extract".into()),
        ("run", digest_hex(&run_bytes)),
        ("certificate", digest_hex(&cert_bytes)),
        ("seed", seed_desc),
        ("epsilon_exp", s.epsilon_exp.to_string()),
    ]);
    write_all(out, |w| write_bits(w, &y, &stamp(&hash)))?;
    println!("extracted {} bits from {} input bits, wrote {}", y.len(), n, out.display());
    Ok(())
}

pub fn sweep(s: &Settings) -> Result<(), CliError> {
    let model = s.model.source()?;
    let rows = rate_sweep(&model, &s.m_grid, s.reps, s.rng_seed, s.workers)?;
    let hash = config_hash(&[
        ("command", "sweep".into()),
        ("model", s.model.canonical()),
        ("m_grid", format!("{:?}", s.m_grid)),
        ("reps", s.reps.to_string()),
        ("rng_seed", s.rng_seed.to_string()),
    ]);
    let mut csv = format!("# {}\n# schema=sweep-v1\n", stamp(&hash));
    csv.push_str("m,mean_rate,std_rate,exact_mean,exact_std,asymptote,classical_min_entropy\n");
    for r in rows {
        let (em, es) = r.exact.map(|(a, b)| (sig9(a), sig9(b))).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{},{},{},{em},{es},{},{}",
            r.m,
            sig9(r.mean),
            sig9(r.std),
            sig9(r.asymptote),
            sig9(r.classical_min_entropy)
        );
    }
    emit_text(s, &csv)
}

pub fn compare_tomo(s: &Settings) -> Result<(), CliError> {
    let source = TomoSource::from_model(&s.model.source()?)?;
    let rows = compare_sweep(&source, &s.m_grid, s.reps, s.rng_seed, s.workers)?;
    let hash = config_hash(&[
        ("command", "compare-tomo".into()),
        ("model", s.model.canonical()),
        ("m_grid", format!("{:?}", s.m_grid)),
        ("reps", s.reps.to_string()),
        ("rng_seed", s.rng_seed.to_string()),
    ]);
    emit_text(s, &format!("# {}\n# schema=compare-tomo-v1\n{}", stamp(&hash), compare_csv(&rows)))
}

/// Bits of a bit container, or the packed raw outcomes of a run container.
fn load_bits(path: &Path) -> Result<(BitString, Vec<u8>), CliError> {
    let bytes = read_file(path)?;
    let parsed = if bytes.starts_with(&BITS_MAGIC) {
        read_bits(&mut bytes.as_slice()).map(|(bits, _)| bits)
    } else if bytes.starts_with(&RUN_MAGIC) {
        RunRecord::read_from(&mut bytes.as_slice()).map(|run| run.z_bits())
    } else {
        return Err(CliError::Input(format!("{}: neither a bit nor a run container", path.display())));
    };
    let bits = parsed.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok((bits, bytes))
}

pub fn stats(s: &Settings, input: &Path) -> Result<(), CliError> {
    let (bits, bytes) = load_bits(input)?;
    let report = battery(&bits)?;
    let hash = config_hash(&[("command", "stats".into()), ("input", digest_hex(&bytes))]);
    let csv = format!(
        "# {}\n# schema=stats-v1\n# bits={}\n{}# verdict={}\n",
        stamp(&hash),
        bits.len(),
        report.to_csv(),
        report.verdict
    );
    emit_text(s, &csv)?;
    eprintln!("battery verdict on {} bits: {}", bits.len(), report.verdict);
    if report.verdict == Verdict::Fail {
        return Err(CliError::BatteryFailed);
    }
    Ok(())
}
