//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on failure.
//!
//! All randomness is seeded, so a run is reproducible up to wall-clock
//! timings.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use archivesafe_core::bench::{self, SeriesConfig};
use archivesafe_core::container::{self, ContainerOptions};
use archivesafe_core::dbke::{self, DbkeCiphertext};
use archivesafe_core::kdf::{self, KdfParams, KdfSuite};
use archivesafe_core::solver::SolverConfig;
use archivesafe_core::wrap::{self, Difficulty, SaltView};
use archivesafe_core::Error;
use archivesafe_service::tap::WireTap;
use archivesafe_service::{solve_remote, RemoteOptions, ServiceConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

type Outcome = Result<String, String>;

fn d(n: u32) -> Difficulty {
    Difficulty::new(n).unwrap()
}

fn random_message(rng: &mut ChaCha20Rng, max: usize) -> Vec<u8> {
    let len = rng.random_range(0..=max);
    (0..len).map(|_| rng.random()).collect()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Criterion 1: Decrypting an encryption returns the message.
fn correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(0xacc1);
    let cfg = SolverConfig::default();
    let mut failures = Vec::new();

    for i in 0..500 {
        let dd = rng.random_range(0..=12);
        let m = random_message(&mut rng, 2048);
        let opts = ContainerOptions {
            layered: false,
            body_checksum: rng.random(),
        };
        let ct = dbke::dbke_encrypt(KdfSuite::Fast, d(dd), &m, rng.random(), &mut rng).unwrap();
        let parsed = container::parse(&container::serialize(&ct, opts)).unwrap();
        match dbke::dbke_decrypt(&parsed.ciphertext, &cfg) {
            Ok((out, _)) if out == m => {}
            other => failures.push(format!("suite 2 #{i} d={dd}: {other:?}")),
        }
    }

    // Every Argon2 call costs a noticeable fraction of a second, so these stay
    // at the ciphertext level and skip the body checksum.
    for i in 0..20u32 {
        let dd = i % 7;
        let m = random_message(&mut rng, 256);
        let ct =
            dbke::dbke_encrypt(KdfSuite::MemoryHard, d(dd), &m, rng.random(), &mut rng).unwrap();
        match dbke::dbke_decrypt(&ct, &cfg) {
            Ok((out, _)) if out == m => {}
            other => failures.push(format!("suite 1 #{i} d={dd}: {other:?}")),
        }
    }

    let elapsed = start.elapsed();
    if !failures.is_empty() {
        return Err(format!(
            "{} of 520 failed, first: {}",
            failures.len(),
            failures[0]
        ));
    }
    check(
        elapsed < Duration::from_secs(120),
        format!(
            "520/520 round trips (500 suite 2, 20 suite 1) in {:.1} s",
            elapsed.as_secs_f64()
        ),
    )
}

/// Criterion 2: Degrading a container equals encrypting at the target difficulty with
/// the same randomness.
fn degrade_equivalence() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(0xacc2);
    for i in 0..100 {
        let from = rng.random_range(0..=56);
        let to = rng.random_range(from..=from + 8);
        let salted = rng.random();
        let opts = ContainerOptions {
            layered: rng.random(),
            body_checksum: rng.random(),
        };
        let m = random_message(&mut rng, 512);
        let enc_seed: u64 = rng.random();

        let encrypt_at = |dd: u32| {
            let mut r = ChaCha20Rng::seed_from_u64(enc_seed);
            container::serialize(
                &dbke::dbke_encrypt(KdfSuite::Fast, d(dd), &m, salted, &mut r).unwrap(),
                opts,
            )
        };
        let degraded = container::degrade_file(&encrypt_at(from), d(to)).unwrap();
        if degraded != encrypt_at(to) {
            return Err(format!(
                "case {i}: d={from} -> {to} differs from a fresh encryption"
            ));
        }
    }
    Ok("100/100 degraded containers bit-identical to fresh encryptions".into())
}

/// Criterion 3: Four more bits cost sixteen times the candidates.
fn scaling() -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    for (lo, hi, seed) in [(4, 8, 31), (8, 12, 32), (10, 14, 33)] {
        let mut cfg = SeriesConfig::new(KdfSuite::Fast, vec![lo, hi], 300);
        cfg.rng_seed = seed;
        let ratio = bench::run_series(&cfg).unwrap().ratios[0].candidates;
        ok &= (12.8..=19.2).contains(&ratio);
        lines.push(format!("{lo}->{hi}: {ratio:.2}"));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(60);
    check(
        ok,
        format!(
            "candidate ratios {} (300 trials/level, {:.1} s)",
            lines.join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

fn mean_wrap_time(suite: KdfSuite, levels: [u32; 2], rounds: usize, batch: usize) -> [f64; 2] {
    let mut rng = ChaCha20Rng::seed_from_u64(0xacc4);
    let mut totals = [Duration::ZERO; 2];
    for round in 0..rounds + 1 {
        // Alternate the order so drift hits both levels equally.
        for k in [round % 2, 1 - round % 2] {
            let t = Instant::now();
            for _ in 0..batch {
                std::hint::black_box(wrap::wrap(suite, d(levels[k]), false, &mut rng));
            }
            if round > 0 {
                totals[k] += t.elapsed();
            }
        }
    }
    totals.map(|t| t.as_secs_f64() / (rounds * batch) as f64)
}

/// Criterion 4: Wrapping costs two suite calls whatever the difficulty.
fn constant_write_cost() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(0xacc5);
    let mut cases = Vec::new();
    for dd in 0..=64 {
        cases.push((KdfSuite::Fast, dd, false));
        cases.push((KdfSuite::Fast, dd, true));
    }
    for dd in [0, 16, 64] {
        cases.push((KdfSuite::MemoryHard, dd, dd == 16));
    }
    for (suite, dd, salted) in cases {
        let before = kdf::calls_on_current_thread();
        let _ = wrap::wrap(suite, d(dd), salted, &mut rng);
        let calls = kdf::calls_on_current_thread() - before;
        if calls != 2 {
            return Err(format!("suite {suite} d={dd}: {calls} calls"));
        }
    }

    let argon = mean_wrap_time(KdfSuite::MemoryHard, [4, 16], 6, 1);
    let fast = mean_wrap_time(KdfSuite::Fast, [4, 16], 100, 500);
    let r1 = argon[1] / argon[0];
    let r2 = fast[1] / fast[0];
    check(
        (0.8..=1.2).contains(&r1) && (0.8..=1.2).contains(&r2),
        format!(
            "2 calls at every d; wrap time d16/d4: suite 1 {r1:.3} ({:.1} ms), suite 2 {r2:.3} ({:.2} us)",
            argon[0] * 1e3,
            fast[0] * 1e6
        ),
    )
}

/// Criterion 5: The memory-hard suite uses the published parameters, and its output
/// matches an independent implementation run with them.
fn parameter_fidelity() -> Outcome {
    let p = KdfSuite::MemoryHard.params();
    let expect = KdfParams {
        parallelism: 8,
        memory_kib: 102_400,
        iterations: 2,
        output_bits: 128,
    };
    if p != expect {
        return Err(format!("{p:?}"));
    }
    let golden: serde_json::Value =
        serde_json::from_str(include_str!("../../core/tests/fixtures/golden.json")).unwrap();
    let input = [0u8; 16];
    let h1 = hex::encode(kdf::h1(KdfSuite::MemoryHard, &input));
    check(
        golden["kdf"]["suite1_h1"] == h1.as_str(),
        format!("(p=8, m=102400 KiB, t=2, 128-bit); h1(0^16) = {h1} matches reference"),
    )
}

/// Criterion 6: The solve service never sees the salt, and the key it enables equals
/// the locally unwrapped key.
fn outsourcing_blindness() -> Outcome {
    let server = archivesafe_service::spawn(ServiceConfig {
        bind: "127.0.0.1:0".parse().unwrap(),
        cap: 16,
        workers: 2,
        ..Default::default()
    })
    .map_err(|e| e.to_string())?;
    let tap = WireTap::start(server.addr()).map_err(|e| e.to_string())?;
    let mut rng = ChaCha20Rng::seed_from_u64(0xacc6);
    let local_cfg = SolverConfig::default();
    let mut sent_total = 0;

    for i in 0..100 {
        let dd = rng.random_range(0..=10);
        let (_, w) = wrap::wrap(KdfSuite::Fast, d(dd), true, &mut rng);
        tap.clear();
        let remote = solve_remote(&tap.endpoint(), &w, &RemoteOptions::default())
            .map_err(|e| format!("#{i}: {e}"))?;
        let local = wrap::unwrap(&w, SaltView::Holder, &local_cfg).map_err(|e| e.to_string())?;
        if remote.key != local.key {
            return Err(format!("#{i}: remote key differs from local key"));
        }

        let sent = tap.sent();
        sent_total += sent.len();
        let salt = w.salt.unwrap();
        let hex = salt.to_hex();
        if sent.windows(16).any(|x| x == salt.as_bytes()) {
            return Err(format!("#{i}: raw salt on the wire"));
        }
        if sent
            .windows(32)
            .any(|x| x.eq_ignore_ascii_case(hex.as_bytes()))
        {
            return Err(format!("#{i}: hex salt on the wire"));
        }
    }
    Ok(format!(
        "100 salted round trips, {sent_total} request bytes captured, no salt, keys equal"
    ))
}

/// Criterion 7: The seed's rank is uniform, so mean work at d=10 is (2^10 + 1) / 2.
fn expected_rank() -> Outcome {
    let mut cfg = SeriesConfig::new(KdfSuite::Fast, vec![10], 1000);
    cfg.rng_seed = 0xacc7;
    let mean = bench::run_series(&cfg).unwrap().levels[0].candidates.mean;
    let expect = 512.5;
    let dev = mean / expect - 1.0;
    check(
        dev.abs() <= 0.10,
        format!("mean {mean:.1} vs {expect} ({:+.1}%)", dev * 100.0),
    )
}

fn sample_container(rng: &mut ChaCha20Rng) -> Vec<u8> {
    let dd = rng.random_range(0..=64);
    let m = random_message(rng, 100);
    let opts = ContainerOptions {
        layered: rng.random(),
        body_checksum: rng.random(),
    };
    let salted = rng.random();
    let ct: DbkeCiphertext = dbke::dbke_encrypt(KdfSuite::Fast, d(dd), &m, salted, rng).unwrap();
    container::serialize(&ct, opts)
}

fn mutate(rng: &mut ChaCha20Rng, bytes: &mut Vec<u8>) {
    let header_end = bytes.len().min(120);
    match rng.random_range(0..4) {
        0 => bytes.truncate(rng.random_range(0..bytes.len())),
        1 | 2 => {
            for _ in 0..rng.random_range(1..=8) {
                // Mostly in the header, where the structure is.
                let limit = if rng.random_bool(0.8) {
                    header_end
                } else {
                    bytes.len()
                };
                let i = rng.random_range(0..limit);
                bytes[i] ^= 1 << rng.random_range(0..8);
            }
        }
        _ => {
            let i = rng.random_range(0..header_end);
            bytes[i] ^= 1 << rng.random_range(0..8);
            bytes.truncate(rng.random_range(0..bytes.len()));
        }
    }
}

/// Criterion 8: Mutated containers never crash the parser; degrade is associative.
fn container_robustness() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(0xacc8);
    let (mut errors, mut valid) = (0, 0);
    let prev_hook = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));

    let result = (|| {
        for i in 0..10_000 {
            let mut bytes = sample_container(&mut rng);
            mutate(&mut rng, &mut bytes);
            let target = d(rng.random_range(0..=64));
            let run = panic::catch_unwind(AssertUnwindSafe(|| {
                let parsed = container::parse(&bytes);
                let header = container::parse_header(&bytes);
                let degraded = container::degrade_file(&bytes, target);
                (parsed, header, degraded)
            }));
            let Ok((parsed, header, degraded)) = run else {
                return Err(format!(
                    "iteration {i}: parser panicked on {}",
                    hex::encode(&bytes)
                ));
            };
            match parsed {
                Ok(c) => {
                    if container::serialize(&c.ciphertext, c.options) != bytes {
                        return Err(format!(
                            "iteration {i}: accepted input does not re-serialize"
                        ));
                    }
                    valid += 1;
                }
                Err(Error::Io(_)) => return Err(format!("iteration {i}: unclassified error")),
                Err(_) => errors += 1,
            }
            if let (Ok(_), Err(e)) = (&header, &degraded) {
                if !matches!(e, Error::CannotReduceDifficulty { .. }) {
                    return Err(format!(
                        "iteration {i}: header parsed but degrade failed with {e}"
                    ));
                }
            }
        }
        Ok(())
    })();
    panic::set_hook(prev_hook);
    result?;

    for i in 0..200 {
        let bytes = sample_container(&mut rng);
        let d0 = container::parse_header(&bytes).unwrap().difficulty();
        let d1 = rng.random_range(d0..=64);
        let d2 = rng.random_range(d1..=64);
        let stepwise =
            container::degrade_file(&container::degrade_file(&bytes, d(d1)).unwrap(), d(d2))
                .unwrap();
        let direct = container::degrade_file(&bytes, d(d2)).unwrap();
        if stepwise != direct {
            return Err(format!("associativity case {i}: d={d0} -> {d1} -> {d2}"));
        }
    }
    Ok(format!(
        "10000 mutations: {errors} classified errors, {valid} valid re-serializing parses, no panics; 200/200 associativity"
    ))
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        ("correctness", correctness),
        ("degrade equivalence", degrade_equivalence),
        ("scaling", scaling),
        ("constant write cost", constant_write_cost),
        ("parameter fidelity", parameter_fidelity),
        ("outsourcing blindness", outsourcing_blindness),
        ("expected rank", expected_rank),
        ("container robustness", container_robustness),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS [{secs:.1} s] {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL [{secs:.1} s] {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
