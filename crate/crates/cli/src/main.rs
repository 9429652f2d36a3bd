//! `archivesafe`: encrypt, decrypt, degrade and inspect ASAF containers.

mod exit;
mod fsio;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, SystemTime};

use archivesafe_core::bench::{self, SeriesConfig};
use archivesafe_core::container::{self, ContainerOptions};
use archivesafe_core::dbke;
use archivesafe_core::solver::{self, SolveReport, SolverConfig};
use archivesafe_core::{Difficulty, KdfSuite, SymmetricKey};
use archivesafe_service::{RemoteOptions, ServiceConfig};
use clap::{Args, Parser, Subcommand};
use walkdir::WalkDir;

use exit::CliError;

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "archivesafe",
    version,
    about = "Keyless, difficulty-based file encryption"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encrypt a file into a container.
    Encrypt(EncryptArgs),
    /// Solve a container's puzzle and write the plaintext.
    Decrypt(DecryptArgs),
    /// Raise the difficulty of a container, or of every container under a directory.
    Degrade(DegradeArgs),
    /// Print a container's header without solving it.
    Inspect(InspectArgs),
    /// Time wrap and solve at several difficulties; CSV on stdout.
    Bench(BenchArgs),
    /// Run the seed-recovery service.
    Serve(ServeArgs),
    /// Recover a container's seed through a remote service and print it.
    SolveRemote(SolveRemoteArgs),
}

#[derive(Args)]
struct Limits {
    /// Allow difficulties above 64 (up to 128).
    #[arg(long)]
    force_high_difficulty: bool,
}

impl Limits {
    fn max(&self) -> u32 {
        if self.force_high_difficulty {
            archivesafe_core::LAMBDA_BITS
        } else {
            Difficulty::DEFAULT_MAX
        }
    }

    fn difficulty(&self, d: u32) -> CliResult<Difficulty> {
        Difficulty::with_max(d, self.max()).map_err(|e| {
            let hint = if self.force_high_difficulty {
                ""
            } else {
                " (see --force-high-difficulty)"
            };
            CliError::config(format!("{e}{hint}"))
        })
    }
}

#[derive(Args)]
struct EncryptArgs {
    input: PathBuf,
    /// Defaults to INPUT.asaf.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// 1 = Argon2id (memory-hard), 2 = BLAKE2s (fast, for testing).
    #[arg(long, default_value = "1", value_parser = parse_suite)]
    suite: KdfSuite,
    #[arg(short, long)]
    difficulty: u32,
    /// Mix a stored salt into the key so the puzzle can be solved by a third party.
    #[arg(long)]
    salted: bool,
    /// Also encrypt under a passphrase-derived key.
    #[arg(long, requires = "passphrase_env")]
    layered: bool,
    /// Environment variable holding the passphrase for --layered.
    #[arg(long, value_name = "VAR")]
    passphrase_env: Option<String>,
    #[arg(long)]
    no_body_checksum: bool,
    /// Overwrite the output if it exists.
    #[arg(long)]
    force: bool,
    #[command(flatten)]
    limits: Limits,
}

#[derive(Args)]
struct DecryptArgs {
    input: PathBuf,
    /// Defaults to INPUT without its .asaf extension, or INPUT.dec.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Local solver threads.
    #[arg(long, conflicts_with = "remote")]
    workers: Option<usize>,
    /// Solve on a remote service instead, e.g. http://127.0.0.1:8787.
    #[arg(long, value_name = "ENDPOINT")]
    remote: Option<String>,
    /// Permit sending an unsalted puzzle to --remote; the service learns the key.
    #[arg(long, requires = "remote")]
    allow_unsalted_remote: bool,
    /// Environment variable holding the passphrase of a layered container.
    #[arg(long, value_name = "VAR")]
    passphrase_env: Option<String>,
    #[arg(long)]
    force: bool,
    #[command(flatten)]
    limits: Limits,
}

#[derive(Args)]
struct DegradeArgs {
    /// A container, or a directory searched recursively.
    path: PathBuf,
    /// Target difficulty.
    #[arg(short, long)]
    difficulty: u32,
    /// Only touch files last modified at least this many days ago.
    #[arg(long, value_name = "DAYS")]
    older_than: Option<u64>,
    /// Files processed in parallel.
    #[arg(long, default_value_t = solver::default_workers())]
    workers: usize,
    #[command(flatten)]
    limits: Limits,
}

#[derive(Args)]
struct InspectArgs {
    path: PathBuf,
    /// Time the suite on this machine instead of using its nominal call cost.
    #[arg(long)]
    calibrate: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value = "2", value_parser = parse_suite)]
    suite: KdfSuite,
    /// Comma-separated difficulties.
    #[arg(short, long, value_delimiter = ',', default_value = "4,8")]
    difficulty: Vec<u32>,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 5)]
    warmup: usize,
    /// RNG seed for the wrapped keys.
    #[arg(long, default_value_t = 0x5eed)]
    seed: u64,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8787")]
    bind: SocketAddr,
    /// Largest difficulty accepted; ARCHIVESAFE_SOLVER_CAP overrides it.
    #[arg(long, default_value_t = 32)]
    cap: u32,
    #[arg(long, default_value_t = solver::default_workers())]
    workers: usize,
    #[arg(long, default_value_t = 4)]
    max_concurrent: usize,
    /// Per-request deadline in seconds.
    #[arg(long, default_value_t = 300)]
    deadline_secs: u64,
}

#[derive(Args)]
struct SolveRemoteArgs {
    input: PathBuf,
    #[arg(long, value_name = "ENDPOINT")]
    remote: String,
    #[arg(long)]
    allow_unsalted: bool,
    #[command(flatten)]
    limits: Limits,
}

fn parse_suite(s: &str) -> Result<KdfSuite, String> {
    match s {
        "1" | "argon2id" => Ok(KdfSuite::MemoryHard),
        "2" | "blake2s" => Ok(KdfSuite::Fast),
        _ => Err(format!("unknown suite {s:?} (expected 1 or 2)")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                exit::CONFIG
            } else {
                exit::OK
            });
        }
    };
    let result = match cli.command {
        Command::Encrypt(a) => encrypt(a),
        Command::Decrypt(a) => decrypt(a),
        Command::Degrade(a) => degrade(a),
        Command::Inspect(a) => inspect(a),
        Command::Bench(a) => run_bench(a),
        Command::Serve(a) => serve(a),
        Command::SolveRemote(a) => solve_remote(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("archivesafe: {e}");
            ExitCode::from(e.code)
        }
    }
}

fn read(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

fn check_output(path: &Path, force: bool) -> CliResult {
    if !force && path.exists() {
        return Err(CliError::config(format!(
            "{} exists (use --force)",
            path.display()
        )));
    }
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s: OsString = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn passphrase_key(var: Option<&str>, suite: KdfSuite) -> CliResult<SymmetricKey> {
    let var = var.ok_or_else(|| CliError::config("layered container needs --passphrase-env"))?;
    match std::env::var(var) {
        Ok(p) if !p.is_empty() => Ok(dbke::user_key_from_passphrase(suite, p.as_bytes())),
        _ => Err(CliError::config(format!(
            "environment variable {var} is unset or empty"
        ))),
    }
}

fn encrypt(a: EncryptArgs) -> CliResult {
    let d = a.limits.difficulty(a.difficulty)?;
    let out = a
        .output
        .clone()
        .unwrap_or_else(|| with_suffix(&a.input, ".asaf"));
    check_output(&out, a.force)?;
    let m = read(&a.input)?;

    let mut rng = rand::rng();
    let ct = if a.layered {
        let user = passphrase_key(a.passphrase_env.as_deref(), a.suite)?;
        dbke::layered_encrypt(&user, a.suite, d, &m, a.salted, &mut rng)
    } else {
        dbke::dbke_encrypt(a.suite, d, &m, a.salted, &mut rng)
    }
    .map_err(|e| CliError::core(&a.input, e))?;

    let opts = ContainerOptions {
        layered: a.layered,
        body_checksum: !a.no_body_checksum,
    };
    let bytes = container::serialize(&ct, opts);
    fsio::write_atomic(&out, &bytes, None).map_err(|e| CliError::io(&out, e))?;
    println!(
        "wrote {} ({} bytes, d={}, suite {})",
        out.display(),
        bytes.len(),
        d,
        a.suite
    );
    Ok(())
}

fn print_report(d: u32, report: &SolveReport, via: &str) {
    eprintln!(
        "solved d={d} {via}: {} candidates in {} ms",
        report.candidates_tried,
        report.elapsed.as_millis()
    );
}

fn decrypt(a: DecryptArgs) -> CliResult {
    let out = a
        .output
        .clone()
        .unwrap_or_else(|| match a.input.extension() {
            Some(e) if e == "asaf" => a.input.with_extension(""),
            _ => with_suffix(&a.input, ".dec"),
        });
    check_output(&out, a.force)?;
    let bytes = read(&a.input)?;
    let c = container::parse(&bytes).map_err(|e| CliError::core(&a.input, e))?;
    let ct = &c.ciphertext;
    let user = if c.options.layered {
        Some(passphrase_key(
            a.passphrase_env.as_deref(),
            ct.wrapped.suite,
        )?)
    } else {
        None
    };
    let d = ct.difficulty();
    let core = |e| CliError::core(&a.input, e);

    let outer = if let Some(endpoint) = &a.remote {
        let opts = RemoteOptions {
            max_difficulty: a.limits.max(),
            timeout: None,
            allow_unsalted: a.allow_unsalted_remote,
        };
        let r = archivesafe_service::solve_remote(endpoint, &ct.wrapped, &opts).map_err(|e| {
            CliError {
                code: exit::client_code(&e),
                message: format!("{}: {e}", a.input.display()),
            }
        })?;
        print_report(d, &r.report(), &format!("via {endpoint}"));
        dbke::decrypt_with_key(ct, &r.key).map_err(core)?
    } else {
        let cfg = SolverConfig {
            workers: a.workers.unwrap_or_else(solver::default_workers).max(1),
            chunk: None,
            max_difficulty: a.limits.max(),
        };
        let (m, report) = dbke::dbke_decrypt(ct, &cfg).map_err(core)?;
        print_report(d, &report, &format!("with {} workers", report.workers_used));
        m
    };
    let m = match &user {
        Some(k) => dbke::open_inner(k, &outer).map_err(core)?,
        None => outer,
    };
    fsio::write_atomic(&out, &m, None).map_err(|e| CliError::io(&out, e))?;
    Ok(())
}

enum Degraded {
    Changed { from: u32, to: u32 },
    Unchanged,
    Foreign,
}

/// With `skip_foreign`, files without the container magic are left alone.
fn degrade_one(path: &Path, target: Difficulty, skip_foreign: bool) -> CliResult<Degraded> {
    let bytes = read(path)?;
    if skip_foreign && !bytes.starts_with(&container::MAGIC) {
        return Ok(Degraded::Foreign);
    }
    let from = container::parse_header(&bytes)
        .map_err(|e| CliError::core(path, e))?
        .difficulty();
    let out = container::degrade_file(&bytes, target).map_err(|e| CliError::core(path, e))?;
    if out == bytes {
        return Ok(Degraded::Unchanged);
    }
    fsio::replace_preserving(path, &out).map_err(|e| CliError::io(path, e))?;
    Ok(Degraded::Changed {
        from,
        to: target.get(),
    })
}

fn old_enough(path: &Path, min_age: Option<Duration>) -> io::Result<bool> {
    let Some(min_age) = min_age else {
        return Ok(true);
    };
    let modified = fs::metadata(path)?.modified()?;
    let age = SystemTime::now()
        .duration_since(modified)
        .unwrap_or_default();
    Ok(age >= min_age)
}

fn degrade(a: DegradeArgs) -> CliResult {
    let target = a.limits.difficulty(a.difficulty)?;
    let min_age = a
        .older_than
        .map(|days| Duration::from_secs(days.saturating_mul(86_400)));

    if !a.path.is_dir() {
        if !old_enough(&a.path, min_age).map_err(|e| CliError::io(&a.path, e))? {
            println!("skipped {} (too recent)", a.path.display());
            return Ok(());
        }
        report_degrade(&a.path, &degrade_one(&a.path, target, false)?);
        return Ok(());
    }

    let mut files = Vec::new();
    for entry in WalkDir::new(&a.path).sort_by_file_name() {
        let entry = entry.map_err(|e| CliError {
            code: exit::IO,
            message: e.to_string(),
        })?;
        if entry.file_type().is_file()
            && old_enough(entry.path(), min_age).map_err(|e| CliError::io(entry.path(), e))?
        {
            files.push(entry.into_path());
        }
    }

    let next = AtomicUsize::new(0);
    let failures = Mutex::new(Vec::new());
    std::thread::scope(|s| {
        for _ in 0..a.workers.clamp(1, files.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(path) = files.get(i) else { break };
                match degrade_one(path, target, true) {
                    Ok(r) => report_degrade(path, &r),
                    Err(e) => {
                        eprintln!("archivesafe: {e}");
                        failures.lock().unwrap().push((i, e));
                    }
                }
            });
        }
    });

    let mut failures = failures.into_inner().unwrap();
    failures.sort_by_key(|(i, _)| *i);
    match failures.into_iter().next() {
        None => Ok(()),
        Some((_, first)) => Err(CliError {
            code: first.code,
            message: "some files were not degraded".into(),
        }),
    }
}

fn report_degrade(path: &Path, r: &Degraded) {
    match r {
        Degraded::Changed { from, to } => println!("degraded {} d={from} -> {to}", path.display()),
        Degraded::Unchanged => println!("unchanged {}", path.display()),
        Degraded::Foreign => eprintln!("skipped {}: not a container", path.display()),
    }
}

fn inspect(a: InspectArgs) -> CliResult {
    let mut f = File::open(&a.path).map_err(|e| CliError::io(&a.path, e))?;
    let len = f.metadata().map_err(|e| CliError::io(&a.path, e))?.len();
    let mut info = container::inspect_reader(&mut f, len, Duration::ZERO)
        .map_err(|e| CliError::core(&a.path, e))?;
    let per_call = if a.calibrate {
        let n = match info.suite {
            KdfSuite::MemoryHard => 3,
            KdfSuite::Fast => 100_000,
        };
        bench::measure_call_time(info.suite, n)
    } else {
        info.suite.nominal_call_time()
    };
    info.estimated_cost = solver::estimate_cost(info.difficulty, per_call);
    println!("{info}");
    Ok(())
}

fn run_bench(a: BenchArgs) -> CliResult {
    let mut cfg = SeriesConfig::new(a.suite, a.difficulty, a.trials);
    cfg.warmup = a.warmup;
    cfg.rng_seed = a.seed;
    for &d in &cfg.difficulties {
        Difficulty::new(d).map_err(|e| CliError::config(e.to_string()))?;
    }
    let series = bench::run_series(&cfg).map_err(|e| CliError::config(e.to_string()))?;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    bench::write_csv(&series, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

fn serve(a: ServeArgs) -> CliResult {
    let cfg = ServiceConfig {
        bind: a.bind,
        cap: a.cap,
        workers: a.workers,
        max_concurrent: a.max_concurrent,
        deadline: Duration::from_secs(a.deadline_secs),
    };
    let service_err = |e: io::Error| CliError {
        code: if e.kind() == io::ErrorKind::InvalidInput {
            exit::CONFIG
        } else {
            exit::IO
        },
        message: e.to_string(),
    };
    let cfg = cfg.with_env_cap().map_err(service_err)?;
    let cap = cfg.cap;
    archivesafe_service::serve(cfg, |addr| {
        eprintln!("listening on http://{addr} (cap {cap})")
    })
    .map_err(service_err)
}

fn solve_remote(a: SolveRemoteArgs) -> CliResult {
    let bytes = read(&a.input)?;
    let header = container::parse_header(&bytes).map_err(|e| CliError::core(&a.input, e))?;
    let opts = RemoteOptions {
        max_difficulty: a.limits.max(),
        timeout: None,
        allow_unsalted: a.allow_unsalted,
    };
    let r =
        archivesafe_service::solve_remote(&a.remote, &header.wrapped(), &opts).map_err(|e| {
            CliError {
                code: exit::client_code(&e),
                message: format!("{}: {e}", a.input.display()),
            }
        })?;
    println!("seed: {}", r.seed.to_hex());
    println!("candidates: {}", r.candidates_tried);
    println!("elapsed_ms: {}", r.elapsed_ms);
    Ok(())
}
