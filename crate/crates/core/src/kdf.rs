//! Domain-separated hash suites.
//!
//! Every call hashes `prefix || input` with the suite's primitive and returns
//! a 128-bit digest. The prefix byte is the only thing distinguishing the
//! checksum function from the key function:
//!
//! | prefix | use |
//! |--------|-----|
//! | `0x01` | seed checksum ([`h1`]) |
//! | `0x02` | key derivation ([`h2`]) |
//! | `0x03` | container body checksum |
//! | `0x04` | passphrase to user key (layered mode) |

use std::cell::Cell;
use std::fmt;
use std::time::Duration;

use argon2::{Algorithm, Argon2, Params, Version};
use blake2::digest::consts::U16;
use blake2::{Blake2s, Digest};

use crate::error::{Error, Result};

/// Output length of both suites, and the seed/key length of the wrap.
pub const LAMBDA_BITS: u32 = 128;
pub const LAMBDA_BYTES: usize = 16;

pub const PREFIX_CHECKSUM: u8 = 0x01;
pub const PREFIX_KEY: u8 = 0x02;
pub const PREFIX_BODY: u8 = 0x03;
pub const PREFIX_PASSPHRASE: u8 = 0x04;

/// Argon2 refuses salts shorter than 8 bytes. Both prefixes share this
/// constant, so it plays no part in domain separation.
const ARGON2_SALT: &[u8; 16] = b"ArchiveSafe-KDF1";

/// Suite identifier as stored in the container header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum KdfSuite {
    /// Argon2id, 8 lanes, 102400 KiB, 2 passes.
    MemoryHard = 1,
    /// One BLAKE2s-128 pass. For tests and benchmarks only.
    Fast = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KdfParams {
    pub parallelism: u32,
    pub memory_kib: u32,
    pub iterations: u32,
    pub output_bits: u32,
}

impl KdfSuite {
    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn params(self) -> KdfParams {
        match self {
            KdfSuite::MemoryHard => KdfParams {
                parallelism: 8,
                memory_kib: 102_400,
                iterations: 2,
                output_bits: LAMBDA_BITS,
            },
            KdfSuite::Fast => KdfParams {
                parallelism: 1,
                memory_kib: 0,
                iterations: 1,
                output_bits: LAMBDA_BITS,
            },
        }
    }

    /// Rough per-call cost on a current desktop core, used for estimates
    /// when nothing has been measured.
    pub fn nominal_call_time(self) -> Duration {
        match self {
            KdfSuite::MemoryHard => Duration::from_millis(200),
            KdfSuite::Fast => Duration::from_nanos(300),
        }
    }

    /// Candidates handed to a solver worker per dispatch.
    pub fn default_chunk(self) -> u64 {
        match self {
            KdfSuite::MemoryHard => 1,
            KdfSuite::Fast => 1024,
        }
    }
}

impl TryFrom<u8> for KdfSuite {
    type Error = Error;

    fn try_from(id: u8) -> Result<Self> {
        match id {
            1 => Ok(KdfSuite::MemoryHard),
            2 => Ok(KdfSuite::Fast),
            other => Err(Error::UnknownSuite(other)),
        }
    }
}

impl fmt::Display for KdfSuite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KdfSuite::MemoryHard => write!(f, "1 (argon2id)"),
            KdfSuite::Fast => write!(f, "2 (blake2s-128, test only)"),
        }
    }
}

thread_local! {
    static CALLS: Cell<u64> = const { Cell::new(0) };
}

/// Number of suite evaluations made by the current thread so far.
pub fn calls_on_current_thread() -> u64 {
    CALLS.with(Cell::get)
}

/// `Suite(prefix || input)`.
pub fn digest(suite: KdfSuite, prefix: u8, input: &[u8]) -> [u8; LAMBDA_BYTES] {
    CALLS.with(|c| c.set(c.get() + 1));
    let mut out = [0u8; LAMBDA_BYTES];
    match suite {
        KdfSuite::Fast => {
            let mut h = Blake2s::<U16>::new();
            h.update([prefix]);
            h.update(input);
            out.copy_from_slice(&h.finalize());
        }
        KdfSuite::MemoryHard => {
            let p = suite.params();
            let params = Params::new(
                p.memory_kib,
                p.iterations,
                p.parallelism,
                Some(LAMBDA_BYTES),
            )
            .expect("static argon2 parameters are valid");
            let mut msg = Vec::with_capacity(input.len() + 1);
            msg.push(prefix);
            msg.extend_from_slice(input);
            Argon2::new(Algorithm::Argon2id, Version::V0x13, params)
                .hash_password_into(&msg, ARGON2_SALT, &mut out)
                .expect("argon2 accepts any message below 4 GiB");
        }
    }
    out
}

pub fn h1(suite: KdfSuite, input: &[u8]) -> [u8; LAMBDA_BYTES] {
    digest(suite, PREFIX_CHECKSUM, input)
}

pub fn h2(suite: KdfSuite, input: &[u8]) -> [u8; LAMBDA_BYTES] {
    digest(suite, PREFIX_KEY, input)
}
