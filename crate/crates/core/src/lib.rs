//! Difficulty-based keyless encryption.
//!
//! Data is encrypted under a fresh random key that is never stored. Instead
//! the key is derived from a 128-bit seed, and the ciphertext carries a
//! checksum of the seed plus the seed with its first `d` bits removed. Anyone
//! who wants the plaintext, owner or thief, must search the `2^d` candidates
//! for the missing bits. Raising `d` on an existing file is a header edit.
//!
//! Module map:
//!
//! * [`kdf`]: the two hash suites (Argon2id for production, BLAKE2s for tests)
//! * [`wrap`]: keyless key wrap, unwrap, seed recovery and degradation
//! * [`solver`]: parallel search over the missing seed bits
//! * [`cipher`]: AES-128-CBC with PKCS#7 padding
//! * [`dbke`]: the composed encrypt/decrypt and the keyed+keyless layering
//! * [`container`]: the `ASAF` on-disk format
//! * [`bench`]: timing harness and summary statistics

pub mod bench;
pub mod cipher;
pub mod container;
pub mod dbke;
mod error;
pub mod kdf;
pub mod solver;
pub mod wrap;

pub use crate::error::{Error, Result};
pub use crate::kdf::{KdfParams, KdfSuite, LAMBDA_BITS, LAMBDA_BYTES};
pub use crate::wrap::{Checksum, Difficulty, PartialSeed, Salt, Seed, SymmetricKey, WrappedKey};
