//! Keyless encryption: a fresh wrapped key plus a symmetric ciphertext.
//!
//! The key produced by the wrap is used once for the body and then dropped;
//! nothing returned from [`dbke_encrypt`] contains it. The layered variants
//! put a conventional keyed encryption inside, so a party that solves the
//! puzzle but lacks the user key only learns the inner ciphertext.

use rand::CryptoRng;

use crate::cipher::{self, SymCiphertext, IV_LEN};
use crate::error::{Error, Result};
use crate::kdf::{self, KdfSuite, PREFIX_PASSPHRASE};
use crate::solver::{CancelToken, SolveReport, SolverConfig};
use crate::wrap::{self, Difficulty, SaltView, SymmetricKey, WrappedKey};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DbkeCiphertext {
    pub wrapped: WrappedKey,
    pub cipher: SymCiphertext,
}

impl DbkeCiphertext {
    pub fn difficulty(&self) -> u32 {
        self.wrapped.difficulty()
    }
}

pub fn dbke_encrypt<R: CryptoRng + ?Sized>(
    suite: KdfSuite,
    d: Difficulty,
    m: &[u8],
    salted: bool,
    rng: &mut R,
) -> Result<DbkeCiphertext> {
    let (key, wrapped) = wrap::wrap(suite, d, salted, rng);
    let cipher = cipher::sym_encrypt(&key, m, rng)?;
    Ok(DbkeCiphertext { wrapped, cipher })
}

pub fn dbke_decrypt(ct: &DbkeCiphertext, cfg: &SolverConfig) -> Result<(Vec<u8>, SolveReport)> {
    dbke_decrypt_cancellable(ct, cfg, &CancelToken::new())
}

pub fn dbke_decrypt_cancellable(
    ct: &DbkeCiphertext,
    cfg: &SolverConfig,
    cancel: &CancelToken,
) -> Result<(Vec<u8>, SolveReport)> {
    let unwrapped = wrap::unwrap_cancellable(&ct.wrapped, SaltView::Holder, cfg, cancel)?;
    let m = cipher::sym_decrypt(&unwrapped.key, &ct.cipher)?;
    Ok((m, unwrapped.report))
}

/// Decrypts with a key obtained some other way, e.g. from a remote solver.
pub fn decrypt_with_key(ct: &DbkeCiphertext, key: &SymmetricKey) -> Result<Vec<u8>> {
    cipher::sym_decrypt(key, &ct.cipher)
}

/// User key for layered mode, derived from a passphrase with the suite's hash.
pub fn user_key_from_passphrase(suite: KdfSuite, passphrase: &[u8]) -> SymmetricKey {
    SymmetricKey::from_bytes(kdf::digest(suite, PREFIX_PASSPHRASE, passphrase))
}

/// Inner ciphertext serialized as `iv || body`.
fn encode_inner(c: &SymCiphertext) -> Vec<u8> {
    let mut out = Vec::with_capacity(IV_LEN + c.body.len());
    out.extend_from_slice(&c.iv);
    out.extend_from_slice(&c.body);
    out
}

fn decode_inner(bytes: &[u8]) -> Result<SymCiphertext> {
    if bytes.len() < IV_LEN {
        return Err(Error::MalformedLengths(
            "inner ciphertext shorter than an IV",
        ));
    }
    let (iv, body) = bytes.split_at(IV_LEN);
    Ok(SymCiphertext {
        iv: iv.try_into().expect("split at IV_LEN"),
        body: body.to_vec(),
    })
}

pub fn layered_encrypt<R: CryptoRng + ?Sized>(
    user_key: &SymmetricKey,
    suite: KdfSuite,
    d: Difficulty,
    m: &[u8],
    salted: bool,
    rng: &mut R,
) -> Result<DbkeCiphertext> {
    let inner = cipher::sym_encrypt(user_key, m, rng)?;
    dbke_encrypt(suite, d, &encode_inner(&inner), salted, rng)
}

pub fn layered_decrypt(
    user_key: &SymmetricKey,
    ct: &DbkeCiphertext,
    cfg: &SolverConfig,
) -> Result<(Vec<u8>, SolveReport)> {
    let (inner, report) = dbke_decrypt(ct, cfg)?;
    Ok((open_inner(user_key, &inner)?, report))
}

/// Second half of [`layered_decrypt`], for callers that already removed the outer layer.
pub fn open_inner(user_key: &SymmetricKey, inner: &[u8]) -> Result<Vec<u8>> {
    cipher::sym_decrypt(user_key, &decode_inner(inner)?)
}
