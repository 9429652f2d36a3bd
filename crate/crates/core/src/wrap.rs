//! Hash-based keyless key wrap.
//!
//! A wrap draws a random seed `r`, publishes `h = H1(r)` together with `r`
//! minus its first `d` bits, and hands back `k = H2(r)` (or `H2(r || s)` when
//! salted). Unwrapping means guessing the missing bits until the checksum
//! matches. Bits are numbered most-significant first over the big-endian
//! seed, so dropping leading bits is a left shift.

use std::fmt;

use rand::CryptoRng;

use crate::error::{Error, Result};
use crate::kdf::{self, KdfSuite, LAMBDA_BITS, LAMBDA_BYTES};
use crate::solver::{self, CancelToken, SearchSpec, SolveReport, SolverConfig};

macro_rules! block_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, PartialEq, Eq, Hash)]
        pub struct $name([u8; LAMBDA_BYTES]);

        impl $name {
            pub const fn from_bytes(bytes: [u8; LAMBDA_BYTES]) -> Self {
                Self(bytes)
            }

            pub fn as_bytes(&self) -> &[u8; LAMBDA_BYTES] {
                &self.0
            }

            pub fn random<R: CryptoRng + ?Sized>(rng: &mut R) -> Self {
                let mut b = [0u8; LAMBDA_BYTES];
                rng.fill_bytes(&mut b);
                Self(b)
            }

            pub fn from_u128(v: u128) -> Self {
                Self(v.to_be_bytes())
            }

            pub fn to_u128(&self) -> u128 {
                u128::from_be_bytes(self.0)
            }

            pub fn to_hex(&self) -> String {
                hex::encode(self.0)
            }
        }

        impl From<[u8; LAMBDA_BYTES]> for $name {
            fn from(b: [u8; LAMBDA_BYTES]) -> Self {
                Self(b)
            }
        }
    };
}

block_newtype!(
    /// The random value both the checksum and the key are derived from.
    Seed
);
block_newtype!(
    /// Extra key material kept out of the public part of a salted wrap.
    Salt
);
block_newtype!(
    /// `H1(r)`.
    Checksum
);
block_newtype!(SymmetricKey);

impl fmt::Debug for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Seed({})", self.to_hex())
    }
}

impl fmt::Debug for Salt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Salt({})", self.to_hex())
    }
}

impl fmt::Debug for Checksum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Checksum({})", self.to_hex())
    }
}

impl fmt::Debug for SymmetricKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SymmetricKey(..)")
    }
}

/// Number of seed bits withheld from the wrapped key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Difficulty(u32);

impl Difficulty {
    /// Beyond this, construction needs [`Difficulty::forced`].
    pub const DEFAULT_MAX: u32 = 64;
    pub const ZERO: Difficulty = Difficulty(0);

    pub fn new(d: u32) -> Result<Self> {
        Self::with_max(d, Self::DEFAULT_MAX)
    }

    /// Accepts anything up to the full seed length.
    pub fn forced(d: u32) -> Result<Self> {
        Self::with_max(d, LAMBDA_BITS)
    }

    pub fn with_max(d: u32, max: u32) -> Result<Self> {
        let max = max.min(LAMBDA_BITS);
        if d > max {
            return Err(Error::DifficultyOutOfRange { d, max });
        }
        Ok(Self(d))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// The seed with its leading bits removed.
///
/// Held left-aligned: the top `bits` bits of `aligned` are the remaining seed
/// bits and everything below them is zero. That is also the wire form, cut to
/// `ceil(bits / 8)` bytes.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PartialSeed {
    bits: u32,
    aligned: u128,
}

impl PartialSeed {
    pub fn from_seed(seed: &Seed, d: Difficulty) -> Self {
        Self {
            bits: LAMBDA_BITS - d.get(),
            aligned: shl(seed.to_u128(), d.get()),
        }
    }

    /// Parses the wire form, rejecting set padding bits.
    pub fn from_bytes(bits: u32, bytes: &[u8]) -> Result<Self> {
        if bits > LAMBDA_BITS {
            return Err(Error::MalformedLengths("partial seed longer than the seed"));
        }
        if bytes.len() != byte_len(bits) {
            return Err(Error::MalformedLengths("partial seed byte length"));
        }
        let mut buf = [0u8; LAMBDA_BYTES];
        buf[..bytes.len()].copy_from_slice(bytes);
        let aligned = u128::from_be_bytes(buf);
        if aligned & !shl(u128::MAX, LAMBDA_BITS - bits) != 0 {
            return Err(Error::NonCanonical("partial seed padding bits set"));
        }
        Ok(Self { bits, aligned })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn difficulty(&self) -> u32 {
        LAMBDA_BITS - self.bits
    }

    pub fn byte_len(&self) -> usize {
        byte_len(self.bits)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.aligned.to_be_bytes()[..self.byte_len()].to_vec()
    }

    /// Remove `n` more leading bits.
    pub fn drop_leading(&self, n: u32) -> Self {
        let n = n.min(self.bits);
        Self {
            bits: self.bits - n,
            aligned: shl(self.aligned, n),
        }
    }

    /// The seed `i || partial`, where `i` fills the `d` missing bits.
    pub fn candidate(&self, i: u128) -> Seed {
        let d = self.difficulty();
        let high = if d == 0 { 0 } else { shl(i, self.bits) };
        Seed::from_u128(high | shr(self.aligned, d))
    }
}

impl fmt::Debug for PartialSeed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "PartialSeed({} bits, {})",
            self.bits,
            hex::encode(self.to_bytes())
        )
    }
}

fn byte_len(bits: u32) -> usize {
    bits.div_ceil(8) as usize
}

fn shl(v: u128, n: u32) -> u128 {
    v.checked_shl(n).unwrap_or(0)
}

fn shr(v: u128, n: u32) -> u128 {
    v.checked_shr(n).unwrap_or(0)
}

/// Checksum and partial seed: everything a third party needs to recover the
/// seed, and nothing more.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PublicWrap {
    pub suite: KdfSuite,
    pub checksum: Checksum,
    pub partial: PartialSeed,
}

impl PublicWrap {
    pub fn difficulty(&self) -> u32 {
        self.partial.difficulty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WrappedKey {
    pub suite: KdfSuite,
    pub checksum: Checksum,
    pub partial: PartialSeed,
    pub salt: Option<Salt>,
}

impl WrappedKey {
    pub fn difficulty(&self) -> u32 {
        self.partial.difficulty()
    }

    pub fn is_salted(&self) -> bool {
        self.salt.is_some()
    }

    pub fn public_view(&self) -> PublicWrap {
        PublicWrap {
            suite: self.suite,
            checksum: self.checksum,
            partial: self.partial,
        }
    }
}

/// Whether the caller unwrapping a key can see the salt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaltView {
    Holder,
    Withheld,
}

#[derive(Debug, Clone)]
pub struct Unwrapped {
    pub key: SymmetricKey,
    pub report: SolveReport,
}

/// `H2(r)`, or `H2(r || s)` for a salted wrap.
pub fn derive_key(suite: KdfSuite, seed: &Seed, salt: Option<&Salt>) -> SymmetricKey {
    match salt {
        None => SymmetricKey(kdf::h2(suite, seed.as_bytes())),
        Some(s) => {
            let mut input = [0u8; 2 * LAMBDA_BYTES];
            input[..LAMBDA_BYTES].copy_from_slice(seed.as_bytes());
            input[LAMBDA_BYTES..].copy_from_slice(s.as_bytes());
            SymmetricKey(kdf::h2(suite, &input))
        }
    }
}

/// Draws a seed (and a salt if `salted`) and wraps. Two suite calls, whatever `d` is.
pub fn wrap<R: CryptoRng + ?Sized>(
    suite: KdfSuite,
    d: Difficulty,
    salted: bool,
    rng: &mut R,
) -> (SymmetricKey, WrappedKey) {
    let seed = Seed::random(rng);
    let salt = salted.then(|| Salt::random(rng));
    wrap_from_parts(suite, d, seed, salt)
}

/// Deterministic core of [`wrap`].
pub fn wrap_from_parts(
    suite: KdfSuite,
    d: Difficulty,
    seed: Seed,
    salt: Option<Salt>,
) -> (SymmetricKey, WrappedKey) {
    let checksum = Checksum(kdf::h1(suite, seed.as_bytes()));
    let key = derive_key(suite, &seed, salt.as_ref());
    let wrapped = WrappedKey {
        suite,
        checksum,
        partial: PartialSeed::from_seed(&seed, d),
        salt,
    };
    (key, wrapped)
}

pub fn unwrap(w: &WrappedKey, view: SaltView, cfg: &SolverConfig) -> Result<Unwrapped> {
    unwrap_cancellable(w, view, cfg, &CancelToken::new())
}

pub fn unwrap_cancellable(
    w: &WrappedKey,
    view: SaltView,
    cfg: &SolverConfig,
    cancel: &CancelToken,
) -> Result<Unwrapped> {
    if w.is_salted() && view == SaltView::Withheld {
        return Err(Error::SaltRequired);
    }
    let report = recover_seed_cancellable(&w.public_view(), cfg, cancel)?;
    let key = derive_key(w.suite, &report.seed, w.salt.as_ref());
    Ok(Unwrapped { key, report })
}

/// Searches for the full seed. Never touches a salt, so the result alone does
/// not give the key of a salted wrap.
pub fn recover_seed(public: &PublicWrap, cfg: &SolverConfig) -> Result<SolveReport> {
    recover_seed_cancellable(public, cfg, &CancelToken::new())
}

pub fn recover_seed_cancellable(
    public: &PublicWrap,
    cfg: &SolverConfig,
    cancel: &CancelToken,
) -> Result<SolveReport> {
    let d = public.difficulty();
    if d > cfg.max_difficulty {
        return Err(Error::DifficultyOutOfRange {
            d,
            max: cfg.max_difficulty,
        });
    }
    let spec = SearchSpec::new(public.suite, public.checksum, public.partial, cfg);
    solver::solve(&spec, cancel)
}

/// Raises the difficulty by dropping more leading bits. No suite calls.
pub fn degrade_wrap(w: &WrappedKey, target: Difficulty) -> Result<WrappedKey> {
    let current = w.difficulty();
    if target.get() < current {
        return Err(Error::CannotReduceDifficulty {
            current,
            target: target.get(),
        });
    }
    Ok(WrappedKey {
        partial: w.partial.drop_leading(target.get() - current),
        ..*w
    })
}
