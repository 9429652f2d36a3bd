use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("unknown KDF suite id {0}")]
    UnknownSuite(u8),

    #[error("difficulty {d} out of range (max {max})")]
    DifficultyOutOfRange { d: u32, max: u32 },

    #[error("cannot reduce difficulty from {current} to {target}")]
    CannotReduceDifficulty { current: u32, target: u32 },

    #[error(
        "no candidate matched the checksum after {candidates_tried} tries; metadata is corrupted"
    )]
    ExhaustedNoSolution { candidates_tried: u128 },

    #[error("search cancelled after {candidates_tried} candidates")]
    Cancelled { candidates_tried: u128 },

    #[error("wrapped key is salted but the salt is not available")]
    SaltRequired,

    #[error("invalid padding (corrupted ciphertext or wrong key)")]
    PaddingInvalid,

    #[error("message of {len} bytes exceeds the {max} byte limit")]
    MessageTooLong { len: u64, max: u64 },

    #[error("bad magic; not an ASAF container")]
    BadMagic,

    #[error("unsupported container version {0}")]
    UnsupportedVersion(u8),

    #[error("input truncated")]
    TruncatedInput,

    #[error("body checksum mismatch")]
    ChecksumMismatch,

    #[error("malformed lengths: {0}")]
    MalformedLengths(&'static str),

    #[error("reserved flag bits set: {0:#04x}")]
    ReservedFlags(u8),

    #[error("non-canonical encoding: {0}")]
    NonCanonical(&'static str),

    #[error("i/o error: {0}")]
    Io(String),
}
