//! The `ASAF` container.
//!
//! ```text
//! offset  size                field
//! 0       4                   magic "ASAF"
//! 4       1                   version (1)
//! 5       1                   suite id
//! 6       1                   flags: bit0 salted, bit1 layered, bit2 body checksum
//! 7       2                   lambda, big-endian (128)
//! 9       2                   partial_bits, big-endian (lambda - d)
//! 11      16                  checksum h
//!         16 if salted        salt
//!         ceil(bits/8)        partial seed, MSB first, low padding bits zero
//!         16                  iv
//!         8                   body length, big-endian
//!         16 if flagged       Suite(0x03 || body), truncated to 16 bytes
//!         body_len            AES-CBC body
//! ```
//!
//! Encoding is canonical: any byte string that parses re-serializes to itself.

use std::fmt;
use std::io::{self, Read};
use std::time::Duration;

use crate::cipher::{padded_len, SymCiphertext, BLOCK_LEN, IV_LEN, MAX_PLAINTEXT_LEN};
use crate::dbke::DbkeCiphertext;
use crate::error::{Error, Result};
use crate::kdf::{self, KdfSuite, LAMBDA_BITS, LAMBDA_BYTES, PREFIX_BODY};
use crate::solver::{estimate_cost, expected_calls};
use crate::wrap::{Checksum, Difficulty, PartialSeed, Salt, WrappedKey};

pub const MAGIC: [u8; 4] = *b"ASAF";
pub const VERSION: u8 = 1;

pub const FLAG_SALTED: u8 = 0b001;
pub const FLAG_LAYERED: u8 = 0b010;
pub const FLAG_BODY_CHECKSUM: u8 = 0b100;
const KNOWN_FLAGS: u8 = FLAG_SALTED | FLAG_LAYERED | FLAG_BODY_CHECKSUM;

const FIXED_LEN: usize = 11;
const BODY_LEN_FIELD: usize = 8;

/// Layered containers carry an IV and a padded body inside the outer plaintext.
pub const MAX_BODY_LEN: u64 = MAX_PLAINTEXT_LEN + 4 * BLOCK_LEN as u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContainerOptions {
    /// The plaintext is itself a keyed ciphertext.
    pub layered: bool,
    pub body_checksum: bool,
}

impl Default for ContainerOptions {
    fn default() -> Self {
        Self {
            layered: false,
            body_checksum: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Container {
    pub ciphertext: DbkeCiphertext,
    pub options: ContainerOptions,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub suite: KdfSuite,
    pub flags: u8,
    pub checksum: Checksum,
    pub salt: Option<Salt>,
    pub partial: PartialSeed,
    pub iv: [u8; IV_LEN],
    pub body_len: u64,
    pub body_checksum: Option<[u8; LAMBDA_BYTES]>,
}

impl Header {
    pub fn difficulty(&self) -> u32 {
        self.partial.difficulty()
    }

    pub fn options(&self) -> ContainerOptions {
        ContainerOptions {
            layered: self.flags & FLAG_LAYERED != 0,
            body_checksum: self.flags & FLAG_BODY_CHECKSUM != 0,
        }
    }

    pub fn encoded_len(&self) -> usize {
        header_len(
            self.partial.bits(),
            self.salt.is_some(),
            self.body_checksum.is_some(),
        )
    }

    pub fn wrapped(&self) -> WrappedKey {
        WrappedKey {
            suite: self.suite,
            checksum: self.checksum,
            partial: self.partial,
            salt: self.salt,
        }
    }

    fn encode_into(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.suite.id());
        out.push(self.flags);
        out.extend_from_slice(&(LAMBDA_BITS as u16).to_be_bytes());
        out.extend_from_slice(&(self.partial.bits() as u16).to_be_bytes());
        out.extend_from_slice(self.checksum.as_bytes());
        if let Some(salt) = &self.salt {
            out.extend_from_slice(salt.as_bytes());
        }
        out.extend_from_slice(&self.partial.to_bytes());
        out.extend_from_slice(&self.iv);
        out.extend_from_slice(&self.body_len.to_be_bytes());
        if let Some(sum) = &self.body_checksum {
            out.extend_from_slice(sum);
        }
    }
}

/// Header size in bytes, IV and body length field included.
pub fn header_len(partial_bits: u32, salted: bool, body_checksum: bool) -> usize {
    FIXED_LEN
        + LAMBDA_BYTES
        + if salted { LAMBDA_BYTES } else { 0 }
        + partial_bits.div_ceil(8) as usize
        + IV_LEN
        + BODY_LEN_FIELD
        + if body_checksum { LAMBDA_BYTES } else { 0 }
}

/// Exact container size for a plaintext of `plaintext_len` bytes.
pub fn container_len(d: u32, salted: bool, body_checksum: bool, plaintext_len: usize) -> usize {
    header_len(LAMBDA_BITS - d, salted, body_checksum) + padded_len(plaintext_len)
}

fn body_digest(suite: KdfSuite, body: &[u8]) -> [u8; LAMBDA_BYTES] {
    kdf::digest(suite, PREFIX_BODY, body)
}

pub fn serialize(ct: &DbkeCiphertext, options: ContainerOptions) -> Vec<u8> {
    let w = &ct.wrapped;
    let mut flags = 0;
    if w.salt.is_some() {
        flags |= FLAG_SALTED;
    }
    if options.layered {
        flags |= FLAG_LAYERED;
    }
    if options.body_checksum {
        flags |= FLAG_BODY_CHECKSUM;
    }
    let header = Header {
        suite: w.suite,
        flags,
        checksum: w.checksum,
        salt: w.salt,
        partial: w.partial,
        iv: ct.cipher.iv,
        body_len: ct.cipher.body.len() as u64,
        body_checksum: options
            .body_checksum
            .then(|| body_digest(w.suite, &ct.cipher.body)),
    };
    let mut out = Vec::with_capacity(header.encoded_len() + ct.cipher.body.len());
    header.encode_into(&mut out);
    out.extend_from_slice(&ct.cipher.body);
    out
}

fn read_exact<R: Read + ?Sized>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => Error::TruncatedInput,
        _ => Error::Io(e.to_string()),
    })
}

fn read_block<R: Read + ?Sized>(r: &mut R) -> Result<[u8; LAMBDA_BYTES]> {
    let mut b = [0u8; LAMBDA_BYTES];
    read_exact(r, &mut b)?;
    Ok(b)
}

/// Reads and validates exactly the header bytes, leaving the reader at the
/// start of the body.
pub fn read_header<R: Read + ?Sized>(r: &mut R) -> Result<Header> {
    let mut fixed = [0u8; FIXED_LEN];
    read_exact(r, &mut fixed)?;
    if fixed[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    if fixed[4] != VERSION {
        return Err(Error::UnsupportedVersion(fixed[4]));
    }
    let suite = KdfSuite::try_from(fixed[5])?;
    let flags = fixed[6];
    if flags & !KNOWN_FLAGS != 0 {
        return Err(Error::ReservedFlags(flags & !KNOWN_FLAGS));
    }
    let lambda = u16::from_be_bytes([fixed[7], fixed[8]]);
    if u32::from(lambda) != LAMBDA_BITS {
        return Err(Error::MalformedLengths("lambda must be 128"));
    }
    let partial_bits = u32::from(u16::from_be_bytes([fixed[9], fixed[10]]));
    if partial_bits > LAMBDA_BITS {
        return Err(Error::MalformedLengths("partial_bits exceeds lambda"));
    }

    let checksum = Checksum::from_bytes(read_block(r)?);
    let salt = if flags & FLAG_SALTED != 0 {
        Some(Salt::from_bytes(read_block(r)?))
    } else {
        None
    };
    let mut partial = vec![0u8; partial_bits.div_ceil(8) as usize];
    read_exact(r, &mut partial)?;
    let partial = PartialSeed::from_bytes(partial_bits, &partial)?;
    let iv = read_block(r)?;
    let mut len = [0u8; BODY_LEN_FIELD];
    read_exact(r, &mut len)?;
    let body_len = u64::from_be_bytes(len);
    if body_len == 0 || body_len % BLOCK_LEN as u64 != 0 {
        return Err(Error::MalformedLengths(
            "body length is not a positive multiple of 16",
        ));
    }
    if body_len > MAX_BODY_LEN {
        return Err(Error::MalformedLengths("body length exceeds limit"));
    }
    let body_checksum = if flags & FLAG_BODY_CHECKSUM != 0 {
        Some(read_block(r)?)
    } else {
        None
    };
    Ok(Header {
        suite,
        flags,
        checksum,
        salt,
        partial,
        iv,
        body_len,
        body_checksum,
    })
}

/// Header of a complete container held in memory, with the total length
/// checked against `body_len`. The body checksum is not verified.
pub fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut cursor = bytes;
    let header = read_header(&mut cursor)?;
    check_total_len(&header, bytes.len() as u64)?;
    Ok(header)
}

fn check_total_len(header: &Header, total: u64) -> Result<()> {
    let expected = header.encoded_len() as u64 + header.body_len;
    if total < expected {
        Err(Error::TruncatedInput)
    } else if total > expected {
        Err(Error::MalformedLengths("trailing bytes after body"))
    } else {
        Ok(())
    }
}

pub fn parse(bytes: &[u8]) -> Result<Container> {
    let header = parse_header(bytes)?;
    let body = &bytes[header.encoded_len()..];
    if let Some(stored) = &header.body_checksum {
        if &body_digest(header.suite, body) != stored {
            return Err(Error::ChecksumMismatch);
        }
    }
    Ok(Container {
        ciphertext: DbkeCiphertext {
            wrapped: header.wrapped(),
            cipher: SymCiphertext {
                iv: header.iv,
                body: body.to_vec(),
            },
        },
        options: header.options(),
    })
}

/// Raises the difficulty of a serialized container to `target`.
///
/// Only `partial_bits` and the partial seed change; the body is copied
/// verbatim and is not checked against its checksum.
pub fn degrade_file(bytes: &[u8], target: Difficulty) -> Result<Vec<u8>> {
    let header = parse_header(bytes)?;
    let current = header.difficulty();
    if target.get() < current {
        return Err(Error::CannotReduceDifficulty {
            current,
            target: target.get(),
        });
    }
    let body = &bytes[header.encoded_len()..];
    let degraded = Header {
        partial: header.partial.drop_leading(target.get() - current),
        ..header
    };
    let mut out = Vec::with_capacity(degraded.encoded_len() + body.len());
    degraded.encode_into(&mut out);
    out.extend_from_slice(body);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inspection {
    pub suite: KdfSuite,
    pub difficulty: u32,
    pub lambda: u32,
    pub flags: u8,
    pub header_len: usize,
    pub body_len: u64,
    pub expected_candidates: u128,
    pub estimated_cost: Duration,
}

impl Inspection {
    pub fn salted(&self) -> bool {
        self.flags & FLAG_SALTED != 0
    }

    /// Salted wraps can be handed to a remote solver without revealing the key.
    pub fn outsourceable(&self) -> bool {
        self.salted()
    }

    pub fn layered(&self) -> bool {
        self.flags & FLAG_LAYERED != 0
    }

    pub fn body_checksum(&self) -> bool {
        self.flags & FLAG_BODY_CHECKSUM != 0
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

impl fmt::Display for Inspection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "suite: {}", self.suite)?;
        writeln!(f, "difficulty: {}", self.difficulty)?;
        writeln!(f, "lambda: {}", self.lambda)?;
        writeln!(f, "salted: {}", yes_no(self.salted()))?;
        writeln!(f, "outsourceable: {}", yes_no(self.outsourceable()))?;
        writeln!(f, "layered: {}", yes_no(self.layered()))?;
        writeln!(f, "body checksum: {}", yes_no(self.body_checksum()))?;
        writeln!(f, "header bytes: {}", self.header_len)?;
        writeln!(f, "body bytes: {}", self.body_len)?;
        writeln!(f, "expected candidates: {}", self.expected_candidates)?;
        write!(f, "estimated solve time: {:?}", self.estimated_cost)
    }
}

fn inspection(header: &Header, per_call: Duration) -> Inspection {
    let d = header.difficulty();
    Inspection {
        suite: header.suite,
        difficulty: d,
        lambda: LAMBDA_BITS,
        flags: header.flags,
        header_len: header.encoded_len(),
        body_len: header.body_len,
        expected_candidates: expected_calls(d),
        estimated_cost: estimate_cost(d, per_call),
    }
}

pub fn inspect(bytes: &[u8], per_call: Duration) -> Result<Inspection> {
    Ok(inspection(&parse_header(bytes)?, per_call))
}

/// Reads only the header from `r`; `total_len` is the size of the whole
/// container (e.g. from file metadata).
pub fn inspect_reader<R: Read + ?Sized>(
    r: &mut R,
    total_len: u64,
    per_call: Duration,
) -> Result<Inspection> {
    let header = read_header(r)?;
    check_total_len(&header, total_len)?;
    Ok(inspection(&header, per_call))
}
