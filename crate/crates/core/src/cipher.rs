//! AES-128-CBC with PKCS#7 padding and a random IV.

use aes::cipher::block_padding::Pkcs7;
use aes::cipher::{BlockDecryptMut, BlockEncryptMut, KeyIvInit};
use rand::CryptoRng;

use crate::error::{Error, Result};
use crate::wrap::SymmetricKey;

type Aes128CbcEnc = cbc::Encryptor<aes::Aes128>;
type Aes128CbcDec = cbc::Decryptor<aes::Aes128>;

pub const BLOCK_LEN: usize = 16;
pub const IV_LEN: usize = 16;

/// Largest plaintext accepted by [`sym_encrypt`].
pub const MAX_PLAINTEXT_LEN: u64 = 1 << 30;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymCiphertext {
    pub iv: [u8; IV_LEN],
    pub body: Vec<u8>,
}

/// Body length for a plaintext of `len` bytes: always at least one byte of padding.
pub fn padded_len(len: usize) -> usize {
    (len / BLOCK_LEN + 1) * BLOCK_LEN
}

pub fn sym_encrypt<R: CryptoRng + ?Sized>(
    key: &SymmetricKey,
    m: &[u8],
    rng: &mut R,
) -> Result<SymCiphertext> {
    let mut iv = [0u8; IV_LEN];
    rng.fill_bytes(&mut iv);
    sym_encrypt_with_iv(key, iv, m)
}

pub fn sym_encrypt_with_iv(
    key: &SymmetricKey,
    iv: [u8; IV_LEN],
    m: &[u8],
) -> Result<SymCiphertext> {
    if m.len() as u64 > MAX_PLAINTEXT_LEN {
        return Err(Error::MessageTooLong {
            len: m.len() as u64,
            max: MAX_PLAINTEXT_LEN,
        });
    }
    let body =
        Aes128CbcEnc::new(key.as_bytes().into(), &iv.into()).encrypt_padded_vec_mut::<Pkcs7>(m);
    Ok(SymCiphertext { iv, body })
}

pub fn sym_decrypt(key: &SymmetricKey, c: &SymCiphertext) -> Result<Vec<u8>> {
    if c.body.is_empty() || c.body.len() % BLOCK_LEN != 0 {
        return Err(Error::MalformedLengths(
            "ciphertext body is not a positive number of blocks",
        ));
    }
    Aes128CbcDec::new(key.as_bytes().into(), &c.iv.into())
        .decrypt_padded_vec_mut::<Pkcs7>(&c.body)
        .map_err(|_| Error::PaddingInvalid)
}
