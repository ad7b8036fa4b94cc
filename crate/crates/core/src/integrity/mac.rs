// Licensed under the Apache-2.0 license

use std::fmt;

use aes::{Aes128, Aes192, Aes256};
use cmac::Cmac;
use hmac::{Hmac, KeyInit, Mac, SimpleHmac};
use sha2::Sha256;
use sha3::{Sha3_384, Sha3_512};
use subtle::ConstantTimeEq;

use super::IntegrityError;
use crate::suite_registry::{Algorithm, Mode, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MacKind {
    Cmac,
    Hmac,
}

impl MacKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MacKind::Cmac => "cmac",
            MacKind::Hmac => "hmac",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Primitive {
    /// AES with the given key length in bytes.
    Aes(usize),
    Hash(Algorithm),
}

/// A MAC construction over a block cipher or a registry hash.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MacAlgorithm {
    kind: MacKind,
    primitive: Primitive,
}

impl MacAlgorithm {
    /// CMAC over AES with a 16, 24 or 32 byte key.
    pub fn cmac_aes(key_len: usize) -> Result<Self, IntegrityError> {
        match key_len {
            16 | 24 | 32 => Ok(Self {
                kind: MacKind::Cmac,
                primitive: Primitive::Aes(key_len),
            }),
            _ => Err(IntegrityError::UnsupportedKeyLength(key_len)),
        }
    }

    /// HMAC over a registry hash.
    pub fn hmac(hash: Algorithm) -> Result<Self, IntegrityError> {
        if hash.role() != Role::Hash {
            return Err(IntegrityError::NotAMac(hash));
        }
        Ok(Self {
            kind: MacKind::Hmac,
            primitive: Primitive::Hash(hash),
        })
    }

    /// The construction behind a registry MAC entry.
    pub fn from_registry(algorithm: Algorithm) -> Result<Self, IntegrityError> {
        match algorithm {
            Algorithm::CmacAes128 => Self::cmac_aes(16),
            Algorithm::HmacSha256 => Self::hmac(Algorithm::Sha256),
            Algorithm::HmacSha3_384 => Self::hmac(Algorithm::Sha3_384),
            other => Err(IntegrityError::NotAMac(other)),
        }
    }

    /// The mode's registered MAC of the given kind.
    pub fn for_mode(mode: Mode, kind: MacKind) -> Self {
        let alg = crate::suite_registry::resolve(mode, Role::Mac)
            .expect("every mode has MACs")
            .into_iter()
            .map(|s| Self::from_registry(s.algorithm).expect("registry MACs are constructible"))
            .find(|m| m.kind == kind);
        alg.expect("every mode registers both MAC kinds")
    }

    pub fn kind(&self) -> MacKind {
        self.kind
    }

    /// Name of the underlying block cipher or hash.
    pub fn cipher_or_hash(&self) -> String {
        match self.primitive {
            Primitive::Aes(n) => format!("AES-{}", n * 8),
            Primitive::Hash(h) => h.name().to_string(),
        }
    }

    /// Required key length; `None` when any length is accepted.
    pub fn key_len(&self) -> Option<usize> {
        match self.primitive {
            Primitive::Aes(n) => Some(n),
            Primitive::Hash(_) => None,
        }
    }

    pub fn tag_len(&self) -> usize {
        match self.primitive {
            Primitive::Aes(_) => 16,
            Primitive::Hash(h) => h.spec().output_len,
        }
    }

    /// The registry entry this construction implements, if any.
    pub fn registry_entry(&self) -> Option<Algorithm> {
        [Algorithm::CmacAes128, Algorithm::HmacSha256, Algorithm::HmacSha3_384]
            .into_iter()
            .find(|&a| Self::from_registry(a).is_ok_and(|m| m == *self))
    }
}

impl fmt::Display for MacAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.registry_entry() {
            Some(a) => f.write_str(a.name()),
            None => write!(f, "{}-{}", self.kind.as_str().to_uppercase(), self.cipher_or_hash()),
        }
    }
}

fn run<M: Mac + KeyInit>(key: &[u8], message: &[u8]) -> Vec<u8> {
    let mut m = <M as KeyInit>::new_from_slice(key).expect("key length checked");
    m.update(message);
    m.finalize().into_bytes().to_vec()
}

/// Computes the tag of `message` under `key`.
pub fn mac_tag(alg: MacAlgorithm, key: &[u8], message: &[u8]) -> Result<Vec<u8>, IntegrityError> {
    if let Some(n) = alg.key_len() {
        if key.len() != n {
            return Err(IntegrityError::KeyLength {
                got: key.len(),
                expected: n,
            });
        }
    }
    Ok(match alg.primitive {
        Primitive::Aes(16) => run::<Cmac<Aes128>>(key, message),
        Primitive::Aes(24) => run::<Cmac<Aes192>>(key, message),
        Primitive::Aes(_) => run::<Cmac<Aes256>>(key, message),
        Primitive::Hash(Algorithm::Sha256) => run::<Hmac<Sha256>>(key, message),
        Primitive::Hash(Algorithm::Sha3_384) => run::<SimpleHmac<Sha3_384>>(key, message),
        Primitive::Hash(Algorithm::Sha3_512) => run::<SimpleHmac<Sha3_512>>(key, message),
        Primitive::Hash(other) => return Err(IntegrityError::NotAMac(other)),
    })
}

/// Constant-time tag check. A wrong key length or tag length is `false`.
pub fn mac_verify(alg: MacAlgorithm, key: &[u8], message: &[u8], tag: &[u8]) -> bool {
    match mac_tag(alg, key, message) {
        Ok(expected) => expected.ct_eq(tag).into(),
        Err(_) => false,
    }
}
