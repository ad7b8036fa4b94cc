// Licensed under the Apache-2.0 license

//! The Current/Future algorithm matrices.
//!
//! Every algorithm the toolkit touches is an [`Algorithm`] variant whose
//! name, sizes and security level live in the single static table below.
//! Other modules refer to algorithms only through this registry.

mod hybrid;
pub mod primitives;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use hybrid::{hybrid_decrypt, hybrid_encrypt, HybridCiphertext, HybridError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Current,
    Future,
}

impl Mode {
    pub const ALL: [Mode; 2] = [Mode::Current, Mode::Future];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Current => "current",
            Mode::Future => "future",
        }
    }

    pub(crate) fn code(self) -> u64 {
        match self {
            Mode::Current => 0,
            Mode::Future => 1,
        }
    }

    pub(crate) fn from_code(code: u64) -> Option<Self> {
        match code {
            0 => Some(Mode::Current),
            1 => Some(Mode::Future),
            _ => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = RegistryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "current" => Ok(Mode::Current),
            "future" => Ok(Mode::Future),
            other => Err(RegistryError::UnknownMode(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    SymmetricEncryption,
    Signature,
    KeyAgreement,
    KeyEncapsulation,
    Hash,
    Mac,
    Kdf,
}

impl Role {
    pub const ALL: [Role; 7] = [
        Role::SymmetricEncryption,
        Role::Signature,
        Role::KeyAgreement,
        Role::KeyEncapsulation,
        Role::Hash,
        Role::Mac,
        Role::Kdf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::SymmetricEncryption => "symmetric-encryption",
            Role::Signature => "signature",
            Role::KeyAgreement => "key-agreement",
            Role::KeyEncapsulation => "key-encapsulation",
            Role::Hash => "hash",
            Role::Mac => "mac",
            Role::Kdf => "kdf",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Every concrete algorithm known to the toolkit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Ed25519,
    Ed448,
    MlDsa,
    SlhDsa,
    MlKem,
    Aes128Gcm,
    Aes256Gcm,
    Sha3_384,
    Sha3_512,
    Sha256,
    X25519,
    X448,
    CmacAes128,
    HmacSha256,
    HmacSha3_384,
    KdfSha256,
    KdfSha3_384,
}

impl Algorithm {
    pub const ALL: [Algorithm; 17] = [
        Algorithm::Ed25519,
        Algorithm::Ed448,
        Algorithm::MlDsa,
        Algorithm::SlhDsa,
        Algorithm::MlKem,
        Algorithm::Aes128Gcm,
        Algorithm::Aes256Gcm,
        Algorithm::Sha3_384,
        Algorithm::Sha3_512,
        Algorithm::Sha256,
        Algorithm::X25519,
        Algorithm::X448,
        Algorithm::CmacAes128,
        Algorithm::HmacSha256,
        Algorithm::HmacSha3_384,
        Algorithm::KdfSha256,
        Algorithm::KdfSha3_384,
    ];

    pub fn spec(self) -> &'static AlgorithmSpec {
        spec(self)
    }

    pub fn name(self) -> &'static str {
        spec(self).name
    }

    pub fn role(self) -> Role {
        spec(self).role
    }

    /// Wire identifier used in certificates and other encodings. The table
    /// is append-only; MAC and KDF entries are never carried on the wire.
    pub fn id(self) -> Option<u64> {
        let index = self as u64;
        (index < WIRE_IDS).then_some(index)
    }

    pub fn from_id(id: u64) -> Option<Self> {
        (id < WIRE_IDS).then(|| Algorithm::ALL[id as usize])
    }
}

const WIRE_IDS: u64 = 12;

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = RegistryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        lookup(s)
            .map(|spec| spec.algorithm)
            .ok_or_else(|| RegistryError::UnknownAlgorithm(s.to_string()))
    }
}

/// Static facts about one algorithm.
///
/// `key_len` is the public key length for asymmetric algorithms and the
/// secret key length for symmetric ones (zero for hashes and KDFs).
/// `output_len` is the signature, ciphertext, tag, digest or shared-secret
/// length as appropriate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgorithmSpec {
    pub algorithm: Algorithm,
    pub role: Role,
    pub name: &'static str,
    pub parameter_set: &'static str,
    pub security_bits: u32,
    pub key_len: usize,
    pub output_len: usize,
    /// False when the registry lists the algorithm but no vetted backend is
    /// compiled in; operations then report `NotAvailable`.
    pub available: bool,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegistryError {
    #[error("{role} is not available in {mode} mode")]
    NotAvailable { mode: Mode, role: Role },
    #[error("unknown mode `{0}`")]
    UnknownMode(String),
    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),
}

const fn entry(
    algorithm: Algorithm,
    role: Role,
    name: &'static str,
    parameter_set: &'static str,
    security_bits: u32,
    key_len: usize,
    output_len: usize,
) -> AlgorithmSpec {
    AlgorithmSpec {
        algorithm,
        role,
        name,
        parameter_set,
        security_bits,
        key_len,
        output_len,
        available: true,
    }
}

static TABLE: [AlgorithmSpec; 17] = [
    entry(Algorithm::Ed25519, Role::Signature, "Ed25519", "Ed25519", 128, 32, 64),
    entry(Algorithm::Ed448, Role::Signature, "Ed448", "Ed448", 224, 57, 114),
    entry(Algorithm::MlDsa, Role::Signature, "ML-DSA", "ML-DSA-65", 192, 1952, 3309),
    entry(Algorithm::SlhDsa, Role::Signature, "SLH-DSA", "SLH-DSA-SHA2-128s", 128, 32, 7856),
    entry(Algorithm::MlKem, Role::KeyEncapsulation, "ML-KEM", "ML-KEM-768", 192, 1184, 1088),
    entry(Algorithm::Aes128Gcm, Role::SymmetricEncryption, "AES-128-GCM", "AES-128-GCM", 128, 16, 16),
    entry(Algorithm::Aes256Gcm, Role::SymmetricEncryption, "AES-256-GCM", "AES-256-GCM", 256, 32, 16),
    entry(Algorithm::Sha3_384, Role::Hash, "SHA3-384", "SHA3-384", 192, 0, 48),
    entry(Algorithm::Sha3_512, Role::Hash, "SHA3-512", "SHA3-512", 256, 0, 64),
    entry(Algorithm::Sha256, Role::Hash, "SHA-256", "SHA-256", 128, 0, 32),
    entry(Algorithm::X25519, Role::KeyAgreement, "X25519", "X25519", 128, 32, 32),
    entry(Algorithm::X448, Role::KeyAgreement, "X448", "X448", 224, 56, 56),
    entry(Algorithm::CmacAes128, Role::Mac, "CMAC-AES-128", "CMAC-AES-128", 128, 16, 16),
    entry(Algorithm::HmacSha256, Role::Mac, "HMAC-SHA-256", "HMAC-SHA-256", 128, 32, 32),
    entry(Algorithm::HmacSha3_384, Role::Mac, "HMAC-SHA3-384", "HMAC-SHA3-384", 192, 48, 48),
    entry(Algorithm::KdfSha256, Role::Kdf, "ONESTEP-KDF-SHA-256", "ONESTEP-KDF-SHA-256", 128, 0, 32),
    entry(Algorithm::KdfSha3_384, Role::Kdf, "ONESTEP-KDF-SHA3-384", "ONESTEP-KDF-SHA3-384", 192, 0, 48),
];

pub fn spec(algorithm: Algorithm) -> &'static AlgorithmSpec {
    // TABLE is in declaration order of `Algorithm`.
    &TABLE[algorithm as usize]
}

/// Every registered algorithm, in table order.
pub fn all_specs() -> &'static [AlgorithmSpec] {
    &TABLE
}

pub fn lookup(name: &str) -> Option<&'static AlgorithmSpec> {
    TABLE.iter().find(|s| s.name == name || s.parameter_set == name)
}

fn matrix(mode: Mode, role: Role) -> &'static [Algorithm] {
    use Algorithm::*;
    match (mode, role) {
        (Mode::Current, Role::SymmetricEncryption) => &[Aes128Gcm, Aes256Gcm],
        (Mode::Current, Role::Signature) => &[Ed25519, Ed448],
        (Mode::Current, Role::KeyAgreement) => &[X25519, X448],
        (Mode::Current, Role::KeyEncapsulation) => &[],
        (Mode::Current, Role::Hash) => &[Sha256],
        (Mode::Current, Role::Mac) => &[CmacAes128, HmacSha256],
        (Mode::Current, Role::Kdf) => &[KdfSha256],
        (Mode::Future, Role::SymmetricEncryption) => &[Aes256Gcm],
        (Mode::Future, Role::Signature) => &[MlDsa, SlhDsa],
        (Mode::Future, Role::KeyAgreement) => &[],
        (Mode::Future, Role::KeyEncapsulation) => &[MlKem],
        (Mode::Future, Role::Hash) => &[Sha3_384, Sha3_512],
        (Mode::Future, Role::Mac) => &[CmacAes128, HmacSha3_384],
        (Mode::Future, Role::Kdf) => &[KdfSha3_384],
    }
}

/// The ordered algorithm list for `(mode, role)`. The first entry is the
/// mode's default.
pub fn resolve(mode: Mode, role: Role) -> Result<Vec<&'static AlgorithmSpec>, RegistryError> {
    let list = matrix(mode, role);
    if list.is_empty() {
        return Err(RegistryError::NotAvailable { mode, role });
    }
    Ok(list.iter().map(|&a| spec(a)).collect())
}

/// First (default) entry of [`resolve`].
pub fn primary(mode: Mode, role: Role) -> Result<&'static AlgorithmSpec, RegistryError> {
    matrix(mode, role)
        .first()
        .map(|&a| spec(a))
        .ok_or(RegistryError::NotAvailable { mode, role })
}

pub fn permitted(mode: Mode, role: Role, algorithm: Algorithm) -> bool {
    matrix(mode, role).contains(&algorithm)
}

/// Modes whose matrix lists `algorithm` under its role.
pub fn modes_of(algorithm: Algorithm) -> Vec<Mode> {
    Mode::ALL
        .into_iter()
        .filter(|&m| permitted(m, algorithm.role(), algorithm))
        .collect()
}

/// Key-transport algorithm paired with a mode: Montgomery agreement in
/// current mode, KEM in future mode.
pub fn key_transport(mode: Mode) -> &'static AlgorithmSpec {
    match mode {
        Mode::Current => spec(Algorithm::X25519),
        Mode::Future => spec(Algorithm::MlKem),
    }
}

/// Signature algorithms in both modes, current first.
pub fn signature_algorithms() -> Vec<Algorithm> {
    Mode::ALL
        .into_iter()
        .flat_map(|m| matrix(m, Role::Signature).iter().copied())
        .collect()
}

/// Aligned text rendering of the matrix, one row per (mode, role).
pub fn render_matrix(only: Option<Mode>) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<8} {:<21} {:<22} {:>8} {:>8} {:>8}\n",
        "MODE", "ROLE", "ALGORITHM", "SECURITY", "KEY", "OUTPUT"
    ));
    for mode in Mode::ALL.into_iter().filter(|m| only.is_none_or(|o| o == *m)) {
        for role in Role::ALL {
            match resolve(mode, role) {
                Ok(specs) => {
                    for s in specs {
                        out.push_str(&format!(
                            "{:<8} {:<21} {:<22} {:>8} {:>8} {:>8}\n",
                            mode.as_str(),
                            role.as_str(),
                            s.parameter_set,
                            s.security_bits,
                            s.key_len,
                            s.output_len
                        ));
                    }
                }
                Err(_) => out.push_str(&format!(
                    "{:<8} {:<21} {:<22} {:>8} {:>8} {:>8}\n",
                    mode.as_str(),
                    role.as_str(),
                    "(not available)",
                    "-",
                    "-",
                    "-"
                )),
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(mode: Mode, role: Role) -> Vec<&'static str> {
        resolve(mode, role).unwrap().iter().map(|s| s.name).collect()
    }

    #[test]
    fn table_order_matches_enum() {
        for (i, a) in Algorithm::ALL.iter().enumerate() {
            assert_eq!(TABLE[i].algorithm, *a);
            assert_eq!(*a as usize, i);
        }
    }

    #[test]
    fn current_mode_matrix() {
        assert_eq!(names(Mode::Current, Role::SymmetricEncryption), ["AES-128-GCM", "AES-256-GCM"]);
        assert_eq!(names(Mode::Current, Role::Signature), ["Ed25519", "Ed448"]);
        assert_eq!(names(Mode::Current, Role::Mac), ["CMAC-AES-128", "HMAC-SHA-256"]);
        assert_eq!(
            resolve(Mode::Current, Role::KeyEncapsulation).unwrap_err(),
            RegistryError::NotAvailable {
                mode: Mode::Current,
                role: Role::KeyEncapsulation
            }
        );
    }

    #[test]
    fn future_mode_matrix() {
        assert_eq!(names(Mode::Future, Role::Hash), ["SHA3-384", "SHA3-512"]);
        assert_eq!(names(Mode::Future, Role::Signature), ["ML-DSA", "SLH-DSA"]);
        assert_eq!(names(Mode::Future, Role::KeyEncapsulation), ["ML-KEM"]);
        assert_eq!(names(Mode::Future, Role::SymmetricEncryption), ["AES-256-GCM"]);
        assert!(resolve(Mode::Future, Role::KeyAgreement).is_err());
    }

    #[test]
    fn edwards_sizes() {
        let ed25519 = spec(Algorithm::Ed25519);
        assert_eq!((ed25519.security_bits, ed25519.key_len, ed25519.output_len), (128, 32, 64));
        assert_eq!(spec(Algorithm::Ed448).security_bits, 224);
    }

    #[test]
    fn resolve_is_pure() {
        for mode in Mode::ALL {
            for role in Role::ALL {
                assert_eq!(resolve(mode, role), resolve(mode, role));
            }
        }
    }

    #[test]
    fn names_round_trip() {
        for s in all_specs() {
            assert_eq!(s.name.parse::<Algorithm>().unwrap(), s.algorithm);
        }
        assert_eq!("ML-KEM-768".parse::<Algorithm>().unwrap(), Algorithm::MlKem);
        assert!("RSA-2048".parse::<Algorithm>().is_err());
        assert_eq!("future".parse::<Mode>().unwrap(), Mode::Future);
        assert!("past".parse::<Mode>().is_err());
    }

    #[test]
    fn matrix_render_lists_every_row() {
        let text = render_matrix(None);
        assert!(text.contains("ML-DSA-65"));
        assert!(text.contains("(not available)"));
        let current = render_matrix(Some(Mode::Current));
        assert!(!current.contains("ML-KEM-768"));
    }
}
