// Licensed under the Apache-2.0 license

//! Message authentication codes, firmware manifests and secure-boot
//! verification.

mod boot;
mod mac;
mod manifest;

use thiserror::Error;

use crate::compact_cert::{CompactError, EnvelopeError};
use crate::keystore::KeystoreError;
use crate::pki::PkiError;
use crate::suite_registry::primitives::CryptoError;
use crate::suite_registry::{Algorithm, Mode};

pub use boot::{
    secure_boot, secure_boot_bytes, secure_boot_verify, secure_boot_verify_bytes, BootVerdict,
    HaltReason,
};
pub use mac::{mac_tag, mac_verify, MacAlgorithm, MacKind};
pub use manifest::{sign_firmware, FirmwareManifest, FirmwareMeta, FirmwareSigner, MANIFEST_KIND};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrityError {
    #[error("key must be {expected} bytes, got {got}")]
    KeyLength { got: usize, expected: usize },
    #[error("no AES variant takes a {0}-byte key")]
    UnsupportedKeyLength(usize),
    #[error("{0} cannot back a MAC")]
    NotAMac(Algorithm),
    #[error("invalid firmware version `{0}`")]
    Version(String),
    #[error("signer certificate is not valid at {0}")]
    SignerNotValid(u64),
    #[error("signer key does not match its certificate")]
    SignerKeyMismatch,
    #[error("{algorithm} signatures are not permitted in {mode} mode")]
    SignerAlgorithm { algorithm: Algorithm, mode: Mode },
    #[error("malformed manifest: {0}")]
    Malformed(String),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Pki(#[from] PkiError),
    #[error(transparent)]
    Keystore(#[from] KeystoreError),
    #[error(transparent)]
    Compact(#[from] CompactError),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
}
