// Licensed under the Apache-2.0 license

//! Chip Authentication: the chip proves possession of its static private
//! key through a key agreement with a reader-side ephemeral key, and the
//! reader checks the key against the chip's passively authenticated data.
//!
//! Current mode agrees over X25519. Future mode has the reader encapsulate
//! to the chip's ML-KEM key instead.

mod demo;
mod session;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;
use zeroize::Zeroizing;

use crate::compact_cert::cbor::{Reader, Writer};
use crate::compact_cert::CertificateRecord;
use crate::entropy::{EntropyError, EntropySource};
use crate::keystore::{KeyHandle, KeystoreError, SecureElement};
use crate::pki::{CertificateAuthority, PkiError, Reason, SignedDataBundle};
use crate::suite_registry::primitives::{one_step_kdf, CryptoError, PublicKey, SigningKeyPair};
use crate::suite_registry::{key_transport, primary, Mode, Role};

pub use demo::{run_demo, Adversary, DemoOutcome};
pub use session::{SessionContext, SessionRole, SessionState};

pub const NONCE_LEN: usize = 16;
/// Data group carrying the chip's key-agreement public key.
pub const DG_CHIP_KEY: u64 = 14;
const ENC_LABEL: &[u8] = b"c2a-enc-v1";
const MAC_LABEL: &[u8] = b"c2a-mac-v1";
const HELLO_TAG: &str = "c2a-chip-hello-v1";
const RESPONSE_TAG: &str = "c2a-reader-response-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FailureReason {
    /// Passive authentication of the chip's data rejected the bundle.
    Pki(Reason),
    MalformedBundle,
    KeyMismatch,
    KeyConfirmation,
    MalformedMessage,
    KeyAgreement,
}

impl FailureReason {
    pub fn as_str(self) -> &'static str {
        match self {
            FailureReason::Pki(r) => r.as_str(),
            FailureReason::MalformedBundle => "malformed-bundle",
            FailureReason::KeyMismatch => "key-mismatch",
            FailureReason::KeyConfirmation => "key-confirmation",
            FailureReason::MalformedMessage => "malformed-message",
            FailureReason::KeyAgreement => "key-agreement",
        }
    }

    fn code(self) -> u64 {
        match self {
            FailureReason::Pki(r) => 100 + r as u64,
            FailureReason::MalformedBundle => 1,
            FailureReason::KeyMismatch => 2,
            FailureReason::KeyConfirmation => 3,
            FailureReason::MalformedMessage => 4,
            FailureReason::KeyAgreement => 5,
        }
    }

    fn from_code(code: u64) -> Option<Self> {
        Some(match code {
            1 => FailureReason::MalformedBundle,
            2 => FailureReason::KeyMismatch,
            3 => FailureReason::KeyConfirmation,
            4 => FailureReason::MalformedMessage,
            5 => FailureReason::KeyAgreement,
            c if c >= 100 => FailureReason::Pki(*Reason::ALL.get((c - 100) as usize)?),
            _ => return None,
        })
    }
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChipAuthError {
    #[error("{op} needs a {role} session in state {expected}, session is {actual_role} in {actual}")]
    State {
        op: &'static str,
        role: SessionRole,
        expected: SessionState,
        actual_role: SessionRole,
        actual: SessionState,
    },
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("chip key is {got}, {mode} mode expects {expected}")]
    WrongKeyAlgorithm {
        got: &'static str,
        expected: &'static str,
        mode: Mode,
    },
    #[error("shared secret is empty")]
    EmptySecret,
    #[error("data group {0} is reserved for the chip key")]
    ReservedGroup(u64),
    #[error("chip key already appears in data group {0}")]
    KeyNotUnique(u64),
    #[error("malformed session state: {0}")]
    MalformedState(String),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Keystore(#[from] KeystoreError),
    #[error(transparent)]
    Pki(#[from] PkiError),
}

fn malformed(e: impl fmt::Display) -> ChipAuthError {
    ChipAuthError::Malformed(e.to_string())
}

/// `{chip public key, nonce}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChipHello {
    pub public_key: PublicKey,
    pub nonce: [u8; NONCE_LEN],
}

impl ChipHello {
    pub fn to_bytes(&self) -> Vec<u8> {
        Writer::new()
            .array(3)
            .text(HELLO_TAG)
            .bytes(&self.public_key.to_bytes())
            .bytes(&self.nonce)
            .finish()
    }

    /// Rejects anything but a well-formed hello with a correctly sized key.
    pub fn from_bytes(data: &[u8]) -> Result<Self, ChipAuthError> {
        let mut r = Reader::new(data);
        r.array_of(3).map_err(malformed)?;
        if r.text().map_err(malformed)? != HELLO_TAG {
            return Err(malformed("not a chip hello"));
        }
        let public_key = PublicKey::from_bytes(r.bytes().map_err(malformed)?)?;
        let nonce = r
            .bytes()
            .map_err(malformed)?
            .try_into()
            .map_err(|_| malformed("nonce must be 16 bytes"))?;
        r.finish().map_err(malformed)?;
        Ok(Self { public_key, nonce })
    }
}

/// The reader's ephemeral public key, or a KEM ciphertext in future mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReaderResponse {
    pub message: Vec<u8>,
}

impl ReaderResponse {
    pub fn to_bytes(&self) -> Vec<u8> {
        Writer::new()
            .array(2)
            .text(RESPONSE_TAG)
            .bytes(&self.message)
            .finish()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, ChipAuthError> {
        let mut r = Reader::new(data);
        r.array_of(2).map_err(malformed)?;
        if r.text().map_err(malformed)? != RESPONSE_TAG {
            return Err(malformed("not a reader response"));
        }
        let message = r.bytes().map_err(malformed)?.to_vec();
        r.finish().map_err(malformed)?;
        Ok(Self { message })
    }
}

/// A document signer: a key whose end-entity certificate chains to a CSCA.
#[derive(Debug, Clone)]
pub struct DocumentSigner {
    pub key: SigningKeyPair,
    pub certificate: CertificateRecord,
    pub csca: CertificateRecord,
}

impl DocumentSigner {
    /// Creates a signer key with the CSCA's algorithm and has the CSCA
    /// certify it for the maximum end-entity lifetime.
    pub fn new<S: EntropySource + ?Sized>(
        csca: &mut CertificateAuthority,
        name: &str,
        now: u64,
        source: &mut S,
    ) -> Result<Self, ChipAuthError> {
        let key = SigningKeyPair::generate(csca.key().algorithm(), source)?;
        let certificate = csca.issue_for_key(
            name,
            key.public(),
            crate::pki::MAX_END_ENTITY_DAYS,
            now,
            BTreeMap::new(),
        )?;
        Ok(Self {
            key,
            certificate,
            csca: csca.trust_root().clone(),
        })
    }
}

/// A chip: its secure element with the static agreement key, and the
/// signed data groups that carry the public half in `DG_CHIP_KEY`.
#[derive(Debug, Clone)]
pub struct ChipProfile {
    mode: Mode,
    se: SecureElement,
    key: KeyHandle,
    public_key: PublicKey,
    bundle: SignedDataBundle,
}

impl ChipProfile {
    /// Generates the chip key inside a fresh element and has `signer` sign
    /// `groups` plus the key group.
    pub fn enroll<S: EntropySource + ?Sized>(
        mode: Mode,
        mut groups: BTreeMap<u64, Vec<u8>>,
        signer: &DocumentSigner,
        source: &mut S,
    ) -> Result<Self, ChipAuthError> {
        if groups.contains_key(&DG_CHIP_KEY) {
            return Err(ChipAuthError::ReservedGroup(DG_CHIP_KEY));
        }
        let mut se = SecureElement::new();
        let key = se.generate_agreement_key(key_transport(mode).algorithm, source)?;
        let public_key = se.public_key(key)?;
        let encoded = public_key.to_bytes();
        if let Some((&i, _)) = groups.iter().find(|(_, g)| **g == encoded) {
            return Err(ChipAuthError::KeyNotUnique(i));
        }
        groups.insert(DG_CHIP_KEY, encoded);
        let bundle = SignedDataBundle::sign(
            groups,
            mode,
            &signer.key,
            signer.certificate.clone(),
            signer.csca.clone(),
        )?;
        Ok(Self {
            mode,
            se,
            key,
            public_key,
            bundle,
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn public_key(&self) -> &PublicKey {
        &self.public_key
    }

    pub fn bundle(&self) -> &SignedDataBundle {
        &self.bundle
    }

    fn agree(&self, message: &[u8]) -> Result<Zeroizing<Vec<u8>>, KeystoreError> {
        self.se.agree(self.key, message)
    }
}

/// `(enc_key, mac_key)`.
pub type SessionKeys = (Zeroizing<Vec<u8>>, Zeroizing<Vec<u8>>);

/// Session keys from the one-step KDF over the mode's hash:
/// `K(label) = Hash(be32(1) || secret || label || context)`, truncated to
/// the mode's symmetric key length.
pub fn derive_session_keys(
    mode: Mode,
    shared_secret: &[u8],
    context: &[u8],
) -> Result<SessionKeys, ChipAuthError> {
    if shared_secret.is_empty() {
        return Err(ChipAuthError::EmptySecret);
    }
    let hash = primary(mode, Role::Hash).expect("every mode has a hash").algorithm;
    let len = primary(mode, Role::SymmetricEncryption)
        .expect("every mode has a cipher")
        .key_len;
    let enc = one_step_kdf(hash, shared_secret, ENC_LABEL, context, len)?;
    let mac = one_step_kdf(hash, shared_secret, MAC_LABEL, context, len)?;
    Ok((enc, mac))
}

/// Starts a chip session and produces its hello.
pub fn chip_hello<S: EntropySource + ?Sized>(
    chip: &ChipProfile,
    source: &mut S,
) -> Result<(ChipHello, SessionContext), ChipAuthError> {
    let mut s = SessionContext::new(SessionRole::Chip, chip.mode());
    let hello = s.chip_hello(chip, source)?;
    Ok((hello, s))
}

/// Starts a reader session in `mode` from a received hello.
pub fn reader_respond<S: EntropySource + ?Sized>(
    mode: Mode,
    hello: &[u8],
    source: &mut S,
) -> Result<(ReaderResponse, SessionContext), ChipAuthError> {
    let mut s = SessionContext::new(SessionRole::Reader, mode);
    let response = s.reader_respond(hello, source)?;
    Ok((response, s))
}

pub fn chip_complete(
    mut session: SessionContext,
    reader_msg: &[u8],
    chip: &ChipProfile,
) -> Result<SessionContext, ChipAuthError> {
    session.chip_complete(reader_msg, chip)?;
    Ok(session)
}

/// Failure is reported through the returned session's state.
pub fn authenticate_chip(
    mut session: SessionContext,
    bundle: &SignedDataBundle,
    trusted_csca: &CertificateRecord,
    confirmation_tag: &[u8],
    now: u64,
) -> Result<SessionContext, ChipAuthError> {
    session.authenticate_chip(bundle, trusted_csca, confirmation_tag, now)?;
    Ok(session)
}

#[cfg(test)]
mod tests;
