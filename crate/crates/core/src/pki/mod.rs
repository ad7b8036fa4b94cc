// Licensed under the Apache-2.0 license

//! Certificate issuance, chain verification, revocation and passive
//! authentication of signed data groups.
//!
//! All time-dependent operations take `now` in epoch seconds.

mod authority;
mod passive;
mod request;
mod revocation;

use std::fmt;

use thiserror::Error;

pub use crate::compact_cert::CertificateRecord;
use crate::compact_cert::{CompactError, EnvelopeError};
use crate::suite_registry::primitives::{verify_signature, CryptoError};

pub use authority::write_secret;
pub use authority::{ca_issue, CertificateAuthority};
pub use passive::{passive_authenticate, SignedDataBundle};
pub use request::{
    generate_csr, ra_review, ApprovalToken, Csr, IssuancePolicy, RegistrationAuthority,
    TOKEN_LIFETIME_SECS,
};
pub use revocation::{revoke, RevocationList};

pub const DAY_SECS: u64 = 86_400;
pub const MAX_END_ENTITY_DAYS: u64 = 398;
/// Longest accepted chain, counting leaf and trust root.
pub const MAX_CHAIN_LEN: usize = 4;
/// Extension marking a certificate as a CA; value `[1]`.
pub const EXT_CA: &str = "c2a.ca";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reason {
    ChainTooLong,
    AlgMismatch,
    IssuerMismatch,
    NotACa,
    BadSignature,
    InvalidValidity,
    NotYetValid,
    Expired,
    ValidityExceedsMax,
    CrlInvalid,
    Revoked,
    PopInvalid,
    SubjectNotPermitted,
    AlgNotPermitted,
    CaNotPermitted,
    UntrustedChain,
    DigestMismatch,
}

impl Reason {
    /// Every reason, in declaration order.
    pub const ALL: [Reason; 17] = [
        Reason::ChainTooLong,
        Reason::AlgMismatch,
        Reason::IssuerMismatch,
        Reason::NotACa,
        Reason::BadSignature,
        Reason::InvalidValidity,
        Reason::NotYetValid,
        Reason::Expired,
        Reason::ValidityExceedsMax,
        Reason::CrlInvalid,
        Reason::Revoked,
        Reason::PopInvalid,
        Reason::SubjectNotPermitted,
        Reason::AlgNotPermitted,
        Reason::CaNotPermitted,
        Reason::UntrustedChain,
        Reason::DigestMismatch,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Reason::ChainTooLong => "chain-too-long",
            Reason::AlgMismatch => "alg-mismatch",
            Reason::IssuerMismatch => "issuer-mismatch",
            Reason::NotACa => "not-a-ca",
            Reason::BadSignature => "bad-signature",
            Reason::InvalidValidity => "invalid-validity",
            Reason::NotYetValid => "not-yet-valid",
            Reason::Expired => "expired",
            Reason::ValidityExceedsMax => "validity-exceeds-max",
            Reason::CrlInvalid => "crl-invalid",
            Reason::Revoked => "revoked",
            Reason::PopInvalid => "pop-invalid",
            Reason::SubjectNotPermitted => "subject-not-permitted",
            Reason::AlgNotPermitted => "alg-not-permitted",
            Reason::CaNotPermitted => "ca-not-permitted",
            Reason::UntrustedChain => "untrusted-chain",
            Reason::DigestMismatch => "digest-mismatch",
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Why something was rejected. `index` is the position of the offending
/// certificate in the verified path (leaf = 0), or the data group number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub reason: Reason,
    pub index: Option<u64>,
    pub detail: Option<String>,
}

impl Rejection {
    pub fn new(reason: Reason) -> Self {
        Self {
            reason,
            index: None,
            detail: None,
        }
    }

    pub fn at(reason: Reason, index: usize) -> Self {
        Self {
            reason,
            index: Some(index as u64),
            detail: None,
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.reason.as_str())?;
        if let Some(i) = self.index {
            write!(f, " (index {i})")?;
        }
        if let Some(d) = &self.detail {
            write!(f, ": {d}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject(Rejection),
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept)
    }

    pub fn reason(&self) -> Option<Reason> {
        match self {
            Verdict::Accept => None,
            Verdict::Reject(r) => Some(r.reason),
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Accept => f.write_str("accept"),
            Verdict::Reject(r) => write!(f, "reject: {r}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PkiError {
    #[error("refused: {0}")]
    Refused(Rejection),
    #[error("invalid approval token: {0}")]
    InvalidToken(String),
    #[error("approval token expired")]
    TokenExpired,
    #[error("issuer mismatch: list belongs to {list}, authority is {authority}")]
    IssuerMismatch { list: String, authority: String },
    #[error("{0} is not a digest algorithm")]
    UnknownDigest(String),
    #[error("malformed {what}: {reason}")]
    Malformed { what: &'static str, reason: String },
    #[error(transparent)]
    Compact(#[from] CompactError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for PkiError {
    fn from(e: std::io::Error) -> Self {
        PkiError::Io(e.to_string())
    }
}

pub fn is_ca(cert: &CertificateRecord) -> bool {
    cert.extensions.get(EXT_CA).is_some_and(|v| v == &[1])
}

fn reject(r: Rejection) -> Verdict {
    Verdict::Reject(r)
}

/// Verifies `leaf` up through `chain` (leaf-adjacent first) to
/// `trust_root`. A trailing copy of the root in `chain` is ignored.
///
/// Checks run in a fixed order and the first failure is reported: path
/// length, algorithm uniformity, issuer linkage, CA flags, signatures,
/// validity windows, the end-entity lifetime cap, then revocation.
pub fn verify_chain(
    leaf: &CertificateRecord,
    chain: &[CertificateRecord],
    trust_root: &CertificateRecord,
    now: u64,
    crl: Option<&RevocationList>,
) -> Verdict {
    let chain = match chain.split_last() {
        Some((last, rest)) if last == trust_root => rest,
        _ => chain,
    };
    let mut path: Vec<&CertificateRecord> = vec![leaf];
    path.extend(chain);
    if leaf != trust_root {
        path.push(trust_root);
    }
    if path.len() > MAX_CHAIN_LEN {
        return reject(Rejection::new(Reason::ChainTooLong));
    }
    let root_index = path.len() - 1;

    let sig_alg = trust_root.signature_alg;
    for (i, c) in path.iter().enumerate() {
        if c.signature_alg != sig_alg {
            return reject(Rejection::at(Reason::AlgMismatch, i));
        }
        if i > 0 && c.public_key_alg != trust_root.public_key_alg {
            return reject(Rejection::at(Reason::AlgMismatch, i));
        }
    }

    for i in 0..root_index {
        if path[i].issuer_id != path[i + 1].subject_id {
            return reject(Rejection::at(Reason::IssuerMismatch, i));
        }
    }
    if trust_root.issuer_id != trust_root.subject_id {
        return reject(Rejection::at(Reason::IssuerMismatch, root_index));
    }

    for (i, c) in path.iter().enumerate().skip(1) {
        if !is_ca(c) {
            return reject(Rejection::at(Reason::NotACa, i));
        }
    }

    for (i, c) in path.iter().enumerate() {
        let issuer = path[(i + 1).min(root_index)];
        let Ok(tbs) = c.tbs_bytes() else {
            return reject(Rejection::at(Reason::BadSignature, i));
        };
        if issuer.public_key_alg != c.signature_alg
            || !verify_signature(c.signature_alg, &issuer.public_key, &tbs, &c.signature)
        {
            return reject(Rejection::at(Reason::BadSignature, i));
        }
    }

    for (i, c) in path.iter().enumerate() {
        if c.not_before >= c.not_after {
            return reject(Rejection::at(Reason::InvalidValidity, i));
        }
        if now < c.not_before {
            return reject(Rejection::at(Reason::NotYetValid, i));
        }
        if now > c.not_after {
            return reject(Rejection::at(Reason::Expired, i));
        }
    }

    if !is_ca(leaf) && leaf.validity_secs() > MAX_END_ENTITY_DAYS * DAY_SECS {
        return reject(Rejection::at(Reason::ValidityExceedsMax, 0));
    }

    if let Some(crl) = crl {
        let Some(issuer_pos) = path.iter().position(|c| c.subject_id == crl.issuer_id && is_ca(c))
        else {
            return reject(Rejection::new(Reason::CrlInvalid).with_detail("issuer not in chain"));
        };
        if !crl.verify(path[issuer_pos]) {
            return reject(Rejection::new(Reason::CrlInvalid).with_detail("bad signature"));
        }
        for (i, c) in path.iter().enumerate().take(issuer_pos) {
            if c.issuer_id == crl.issuer_id && crl.contains(&c.serial) {
                return reject(Rejection::at(Reason::Revoked, i));
            }
        }
    }
    Verdict::Accept
}
