// Licensed under the Apache-2.0 license

use std::collections::BTreeMap;

use regex::Regex;

use super::{PkiError, Reason, Rejection, EXT_CA};
use crate::compact_cert::cbor::{CborError, Reader, Writer};
use crate::suite_registry::primitives::{verify_signature, PublicKey, SigningKeyPair};
use crate::suite_registry::{permitted, Algorithm, Mode, Role};

pub const TOKEN_LIFETIME_SECS: u64 = 3600;

const CSR_TAG: &str = "c2a-csr-v1";
const TOKEN_TAG: &str = "c2a-approval-v1";

/// A certificate signing request with proof of possession.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Csr {
    pub subject_id: String,
    pub public_key_alg: Algorithm,
    pub public_key: Vec<u8>,
    pub requested_extensions: BTreeMap<String, Vec<u8>>,
    pub proof_of_possession: Vec<u8>,
}

fn malformed(what: &'static str) -> impl Fn(CborError) -> PkiError {
    move |e| PkiError::Malformed {
        what,
        reason: e.to_string(),
    }
}

fn wire_id(alg: Algorithm) -> u64 {
    alg.id().expect("signature algorithms have wire ids")
}

fn read_alg(r: &mut Reader<'_>, what: &'static str) -> Result<Algorithm, PkiError> {
    let id = r.uint().map_err(malformed(what))?;
    Algorithm::from_id(id).ok_or(PkiError::Malformed {
        what,
        reason: format!("unknown algorithm id {id}"),
    })
}

impl Csr {
    fn write_body(&self, w: &mut Writer) {
        w.text(CSR_TAG)
            .text(&self.subject_id)
            .uint(wire_id(self.public_key_alg))
            .bytes(&self.public_key)
            .text_bytes_map(
                self.requested_extensions
                    .iter()
                    .map(|(k, v)| (k.as_str(), v.as_slice())),
            );
    }

    /// Bytes covered by the proof of possession.
    pub fn body_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.array(5);
        self.write_body(&mut w);
        w.finish()
    }

    pub fn verify_pop(&self) -> bool {
        self.public_key_alg.role() == Role::Signature
            && verify_signature(
                self.public_key_alg,
                &self.public_key,
                &self.body_bytes(),
                &self.proof_of_possession,
            )
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.array(6);
        self.write_body(&mut w);
        w.bytes(&self.proof_of_possession);
        w.finish()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, PkiError> {
        let m = malformed("CSR");
        let mut r = Reader::new(data);
        r.array_of(6).map_err(&m)?;
        if r.text().map_err(&m)? != CSR_TAG {
            return Err(PkiError::Malformed {
                what: "CSR",
                reason: "unknown tag".into(),
            });
        }
        let subject_id = r.text().map_err(&m)?.to_string();
        let public_key_alg = read_alg(&mut r, "CSR")?;
        let csr = Csr {
            subject_id,
            public_key_alg,
            public_key: r.bytes().map_err(&m)?.to_vec(),
            requested_extensions: r.text_bytes_map().map_err(&m)?,
            proof_of_possession: r.bytes().map_err(&m)?.to_vec(),
        };
        r.finish().map_err(&m)?;
        Ok(csr)
    }
}

pub fn generate_csr(
    subject_id: &str,
    key: &SigningKeyPair,
    extensions: BTreeMap<String, Vec<u8>>,
) -> Csr {
    let mut csr = Csr {
        subject_id: subject_id.to_string(),
        public_key_alg: key.algorithm(),
        public_key: key.public_key().to_vec(),
        requested_extensions: extensions,
        proof_of_possession: Vec::new(),
    };
    csr.proof_of_possession = key.sign(&csr.body_bytes());
    csr
}

/// What the RA will approve.
#[derive(Debug, Clone)]
pub struct IssuancePolicy {
    pub subject_pattern: Regex,
    pub modes: Vec<Mode>,
    pub allow_ca: bool,
}

impl IssuancePolicy {
    /// Any subject, any mode, end-entity only.
    pub fn permissive() -> Self {
        Self {
            subject_pattern: Regex::new(".*").expect("static pattern"),
            modes: Mode::ALL.to_vec(),
            allow_ca: false,
        }
    }

    /// `pattern` is anchored at both ends.
    pub fn new(pattern: &str, modes: &[Mode]) -> Result<Self, regex::Error> {
        Ok(Self {
            subject_pattern: Regex::new(&format!("^(?:{pattern})$"))?,
            modes: modes.to_vec(),
            allow_ca: false,
        })
    }

    pub fn permits(&self, alg: Algorithm) -> bool {
        self.modes.iter().any(|&m| permitted(m, Role::Signature, alg))
    }
}

/// A signed RA statement that a CSR passed review.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApprovalToken {
    pub csr: Csr,
    pub ra_id: String,
    pub issued_at: u64,
    pub expires_at: u64,
    pub signature_alg: Algorithm,
    pub signature: Vec<u8>,
}

impl ApprovalToken {
    fn write_body(&self, w: &mut Writer) {
        w.text(TOKEN_TAG)
            .bytes(&self.csr.to_bytes())
            .text(&self.ra_id)
            .uint(self.issued_at)
            .uint(self.expires_at)
            .uint(wire_id(self.signature_alg));
    }

    pub fn body_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.array(6);
        self.write_body(&mut w);
        w.finish()
    }

    pub fn verify(&self, ra_key: &PublicKey) -> bool {
        ra_key.algorithm == self.signature_alg
            && verify_signature(
                self.signature_alg,
                &ra_key.bytes,
                &self.body_bytes(),
                &self.signature,
            )
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.array(7);
        self.write_body(&mut w);
        w.bytes(&self.signature);
        w.finish()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, PkiError> {
        let m = malformed("approval token");
        let mut r = Reader::new(data);
        r.array_of(7).map_err(&m)?;
        if r.text().map_err(&m)? != TOKEN_TAG {
            return Err(PkiError::Malformed {
                what: "approval token",
                reason: "unknown tag".into(),
            });
        }
        let csr = Csr::from_bytes(r.bytes().map_err(&m)?)?;
        let ra_id = r.text().map_err(&m)?.to_string();
        let issued_at = r.uint().map_err(&m)?;
        let expires_at = r.uint().map_err(&m)?;
        let signature_alg = read_alg(&mut r, "approval token")?;
        let signature = r.bytes().map_err(&m)?.to_vec();
        r.finish().map_err(&m)?;
        Ok(Self {
            csr,
            ra_id,
            issued_at,
            expires_at,
            signature_alg,
            signature,
        })
    }
}

#[derive(Debug, Clone)]
pub struct RegistrationAuthority {
    pub id: String,
    key: SigningKeyPair,
    pub policy: IssuancePolicy,
}

impl RegistrationAuthority {
    pub fn new(id: &str, key: SigningKeyPair, policy: IssuancePolicy) -> Self {
        Self {
            id: id.to_string(),
            key,
            policy,
        }
    }

    pub fn public(&self) -> PublicKey {
        self.key.public()
    }

    pub fn key(&self) -> &SigningKeyPair {
        &self.key
    }

    /// Approves iff the proof of possession verifies, the subject matches
    /// the policy pattern and the key algorithm is permitted.
    pub fn review(&self, csr: &Csr, now: u64) -> Result<ApprovalToken, Rejection> {
        if !csr.verify_pop() {
            return Err(Rejection::new(Reason::PopInvalid));
        }
        if !self.policy.subject_pattern.is_match(&csr.subject_id) {
            return Err(Rejection::new(Reason::SubjectNotPermitted).with_detail(csr.subject_id.clone()));
        }
        if !self.policy.permits(csr.public_key_alg) {
            return Err(
                Rejection::new(Reason::AlgNotPermitted).with_detail(csr.public_key_alg.name())
            );
        }
        if csr.requested_extensions.contains_key(EXT_CA) && !self.policy.allow_ca {
            return Err(Rejection::new(Reason::CaNotPermitted));
        }
        let mut token = ApprovalToken {
            csr: csr.clone(),
            ra_id: self.id.clone(),
            issued_at: now,
            expires_at: now + TOKEN_LIFETIME_SECS,
            signature_alg: self.key.algorithm(),
            signature: Vec::new(),
        };
        token.signature = self.key.sign(&token.body_bytes());
        Ok(token)
    }
}

pub fn ra_review(csr: &Csr, ra: &RegistrationAuthority, now: u64) -> Result<ApprovalToken, Rejection> {
    ra.review(csr, now)
}
