// Licensed under the Apache-2.0 license

use std::collections::BTreeSet;

use super::{CertificateAuthority, CertificateRecord, PkiError};
use crate::compact_cert::cbor::{CborError, Reader, Writer};
use crate::suite_registry::primitives::verify_signature;
use crate::suite_registry::Algorithm;

const CRL_TAG: &str = "c2a-crl-v1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevocationList {
    pub issuer_id: String,
    pub issued_at: u64,
    pub revoked_serials: BTreeSet<Vec<u8>>,
    pub signature_alg: Algorithm,
    pub signature: Vec<u8>,
}

impl RevocationList {
    /// A freshly signed list with no entries.
    pub fn empty(issuer: &CertificateAuthority, now: u64) -> Self {
        let mut crl = Self {
            issuer_id: issuer.name().to_string(),
            issued_at: now,
            revoked_serials: BTreeSet::new(),
            signature_alg: issuer.key().algorithm(),
            signature: Vec::new(),
        };
        crl.signature = issuer.key().sign(&crl.body_bytes());
        crl
    }

    fn write_body(&self, w: &mut Writer) {
        w.text(CRL_TAG)
            .text(&self.issuer_id)
            .uint(self.issued_at)
            .array(self.revoked_serials.len());
        for s in &self.revoked_serials {
            w.bytes(s);
        }
        w.uint(self.signature_alg.id().expect("signature algorithms have wire ids"));
    }

    pub fn body_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.array(5);
        self.write_body(&mut w);
        w.finish()
    }

    pub fn contains(&self, serial: &[u8]) -> bool {
        self.revoked_serials.contains(serial)
    }

    /// True iff `issuer` names this list's issuer and signed it.
    pub fn verify(&self, issuer: &CertificateRecord) -> bool {
        issuer.subject_id == self.issuer_id
            && issuer.public_key_alg == self.signature_alg
            && verify_signature(
                self.signature_alg,
                &issuer.public_key,
                &self.body_bytes(),
                &self.signature,
            )
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.array(6);
        self.write_body(&mut w);
        w.bytes(&self.signature);
        w.finish()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, PkiError> {
        let m = |e: CborError| PkiError::Malformed {
            what: "revocation list",
            reason: e.to_string(),
        };
        let mut r = Reader::new(data);
        r.array_of(6).map_err(m)?;
        if r.text().map_err(m)? != CRL_TAG {
            return Err(PkiError::Malformed {
                what: "revocation list",
                reason: "unknown tag".into(),
            });
        }
        let issuer_id = r.text().map_err(m)?.to_string();
        let issued_at = r.uint().map_err(m)?;
        let n = r.array().map_err(m)?;
        let mut revoked_serials = BTreeSet::new();
        let mut prev: Option<Vec<u8>> = None;
        for _ in 0..n {
            let s = r.bytes().map_err(m)?.to_vec();
            // The set is written in ascending order; anything else is a
            // second encoding of the same list.
            if prev.as_ref().is_some_and(|p| p >= &s) {
                return Err(PkiError::Malformed {
                    what: "revocation list",
                    reason: "serials not strictly ascending".into(),
                });
            }
            prev = Some(s.clone());
            revoked_serials.insert(s);
        }
        let id = r.uint().map_err(m)?;
        let signature_alg = Algorithm::from_id(id).ok_or(PkiError::Malformed {
            what: "revocation list",
            reason: format!("unknown algorithm id {id}"),
        })?;
        let signature = r.bytes().map_err(m)?.to_vec();
        r.finish().map_err(m)?;
        Ok(Self {
            issuer_id,
            issued_at,
            revoked_serials,
            signature_alg,
            signature,
        })
    }
}

/// Returns a new list containing `serial`. `issued_at` always advances,
/// even when the clock has not.
pub fn revoke(
    serial: &[u8],
    crl: &RevocationList,
    issuer: &CertificateAuthority,
    now: u64,
) -> Result<RevocationList, PkiError> {
    if crl.issuer_id != issuer.name() {
        return Err(PkiError::IssuerMismatch {
            list: crl.issuer_id.clone(),
            authority: issuer.name().to_string(),
        });
    }
    let mut next = crl.clone();
    next.revoked_serials.insert(serial.to_vec());
    next.issued_at = now.max(crl.issued_at + 1);
    next.signature_alg = issuer.key().algorithm();
    next.signature = issuer.key().sign(&next.body_bytes());
    Ok(next)
}
