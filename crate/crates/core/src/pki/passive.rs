// Licensed under the Apache-2.0 license

use std::collections::BTreeMap;

use super::{verify_chain, CertificateRecord, PkiError, Reason, Rejection, Verdict};
use crate::compact_cert::cbor::Writer;
use crate::suite_registry::primitives::{digest, verify_signature, SigningKeyPair};
use crate::suite_registry::{primary, Algorithm, Mode, Role};

/// Chip data groups with a Document Signer's signature over their digests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedDataBundle {
    pub data_groups: BTreeMap<u64, Vec<u8>>,
    pub digest_alg: Algorithm,
    pub digests: BTreeMap<u64, Vec<u8>>,
    pub signature: Vec<u8>,
    pub ds_certificate: CertificateRecord,
    pub csca_certificate: CertificateRecord,
}

impl SignedDataBundle {
    /// Digests every group with the mode's hash and signs the digest table.
    pub fn sign(
        data_groups: BTreeMap<u64, Vec<u8>>,
        mode: Mode,
        ds_key: &SigningKeyPair,
        ds_certificate: CertificateRecord,
        csca_certificate: CertificateRecord,
    ) -> Result<Self, PkiError> {
        let digest_alg = primary(mode, Role::Hash)
            .expect("every mode has a hash")
            .algorithm;
        let digests = data_groups
            .iter()
            .map(|(&i, g)| Ok((i, digest(digest_alg, g)?)))
            .collect::<Result<BTreeMap<_, _>, PkiError>>()?;
        let mut bundle = Self {
            data_groups,
            digest_alg,
            digests,
            signature: Vec::new(),
            ds_certificate,
            csca_certificate,
        };
        bundle.signature = ds_key.sign(&bundle.security_object());
        Ok(bundle)
    }

    /// The signed structure: `[digest algorithm id, {group: digest}]`.
    pub fn security_object(&self) -> Vec<u8> {
        Writer::new()
            .array(2)
            .uint(self.digest_alg.id().unwrap_or(u64::MAX))
            .uint_bytes_map(self.digests.iter().map(|(&i, d)| (i, d.as_slice())))
            .finish()
    }
}

/// Accepts iff the DS certificate chains to `trusted_csca`, the digest
/// table signature verifies, and every present group matches its digest.
pub fn passive_authenticate(
    bundle: &SignedDataBundle,
    trusted_csca: &CertificateRecord,
    now: u64,
) -> Result<Verdict, PkiError> {
    if bundle.digest_alg.role() != Role::Hash {
        return Err(PkiError::UnknownDigest(bundle.digest_alg.name().to_string()));
    }
    if &bundle.csca_certificate != trusted_csca {
        return Ok(Verdict::Reject(
            Rejection::new(Reason::UntrustedChain).with_detail("bundle names a different root"),
        ));
    }
    if let Verdict::Reject(r) = verify_chain(&bundle.ds_certificate, &[], trusted_csca, now, None) {
        return Ok(Verdict::Reject(
            Rejection::new(Reason::UntrustedChain).with_detail(r.to_string()),
        ));
    }
    let ds = &bundle.ds_certificate;
    if !verify_signature(
        ds.public_key_alg,
        &ds.public_key,
        &bundle.security_object(),
        &bundle.signature,
    ) {
        return Ok(Verdict::Reject(Rejection::new(Reason::BadSignature)));
    }
    for (&i, group) in &bundle.data_groups {
        let ok = bundle
            .digests
            .get(&i)
            .is_some_and(|d| digest(bundle.digest_alg, group).is_ok_and(|h| &h == d));
        if !ok {
            return Ok(Verdict::Reject(Rejection {
                reason: Reason::DigestMismatch,
                index: Some(i),
                detail: None,
            }));
        }
    }
    Ok(Verdict::Accept)
}
