// Licensed under the Apache-2.0 license

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{
    ApprovalToken, CertificateRecord, PkiError, Reason, Rejection, DAY_SECS, EXT_CA,
    MAX_CHAIN_LEN, MAX_END_ENTITY_DAYS,
};
use crate::compact_cert::cbor::{Reader, Writer};
use crate::compact_cert::{armor, dearmor, dearmor_all, decode_compact, encode_compact, CERT_VERSION};
use crate::entropy::EntropySource;
use crate::suite_registry::primitives::{digest_parts, PublicKey, SigningKeyPair};
use crate::suite_registry::{Algorithm, Role};

const KEY_FILE: &str = "ca.key";
const CERT_FILE: &str = "ca.cert";
const CHAIN_FILE: &str = "chain.cert";
const STATE_FILE: &str = "ca.state";

/// A CA signing context. Issuance is serialised through `&mut self`, which
/// keeps the serial counter unique.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateAuthority {
    key: SigningKeyPair,
    certificate: CertificateRecord,
    /// Issuers above this CA, nearest first, ending at the root. Empty for
    /// a root.
    chain: Vec<CertificateRecord>,
    counter: u64,
    trusted_ras: Vec<PublicKey>,
}

fn ca_extensions() -> BTreeMap<String, Vec<u8>> {
    BTreeMap::from([(EXT_CA.to_string(), vec![1])])
}

impl CertificateAuthority {
    /// Creates a self-signed root.
    pub fn new_root<S: EntropySource + ?Sized>(
        name: &str,
        algorithm: Algorithm,
        validity_days: u64,
        now: u64,
        source: &mut S,
    ) -> Result<Self, PkiError> {
        let key = SigningKeyPair::generate(algorithm, source)?;
        let mut ca = Self {
            certificate: CertificateRecord {
                version: CERT_VERSION,
                serial: Vec::new(),
                issuer_id: name.to_string(),
                subject_id: name.to_string(),
                public_key_alg: algorithm,
                public_key: key.public_key().to_vec(),
                not_before: now,
                not_after: now + validity_days * DAY_SECS,
                extensions: ca_extensions(),
                signature_alg: algorithm,
                signature: Vec::new(),
            },
            key,
            chain: Vec::new(),
            counter: 0,
            trusted_ras: Vec::new(),
        };
        ca.certificate.serial = ca.next_serial(&ca.certificate.public_key.clone());
        ca.certificate.signature = ca.key.sign(&ca.certificate.tbs_bytes()?);
        Ok(ca)
    }

    /// Creates a subordinate CA signed by `self`. The subordinate uses the
    /// same algorithm, since chains must be uniform.
    pub fn new_intermediate<S: EntropySource + ?Sized>(
        &mut self,
        name: &str,
        validity_days: u64,
        now: u64,
        source: &mut S,
    ) -> Result<Self, PkiError> {
        if self.chain.len() + 2 >= MAX_CHAIN_LEN {
            return Err(PkiError::Refused(Rejection::new(Reason::ChainTooLong)));
        }
        let key = SigningKeyPair::generate(self.key.algorithm(), source)?;
        let certificate = self.sign_certificate(
            name,
            key.public(),
            now,
            now + validity_days * DAY_SECS,
            ca_extensions(),
        )?;
        let mut chain = vec![self.certificate.clone()];
        chain.extend(self.chain.iter().cloned());
        Ok(Self {
            key,
            certificate,
            chain,
            counter: 0,
            trusted_ras: self.trusted_ras.clone(),
        })
    }

    pub fn name(&self) -> &str {
        &self.certificate.subject_id
    }

    pub fn key(&self) -> &SigningKeyPair {
        &self.key
    }

    pub fn certificate(&self) -> &CertificateRecord {
        &self.certificate
    }

    /// Certificates above this CA, nearest first.
    pub fn chain(&self) -> &[CertificateRecord] {
        &self.chain
    }

    /// The chain a certificate issued by this CA presents: this CA's own
    /// certificate followed by its issuers, excluding the root.
    pub fn issued_chain(&self) -> Vec<CertificateRecord> {
        if self.chain.is_empty() {
            return Vec::new();
        }
        let mut out = vec![self.certificate.clone()];
        out.extend(self.chain[..self.chain.len() - 1].iter().cloned());
        out
    }

    pub fn trust_root(&self) -> &CertificateRecord {
        self.chain.last().unwrap_or(&self.certificate)
    }

    pub fn trust_ra(&mut self, ra: PublicKey) {
        if !self.trusted_ras.contains(&ra) {
            self.trusted_ras.push(ra);
        }
    }

    /// `SHA-256(issuer || public key || counter)[..16]`.
    fn next_serial(&mut self, public_key: &[u8]) -> Vec<u8> {
        self.counter += 1;
        let d = digest_parts(
            Algorithm::Sha256,
            &[
                self.certificate.subject_id.as_bytes(),
                public_key,
                &self.counter.to_be_bytes(),
            ],
        )
        .expect("SHA-256 is registered");
        d[..16].to_vec()
    }

    fn sign_certificate(
        &mut self,
        subject_id: &str,
        public_key: PublicKey,
        not_before: u64,
        not_after: u64,
        extensions: BTreeMap<String, Vec<u8>>,
    ) -> Result<CertificateRecord, PkiError> {
        let mut cert = CertificateRecord {
            version: CERT_VERSION,
            serial: self.next_serial(&public_key.bytes),
            issuer_id: self.name().to_string(),
            subject_id: subject_id.to_string(),
            public_key_alg: public_key.algorithm,
            public_key: public_key.bytes,
            not_before,
            not_after,
            extensions,
            signature_alg: self.key.algorithm(),
            signature: Vec::new(),
        };
        cert.signature = self.key.sign(&cert.tbs_bytes()?);
        Ok(cert)
    }

    /// Issues directly from a reviewed request. `validity_days` above the
    /// end-entity cap is refused, never clamped.
    pub fn issue(
        &mut self,
        token: &ApprovalToken,
        validity_days: u64,
        now: u64,
    ) -> Result<CertificateRecord, PkiError> {
        if !self.trusted_ras.iter().any(|ra| token.verify(ra)) {
            return Err(PkiError::InvalidToken("not signed by a trusted RA".into()));
        }
        if now < token.issued_at || now > token.expires_at {
            return Err(PkiError::TokenExpired);
        }
        let csr = &token.csr;
        if !csr.verify_pop() {
            return Err(PkiError::Refused(Rejection::new(Reason::PopInvalid)));
        }
        let is_ca = csr.requested_extensions.get(EXT_CA).is_some_and(|v| v == &[1]);
        if validity_days == 0 {
            return Err(PkiError::Refused(Rejection::new(Reason::InvalidValidity)));
        }
        if !is_ca && validity_days > MAX_END_ENTITY_DAYS {
            return Err(PkiError::Refused(
                Rejection::new(Reason::ValidityExceedsMax)
                    .with_detail(format!("{validity_days} days requested")),
            ));
        }
        self.sign_certificate(
            &csr.subject_id,
            PublicKey {
                algorithm: csr.public_key_alg,
                bytes: csr.public_key.clone(),
            },
            now,
            now + validity_days * DAY_SECS,
            csr.requested_extensions.clone(),
        )
    }

    /// Issues a certificate for a key the caller already controls, skipping
    /// the RA. Used for device provisioning and firmware signers.
    pub fn issue_for_key(
        &mut self,
        subject_id: &str,
        public_key: PublicKey,
        validity_days: u64,
        now: u64,
        extensions: BTreeMap<String, Vec<u8>>,
    ) -> Result<CertificateRecord, PkiError> {
        if validity_days == 0 {
            return Err(PkiError::Refused(Rejection::new(Reason::InvalidValidity)));
        }
        if validity_days > MAX_END_ENTITY_DAYS {
            return Err(PkiError::Refused(Rejection::new(Reason::ValidityExceedsMax)));
        }
        if public_key.bytes.len() != public_key.algorithm.spec().key_len
            || public_key.algorithm.role() == Role::SymmetricEncryption
        {
            return Err(PkiError::Crypto(
                crate::suite_registry::primitives::CryptoError::InvalidPublicKey(
                    public_key.algorithm,
                ),
            ));
        }
        self.sign_certificate(
            subject_id,
            public_key,
            now,
            now + validity_days * DAY_SECS,
            extensions,
        )
    }

    pub fn save(&self, dir: &Path) -> Result<(), PkiError> {
        fs::create_dir_all(dir)?;
        write_secret(
            &dir.join(KEY_FILE),
            armor("SIGNING KEY", &self.key.to_secret_bytes()).as_bytes(),
        )?;
        fs::write(
            dir.join(CERT_FILE),
            armor("CERTIFICATE", &encode_compact(&self.certificate)?),
        )?;
        let mut chain = String::new();
        for c in &self.chain {
            chain.push_str(&armor("CERTIFICATE", &encode_compact(c)?));
        }
        fs::write(dir.join(CHAIN_FILE), chain)?;
        let mut w = Writer::new();
        w.array(2).uint(self.counter).array(self.trusted_ras.len());
        for ra in &self.trusted_ras {
            w.bytes(&ra.to_bytes());
        }
        fs::write(dir.join(STATE_FILE), armor("CA STATE", &w.finish()))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, PkiError> {
        let read = |name: &str| {
            fs::read_to_string(dir.join(name))
                .map_err(|e| PkiError::Io(format!("{}: {e}", dir.join(name).display())))
        };
        let key = SigningKeyPair::from_secret_bytes(&dearmor("SIGNING KEY", &read(KEY_FILE)?)?)?;
        let certificate = decode_compact(&dearmor("CERTIFICATE", &read(CERT_FILE)?)?)?;
        if certificate.public_key != key.public_key() {
            return Err(PkiError::Malformed {
                what: "CA directory",
                reason: "key does not match certificate".into(),
            });
        }
        let chain = dearmor_all(&read(CHAIN_FILE)?)?
            .into_iter()
            .map(|(_, b)| decode_compact(&b))
            .collect::<Result<Vec<_>, _>>()?;
        let state = dearmor("CA STATE", &read(STATE_FILE)?)?;
        let bad = |e: crate::compact_cert::cbor::CborError| PkiError::Malformed {
            what: "CA state",
            reason: e.to_string(),
        };
        let mut r = Reader::new(&state);
        r.array_of(2).map_err(bad)?;
        let counter = r.uint().map_err(bad)?;
        let n = r.array().map_err(bad)?;
        let mut trusted_ras = Vec::with_capacity(n);
        for _ in 0..n {
            trusted_ras.push(PublicKey::from_bytes(r.bytes().map_err(bad)?)?);
        }
        r.finish().map_err(bad)?;
        Ok(Self {
            key,
            certificate,
            chain,
            counter,
            trusted_ras,
        })
    }
}

/// Writes `data` readable by the owner only (mode 0600 on Unix).
pub fn write_secret(path: &Path, data: &[u8]) -> std::io::Result<()> {
    let mut opts = fs::OpenOptions::new();
    opts.write(true).create(true).truncate(true);
    #[cfg(unix)]
    {
        use std::os::unix::fs::OpenOptionsExt;
        opts.mode(0o600);
    }
    use std::io::Write;
    opts.open(path)?.write_all(data)
}

pub fn ca_issue(
    approval: &ApprovalToken,
    ca: &mut CertificateAuthority,
    validity_days: u64,
    now: u64,
) -> Result<CertificateRecord, PkiError> {
    ca.issue(approval, validity_days, now)
}
