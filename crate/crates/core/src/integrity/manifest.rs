// Licensed under the Apache-2.0 license

use semver::Version;

use super::IntegrityError;
use crate::compact_cert::cbor::{Reader, Writer};
use crate::compact_cert::{armor, dearmor, decode_compact, encode_compact, CertificateRecord};
use crate::pki::CertificateAuthority;
use crate::suite_registry::primitives::{digest, SigningKeyPair};
use crate::suite_registry::{permitted, primary, Algorithm, Mode, Role};

/// Envelope label for manifest files.
pub const MANIFEST_KIND: &str = "FIRMWARE MANIFEST";
const BODY_TAG: &str = "c2a-fw-manifest-v1";

/// Image metadata bound into the manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FirmwareMeta {
    pub version: Version,
    pub model: String,
}

impl FirmwareMeta {
    pub fn new(version: &str, model: &str) -> Result<Self, IntegrityError> {
        Ok(Self {
            version: Version::parse(version).map_err(|_| IntegrityError::Version(version.into()))?,
            model: model.to_string(),
        })
    }
}

/// A signing key with its certificate and the issuers above it.
#[derive(Debug, Clone)]
pub struct FirmwareSigner {
    pub key: SigningKeyPair,
    pub certificate: CertificateRecord,
    /// Issuers, nearest first. A trailing trust root is allowed.
    pub chain: Vec<CertificateRecord>,
}

impl FirmwareSigner {
    pub fn from_authority(ca: &CertificateAuthority) -> Self {
        Self {
            key: ca.key().clone(),
            certificate: ca.certificate().clone(),
            chain: ca.chain().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FirmwareManifest {
    pub image_digest: Vec<u8>,
    pub digest_alg: Algorithm,
    pub image_len: u64,
    pub fw_version: Version,
    pub device_model: String,
    pub mode: Mode,
    pub signer_cert: CertificateRecord,
    pub signer_chain: Vec<CertificateRecord>,
    /// Signature by `signer_cert`'s key over `body_bytes()`.
    pub signature: Vec<u8>,
}

fn malformed(e: impl std::fmt::Display) -> IntegrityError {
    IntegrityError::Malformed(e.to_string())
}

impl FirmwareManifest {
    /// Canonical signed body:
    /// `[tag, digest alg, digest, length, version, model, mode, signer, [chain]]`.
    pub fn body_bytes(&self) -> Result<Vec<u8>, IntegrityError> {
        let mut w = Writer::new();
        w.array(9)
            .text(BODY_TAG)
            .uint(self.digest_alg.id().ok_or_else(|| malformed("digest has no wire id"))?)
            .bytes(&self.image_digest)
            .uint(self.image_len)
            .text(&self.fw_version.to_string())
            .text(&self.device_model)
            .uint(self.mode.code())
            .bytes(&encode_compact(&self.signer_cert)?)
            .array(self.signer_chain.len());
        for c in &self.signer_chain {
            w.bytes(&encode_compact(c)?);
        }
        Ok(w.finish())
    }

    /// `[body, signature]`.
    pub fn to_bytes(&self) -> Result<Vec<u8>, IntegrityError> {
        Ok(Writer::new()
            .array(2)
            .raw(&self.body_bytes()?)
            .bytes(&self.signature)
            .finish())
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, IntegrityError> {
        let mut r = Reader::new(data);
        r.array_of(2).map_err(malformed)?;
        let body = r.item().map_err(malformed)?;
        let signature = r.bytes().map_err(malformed)?.to_vec();
        r.finish().map_err(malformed)?;

        let mut b = Reader::new(body);
        b.array_of(9).map_err(malformed)?;
        if b.text().map_err(malformed)? != BODY_TAG {
            return Err(malformed("not a firmware manifest"));
        }
        let digest_alg = Algorithm::from_id(b.uint().map_err(malformed)?)
            .filter(|a| a.role() == Role::Hash)
            .ok_or_else(|| malformed("digest algorithm"))?;
        let image_digest = b.bytes().map_err(malformed)?.to_vec();
        if image_digest.len() != digest_alg.spec().output_len {
            return Err(malformed("digest length does not match its algorithm"));
        }
        let image_len = b.uint().map_err(malformed)?;
        let version = b.text().map_err(malformed)?;
        let fw_version =
            Version::parse(version).map_err(|_| IntegrityError::Version(version.into()))?;
        let device_model = b.text().map_err(malformed)?.to_string();
        let mode = Mode::from_code(b.uint().map_err(malformed)?).ok_or_else(|| malformed("mode"))?;
        let signer_cert = decode_compact(b.bytes().map_err(malformed)?)?;
        let n = b.array().map_err(malformed)?;
        let signer_chain = (0..n)
            .map(|_| Ok(decode_compact(b.bytes().map_err(malformed)?)?))
            .collect::<Result<Vec<_>, IntegrityError>>()?;
        b.finish().map_err(malformed)?;
        let m = Self {
            image_digest,
            digest_alg,
            image_len,
            fw_version,
            device_model,
            mode,
            signer_cert,
            signer_chain,
            signature,
        };
        // Re-encoding must reproduce the signed bytes exactly; this rejects
        // version strings that parse but are not in normal form.
        if m.body_bytes()? != body {
            return Err(malformed("non-canonical body"));
        }
        Ok(m)
    }

    pub fn to_envelope(&self) -> Result<String, IntegrityError> {
        Ok(armor(MANIFEST_KIND, &self.to_bytes()?))
    }

    pub fn from_envelope(text: &str) -> Result<Self, IntegrityError> {
        Self::from_bytes(&dearmor(MANIFEST_KIND, text)?)
    }
}

/// Digests `image` with the mode's hash and signs the manifest body.
/// Refuses a signer whose certificate is not valid at `now`, whose key does
/// not match its certificate, or whose algorithm the mode does not permit.
pub fn sign_firmware(
    image: &[u8],
    meta: &FirmwareMeta,
    signer: &FirmwareSigner,
    mode: Mode,
    now: u64,
) -> Result<FirmwareManifest, IntegrityError> {
    let cert = &signer.certificate;
    if !cert.is_within_validity(now) {
        return Err(IntegrityError::SignerNotValid(now));
    }
    let algorithm = signer.key.algorithm();
    if cert.public_key_alg != algorithm || cert.public_key != signer.key.public_key() {
        return Err(IntegrityError::SignerKeyMismatch);
    }
    if !permitted(mode, Role::Signature, algorithm) {
        return Err(IntegrityError::SignerAlgorithm { algorithm, mode });
    }
    let digest_alg = primary(mode, Role::Hash)
        .expect("every mode has a hash")
        .algorithm;
    let mut m = FirmwareManifest {
        image_digest: digest(digest_alg, image)?,
        digest_alg,
        image_len: image.len() as u64,
        fw_version: meta.version.clone(),
        device_model: meta.model.clone(),
        mode,
        signer_cert: cert.clone(),
        signer_chain: signer.chain.clone(),
        signature: Vec::new(),
    };
    m.signature = signer.key.sign(&m.body_bytes()?);
    Ok(m)
}
