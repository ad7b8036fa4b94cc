// Licensed under the Apache-2.0 license

use std::fmt;

use semver::Version;
use subtle::ConstantTimeEq;

use super::FirmwareManifest;
use crate::compact_cert::CertificateRecord;
use crate::keystore::SecureElement;
use crate::pki::{verify_chain, Verdict};
use crate::suite_registry::primitives::{digest, verify_signature};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HaltReason {
    MalformedManifest,
    NoTrustRoot,
    UntrustedSigner,
    BadSignature,
    LengthMismatch,
    DigestMismatch,
    Rollback,
}

impl HaltReason {
    pub fn as_str(self) -> &'static str {
        match self {
            HaltReason::MalformedManifest => "malformed-manifest",
            HaltReason::NoTrustRoot => "no-trust-root",
            HaltReason::UntrustedSigner => "untrusted-signer",
            HaltReason::BadSignature => "bad-signature",
            HaltReason::LengthMismatch => "length-mismatch",
            HaltReason::DigestMismatch => "digest-mismatch",
            HaltReason::Rollback => "rollback",
        }
    }
}

impl fmt::Display for HaltReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BootVerdict {
    Boot,
    Halt {
        reason: HaltReason,
        detail: Option<String>,
    },
}

impl BootVerdict {
    fn halt(reason: HaltReason) -> Self {
        BootVerdict::Halt {
            reason,
            detail: None,
        }
    }

    pub fn is_boot(&self) -> bool {
        matches!(self, BootVerdict::Boot)
    }

    pub fn halt_reason(&self) -> Option<HaltReason> {
        match self {
            BootVerdict::Boot => None,
            BootVerdict::Halt { reason, .. } => Some(*reason),
        }
    }
}

/// `BOOT` or `HALT <reason>`; detail is not part of the display form.
impl fmt::Display for BootVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BootVerdict::Boot => f.write_str("BOOT"),
            BootVerdict::Halt { reason, .. } => write!(f, "HALT {reason}"),
        }
    }
}

/// Checks, in order: signer chain to `trust_root`, manifest signature,
/// image length, image digest. The first failure decides the verdict.
pub fn secure_boot_verify(
    image: &[u8],
    manifest: &FirmwareManifest,
    trust_root: &CertificateRecord,
    now: u64,
) -> BootVerdict {
    let signer = &manifest.signer_cert;
    if let Verdict::Reject(r) = verify_chain(signer, &manifest.signer_chain, trust_root, now, None) {
        return BootVerdict::Halt {
            reason: HaltReason::UntrustedSigner,
            detail: Some(r.to_string()),
        };
    }
    let signed = manifest.body_bytes().ok().is_some_and(|body| {
        verify_signature(
            signer.public_key_alg,
            &signer.public_key,
            &body,
            &manifest.signature,
        )
    });
    if !signed {
        return BootVerdict::halt(HaltReason::BadSignature);
    }
    if manifest.image_len != image.len() as u64 {
        return BootVerdict::halt(HaltReason::LengthMismatch);
    }
    let matches = digest(manifest.digest_alg, image)
        .is_ok_and(|d| bool::from(d.ct_eq(&manifest.image_digest)));
    if !matches {
        return BootVerdict::halt(HaltReason::DigestMismatch);
    }
    BootVerdict::Boot
}

/// As `secure_boot_verify`, with an undecodable manifest halting first.
pub fn secure_boot_verify_bytes(
    image: &[u8],
    manifest: &[u8],
    trust_root: &CertificateRecord,
    now: u64,
) -> BootVerdict {
    match FirmwareManifest::from_bytes(manifest) {
        Ok(m) => secure_boot_verify(image, &m, trust_root, now),
        Err(e) => BootVerdict::Halt {
            reason: HaltReason::MalformedManifest,
            detail: Some(e.to_string()),
        },
    }
}

/// Boots against the trust root burnt into the element's OTP, then applies
/// the anti-rollback rule: the manifest version may not be lower than the
/// last booted version. A successful boot records the new version.
pub fn secure_boot(
    se: &mut SecureElement,
    image: &[u8],
    manifest: &FirmwareManifest,
    now: u64,
) -> BootVerdict {
    let Some(root) = se.trust_root() else {
        return BootVerdict::halt(HaltReason::NoTrustRoot);
    };
    let verdict = secure_boot_verify(image, manifest, &root, now);
    if !verdict.is_boot() {
        return verdict;
    }
    if let Some(last) = se.last_booted_version() {
        let older = Version::parse(last).map_or(true, |last| manifest.fw_version < last);
        if older {
            return BootVerdict::Halt {
                reason: HaltReason::Rollback,
                detail: Some(format!("{} is older than {last}", manifest.fw_version)),
            };
        }
    }
    se.record_boot(&manifest.fw_version.to_string());
    BootVerdict::Boot
}

pub fn secure_boot_bytes(
    se: &mut SecureElement,
    image: &[u8],
    manifest: &[u8],
    now: u64,
) -> BootVerdict {
    match FirmwareManifest::from_bytes(manifest) {
        Ok(m) => secure_boot(se, image, &m, now),
        Err(e) => BootVerdict::Halt {
            reason: HaltReason::MalformedManifest,
            detail: Some(e.to_string()),
        },
    }
}
