// Licensed under the Apache-2.0 license

//! TLS cipher-suite policy: per-device-class suite lists, server-preference
//! negotiation, and a static auditor for server configuration files.

mod audit;
mod config;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::suite_registry::Mode;

pub use audit::{audit_chain, audit_config, AuditReport, Finding, Severity, RULE_COUNT};
pub use config::{KeyExchange, ServerConfigInput};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TlsPolicyError {
    #[error("line {line}: {reason}")]
    Config { line: usize, reason: String },
    #[error("missing key `{0}`")]
    MissingKey(&'static str),
    #[error("invalid cipher suite identifier `{0}`")]
    BadSuite(String),
    #[error("unknown device class `{0}` (expected standard or constrained)")]
    BadClass(String),
    #[error("{0}")]
    Io(String),
    #[error("certificate file: {0}")]
    Certificate(String),
}

/// A TLS cipher suite identifier. Only the three named variants are
/// approvable; anything else is carried verbatim for auditing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SuiteId {
    Aes128GcmSha256,
    Aes256GcmSha384,
    Chacha20Poly1305Sha256,
    Legacy(String),
}

impl SuiteId {
    pub const APPROVED: [SuiteId; 3] = [
        SuiteId::Aes128GcmSha256,
        SuiteId::Aes256GcmSha384,
        SuiteId::Chacha20Poly1305Sha256,
    ];

    pub fn as_str(&self) -> &str {
        match self {
            SuiteId::Aes128GcmSha256 => "TLS_AES_128_GCM_SHA256",
            SuiteId::Aes256GcmSha384 => "TLS_AES_256_GCM_SHA384",
            SuiteId::Chacha20Poly1305Sha256 => "TLS_CHACHA20_POLY1305_SHA256",
            SuiteId::Legacy(s) => s,
        }
    }

    pub fn is_approved(&self) -> bool {
        !matches!(self, SuiteId::Legacy(_))
    }

    /// Parses a comma-separated list, ignoring surrounding whitespace.
    /// An empty or all-blank string is the empty list.
    pub fn parse_list(s: &str) -> Result<Vec<SuiteId>, TlsPolicyError> {
        if s.trim().is_empty() {
            return Ok(Vec::new());
        }
        s.split(',').map(|t| t.trim().parse()).collect()
    }
}

impl fmt::Display for SuiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SuiteId {
    type Err = TlsPolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(named) = SuiteId::APPROVED.iter().find(|n| n.as_str() == s) {
            return Ok(named.clone());
        }
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_') {
            return Err(TlsPolicyError::BadSuite(s.to_string()));
        }
        Ok(SuiteId::Legacy(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TlsVersion {
    Tls10,
    Tls11,
    Tls12,
    Tls13,
}

impl TlsVersion {
    pub const ALL: [TlsVersion; 4] = [
        TlsVersion::Tls10,
        TlsVersion::Tls11,
        TlsVersion::Tls12,
        TlsVersion::Tls13,
    ];

    /// Config-file spelling, e.g. `1.3`.
    pub fn as_str(self) -> &'static str {
        match self {
            TlsVersion::Tls10 => "1.0",
            TlsVersion::Tls11 => "1.1",
            TlsVersion::Tls12 => "1.2",
            TlsVersion::Tls13 => "1.3",
        }
    }
}

impl fmt::Display for TlsVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TLS {}", self.as_str())
    }
}

impl FromStr for TlsVersion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TlsVersion::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown TLS version `{s}` (expected 1.0, 1.1, 1.2 or 1.3)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeviceClass {
    Standard,
    Constrained,
}

impl DeviceClass {
    pub const ALL: [DeviceClass; 2] = [DeviceClass::Standard, DeviceClass::Constrained];

    pub fn as_str(self) -> &'static str {
        match self {
            DeviceClass::Standard => "standard",
            DeviceClass::Constrained => "constrained",
        }
    }
}

impl fmt::Display for DeviceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DeviceClass {
    type Err = TlsPolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(DeviceClass::Standard),
            "constrained" => Ok(DeviceClass::Constrained),
            other => Err(TlsPolicyError::BadClass(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CipherSuitePolicy {
    pub device_class: DeviceClass,
    /// Algorithm mode applied to certificate checks.
    pub mode: Mode,
    /// Server preference, most preferred first.
    pub preference: Vec<SuiteId>,
    pub min_version: TlsVersion,
    /// Lets a constrained device run TLS 1.2 with a warning.
    pub allow_tls12_fallback: bool,
    pub require_ephemeral: bool,
    pub forbid_zero_rtt: bool,
    pub require_client_cert_revocation_check: bool,
}

/// The policy for a device class. Both modes share the suite lists.
pub fn build_profile(device_class: DeviceClass, mode: Mode) -> CipherSuitePolicy {
    let preference = match device_class {
        DeviceClass::Standard => vec![
            SuiteId::Aes256GcmSha384,
            SuiteId::Chacha20Poly1305Sha256,
            SuiteId::Aes128GcmSha256,
        ],
        DeviceClass::Constrained => vec![SuiteId::Aes128GcmSha256],
    };
    CipherSuitePolicy {
        device_class,
        mode,
        preference,
        min_version: TlsVersion::Tls13,
        allow_tls12_fallback: device_class == DeviceClass::Constrained,
        require_ephemeral: true,
        forbid_zero_rtt: true,
        require_client_cert_revocation_check: true,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Negotiation {
    Selected(SuiteId),
    /// No suite in common; the handshake is aborted.
    Terminate,
}

impl fmt::Display for Negotiation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Negotiation::Selected(s) => write!(f, "{s}"),
            Negotiation::Terminate => f.write_str("TERMINATE"),
        }
    }
}

/// Server-preference selection: the first policy suite the client offered,
/// wherever it sits in the offer.
pub fn negotiate(client_offer: &[SuiteId], policy: &CipherSuitePolicy) -> Negotiation {
    policy
        .preference
        .iter()
        .find(|s| client_offer.contains(s))
        .map_or(Negotiation::Terminate, |s| Negotiation::Selected(s.clone()))
}

#[cfg(test)]
mod tests;
