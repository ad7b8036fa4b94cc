// Licensed under the Apache-2.0 license

//! Compact certificate profile.
//!
//! A certificate is a canonical CBOR array of eleven fields:
//!
//! ```text
//! [version, serial, issuer_id, subject_id, public_key_alg, public_key,
//!  not_before, not_after, extensions, signature_alg, signature]
//! ```
//!
//! The to-be-signed bytes are the first nine fields as a nine-element
//! array. A verbose line-oriented baseline encoding exists for size
//! comparison.

pub mod cbor;
pub mod envelope;

use std::collections::BTreeMap;
use std::fmt;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use thiserror::Error;

use crate::suite_registry::primitives::SigningKeyPair;
use crate::suite_registry::Algorithm;
use cbor::{CborError, Reader, Writer};

pub use envelope::{armor, dearmor, dearmor_all, dearmor_any, EnvelopeError};

pub const CERT_VERSION: u64 = 1;
const FIELDS: usize = 11;
const TBS_FIELDS: usize = 9;
const BASELINE_HEADER: &str = "format: c2a-baseline-certificate-v1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertificateRecord {
    pub version: u64,
    pub serial: Vec<u8>,
    pub issuer_id: String,
    pub subject_id: String,
    pub public_key_alg: Algorithm,
    pub public_key: Vec<u8>,
    pub not_before: u64,
    pub not_after: u64,
    pub extensions: BTreeMap<String, Vec<u8>>,
    pub signature_alg: Algorithm,
    pub signature: Vec<u8>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompactError {
    #[error(transparent)]
    Cbor(#[from] CborError),
    #[error("algorithm {0} has no wire identifier")]
    UnknownAlgorithm(String),
    #[error("baseline line {line}: {reason}")]
    Baseline { line: usize, reason: String },
}

fn alg_id(alg: Algorithm) -> Result<u64, CompactError> {
    alg.id()
        .ok_or_else(|| CompactError::UnknownAlgorithm(alg.name().to_string()))
}

fn write_tbs_fields(w: &mut Writer, c: &CertificateRecord) -> Result<(), CompactError> {
    w.uint(c.version)
        .bytes(&c.serial)
        .text(&c.issuer_id)
        .text(&c.subject_id)
        .uint(alg_id(c.public_key_alg)?)
        .bytes(&c.public_key)
        .uint(c.not_before)
        .uint(c.not_after)
        .text_bytes_map(c.extensions.iter().map(|(k, v)| (k.as_str(), v.as_slice())));
    Ok(())
}

impl CertificateRecord {
    /// Canonical bytes covered by the signature.
    pub fn tbs_bytes(&self) -> Result<Vec<u8>, CompactError> {
        let mut w = Writer::new();
        w.array(TBS_FIELDS);
        write_tbs_fields(&mut w, self)?;
        Ok(w.finish())
    }

    pub fn validity_secs(&self) -> u64 {
        self.not_after.saturating_sub(self.not_before)
    }

    pub fn is_within_validity(&self, now: u64) -> bool {
        self.not_before <= now && now <= self.not_after
    }
}

pub fn encode_compact(cert: &CertificateRecord) -> Result<Vec<u8>, CompactError> {
    alg_id(cert.signature_alg)?;
    let mut w = Writer::new();
    w.array(FIELDS);
    write_tbs_fields(&mut w, cert)?;
    w.uint(alg_id(cert.signature_alg)?).bytes(&cert.signature);
    Ok(w.finish())
}

fn read_alg(r: &mut Reader<'_>) -> Result<Algorithm, CompactError> {
    let at = r.position();
    let id = r.uint()?;
    Algorithm::from_id(id).ok_or_else(|| {
        CompactError::Cbor(CborError::malformed(at, format!("unknown algorithm id {id}")))
    })
}

pub fn decode_compact(bytes: &[u8]) -> Result<CertificateRecord, CompactError> {
    let mut r = Reader::new(bytes);
    r.array_of(FIELDS)?;
    let cert = CertificateRecord {
        version: r.uint()?,
        serial: r.bytes()?.to_vec(),
        issuer_id: r.text()?.to_string(),
        subject_id: r.text()?.to_string(),
        public_key_alg: read_alg(&mut r)?,
        public_key: r.bytes()?.to_vec(),
        not_before: r.uint()?,
        not_after: r.uint()?,
        extensions: r.text_bytes_map()?,
        signature_alg: read_alg(&mut r)?,
        signature: r.bytes()?.to_vec(),
    };
    r.finish()?;
    Ok(cert)
}

fn b64(data: &[u8]) -> String {
    STANDARD.encode(data)
}

/// Verbose text form: one `field_name: value` line per field, binary and
/// text values in base64, algorithms by registry name.
pub fn encode_baseline(cert: &CertificateRecord) -> Vec<u8> {
    let mut out = String::new();
    let mut line = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(": ");
        out.push_str(&v);
        out.push('\n');
    };
    line("format", BASELINE_HEADER["format: ".len()..].to_string());
    line("version", cert.version.to_string());
    line("serial", b64(&cert.serial));
    line("issuer_id", b64(cert.issuer_id.as_bytes()));
    line("subject_id", b64(cert.subject_id.as_bytes()));
    line("public_key_alg", cert.public_key_alg.name().to_string());
    line("public_key", b64(&cert.public_key));
    line("not_before", cert.not_before.to_string());
    line("not_after", cert.not_after.to_string());
    for (k, v) in &cert.extensions {
        line("extension", format!("{} {}", b64(k.as_bytes()), b64(v)));
    }
    line("signature_alg", cert.signature_alg.name().to_string());
    line("signature", b64(&cert.signature));
    out.into_bytes()
}

struct BaselineParser<'a> {
    total: usize,
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

impl<'a> BaselineParser<'a> {
    fn err(line: usize, reason: impl Into<String>) -> CompactError {
        CompactError::Baseline {
            line: line + 1,
            reason: reason.into(),
        }
    }

    fn field(&mut self, name: &str) -> Result<(usize, &'a str), CompactError> {
        let (n, l) = self
            .lines
            .next()
            .ok_or_else(|| Self::err(self.total, format!("missing {name}")))?;
        let value = l
            .strip_prefix(name)
            .and_then(|r| r.strip_prefix(": "))
            .ok_or_else(|| Self::err(n, format!("expected field {name}")))?;
        Ok((n, value))
    }

    fn bytes(&mut self, name: &str) -> Result<Vec<u8>, CompactError> {
        let (n, v) = self.field(name)?;
        STANDARD.decode(v).map_err(|_| Self::err(n, "invalid base64"))
    }

    fn text(&mut self, name: &str) -> Result<String, CompactError> {
        let (n, v) = self.field(name)?;
        let raw = STANDARD.decode(v).map_err(|_| Self::err(n, "invalid base64"))?;
        String::from_utf8(raw).map_err(|_| Self::err(n, "invalid UTF-8"))
    }

    fn uint(&mut self, name: &str) -> Result<u64, CompactError> {
        let (n, v) = self.field(name)?;
        v.parse().map_err(|_| Self::err(n, "invalid integer"))
    }

    fn alg(&mut self, name: &str) -> Result<Algorithm, CompactError> {
        let (n, v) = self.field(name)?;
        v.parse().map_err(|_| Self::err(n, format!("unknown algorithm {v}")))
    }
}

pub fn decode_baseline(bytes: &[u8]) -> Result<CertificateRecord, CompactError> {
    let text = std::str::from_utf8(bytes).map_err(|_| BaselineParser::err(0, "not UTF-8"))?;
    let mut p = BaselineParser {
        total: text.lines().count(),
        lines: text.lines().enumerate().peekable(),
    };
    let (n, _) = p.field("format")?;
    if text.lines().next() != Some(BASELINE_HEADER) {
        return Err(BaselineParser::err(n, "unsupported format"));
    }
    let version = p.uint("version")?;
    let serial = p.bytes("serial")?;
    let issuer_id = p.text("issuer_id")?;
    let subject_id = p.text("subject_id")?;
    let public_key_alg = p.alg("public_key_alg")?;
    let public_key = p.bytes("public_key")?;
    let not_before = p.uint("not_before")?;
    let not_after = p.uint("not_after")?;
    let mut extensions = BTreeMap::new();
    while p.lines.peek().is_some_and(|(_, l)| l.starts_with("extension: ")) {
        let (n, v) = p.field("extension")?;
        let (k, val) = v
            .split_once(' ')
            .ok_or_else(|| BaselineParser::err(n, "expected key and value"))?;
        let k = STANDARD
            .decode(k)
            .ok()
            .and_then(|k| String::from_utf8(k).ok())
            .ok_or_else(|| BaselineParser::err(n, "invalid extension key"))?;
        let val = STANDARD
            .decode(val)
            .map_err(|_| BaselineParser::err(n, "invalid base64"))?;
        extensions.insert(k, val);
    }
    let signature_alg = p.alg("signature_alg")?;
    let signature = p.bytes("signature")?;
    if let Some((n, _)) = p.lines.next() {
        return Err(BaselineParser::err(n, "trailing content"));
    }
    Ok(CertificateRecord {
        version,
        serial,
        issuer_id,
        subject_id,
        public_key_alg,
        public_key,
        not_before,
        not_after,
        extensions,
        signature_alg,
        signature,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeReport {
    pub compact_len: usize,
    pub baseline_len: usize,
    pub ratio: f64,
}

impl fmt::Display for SizeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "compact={} baseline={} ratio={:.4}",
            self.compact_len, self.baseline_len, self.ratio
        )
    }
}

pub fn size_report(cert: &CertificateRecord) -> Result<SizeReport, CompactError> {
    let compact_len = encode_compact(cert)?.len();
    let baseline_len = encode_baseline(cert).len();
    Ok(SizeReport {
        compact_len,
        baseline_len,
        ratio: compact_len as f64 / baseline_len as f64,
    })
}

/// A fixed self-signed Ed25519 device certificate used as the size and
/// fuzzing reference.
pub fn reference_device_certificate() -> CertificateRecord {
    let key = SigningKeyPair::from_seed(Algorithm::Ed25519, &[0x42; 32]).expect("valid seed");
    let mut extensions = BTreeMap::new();
    extensions.insert("c2a.device-model".to_string(), b"c2a-devkit-1".to_vec());
    extensions.insert("c2a.key-usage".to_string(), vec![0x01]);
    let mut cert = CertificateRecord {
        version: CERT_VERSION,
        serial: (1..=16).collect(),
        issuer_id: "device-001".into(),
        subject_id: "device-001".into(),
        public_key_alg: Algorithm::Ed25519,
        public_key: key.public_key().to_vec(),
        not_before: 1_700_000_000,
        not_after: 1_700_000_000 + 398 * 86_400,
        extensions,
        signature_alg: Algorithm::Ed25519,
        signature: Vec::new(),
    };
    cert.signature = key.sign(&cert.tbs_bytes().expect("registered algorithms"));
    cert
}
