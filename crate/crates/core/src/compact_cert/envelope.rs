// Licensed under the Apache-2.0 license

//! Text armour for binary artefacts:
//! `-----BEGIN C2A <KIND>-----`, base64 in 64-column lines, matching END.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use thiserror::Error;

const LINE: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnvelopeError {
    #[error("missing BEGIN line")]
    MissingBegin,
    #[error("missing END line for {0}")]
    MissingEnd(String),
    #[error("expected a {expected} envelope, found {found}")]
    WrongKind { expected: String, found: String },
    #[error("invalid base64 payload")]
    Base64,
}

pub fn armor(kind: &str, bytes: &[u8]) -> String {
    let b64 = STANDARD.encode(bytes);
    let mut out = format!("-----BEGIN C2A {kind}-----\n");
    for chunk in b64.as_bytes().chunks(LINE) {
        out.push_str(std::str::from_utf8(chunk).expect("base64 is ASCII"));
        out.push('\n');
    }
    out.push_str(&format!("-----END C2A {kind}-----\n"));
    out
}

/// Parses the first envelope in `text`, returning its kind and payload.
pub fn dearmor_any(text: &str) -> Result<(String, Vec<u8>), EnvelopeError> {
    let mut lines = text.lines().map(str::trim);
    let kind = lines
        .by_ref()
        .find_map(|l| {
            l.strip_prefix("-----BEGIN C2A ")
                .and_then(|r| r.strip_suffix("-----"))
        })
        .ok_or(EnvelopeError::MissingBegin)?
        .to_string();
    let end = format!("-----END C2A {kind}-----");
    let mut b64 = String::new();
    let mut closed = false;
    for l in lines {
        if l == end {
            closed = true;
            break;
        }
        b64.push_str(l);
    }
    if !closed {
        return Err(EnvelopeError::MissingEnd(kind));
    }
    let bytes = STANDARD.decode(b64).map_err(|_| EnvelopeError::Base64)?;
    Ok((kind, bytes))
}

/// Parses every envelope in `text`, in order.
pub fn dearmor_all(text: &str) -> Result<Vec<(String, Vec<u8>)>, EnvelopeError> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find("-----BEGIN C2A ") {
        rest = &rest[start..];
        let item = dearmor_any(rest)?;
        let end = format!("-----END C2A {}-----", item.0);
        let stop = rest.find(&end).expect("dearmor_any found the END line") + end.len();
        rest = &rest[stop..];
        out.push(item);
    }
    Ok(out)
}

pub fn dearmor(kind: &str, text: &str) -> Result<Vec<u8>, EnvelopeError> {
    let (found, bytes) = dearmor_any(text)?;
    if found != kind {
        return Err(EnvelopeError::WrongKind {
            expected: kind.to_string(),
            found,
        });
    }
    Ok(bytes)
}
