// Licensed under the Apache-2.0 license

//! Chip-to-application security toolkit: entropy health checks, a dual-mode
//! algorithm registry, PKI, compact certificates, a secure-element model,
//! firmware integrity, chip authentication and TLS policy auditing.

pub mod chip_auth;
pub mod entropy;
pub mod integrity;
pub mod keystore;
pub mod pki;
pub mod compact_cert;
pub mod suite_registry;
pub mod tls_policy;

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
pub(crate) fn unhex(s: &str) -> Vec<u8> {
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&s[i..i + 2], 16).unwrap())
        .collect()
}
