// Licensed under the Apache-2.0 license

//! In-process demonstration of an honest chip and two counterfeits.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::{ChipAuthError, ChipProfile, DocumentSigner, SessionContext, SessionRole, SessionState};
use crate::entropy::EntropySource;
use crate::keystore::SecureElement;
use crate::pki::CertificateAuthority;
use crate::suite_registry::primitives::digest;
use crate::suite_registry::{key_transport, primary, Mode, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Adversary {
    /// A fresh key pair with data groups re-signed by a counterfeit signer.
    Clone,
    /// A genuine chip's data groups and public key, without its private key.
    Replay,
}

impl Adversary {
    pub fn as_str(self) -> &'static str {
        match self {
            Adversary::Clone => "clone",
            Adversary::Replay => "replay",
        }
    }
}

impl fmt::Display for Adversary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Adversary {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "clone" => Ok(Adversary::Clone),
            "replay" => Ok(Adversary::Replay),
            other => Err(format!("unknown adversary `{other}` (expected clone or replay)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DemoOutcome {
    /// Human-readable report, one line per entry.
    pub lines: Vec<String>,
    pub reader: SessionContext,
    pub chip: SessionContext,
}

impl DemoOutcome {
    pub fn authenticated(&self) -> bool {
        self.reader.state() == SessionState::Authenticated
    }
}

const CSCA_NAME: &str = "csca-utopia";
const DS_NAME: &str = "ds-utopia-01";

fn data_groups() -> BTreeMap<u64, Vec<u8>> {
    BTreeMap::from([
        (1, b"P<UTOERIKSSON<<ANNA<MARIA<<<<<<<<<<<<<<<<<<<".to_vec()),
        (2, vec![0xa5; 64]),
    ])
}

fn issuer<S: EntropySource + ?Sized>(
    mode: Mode,
    now: u64,
    source: &mut S,
) -> Result<(CertificateAuthority, DocumentSigner), ChipAuthError> {
    let alg = primary(mode, Role::Signature)
        .expect("every mode signs")
        .algorithm;
    let mut csca = CertificateAuthority::new_root(CSCA_NAME, alg, 3650, now, source)?;
    let ds = DocumentSigner::new(&mut csca, DS_NAME, now, source)?;
    Ok((csca, ds))
}

/// Runs one full exchange at time `now`. All randomness comes from
/// `source`, so a seeded source reproduces the report byte for byte.
pub fn run_demo<S: EntropySource + ?Sized>(
    mode: Mode,
    adversary: Option<Adversary>,
    source: &mut S,
    now: u64,
) -> Result<DemoOutcome, ChipAuthError> {
    let (csca, ds) = issuer(mode, now, source)?;
    let genuine = ChipProfile::enroll(mode, data_groups(), &ds, source)?;
    let chip = match adversary {
        None => genuine,
        Some(Adversary::Clone) => {
            let (_, fake_ds) = issuer(mode, now, source)?;
            ChipProfile::enroll(mode, data_groups(), &fake_ds, source)?
        }
        Some(Adversary::Replay) => {
            let mut se = SecureElement::new();
            let key = se.generate_agreement_key(key_transport(mode).algorithm, source)?;
            ChipProfile {
                mode,
                se,
                key,
                public_key: genuine.public_key,
                bundle: genuine.bundle,
            }
        }
    };

    let mut lines = vec![
        format!("mode: {mode}"),
        format!("adversary: {}", adversary.map_or("none", Adversary::as_str)),
        format!("chip-key: {}", chip.public_key().algorithm),
    ];

    let mut chip_session = SessionContext::new(SessionRole::Chip, mode);
    let hello = chip_session.chip_hello(&chip, source)?.to_bytes();
    let mut reader = SessionContext::new(SessionRole::Reader, mode);
    let response = reader.reader_respond(&hello, source)?.to_bytes();
    chip_session.chip_complete(&response, &chip)?;
    let tag = chip_session.confirmation_tag()?;
    reader.authenticate_chip(chip.bundle(), csca.certificate(), &tag, now)?;

    let hash = primary(mode, Role::Hash).expect("every mode hashes").algorithm;
    let names = ["chip-hello", "reader-response"];
    for (i, m) in reader.transcript().iter().enumerate() {
        let d = digest(hash, m)?;
        lines.push(format!(
            "transcript[{i}] {} {} bytes {}={}",
            names[i],
            m.len(),
            hash,
            crate::hex(&d)
        ));
    }
    lines.push(format!(
        "nonce: {}",
        reader.nonce().map_or_else(String::new, |n| crate::hex(n))
    ));
    lines.push(format!("confirmation: {}", crate::hex(&tag)));
    let agree = chip_session.enc_key() == reader.enc_key() && chip_session.mac_key() == reader.mac_key();
    lines.push(format!("session-keys-match: {}", if agree { "yes" } else { "no" }));
    lines.push(match reader.failure_reason() {
        None => "AUTHENTICATED".to_string(),
        Some(r) => format!("FAILED {r}"),
    });
    Ok(DemoOutcome {
        lines,
        reader,
        chip: chip_session,
    })
}
